#pragma once

// Planner wall-time comparison over total team size.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "relaynet/expert.hpp"
#include "relaynet/planner.hpp"

namespace relaynet {

struct BenchmarkInstance {
  Points task_positions;
  Points comm_positions;  // connected seed for the expert
};

/// A connected team of exactly `total_agents` nodes: ceil(total/2) tasks
/// (at least 2) drawn in a square sized so the MST needs at most the
/// remaining agents as relays; spare relays go to the MST edges with the
/// longest remaining pieces.
inline BenchmarkInstance benchmark_instance(int total_agents, std::uint64_t seed, const ChannelCurve& curve) {
  if (total_agents < 3) throw InvalidArgument("benchmark teams need at least three agents");
  const int tasks = std::max(2, (total_agents + 1) / 2);
  const int relays = total_agents - tasks;
  std::mt19937_64 rng(seed);
  const double half = 0.5 * curve.cutoff_distance_m * std::sqrt(static_cast<double>(tasks));
  std::uniform_real_distribution<double> coord(-half, half);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    BenchmarkInstance inst;
    for (int i = 0; i < tasks; ++i) inst.task_positions.emplace_back(coord(rng), coord(rng));
    const auto edges = euclidean_mst(inst.task_positions);
    std::vector<int> per_edge;
    int needed = 0;
    for (const auto& [a, b] : edges) {
      per_edge.push_back(relays_for_segment((inst.task_positions[a] - inst.task_positions[b]).norm(),
                                            curve.cutoff_distance_m));
      needed += per_edge.back();
    }
    if (needed > relays) continue;
    auto piece = [&](std::size_t e) {
      const auto& [a, b] = edges[e];
      return (inst.task_positions[a] - inst.task_positions[b]).norm() / (per_edge[e] + 1);
    };
    for (int spare = relays - needed; spare > 0; --spare) {
      std::size_t longest = 0;
      for (std::size_t e = 1; e < edges.size(); ++e)
        if (piece(e) > piece(longest)) longest = e;
      ++per_edge[longest];
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Point& pa = inst.task_positions[edges[e].first];
      const Point& pb = inst.task_positions[edges[e].second];
      for (int i = 1; i <= per_edge[e]; ++i)
        inst.comm_positions.push_back(pa + (pb - pa) * (static_cast<double>(i) / (per_edge[e] + 1)));
    }
    bool distinct = true;
    const Points nodes = [&] {
      Points all = inst.task_positions;
      all.insert(all.end(), inst.comm_positions.begin(), inst.comm_positions.end());
      return all;
    }();
    for (std::size_t i = 0; i < nodes.size() && distinct; ++i)
      for (std::size_t j = i + 1; j < nodes.size() && distinct; ++j)
        if ((nodes[i] - nodes[j]).norm() < 1.0) distinct = false;
    if (distinct && is_connected(nodes, curve)) return inst;
  }
  throw SamplingFailure("could not build a benchmark team of " + std::to_string(total_agents) + " agents");
}

struct TimingRow {
  int agents = 0;
  std::string planner;
  double mean_s = 0.0;
  double std_s = 0.0;
  double mean_iterations = 0.0;  // expert only
  std::vector<int> iterations;
};

struct BenchmarkOptions {
  int trials = 5;
  std::uint64_t seed = 7;
  int expert_max_iterations = 20;
};

/// Expert: sequential SDP from the instance seed, capped at 20 iterations.
/// CNN: render + forward + extract on the instance tasks.
inline std::vector<TimingRow> bench_timing(const std::vector<int>& team_sizes, const std::vector<PlannerKind>& planners,
                                           const PlanContext& ctx, const BenchmarkOptions& opts = {}) {
  if (opts.trials < 3) throw InvalidArgument("bench_timing needs at least three trials");
  using clock = std::chrono::steady_clock;
  const ChannelCurve curve = derive_curve(ctx.channel);
  std::vector<TimingRow> rows;
  for (int total : team_sizes) {
    std::vector<BenchmarkInstance> instances;
    for (int t = 0; t < opts.trials; ++t)
      instances.push_back(benchmark_instance(total, opts.seed + 1000003ULL * static_cast<std::uint64_t>(total) + t, curve));
    for (const auto& planner : planners) {
      TimingRow row;
      row.agents = total;
      row.planner = planner_name(planner);
      std::vector<double> seconds;
      for (const auto& inst : instances) {
        const auto start = clock::now();
        if (const auto* expert = std::get_if<ExpertPlanner>(&planner)) {
          ExpertParams params = expert->params;
          params.max_iterations = opts.expert_max_iterations;
          const ExpertSolution sol = optimize(inst.task_positions, curve, params, inst.comm_positions);
          row.iterations.push_back(sol.iterations);
        } else {
          const auto& weights = *std::get<CnnPlanner>(planner).weights;
          (void)plan_inference(inst.task_positions, weights, ctx.grid, ctx.channel, ctx.p_max_dbm);
        }
        seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
      }
      double mean = 0.0;
      for (double s : seconds) mean += s;
      mean /= static_cast<double>(seconds.size());
      double var = 0.0;
      for (double s : seconds) var += (s - mean) * (s - mean);
      row.mean_s = mean;
      row.std_s = std::sqrt(var / static_cast<double>(seconds.size() - 1));
      for (int it : row.iterations) row.mean_iterations += it;
      if (!row.iterations.empty()) row.mean_iterations /= static_cast<double>(row.iterations.size());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "agents,planner,mean_s,std_s\n" << std::setprecision(8);
  for (const auto& r : rows) out << r.agents << ',' << r.planner << ',' << r.mean_s << ',' << r.std_s << '\n';
}

}  // namespace relaynet
