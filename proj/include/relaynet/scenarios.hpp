#pragma once

#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <tuple>
#include <vector>

#include "relaynet/dataset.hpp"
#include "relaynet/netgraph.hpp"
#include "relaynet/planner.hpp"

namespace relaynet {

struct ScenarioRow {
  double parameter = 0.0;  // separation (line) or radius (circle), meters
  Points task_positions;
  Points comm_positions;
  std::optional<double> power_dbm;
  double lambda2 = 0.0;  // at the recorded power, 0 when unconnectable
};

namespace detail {

inline ScenarioRow run_scenario_case(double parameter, Points tasks, const PlannerKind& planner,
                                     const PlanContext& ctx) {
  ScenarioRow row;
  row.parameter = parameter;
  PlanResult result = plan(planner, tasks, ctx);
  row.task_positions = std::move(tasks);
  row.comm_positions = std::move(result.comm_positions);
  row.power_dbm = result.power_dbm;
  if (row.power_dbm) {
    Points nodes = row.task_positions;
    nodes.insert(nodes.end(), row.comm_positions.begin(), row.comm_positions.end());
    row.lambda2 = algebraic_connectivity(nodes, derive_curve(ctx.channel.with_power(*row.power_dbm)));
  }
  return row;
}

}  // namespace detail

/// Two tasks at (+-s/2, 0) for each separation s.
inline std::vector<ScenarioRow> run_line_scenario(const std::vector<double>& separations, const PlannerKind& planner,
                                                  const PlanContext& ctx = {}) {
  std::vector<ScenarioRow> rows;
  for (double s : separations)
    rows.push_back(detail::run_scenario_case(s, {{-0.5 * s, 0.0}, {0.5 * s, 0.0}}, planner, ctx));
  return rows;
}

/// Tasks equally spaced on a circle, the first on the positive x axis.
inline Points circle_tasks(double radius, int n_tasks) {
  Points tasks;
  for (int i = 0; i < n_tasks; ++i) {
    const double angle = 2.0 * std::numbers::pi * i / n_tasks;
    tasks.emplace_back(radius * std::cos(angle), radius * std::sin(angle));
  }
  return tasks;
}

inline std::vector<ScenarioRow> run_circle_scenario(const std::vector<double>& radii, int n_tasks,
                                                    const PlannerKind& planner, const PlanContext& ctx = {}) {
  if (n_tasks < 3) throw InvalidArgument("circle scenario needs at least three tasks");
  std::vector<ScenarioRow> rows;
  for (double r : radii) rows.push_back(detail::run_scenario_case(r, circle_tasks(r, n_tasks), planner, ctx));
  return rows;
}

inline void write_scenario_csv(std::ostream& out, const std::vector<ScenarioRow>& rows) {
  out << "parameter_m,tasks,relays,power_dbm,lambda2\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.parameter << ',' << r.task_positions.size() << ',' << r.comm_positions.size() << ',';
    if (r.power_dbm)
      out << *r.power_dbm;
    else
      out << "nan";
    out << ',' << r.lambda2 << '\n';
  }
}

// ---------------------------------------------------------------------------
// Dataset statistics

struct EvalStatistics {
  // Extra power over the default, 1 dBm bins keyed by floor(extra).
  std::map<int, double> power_histogram;
  double unconnected_mass = 0.0;
  // planner relays - expert relays, default-power cases only.
  std::map<int, double> agent_diff_histogram;
  double mean_extra_power_dbm = 0.0;
  double var_extra_power_dbm = 0.0;
  double mean_agent_diff = 0.0;
  double var_agent_diff = 0.0;
  int samples = 0;
  int default_power_cases = 0;
};

namespace detail {

inline void normalize(std::map<int, double>& hist, double total) {
  if (total > 0.0)
    for (auto& [bin, mass] : hist) mass /= total;
}

inline std::pair<double, double> mean_variance(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, var / static_cast<double>(xs.size())};
}

}  // namespace detail

inline EvalStatistics eval_statistics(const std::vector<DatasetSample>& dataset, const PlannerKind& planner,
                                      const PlanContext& ctx) {
  EvalStatistics stats;
  std::vector<double> powers;
  std::vector<double> diffs;
  constexpr double kSameAsDefault = 1e-9;
  for (const auto& sample : dataset) {
    PlanContext sample_ctx = ctx;
    sample_ctx.grid = sample.grid;
    const PlanResult result = plan(planner, sample.task_positions, sample_ctx);
    ++stats.samples;
    if (!result.power_dbm) {
      stats.unconnected_mass += 1.0;
      continue;
    }
    const double extra = *result.power_dbm - ctx.channel.transmit_power_dbm;
    powers.push_back(extra);
    stats.power_histogram[static_cast<int>(std::floor(extra + kSameAsDefault))] += 1.0;
    if (extra <= kSameAsDefault) {
      const int diff =
          static_cast<int>(result.comm_positions.size()) - static_cast<int>(sample.expert_comm_positions.size());
      diffs.push_back(diff);
      stats.agent_diff_histogram[diff] += 1.0;
      ++stats.default_power_cases;
    }
  }
  detail::normalize(stats.power_histogram, stats.samples);
  if (stats.samples > 0) stats.unconnected_mass /= stats.samples;
  detail::normalize(stats.agent_diff_histogram, stats.default_power_cases);
  std::tie(stats.mean_extra_power_dbm, stats.var_extra_power_dbm) = detail::mean_variance(powers);
  std::tie(stats.mean_agent_diff, stats.var_agent_diff) = detail::mean_variance(diffs);
  return stats;
}

/// section,key,value rows: power_hist and agent_diff_hist bins, then summary.
inline void write_statistics_csv(std::ostream& out, const EvalStatistics& s) {
  out << "section,key,value\n" << std::setprecision(10);
  for (const auto& [bin, mass] : s.power_histogram) out << "power_hist," << bin << ',' << mass << '\n';
  out << "power_hist,unconnected," << s.unconnected_mass << '\n';
  for (const auto& [bin, mass] : s.agent_diff_histogram) out << "agent_diff_hist," << bin << ',' << mass << '\n';
  out << "summary,samples," << s.samples << '\n';
  out << "summary,default_power_cases," << s.default_power_cases << '\n';
  out << "summary,mean_extra_power_dbm," << s.mean_extra_power_dbm << '\n';
  out << "summary,var_extra_power_dbm," << s.var_extra_power_dbm << '\n';
  out << "summary,mean_agent_diff," << s.mean_agent_diff << '\n';
  out << "summary,var_agent_diff," << s.var_agent_diff << '\n';
}

}  // namespace relaynet
