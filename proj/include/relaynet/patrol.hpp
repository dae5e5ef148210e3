#pragma once

// Kinematic patrol simulation: task agents loop around waypoints while relay
// agents chase targets replanned at a fixed controller rate. Planning happens
// in a world shrunk by d_c(default) / d_c(operating) so planners tuned for
// the default power can serve any operating power.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

#include "relaynet/channel.hpp"
#include "relaynet/netgraph.hpp"
#include "relaynet/planner.hpp"

namespace relaynet {

struct PatrolParams {
  int n_tasks = 4;
  Points waypoints = {{-100.0, -100.0}, {100.0, -100.0}, {100.0, 100.0}, {-100.0, 100.0}};
  double task_speed_mps = 1.0;
  double relay_speed_mps = 5.0;
  double duration_s = 300.0;
  double controller_period_s = 0.5;
  double transmit_power_dbm = 21.0;

  void validate() const {
    if (n_tasks < 2) throw InvalidParameter("patrol needs at least two task agents");
    if (waypoints.size() < 2) throw InvalidParameter("patrol needs at least two waypoints");
    if (!(task_speed_mps >= 0.0)) throw InvalidParameter("task speed must be non-negative");
    if (!(relay_speed_mps > 0.0)) throw InvalidParameter("relay speed must be positive");
    if (!(controller_period_s > 0.0)) throw InvalidParameter("controller period must be positive");
    if (!(duration_s > 0.0)) throw InvalidParameter("duration must be positive");
  }
};

/// Closed polyline parameterized by arc length.
class WaypointLoop {
 public:
  explicit WaypointLoop(Points waypoints) : points_(std::move(waypoints)) {
    cumulative_.push_back(0.0);
    for (std::size_t i = 0; i < points_.size(); ++i)
      cumulative_.push_back(cumulative_.back() + (points_[(i + 1) % points_.size()] - points_[i]).norm());
  }

  double length() const { return cumulative_.back(); }

  Point at(double s) const {
    const double len = length();
    s = std::fmod(s, len);
    if (s < 0.0) s += len;
    std::size_t seg = 0;
    while (seg + 1 < points_.size() && cumulative_[seg + 1] <= s) ++seg;
    const Point& a = points_[seg];
    const Point& b = points_[(seg + 1) % points_.size()];
    const double piece = cumulative_[seg + 1] - cumulative_[seg];
    const double f = piece > 0.0 ? (s - cumulative_[seg]) / piece : 0.0;
    return a + f * (b - a);
  }

 private:
  Points points_;
  std::vector<double> cumulative_;
};

/// Pairs each target with a distinct agent, closest pairs first. Returns,
/// per target, the index of the agent assigned to it.
inline std::vector<std::size_t> greedy_assignment(const Points& agents, const Points& targets) {
  if (targets.size() > agents.size()) throw InvalidArgument("more targets than agents");
  struct Pair {
    double distance;
    std::size_t agent;
    std::size_t target;
  };
  std::vector<Pair> pairs;
  pairs.reserve(agents.size() * targets.size());
  for (std::size_t a = 0; a < agents.size(); ++a)
    for (std::size_t t = 0; t < targets.size(); ++t) pairs.push_back({(agents[a] - targets[t]).norm(), a, t});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    if (x.target != y.target) return x.target < y.target;
    return x.agent < y.agent;
  });
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> assignment(targets.size(), kUnset);
  std::vector<char> agent_used(agents.size(), 0);
  std::size_t remaining = targets.size();
  for (const auto& p : pairs) {
    if (remaining == 0) break;
    if (agent_used[p.agent] || assignment[p.target] != kUnset) continue;
    agent_used[p.agent] = 1;
    assignment[p.target] = p.agent;
    --remaining;
  }
  return assignment;
}

struct PatrolTick {
  double time_s = 0.0;
  double lambda2 = 0.0;  // tasks plus active relays, at the operating power
  Points task_positions;
  Points relay_positions;
  std::vector<char> relay_active;
};

struct PatrolLog {
  double scale = 1.0;  // world -> planning-frame factor
  std::vector<PatrolTick> ticks;

  double connected_fraction() const {
    if (ticks.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& t : ticks)
      if (t.lambda2 > kConnectedLambda2) ++ok;
    return static_cast<double>(ok) / static_cast<double>(ticks.size());
  }
};

/// s = d_c(default power) / d_c(operating power).
inline double planning_scale(const ChannelParams& default_channel, double operating_power_dbm) {
  return derive_curve(default_channel).cutoff_distance_m /
         derive_curve(default_channel.with_power(operating_power_dbm)).cutoff_distance_m;
}

/// Relays start on the first plan's targets. Each tick: replan on the
/// scaled task positions, assign targets greedily (spawning extra relays at
/// the agent nearest each unserved target, parking unassigned ones), move
/// everyone, then log lambda2 at the operating power.
inline PatrolLog simulate_patrol(const PatrolParams& params, const PlannerKind& planner, const PlanContext& ctx) {
  params.validate();
  const WaypointLoop loop(params.waypoints);
  const ChannelCurve operating = derive_curve(ctx.channel.with_power(params.transmit_power_dbm));
  PatrolLog log;
  log.scale = planning_scale(ctx.channel, params.transmit_power_dbm);

  std::vector<double> arc(static_cast<std::size_t>(params.n_tasks));
  for (int i = 0; i < params.n_tasks; ++i) arc[static_cast<std::size_t>(i)] = loop.length() * i / params.n_tasks;
  Points tasks;
  for (double s : arc) tasks.push_back(loop.at(s));

  auto plan_targets = [&](const Points& current_tasks) -> std::optional<Points> {
    Points scaled;
    for (const auto& p : current_tasks) scaled.push_back(log.scale * p);
    try {
      PlanResult result = plan(planner, scaled, ctx);
      for (auto& p : result.comm_positions) p /= log.scale;
      return result.comm_positions;
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  Points relays;
  std::vector<char> active;
  Points targets = plan_targets(tasks).value_or(Points{});
  relays = targets;
  active.assign(relays.size(), 1);
  std::vector<std::size_t> assignment(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) assignment[t] = t;

  const double dt = params.controller_period_s;
  const int ticks = static_cast<int>(std::floor(params.duration_s / dt + 1e-9));
  for (int tick = 0; tick < ticks; ++tick) {
    if (tick > 0) {
      if (auto next = plan_targets(tasks)) {
        targets = std::move(*next);
        while (relays.size() < targets.size()) {
          // Deploy a new relay from the agent nearest to an unserved target.
          const Point& want = targets[relays.size()];
          Point from = tasks.front();
          for (const auto* list : {&tasks, &relays})
            for (const auto& p : *list)
              if ((p - want).norm() < (from - want).norm()) from = p;
          relays.push_back(from);
        }
        assignment = greedy_assignment(relays, targets);
        active.assign(relays.size(), 0);
        for (std::size_t a : assignment) active[a] = 1;
      }
    }

    // Advance the world by one controller period.
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      arc[i] += params.task_speed_mps * dt;
      tasks[i] = loop.at(arc[i]);
    }
    const double reach = params.relay_speed_mps * dt;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      Point& p = relays[assignment[t]];
      const Point step = targets[t] - p;
      const double d = step.norm();
      p = d <= reach ? targets[t] : Point(p + step * (reach / d));
    }

    PatrolTick record;
    record.time_s = (tick + 1) * dt;
    record.task_positions = tasks;
    record.relay_positions = relays;
    record.relay_active = active;
    Points nodes = tasks;
    for (std::size_t r = 0; r < relays.size(); ++r)
      if (active[r]) nodes.push_back(relays[r]);
    record.lambda2 = algebraic_connectivity(nodes, operating);
    log.ticks.push_back(std::move(record));
  }
  return log;
}

/// Long format: one row per agent per tick.
inline void write_patrol_csv(std::ostream& out, const PatrolLog& log) {
  out << "tick,time_s,lambda2,role,index,active,x,y\n" << std::setprecision(10);
  for (std::size_t k = 0; k < log.ticks.size(); ++k) {
    const auto& t = log.ticks[k];
    for (std::size_t i = 0; i < t.task_positions.size(); ++i)
      out << k << ',' << t.time_s << ',' << t.lambda2 << ",task," << i << ",1," << t.task_positions[i].x() << ','
          << t.task_positions[i].y() << '\n';
    for (std::size_t i = 0; i < t.relay_positions.size(); ++i)
      out << k << ',' << t.time_s << ',' << t.lambda2 << ",relay," << i << ',' << int(t.relay_active[i]) << ','
          << t.relay_positions[i].x() << ',' << t.relay_positions[i].y() << '\n';
  }
}

}  // namespace relaynet
