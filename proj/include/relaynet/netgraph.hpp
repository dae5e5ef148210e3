#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "relaynet/channel.hpp"
#include "relaynet/common.hpp"

namespace relaynet {

/// Task agents first, then communication agents.
struct TeamConfig {
  Points task_positions;
  Points comm_positions;

  std::size_t task_count() const { return task_positions.size(); }
  std::size_t comm_count() const { return comm_positions.size(); }
  std::size_t size() const { return task_positions.size() + comm_positions.size(); }

  Points nodes() const {
    Points all = task_positions;
    all.insert(all.end(), comm_positions.begin(), comm_positions.end());
    return all;
  }

  void validate() const {
    if (task_positions.size() < 2) throw InvalidArgument("a team needs at least two task agents");
    for (const auto* list : {&task_positions, &comm_positions})
      for (const auto& p : *list)
        if (!p.allFinite()) throw InvalidArgument("agent coordinates must be finite");
  }
};

struct RateGraph {
  Eigen::MatrixXd weights;

  Eigen::Index size() const { return weights.rows(); }
};

/// Connectivity threshold on lambda2.
inline constexpr double kConnectedLambda2 = 1e-8;

inline RateGraph adjacency(const Points& nodes, const ChannelCurve& curve) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  RateGraph g{Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = rate(nodes[i], nodes[j], curve);
      g.weights(i, j) = w;
      g.weights(j, i) = w;
    }
  return g;
}

inline RateGraph adjacency(const TeamConfig& config, const ChannelCurve& curve) {
  return adjacency(config.nodes(), curve);
}

inline Eigen::MatrixXd laplacian(const RateGraph& g) {
  Eigen::MatrixXd lap = -g.weights;
  lap.diagonal() = g.weights.rowwise().sum();
  return lap;
}

/// Second-smallest Laplacian eigenvalue, clamped at zero.
inline double algebraic_connectivity(const RateGraph& g) {
  if (g.size() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(g), Eigen::EigenvaluesOnly);
  return std::max(0.0, solver.eigenvalues()(1));
}

/// Breadth-first reachability over strictly positive edges.
inline bool is_connected(const RateGraph& g) {
  const Eigen::Index n = g.size();
  if (n <= 1) return true;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> frontier{0};
  seen[0] = 1;
  Eigen::Index reached = 1;
  while (!frontier.empty()) {
    const Eigen::Index u = frontier.back();
    frontier.pop_back();
    for (Eigen::Index v = 0; v < n; ++v)
      if (!seen[v] && g.weights(u, v) > 0.0) {
        seen[v] = 1;
        ++reached;
        frontier.push_back(v);
      }
  }
  return reached == n;
}

inline double algebraic_connectivity(const Points& nodes, const ChannelCurve& curve) {
  return algebraic_connectivity(adjacency(nodes, curve));
}

inline bool is_connected(const Points& nodes, const ChannelCurve& curve) {
  return is_connected(adjacency(nodes, curve));
}

/// Least transmit power in [params.transmit_power_dbm, p_max_dbm] that
/// connects the team, resolved by bisection to 0.01 dBm. Empty when even
/// p_max leaves the team disconnected.
inline std::optional<double> min_connecting_power(const Points& nodes, const ChannelParams& params,
                                                  double p_max_dbm) {
  constexpr double kResolutionDbm = 0.01;
  // Edge (i, j) exists iff |xi - xj| < d_c, so connectivity only needs d_c.
  auto connected_at = [&](double dbm) {
    const ChannelCurve curve = derive_curve(params.with_power(dbm));
    return is_connected(nodes, curve);
  };
  double lo = params.transmit_power_dbm;
  if (connected_at(lo)) return lo;
  double hi = std::max(p_max_dbm, lo);
  if (!connected_at(hi)) return std::nullopt;
  while (hi - lo > kResolutionDbm) {
    const double mid = 0.5 * (lo + hi);
    if (connected_at(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

inline std::optional<double> min_connecting_power(const TeamConfig& config, const ChannelParams& params,
                                                  double p_max_dbm) {
  return min_connecting_power(config.nodes(), params, p_max_dbm);
}

}  // namespace relaynet
