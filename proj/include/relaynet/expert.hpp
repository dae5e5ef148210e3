#pragma once

// Optimization expert: a minimum-spanning-tree seed followed by sequential
// semidefinite programs that push up the algebraic connectivity of the team
// by moving only the communication agents.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "relaynet/channel.hpp"
#include "relaynet/common.hpp"
#include "relaynet/lmi_solver.hpp"
#include "relaynet/netgraph.hpp"

namespace relaynet {

struct ExpertParams {
  double trust_region_m = 2.5;
  int max_iterations = 100;
  double convergence_tol = 1e-4;
  int stall_iterations = 2;
  int max_trust_halvings = 5;

  void validate() const {
    if (!(trust_region_m > 0.0)) throw InvalidParameter("trust_region_m must be positive");
    if (max_iterations < 1) throw InvalidParameter("max_iterations must be at least 1");
    if (!(convergence_tol > 0.0)) throw InvalidParameter("convergence_tol must be positive");
    if (stall_iterations < 1) throw InvalidParameter("stall_iterations must be at least 1");
  }
};

struct ExpertSolution {
  Points comm_positions;
  double gamma = 0.0;    // objective of the last accepted subproblem
  double lambda2 = 0.0;  // true algebraic connectivity of the final team
  int iterations = 0;
  // Certified connectivity: entry 0 is the seed, then one entry per accepted step.
  std::vector<double> gamma_trace;
};

/// Columns form an orthonormal basis of the complement of the ones vector.
/// Taken from the Householder reflector that maps 1/sqrt(n) onto e1.
inline Eigen::MatrixXd orthonormal_complement_basis(Eigen::Index n) {
  if (n < 2) throw InvalidArgument("orthonormal_complement_basis needs n >= 2");
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
  Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(n - 1);
}

/// Euclidean MST edges (Prim, O(N^2)) as (parent, child) index pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> euclidean_mst(const Points& points) {
  const std::size_t n = points.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (n < 2) return edges;
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, 0);
  best[0] = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_tree[i] && (u == n || best[i] < best[u])) u = i;
    in_tree[u] = 1;
    if (step > 0) edges.emplace_back(parent[u], u);
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = (points[u] - points[v]).norm();
      if (d < best[v]) {
        best[v] = d;
        parent[v] = u;
      }
    }
  }
  return edges;
}

/// Relays needed to split a segment of length `length` into pieces strictly
/// shorter than d_c.
inline int relays_for_segment(double length, double cutoff) {
  if (length < cutoff) return 0;
  int k = static_cast<int>(std::ceil(length / cutoff)) - 1;
  while (length / (k + 1) >= cutoff) ++k;
  return k;
}

/// Subdivides every MST edge at least d_c long with equally spaced relays.
inline Points mst_feasible_init(const Points& task_positions, const ChannelCurve& curve) {
  if (task_positions.size() < 2) throw InvalidArgument("mst_feasible_init needs at least two tasks");
  Points relays;
  for (const auto& [a, b] : euclidean_mst(task_positions)) {
    const Point& pa = task_positions[a];
    const Point& pb = task_positions[b];
    const int k = relays_for_segment((pb - pa).norm(), curve.cutoff_distance_m);
    for (int i = 1; i <= k; ++i) relays.push_back(pa + (pb - pa) * (static_cast<double>(i) / (k + 1)));
  }
  return relays;
}

/// Builds the linearized connectivity LMI around the current team. Variables
/// are (dx_0, dy_0, ..., dx_{M-1}, dy_{M-1}, gamma); each relay coordinate
/// moves at most `trust_region` from its current value.
inline LmiProblem build_connectivity_lmi(const TeamConfig& config, const ChannelCurve& curve,
                                         double trust_region) {
  const Points nodes = config.nodes();
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const auto tasks = static_cast<Eigen::Index>(config.task_count());
  const auto relays = static_cast<Eigen::Index>(config.comm_count());
  const Eigen::MatrixXd basis = orthonormal_complement_basis(n);
  const Eigen::Index k = n - 1;
  const Eigen::Index m = 2 * relays + 1;

  LmiProblem problem;
  problem.constant = basis.transpose() * laplacian(adjacency(nodes, curve)) * basis;
  problem.coefficients.assign(static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(k, k));
  for (Eigen::Index r = 0; r < relays; ++r) {
    const Eigen::Index a = tasks + r;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == a) continue;
      const Point g = rate_gradient(nodes[a], nodes[j], curve);
      if (g.isZero(0.0)) continue;
      // d L / d x_a = g (e_a - e_j)(e_a - e_j)^T, projected through the basis.
      const Eigen::VectorXd edge = (basis.row(a) - basis.row(j)).transpose();
      const Eigen::MatrixXd outer = edge * edge.transpose();
      problem.coefficients[static_cast<std::size_t>(2 * r)] += g.x() * outer;
      problem.coefficients[static_cast<std::size_t>(2 * r + 1)] += g.y() * outer;
    }
  }
  problem.coefficients.back() = -Eigen::MatrixXd::Identity(k, k);

  problem.objective = Eigen::VectorXd::Zero(m);
  problem.objective(m - 1) = 1.0;
  problem.lower = Eigen::VectorXd::Constant(m, -trust_region);
  problem.upper = Eigen::VectorXd::Constant(m, trust_region);
  problem.lower(m - 1) = -std::numeric_limits<double>::infinity();
  problem.upper(m - 1) = std::numeric_limits<double>::infinity();
  return problem;
}

struct SdpStepResult {
  Points comm_positions;
  double gamma = 0.0;
};

/// One linearized connectivity-maximization step.
inline SdpStepResult sdp_step(const TeamConfig& config, const ChannelCurve& curve, const ExpertParams& params) {
  config.validate();
  const Points nodes = config.nodes();
  const double lambda2 = algebraic_connectivity(nodes, curve);
  if (!(lambda2 > kConnectedLambda2)) throw PreconditionViolation("sdp_step requires a connected team");
  if (config.comm_count() == 0) return {{}, lambda2};

  const LmiProblem problem = build_connectivity_lmi(config, curve, params.trust_region_m);
  const Eigen::Index m = problem.variable_count();
  Eigen::VectorXd start = Eigen::VectorXd::Zero(m);
  // The incumbent has min eig(P^T L P) = lambda2, so any smaller gamma is interior.
  start(m - 1) = 0.9 * lambda2;
  const LmiSolution solution = solve_lmi(problem, start);

  SdpStepResult result;
  result.gamma = solution.objective;
  result.comm_positions = config.comm_positions;
  for (std::size_t r = 0; r < result.comm_positions.size(); ++r) {
    Point delta(solution.z(static_cast<Eigen::Index>(2 * r)), solution.z(static_cast<Eigen::Index>(2 * r + 1)));
    // Interior-point iterates sit strictly inside the box; clamp roundoff anyway.
    delta = delta.cwiseMax(-params.trust_region_m).cwiseMin(params.trust_region_m);
    result.comm_positions[r] += delta;
  }
  return result;
}

/// Sequential SDP from `init` (or the MST seed). A step that lowers the true
/// lambda2 by more than 1e-6 is retried with a halved trust region.
inline ExpertSolution optimize(const Points& task_positions, const ChannelCurve& curve,
                               const ExpertParams& params = {}, std::optional<Points> init = std::nullopt) {
  params.validate();
  constexpr double kAcceptSlack = 1e-6;
  TeamConfig config{task_positions, init ? *init : mst_feasible_init(task_positions, curve)};
  config.validate();

  double lambda2 = algebraic_connectivity(config.nodes(), curve);
  if (!(lambda2 > kConnectedLambda2))
    throw InfeasibleInitialization("initial team is disconnected (lambda2 = " + std::to_string(lambda2) + ")");

  ExpertSolution solution;
  solution.gamma = lambda2;
  solution.gamma_trace.push_back(lambda2);
  if (config.comm_count() == 0) {
    solution.lambda2 = lambda2;
    return solution;
  }

  int stalled = 0;
  for (int iteration = 0; iteration < params.max_iterations; ++iteration) {
    ExpertParams step_params = params;
    std::optional<SdpStepResult> accepted;
    double accepted_lambda2 = lambda2;
    for (int halving = 0; halving <= params.max_trust_halvings; ++halving) {
      try {
        SdpStepResult step = sdp_step(config, curve, step_params);
        TeamConfig candidate{config.task_positions, step.comm_positions};
        const double candidate_lambda2 = algebraic_connectivity(candidate.nodes(), curve);
        if (candidate_lambda2 >= lambda2 - kAcceptSlack) {
          accepted = std::move(step);
          accepted_lambda2 = candidate_lambda2;
          break;
        }
      } catch (const SolverFailure&) {
        // retry with a smaller region
      }
      step_params.trust_region_m *= 0.5;
    }
    if (!accepted) break;

    const double change = std::abs(accepted_lambda2 - lambda2);
    config.comm_positions = std::move(accepted->comm_positions);
    lambda2 = accepted_lambda2;
    solution.gamma = accepted->gamma;
    solution.gamma_trace.push_back(lambda2);
    solution.iterations = iteration + 1;
    stalled = change < params.convergence_tol ? stalled + 1 : 0;
    if (stalled >= params.stall_iterations) break;
  }
  solution.comm_positions = std::move(config.comm_positions);
  solution.lambda2 = lambda2;
  return solution;
}

}  // namespace relaynet
