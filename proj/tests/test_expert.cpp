#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "relaynet/expert.hpp"

using namespace relaynet;

namespace {

const ChannelCurve& default_curve() {
  static const ChannelCurve curve = derive_curve(ChannelParams{});
  return curve;
}

struct GridBest {
  Point at;
  double lambda2;
};

// Coarse-to-fine exhaustive search for the single relay between two tasks.
GridBest best_single_relay(const Points& tasks, Point center, double half_width) {
  oracle::Channel ch;
  const oracle::Knots k = oracle::knots(ch);
  GridBest best{center, -1.0};
  for (double step : {0.1, 0.01, 0.001}) {
    const Point c = best.lambda2 < 0 ? center : best.at;
    const double w = best.lambda2 < 0 ? half_width : 20 * step;
    for (double x = c.x() - w; x <= c.x() + w + 1e-12; x += step)
      for (double y = c.y() - w; y <= c.y() + w + 1e-12; y += step) {
        oracle::Vec2s nodes = tasks;
        nodes.emplace_back(x, y);
        const double l2 = oracle::lambda2(nodes, ch, k);
        if (l2 > best.lambda2) best = {Point(x, y), l2};
      }
  }
  return best;
}

}  // namespace

TEST(LmiSolver, DiagonalToyProblem) {
  // maximize g s.t. diag(1 + z, 2 - z) - g I >= 0, |z| <= 1: optimum z = 0.5, g = 1.5.
  LmiProblem p;
  p.constant = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  p.coefficients = {Eigen::Vector2d(1.0, -1.0).asDiagonal(), -Eigen::MatrixXd::Identity(2, 2)};
  p.objective = Eigen::Vector2d(0.0, 1.0);
  p.lower = Eigen::Vector2d(-1.0, -std::numeric_limits<double>::infinity());
  p.upper = Eigen::Vector2d(1.0, std::numeric_limits<double>::infinity());
  const LmiSolution s = solve_lmi(p, Eigen::Vector2d(0.0, 0.0));
  EXPECT_NEAR(s.z(0), 0.5, 1e-6);
  EXPECT_NEAR(s.objective, 1.5, 1e-7);
}

TEST(LmiSolver, BoxBoundBinds) {
  // maximize g s.t. [[1 + z, 0], [0, 5]] >= g I, |z| <= 1: optimum at the bound z = 1, g = 2.
  LmiProblem p;
  p.constant = Eigen::Vector2d(1.0, 5.0).asDiagonal();
  p.coefficients = {Eigen::Vector2d(1.0, 0.0).asDiagonal(), -Eigen::MatrixXd::Identity(2, 2)};
  p.objective = Eigen::Vector2d(0.0, 1.0);
  p.lower = Eigen::Vector2d(-1.0, -std::numeric_limits<double>::infinity());
  p.upper = Eigen::Vector2d(1.0, std::numeric_limits<double>::infinity());
  const LmiSolution s = solve_lmi(p, Eigen::Vector2d(0.0, 0.0));
  EXPECT_NEAR(s.z(0), 1.0, 1e-6);
  EXPECT_NEAR(s.objective, 2.0, 1e-6);
}

TEST(LmiSolver, RejectsInfeasibleStart) {
  LmiProblem p;
  p.constant = Eigen::MatrixXd::Identity(2, 2);
  p.coefficients = {-Eigen::MatrixXd::Identity(2, 2)};
  p.objective = Eigen::VectorXd::Ones(1);
  p.lower = Eigen::VectorXd::Constant(1, -10.0);
  p.upper = Eigen::VectorXd::Constant(1, 10.0);
  EXPECT_THROW(solve_lmi(p, Eigen::VectorXd::Constant(1, 2.0)), SolverFailure);
}

TEST(ComplementBasis, Properties) {
  const Eigen::MatrixXd p2 = orthonormal_complement_basis(2);
  EXPECT_NEAR(std::abs(p2(0, 0)), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(p2(0, 0), -p2(1, 0), 1e-12);
  EXPECT_LT((orthonormal_complement_basis(5).transpose() * Eigen::VectorXd::Ones(5)).norm(), 1e-12);
  const Eigen::MatrixXd p3 = orthonormal_complement_basis(3);
  EXPECT_LT((p3.transpose() * p3 - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-12);
  EXPECT_THROW(orthonormal_complement_basis(1), InvalidArgument);
}

TEST(MstInit, SubdividesLongEdges) {
  ChannelCurve c = default_curve();
  c.cutoff_distance_m = 28.0;
  Points one = mst_feasible_init({{-23.4, 0.0}, {23.4, 0.0}}, c);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_LT(one[0].norm(), 1e-12);

  Points two = mst_feasible_init({{0.0, 0.0}, {60.0, 0.0}}, c);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_NEAR(two[0].x(), 20.0, 1e-12);
  EXPECT_NEAR(two[1].x(), 40.0, 1e-12);

  EXPECT_TRUE(mst_feasible_init({{0.0, 0.0}, {20.0, 0.0}, {10.0, 15.0}}, c).empty());
}

TEST(MstInit, AlwaysConnectsProperty) {
  const auto& c = default_curve();
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(2, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const Points tasks = oracle::random_points(rng, count(rng), 80.0);
    TeamConfig team{tasks, mst_feasible_init(tasks, c)};
    EXPECT_TRUE(is_connected(team.nodes(), c));
  }
}

TEST(MstInit, ExactMultipleOfCutoffStillConnects) {
  const auto& c = default_curve();
  EXPECT_EQ(relays_for_segment(2.0 * c.cutoff_distance_m, c.cutoff_distance_m), 2);
  EXPECT_EQ(relays_for_segment(0.5 * c.cutoff_distance_m, c.cutoff_distance_m), 0);
}

TEST(SdpStep, MidpointRelayIsStationary) {
  const auto& c = default_curve();
  const TeamConfig team{{{-23.4, 0.0}, {23.4, 0.0}}, {{0.0, 0.0}}};
  const SdpStepResult step = sdp_step(team, c, ExpertParams{});
  EXPECT_LT(step.comm_positions[0].norm(), 1e-3);
}

TEST(SdpStep, DisplacementWithinTrustRegion) {
  const auto& c = default_curve();
  std::mt19937_64 rng(5);
  ExpertParams params;
  for (double delta : {0.5, 2.5, 6.0}) {
    params.trust_region_m = delta;
    for (int trial = 0; trial < 10; ++trial) {
      const Points tasks = oracle::random_points(rng, 3, 40.0);
      const TeamConfig team{tasks, mst_feasible_init(tasks, c)};
      if (team.comm_count() == 0) continue;
      const SdpStepResult step = sdp_step(team, c, params);
      for (std::size_t r = 0; r < team.comm_count(); ++r)
        EXPECT_LE((step.comm_positions[r] - team.comm_positions[r]).cwiseAbs().maxCoeff(), delta + 1e-6);
    }
  }
}

TEST(SdpStep, OffMidpointRelayImproves) {
  const auto& c = default_curve();
  const TeamConfig team{{{-23.4, 0.0}, {23.4, 0.0}}, {{1.5, 0.8}}};
  const double before = algebraic_connectivity(team.nodes(), c);
  const SdpStepResult step = sdp_step(team, c, ExpertParams{});
  EXPECT_GT(step.gamma, before);
  EXPECT_GT(algebraic_connectivity(TeamConfig{team.task_positions, step.comm_positions}.nodes(), c), before);
}

TEST(SdpStep, RequiresConnectedTeam) {
  const auto& c = default_curve();
  const TeamConfig team{{{-100.0, 0.0}, {100.0, 0.0}}, {{0.0, 0.0}}};
  EXPECT_THROW(sdp_step(team, c, ExpertParams{}), PreconditionViolation);
}

TEST(Optimize, LineConvergesToGridOptimum) {
  const auto& c = default_curve();
  const Points tasks = {{-23.4, 0.0}, {23.4, 0.0}};
  const ExpertSolution sol = optimize(tasks, c, ExpertParams{}, Points{{4.0, 2.0}});
  ASSERT_EQ(sol.comm_positions.size(), 1u);
  const GridBest best = best_single_relay(tasks, {0.0, 0.0}, 3.0);
  EXPECT_LT(sol.comm_positions[0].norm(), 0.5);
  EXPECT_LT(best.at.norm(), 0.01);
  EXPECT_NEAR(sol.lambda2, best.lambda2, 1e-3);
}

TEST(Optimize, SeedOutsideRangeOfOneTaskIsRejected) {
  // (5, 3) is farther than d_c from (-23.4, 0), so the team starts split.
  const auto& c = default_curve();
  const Points tasks = {{-23.4, 0.0}, {23.4, 0.0}};
  EXPECT_GT((Point(5.0, 3.0) - tasks[0]).norm(), c.cutoff_distance_m);
  EXPECT_THROW(optimize(tasks, c, ExpertParams{}, Points{{5.0, 3.0}}), InfeasibleInitialization);
}

TEST(Optimize, DisconnectedInitThrows) {
  const auto& c = default_curve();
  const double far = 10.0 * c.cutoff_distance_m;
  EXPECT_THROW(optimize({{-far, 0.0}, {far, 0.0}}, c, ExpertParams{}, Points{{0.0, 500.0}}),
               InfeasibleInitialization);
}

TEST(Optimize, TraceMonotoneAndNoWorseThanSeed) {
  const auto& c = default_curve();
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> count(2, 4);
  for (int trial = 0; trial < 15; ++trial) {
    const Points tasks = oracle::random_points(rng, count(rng), 50.0);
    const ExpertSolution sol = optimize(tasks, c);
    ASSERT_FALSE(sol.gamma_trace.empty());
    for (std::size_t i = 1; i < sol.gamma_trace.size(); ++i)
      EXPECT_GE(sol.gamma_trace[i], sol.gamma_trace[i - 1] - 1e-6);
    const TeamConfig seed{tasks, mst_feasible_init(tasks, c)};
    EXPECT_GE(sol.lambda2, algebraic_connectivity(seed.nodes(), c) - 1e-6);
    EXPECT_NEAR(sol.lambda2, algebraic_connectivity(TeamConfig{tasks, sol.comm_positions}.nodes(), c), 1e-12);
  }
}

TEST(Optimize, MirrorSymmetricInstanceGivesMirrorSymmetricRelays) {
  const auto& c = default_curve();
  const Points tasks = {{-30.0, 0.0}, {30.0, 0.0}};
  const ExpertSolution sol = optimize(tasks, c);
  ASSERT_EQ(sol.comm_positions.size(), 2u);
  // Mirror x -> -x maps the relay set to itself.
  EXPECT_NEAR(sol.comm_positions[0].x(), -sol.comm_positions[1].x(), 1e-3);
  EXPECT_NEAR(sol.comm_positions[0].y(), sol.comm_positions[1].y(), 1e-3);
}

TEST(SdpStep, TranslationEquivariant) {
  const auto& c = default_curve();
  std::mt19937_64 rng(8);
  const Point shift(17.25, -9.5);
  for (int trial = 0; trial < 10; ++trial) {
    const Points tasks = oracle::random_points(rng, 3, 40.0);
    const TeamConfig team{tasks, mst_feasible_init(tasks, c)};
    if (team.comm_count() == 0) continue;
    TeamConfig moved = team;
    for (auto* list : {&moved.task_positions, &moved.comm_positions})
      for (auto& p : *list) p += shift;
    const SdpStepResult a = sdp_step(team, c, ExpertParams{});
    const SdpStepResult b = sdp_step(moved, c, ExpertParams{});
    EXPECT_NEAR(a.gamma, b.gamma, 1e-7);
    for (std::size_t r = 0; r < a.comm_positions.size(); ++r)
      EXPECT_LT((a.comm_positions[r] + shift - b.comm_positions[r]).norm(), 1e-3);
  }
}

// The run stops once lambda2 changes by less than 1e-4 per step, so only the
// reached connectivity (not the exact stopping point) is translation invariant.
TEST(Optimize, TranslationInvariantConnectivity) {
  const auto& c = default_curve();
  std::mt19937_64 rng(8);
  const Point shift(17.25, -9.5);
  for (int trial = 0; trial < 5; ++trial) {
    const Points tasks = oracle::random_points(rng, 3, 40.0);
    Points moved = tasks;
    for (auto& p : moved) p += shift;
    const ExpertSolution a = optimize(tasks, c);
    const ExpertSolution b = optimize(moved, c);
    ASSERT_EQ(a.comm_positions.size(), b.comm_positions.size());
    EXPECT_NEAR(a.lambda2, b.lambda2, 1e-3);
  }
}

TEST(Optimize, DeterministicIterations) {
  const auto& c = default_curve();
  const Points tasks = {{-35.0, 10.0}, {30.0, -5.0}, {5.0, 40.0}};
  const ExpertSolution a = optimize(tasks, c);
  const ExpertSolution b = optimize(tasks, c);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.comm_positions, b.comm_positions);
}

TEST(Optimize, NoRelaysReturnsImmediately) {
  const ExpertSolution sol = optimize({{0.0, 0.0}, {10.0, 0.0}}, default_curve());
  EXPECT_TRUE(sol.comm_positions.empty());
  EXPECT_EQ(sol.iterations, 0);
  EXPECT_GT(sol.lambda2, 0.0);
}

TEST(ExpertParams, Validation) {
  ExpertParams p;
  p.trust_region_m = 0.0;
  EXPECT_THROW(optimize({{0.0, 0.0}, {40.0, 0.0}}, default_curve(), p), InvalidParameter);
}
