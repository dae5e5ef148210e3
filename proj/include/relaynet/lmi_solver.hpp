#pragma once

// Small dense log-barrier interior-point solver for
//
//   maximize  c^T z
//   s.t.      F0 + sum_v z_v F_v  >= 0   (positive semidefinite)
//             lower <= z <= upper         (entries may be infinite)
//
// started from a strictly feasible point. Sized for the relay-placement
// subproblem: a few dozen variables, LMI blocks of a few dozen rows.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "relaynet/common.hpp"

namespace relaynet {

struct LmiProblem {
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> coefficients;
  Eigen::VectorXd objective;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index variable_count() const { return objective.size(); }
  Eigen::Index block_size() const { return constant.rows(); }

  void evaluate_into(const Eigen::VectorXd& z, Eigen::MatrixXd& f) const {
    f = constant;
    for (Eigen::Index v = 0; v < z.size(); ++v)
      if (z(v) != 0.0) f.noalias() += z(v) * coefficients[static_cast<std::size_t>(v)];
  }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd f;
    evaluate_into(z, f);
    return f;
  }
};

struct LmiOptions {
  double gap_tolerance = 1e-8;
  double barrier_growth = 20.0;
  double newton_tolerance = 1e-10;
  int max_newton_steps = 4000;
};

struct LmiSolution {
  Eigen::VectorXd z;
  double objective = 0.0;
  int newton_steps = 0;
};

namespace detail {

class BarrierState {
 public:
  explicit BarrierState(const LmiProblem& problem) : problem_(problem) {}

  // Log-barrier value of the LMI and box constraints, or empty if z is not
  // strictly feasible.
  std::optional<double> barrier(const Eigen::VectorXd& z) {
    for (Eigen::Index v = 0; v < z.size(); ++v) {
      if (std::isfinite(problem_.lower(v)) && !(z(v) > problem_.lower(v))) return std::nullopt;
      if (std::isfinite(problem_.upper(v)) && !(z(v) < problem_.upper(v))) return std::nullopt;
    }
    problem_.evaluate_into(z, lmi_);
    llt_.compute(lmi_);
    if (llt_.info() != Eigen::Success) return std::nullopt;
    const auto& factor = llt_.matrixLLT();
    double value = 0.0;
    for (Eigen::Index i = 0; i < factor.rows(); ++i) {
      const double d = factor(i, i);
      if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
      value -= 2.0 * std::log(d);
    }
    for (Eigen::Index v = 0; v < z.size(); ++v) {
      if (std::isfinite(problem_.lower(v))) value -= std::log(z(v) - problem_.lower(v));
      if (std::isfinite(problem_.upper(v))) value -= std::log(problem_.upper(v) - z(v));
    }
    return value;
  }

  // Gradient and Hessian of the barrier at the point last passed to barrier().
  void derivatives(const Eigen::VectorXd& z, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) {
    const Eigen::Index m = z.size();
    const Eigen::Index k = problem_.block_size();
    // M_v = L^-1 F_v L^-T, so tr(F^-1 F_v) = tr(M_v) and
    // tr(F^-1 F_v F^-1 F_w) = <M_v, M_w>.
    stacked_.resize(k * k, m);
    grad.resize(m);
    const auto lower_tri = llt_.matrixL();
    for (Eigen::Index v = 0; v < m; ++v) {
      work_ = problem_.coefficients[static_cast<std::size_t>(v)];
      lower_tri.solveInPlace(work_);
      work_.transposeInPlace();
      lower_tri.solveInPlace(work_);
      grad(v) = -work_.trace();
      stacked_.col(v) = Eigen::Map<const Eigen::VectorXd>(work_.data(), k * k);
    }
    hess.noalias() = stacked_.transpose() * stacked_;
    for (Eigen::Index v = 0; v < m; ++v) {
      if (std::isfinite(problem_.lower(v))) {
        const double s = z(v) - problem_.lower(v);
        grad(v) -= 1.0 / s;
        hess(v, v) += 1.0 / (s * s);
      }
      if (std::isfinite(problem_.upper(v))) {
        const double s = problem_.upper(v) - z(v);
        grad(v) += 1.0 / s;
        hess(v, v) += 1.0 / (s * s);
      }
    }
  }

  double barrier_parameter() const {
    double count = static_cast<double>(problem_.block_size());
    for (Eigen::Index v = 0; v < problem_.variable_count(); ++v) {
      if (std::isfinite(problem_.lower(v))) count += 1.0;
      if (std::isfinite(problem_.upper(v))) count += 1.0;
    }
    return count;
  }

 private:
  const LmiProblem& problem_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd stacked_;
  Eigen::MatrixXd work_;
  Eigen::MatrixXd lmi_;
};

inline double max_box_step(const LmiProblem& problem, const Eigen::VectorXd& z, const Eigen::VectorXd& dz) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index v = 0; v < z.size(); ++v) {
    if (dz(v) > 0.0 && std::isfinite(problem.upper(v)))
      alpha = std::min(alpha, (problem.upper(v) - z(v)) / dz(v));
    if (dz(v) < 0.0 && std::isfinite(problem.lower(v)))
      alpha = std::min(alpha, (problem.lower(v) - z(v)) / dz(v));
  }
  return alpha;
}

}  // namespace detail

/// Path-following barrier method. Throws SolverFailure if the start point is
/// not strictly feasible or Newton centering breaks down.
inline LmiSolution solve_lmi(const LmiProblem& problem, const Eigen::VectorXd& start,
                             const LmiOptions& options = {}) {
  const Eigen::Index m = problem.variable_count();
  if (start.size() != m || static_cast<Eigen::Index>(problem.coefficients.size()) != m ||
      problem.lower.size() != m || problem.upper.size() != m)
    throw InvalidArgument("LMI problem dimensions disagree");

  detail::BarrierState state(problem);
  Eigen::VectorXd z = start;
  auto phi_barrier = state.barrier(z);
  if (!phi_barrier) throw SolverFailure("LMI start point is not strictly feasible");

  const Eigen::VectorXd& c = problem.objective;
  const double nu = state.barrier_parameter();
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  state.derivatives(z, grad, hess);

  // Initial t: best fit of the centrality condition t c = grad(barrier).
  double t = 1.0;
  {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    const Eigen::VectorXd hc = ldlt.solve(c);
    const double denom = c.dot(hc);
    if (denom > 0.0 && std::isfinite(denom)) {
      const double fit = grad.dot(hc) / denom;
      if (fit > 0.0 && std::isfinite(fit)) t = fit;
    }
    t = std::max(t, 1e-3);
  }

  int steps = 0;
  while (true) {
    // Centering: minimize -t c^T z + barrier(z).
    while (true) {
      if (++steps > options.max_newton_steps) throw SolverFailure("LMI Newton iteration limit reached");
      state.barrier(z);
      state.derivatives(z, grad, hess);
      const Eigen::VectorXd g = -t * c + grad;
      Eigen::LLT<Eigen::MatrixXd> hllt(hess);
      Eigen::VectorXd dz;
      if (hllt.info() == Eigen::Success) {
        dz = -hllt.solve(g);
      } else {
        dz = -hess.ldlt().solve(g);
      }
      if (!dz.allFinite()) throw SolverFailure("LMI Newton direction is not finite");
      const double decrement = -g.dot(dz);
      if (decrement < 0.0) throw SolverFailure("LMI Hessian is not positive definite");
      const double f0 = -t * c.dot(z) + *state.barrier(z);
      // At large t the decrement can drop below what f0 can resolve; further
      // Armijo "progress" would only be roundoff.
      const double resolvable = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);
      if (0.5 * decrement <= std::max(options.newton_tolerance, resolvable)) break;

      double alpha = std::min(1.0, 0.99 * detail::max_box_step(problem, z, dz));
      bool moved = false;
      for (; alpha > 1e-10; alpha *= 0.5) {
        const Eigen::VectorXd trial = z + alpha * dz;
        const auto b = state.barrier(trial);
        if (!b) continue;
        const double f1 = -t * c.dot(trial) + *b;
        if (f1 < f0 && f1 <= f0 - 0.25 * alpha * decrement) {
          z = trial;
          moved = true;
          break;
        }
      }
      // Line search stalls only at roundoff level; accept the current center.
      if (!moved) break;
    }
    if (nu / t < options.gap_tolerance) break;
    t *= options.barrier_growth;
  }
  return {z, c.dot(z), steps};
}

}  // namespace relaynet
