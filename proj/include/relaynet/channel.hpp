#pragma once

// Normalized wireless rate model: erf of the square root of the received SNR,
// wrapped in a C1 piecewise function that falls linearly to zero past the
// transition distance.

#include <cmath>
#include <numbers>

#include "relaynet/common.hpp"

namespace relaynet {

struct ChannelParams {
  double transmit_power_dbm = 0.0;
  double noise_floor_dbm = -70.0;
  double gain_constant = 5.01e-6;
  double path_loss_exponent = 2.52;
  double rate_cutoff = 0.25;

  double transmit_power_mw() const { return dbm_to_mw(transmit_power_dbm); }
  double noise_floor_mw() const { return dbm_to_mw(noise_floor_dbm); }

  ChannelParams with_power(double dbm) const {
    ChannelParams p = *this;
    p.transmit_power_dbm = dbm;
    return p;
  }

  void validate() const {
    if (!(gain_constant > 0.0)) throw InvalidParameter("gain_constant must be positive");
    if (!(path_loss_exponent > 0.0)) throw InvalidParameter("path_loss_exponent must be positive");
    if (!(rate_cutoff > 0.0 && rate_cutoff < 1.0))
      throw InvalidParameter("rate_cutoff must lie in (0, 1), got " + std::to_string(rate_cutoff));
    if (!std::isfinite(transmit_power_dbm) || !std::isfinite(noise_floor_dbm))
      throw InvalidParameter("power levels must be finite");
  }
};

namespace detail {

// P_T K / P_N0, the SNR at one meter.
inline double snr_at_unit_distance(const ChannelParams& p) {
  return p.transmit_power_mw() * p.gain_constant / p.noise_floor_mw();
}

}  // namespace detail

/// Untruncated rate erf(sqrt(P_T K d^-n / P_N0)). Equals 1 at d = 0.
inline double nominal_rate(double d, const ChannelParams& params) {
  if (d <= 0.0) return 1.0;
  const double snr = detail::snr_at_unit_distance(params) * std::pow(d, -params.path_loss_exponent);
  return std::erf(std::sqrt(snr));
}

/// d/dd of nominal_rate. Always negative for d > 0.
inline double nominal_rate_derivative(double d, const ChannelParams& params) {
  if (d <= 0.0) return 0.0;
  const double n = params.path_loss_exponent;
  const double u = std::sqrt(detail::snr_at_unit_distance(params) * std::pow(d, -n));
  return -(n / std::sqrt(std::numbers::pi)) * u * std::exp(-u * u) / d;
}

/// Knots of the truncated model for one parameter set. Build with derive_curve.
struct ChannelCurve {
  ChannelParams params;
  double transition_distance_m = 0.0;
  double cutoff_distance_m = 0.0;
  double slope_at_transition = 0.0;
};

inline constexpr double kRootLowerBracket = 1e-3;
inline constexpr double kRootUpperBracket = 1e4;
inline constexpr double kRootTolerance = 1e-9;
/// Below this separation two agents are treated as coincident.
inline constexpr double kMinDistance = 1e-6;

inline ChannelCurve derive_curve(const ChannelParams& params) {
  params.validate();
  const double target = params.rate_cutoff;
  double lo = kRootLowerBracket;
  double hi = kRootUpperBracket;
  if (!(nominal_rate(lo, params) > target && nominal_rate(hi, params) < target))
    throw InvalidParameter("rate_cutoff is not bracketed on [1e-3, 1e4] m for these parameters");
  while (hi - lo > kRootTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (nominal_rate(mid, params) > target)
      lo = mid;
    else
      hi = mid;
  }
  ChannelCurve curve;
  curve.params = params;
  curve.transition_distance_m = 0.5 * (lo + hi);
  curve.slope_at_transition = nominal_rate_derivative(curve.transition_distance_m, params);
  curve.cutoff_distance_m = curve.transition_distance_m - target / curve.slope_at_transition;
  return curve;
}

/// Truncated rate: nominal up to d_t, tangent line to d_c, zero beyond.
inline double rate(double d, const ChannelCurve& curve) {
  if (d <= curve.transition_distance_m) return nominal_rate(d, curve.params);
  if (d <= curve.cutoff_distance_m) {
    const double r = curve.params.rate_cutoff +
                     curve.slope_at_transition * (d - curve.transition_distance_m);
    return r > 0.0 ? r : 0.0;
  }
  return 0.0;
}

inline double rate_derivative(double d, const ChannelCurve& curve) {
  if (d <= curve.transition_distance_m) return nominal_rate_derivative(d, curve.params);
  if (d <= curve.cutoff_distance_m) return curve.slope_at_transition;
  return 0.0;
}

inline double rate(const Point& a, const Point& b, const ChannelCurve& curve) {
  return rate((a - b).norm(), curve);
}

/// Gradient of rate(|xi - xj|) with respect to xi. Zero outside the support
/// and for coincident agents.
inline Point rate_gradient(const Point& xi, const Point& xj, const ChannelCurve& curve) {
  const Point diff = xi - xj;
  const double d = diff.norm();
  if (d < kMinDistance || d > curve.cutoff_distance_m) return Point::Zero();
  return rate_derivative(d, curve) * diff / d;
}

}  // namespace relaynet
