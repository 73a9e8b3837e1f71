#pragma once

// Conditional states of the approximate theory. Every commuted jump factor
// A_k(t) is affine in the commuting pair {a, sigma_y}, so the m-fold record
// integral factorizes into m applications of a per-count superoperator.

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "disentangle.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "jumps.hpp"
#include "count_superop.hpp"
#include "precise.hpp"

namespace cqed {

// p rho_c = (gamma/2)^m / m! N(dt) G N(dt)^dag with G the sequential count
// superoperators applied to rho0. Scales are carried as logs.
inline ConditionalResult conditional_state(const Matrix& rho0, const std::vector<int>& labels, double dt_total,
                                           const SystemParams& p) {
  PhotocountRecord rec{labels, dt_total, std::nullopt};
  rec.validate();
  if (rho0.rows() != p.dim() || rho0.cols() != p.dim()) throw DimensionMismatch("conditional_state: rho0 dimension");
  const int m = static_cast<int>(labels.size());
  double log_scale = m * std::log(p.gamma() / 2) - std::lgamma(m + 1.0);
  Matrix G = rho0;
  if (m > 0) {
    const CountSuperop ops[2] = {CountSuperop(1, dt_total, p), CountSuperop(2, dt_total, p)};
    for (int k : labels) {
      G = ops[k - 1].apply(G);
      const double tr = G.trace().real();
      if (!(tr > 0.0) || !std::isfinite(tr)) throw ZeroProbability("conditional_state: count with zero weight");
      G /= tr;
      log_scale += std::log(tr);
    }
  }
  log_scale += SmoothEvolver(p, false).sandwich(dt_total, G);
  const double tr = G.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr) || std::log(tr) + log_scale < -700)
    throw ZeroProbability("conditional_state: record weight underflows");
  ConditionalResult out;
  out.rho_c = G / tr;
  out.log_weight = log_scale + std::log(tr);
  out.weight = std::exp(out.log_weight);
  out.record = std::move(rec);
  return out;
}

struct SmoothOnSteady {
  double proportionality = 1.0;  // tr[N rho_ss N^dag]
  double residual = 0.0;         // || N rho_ss N^dag / c - rho_ss ||_F
  double scalar_error = 0.0;     // max over blocks |(alpha + Z2) e^{-gamma dt/2} - alpha|
};

// Evaluated in extended precision: N(dt) rho_ss N(dt)^dag is ~e^{-|alpha|^2 gamma dt}
// in size and double rounding elsewhere swamps it beyond dt ~ 0.5/gamma.
inline SmoothOnSteady smooth_on_steady(double dt_total, const SystemParams& p) {
  if (!(dt_total >= 0.0)) throw DomainError("smooth_on_steady: dt must be non-negative");
  const BlockCoherentState ss = steady_blocks(p);
  const PreciseConditional pc = precise_conditional(ss, {}, dt_total, p);
  SmoothOnSteady r;
  r.proportionality = std::exp(pc.log_weight);
  r.residual = block_distance(pc.factor, ss).frobenius;
  const FactoredPropagator fp = factorize_M(dt_total, p);
  const double damp = std::exp(-p.gamma() * dt_total / 2);
  const Complex alpha = p.alpha();
  r.scalar_error = std::max(std::abs((alpha + fp.z2_plus) * damp - alpha),
                            std::abs((std::conj(alpha) + fp.z2_minus) * damp - std::conj(alpha)));
  return r;
}

// Per-count scalar of G(rho_ss, beta) for real beta:
// dt [(4E^2 + g^2)/gamma^2 + (-1)^k 4 E beta/gamma + beta^2].
inline double steady_count_scalar(int k, double dt_total, const SystemParams& p) {
  const double E = p.drive(), g = p.g(), gm = p.gamma(), b = p.beta().real();
  return dt_total * ((4 * E * E + g * g) / (gm * gm) + detector_sign(k) * 4 * E * b / gm + b * b);
}

struct BetaInvariance {
  double distance = 0.0;      // trace distance rho_c vs rho_ss
  double scalar_error = 0.0;  // || G - scalar rho_ss || / || scalar rho_ss ||
};

inline BetaInvariance real_beta_invariance(const std::vector<int>& labels, double dt_total, const SystemParams& p) {
  if (p.beta().imag() != 0.0) throw DomainError("real_beta_invariance: beta must be real");
  const BlockCoherentState ss = steady_blocks(p);
  const PreciseConditional pc = precise_conditional(ss, labels, dt_total, p);
  BetaInvariance r;
  r.distance = block_distance(pc.factor, ss).trace;
  if (!labels.empty()) {
    double log_scalar = 0;
    for (int k : labels) log_scalar += std::log(steady_count_scalar(k, dt_total, p));
    // G = scalar rho_ss: shape (normalized G vs rho_ss) and size.
    r.scalar_error = std::max(block_distance(pc.g_factor, ss).frobenius / std::sqrt(0.5),
                              std::abs(std::expm1(pc.log_g_trace - log_scalar)));
  }
  return r;
}

// lambda_+ / lambda_- of rho_c from rho_ss, computed by the engine (for
// comparison with eigenvalue_ratio).
inline double steady_block_ratio(const std::vector<int>& labels, double dt_total, const SystemParams& p) {
  const PreciseConditional pc = precise_conditional(steady_blocks(p), labels, dt_total, p);
  return pc.lambda[0] / pc.lambda[1];
}

// lambda_1 / lambda_2 for beta = i beta0, as printed:
// prod_p (b + s_p) / (b + s_p (1 - (4/(gamma dt))(1 - e^{-gamma dt/2}))).
inline double eigenvalue_ratio(const std::vector<int>& labels, double dt_total, const SystemParams& p) {
  const double beta0 = p.beta().imag();
  if (p.beta().real() != 0.0) throw DomainError("eigenvalue_ratio: beta must be purely imaginary");
  if (beta0 == 0.0) throw DomainError("eigenvalue_ratio: beta0 = 0 leaves b undefined");
  if (p.g() == 0.0) throw DomainError("eigenvalue_ratio: g = 0 leaves b undefined");
  if (!(dt_total >= 0.0)) throw DomainError("eigenvalue_ratio: dt must be non-negative");
  const double E = p.drive(), g = p.g(), gm = p.gamma();
  const double b = (4 * E * E + g * g + gm * gm * beta0 * beta0) / (2 * g * gm * beta0);
  const double x = gm * dt_total;
  const double q = x == 0.0 ? 2.0 : -4 * std::expm1(-x / 2) / x;
  double r = 1.0;
  for (int k : labels) {
    const double s = detector_sign(k);
    r *= (b + s) / (b + s * (1 - q));
  }
  return r;
}

struct EigenvalueWeights {
  double lambda1 = 0.5, lambda2 = 0.5;
};

inline EigenvalueWeights eigenvalue_weights(double ratio) {
  if (std::isinf(ratio)) return {1.0, 0.0};
  return {ratio / (1 + ratio), 1 / (1 + ratio)};
}

}  // namespace cqed
