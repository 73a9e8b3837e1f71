#pragma once

// Closed-form disentangling of the smooth (no-count) propagator. Every
// generator involved is diagonal in sigma_y, so each object reduces to two
// single-mode problems on the sigma_y = +1 and -1 blocks.

#include <cmath>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "expm.hpp"
#include "hilbert.hpp"
#include "normal_order.hpp"
#include "params.hpp"

namespace cqed {

// M(t) = exp(z1) exp(-(gamma t/2) n) exp(z2 a^dag) exp(z3 a) with z2, z3
// taking their block values; N(t) = beta_damp * M(t).
struct FactoredPropagator {
  double t = 0.0;
  double decay = 0.0;  // gamma t / 2
  double z1 = 0.0;
  Complex z2_plus, z2_minus, z3_plus, z3_minus;
  double beta_damp = 1.0;

  Complex z2(int sign) const { return sign > 0 ? z2_plus : z2_minus; }
  Complex z3(int sign) const { return sign > 0 ? z3_plus : z3_minus; }
};

// 1 - e^{-x} - x without cancellation for small x.
inline double one_minus_exp_minus(double x) {
  if (std::abs(x) < 1e-3) return x * x * (-0.5 + x * (1.0 / 6 + x * (-1.0 / 24 + x / 120)));
  return -std::expm1(-x) - x;
}

inline FactoredPropagator factorize_M(double t, const SystemParams& p) {
  if (!(t >= 0.0)) throw DomainError("factorize_M: t must be non-negative");
  const double gm = p.gamma(), E = p.drive(), g = p.g();
  FactoredPropagator fp;
  fp.t = t;
  fp.decay = gm * t / 2;
  fp.z1 = (4 * E * E + g * g) / (gm * gm) * one_minus_exp_minus(fp.decay);
  const double up = std::expm1(fp.decay), down = std::expm1(-fp.decay);
  fp.z2_plus = Complex(2 * E, g) / gm * up;
  fp.z2_minus = Complex(2 * E, -g) / gm * up;
  fp.z3_plus = Complex(2 * E, -g) / gm * down;
  fp.z3_minus = Complex(2 * E, g) / gm * down;
  fp.beta_damp = std::exp(-gm * std::norm(p.beta()) * t / 2);
  return fp;
}

// Number of leading Fock columns that stay clear of the truncation edge when
// displaced by `amplitude`: the largest K with margin(amplitude + sqrt K) <= n.
inline int interior_levels(int n_fock, double amplitude) {
  int k = 1;
  while (k < n_fock && fock_margin(amplitude + std::sqrt(static_cast<double>(k + 1))) <= n_fock) ++k;
  return k;
}

// Raises if states starting on interior Fock levels end up on the top two.
inline void guard_top_levels(const Matrix& block, double amplitude, double tol, const std::string& what) {
  const int n = static_cast<int>(block.rows());
  if (n < 3) return;
  const int k = std::min<int>(interior_levels(n, amplitude), static_cast<int>(block.cols()));
  const double total = block.leftCols(k).norm();
  if (total == 0.0) return;
  const double edge = block.bottomLeftCorner(2, k).norm() / total;
  if (edge > tol) {
    std::ostringstream os;
    os << what << ": top Fock levels carry relative weight " << edge << " > tol " << tol;
    throw TruncationError(os.str());
  }
}

// One sigma_y block of M(t) (without the beta damping), leading rows x cols.
inline Matrix materialize_block(const FactoredPropagator& fp, int sign, int rows, int cols = -1) {
  return materialize_normal_ordered({fp.z1, -fp.decay, fp.z2(sign), fp.z3(sign)}, rows, cols);
}

inline Matrix materialize(const FactoredPropagator& fp, const SystemParams& p) {
  const int n = p.n_fock();
  const double amp = std::abs(p.alpha());
  Matrix plus = materialize_block(fp, +1, n), minus = materialize_block(fp, -1, n);
  guard_top_levels(plus, amp, p.tol(), "materialize");
  guard_top_levels(minus, amp, p.tol(), "materialize");
  return block_diagonal_pm(plus, minus);
}

inline Matrix build_N(double t, const SystemParams& p) {
  const FactoredPropagator fp = factorize_M(t, p);
  return fp.beta_damp * materialize(fp, p);
}

// Field-only generator of M on sigma_y block `sign`:
// (E + i g s/2) a^dag - (E - i g s/2) a - gamma n / 2.
inline Matrix smooth_generator_block(int sign, const SystemParams& p) {
  const int n = p.n_fock();
  const Matrix a = Matrix(field_annihilator(n));
  const Complex c(p.drive(), p.g() * sign / 2);
  Matrix G = c * a.adjoint() - std::conj(c) * a;
  for (int k = 0; k < n; ++k) G(k, k) -= 0.5 * p.gamma() * k;
  return G;
}

// -i H0 + E(a^dag - a) - gamma n / 2 on the joint space.
inline Matrix smooth_generator(const SystemParams& p) {
  const JointOperators ops(p.n_fock());
  SparseMatrix G = -kI * ops.h0(p.g()) + p.drive() * (ops.ad - ops.a) - 0.5 * p.gamma() * ops.num;
  return Matrix(G);
}

// Exponent of the exact smooth propagator N0: -iH_int + E(a^dag - a) - gamma(n + |beta|^2)/2.
inline Matrix exact_smooth_generator(const SystemParams& p) {
  const JointOperators ops(p.n_fock());
  SparseMatrix G = -kI * ops.h_int(p.g()) + p.drive() * (ops.ad - ops.a) - 0.5 * p.gamma() * ops.num;
  Matrix D(G);
  D.diagonal().array() -= 0.5 * p.gamma() * std::norm(p.beta());
  return D;
}

inline Matrix build_N0(double t, const SystemParams& p, const ExpmOptions& opt = {}) {
  if (!(t >= 0.0)) throw DomainError("build_N0: t must be non-negative");
  return matrix_exponential(exact_smooth_generator(p), t, opt);
}

// Applies N(s) (or N0(s)) to states by repeated short steps. A single dense
// N(s) has entries growing like exp(|alpha|^2 (gamma s/2)^2) that cancel when
// it acts on a displaced state; steps with gamma h |alpha| <= 1 keep every
// product well conditioned. Scales are stripped off and returned as logs.
class SmoothEvolver {
 public:
  SmoothEvolver(const SystemParams& p, bool exact, double h_max = 0.0) : p_(p), exact_(exact) {
    h_ = h_max > 0 ? h_max : 1.0 / (p.gamma() * std::max(1.0, std::abs(p.alpha())));
    step_ = build(h_);
  }

  const SystemParams& params() const { return p_; }
  double step() const { return h_; }

  // X <- N(s) X / e^{l}; returns l.
  double apply(double s, Matrix& X) const {
    if (!(s >= 0.0)) throw DomainError("SmoothEvolver: negative duration");
    const int full = static_cast<int>(std::floor(s / h_ * (1 + 1e-12)));
    const double rest = s - full * h_;
    double log_scale = 0.0;
    auto renorm = [&] {
      const double nrm = X.norm();
      if (!(nrm > 0.0) || !std::isfinite(nrm)) throw ZeroProbability("SmoothEvolver: state annihilated");
      X /= nrm;
      log_scale += std::log(nrm);
    };
    if (rest > 1e-14 * h_) {
      X = build(rest) * X;
      renorm();
    }
    for (int i = 0; i < full; ++i) {
      X = step_ * X;
      renorm();
    }
    return log_scale;
  }

  // rho <- N(s) rho N(s)^dag / e^{l}; returns l. rho must be Hermitian.
  double sandwich(double s, Matrix& rho) const {
    double l = apply(s, rho);
    Matrix t = rho.adjoint();
    l += apply(s, t);
    rho = hermitian_part(t.adjoint());
    return l;
  }

 private:
  Matrix build(double s) const { return exact_ ? build_N0(s, p_) : build_N(s, p_); }

  SystemParams p_;
  bool exact_;
  double h_;
  Matrix step_;
};

// exp(-g^2 t^2/8) exp(i g t sigma_y a^dag/2) exp(i g t sigma_y a/2), one block.
inline Matrix corollary_block(double t, int sign, double g, int rows, int cols = -1) {
  const Complex z(0.0, g * t * sign / 2);
  return materialize_normal_ordered({-g * g * t * t / 8, 0.0, z, z}, rows, cols);
}

inline Matrix corollary_factor(double t, const SystemParams& p) {
  if (!(t >= 0.0)) throw DomainError("corollary_factor: t must be non-negative");
  const int n = p.n_fock();
  Matrix plus = corollary_block(t, +1, p.g(), n), minus = corollary_block(t, -1, p.g(), n);
  const double amp = std::max(std::abs(p.alpha()), p.g() * t / 2);
  guard_top_levels(plus, amp, p.tol(), "corollary_factor");
  guard_top_levels(minus, amp, p.tol(), "corollary_factor");
  return block_diagonal_pm(plus, minus);
}

// f_k = sqrt(gamma/2) exp(i pi (k-1)/2).
inline Complex jump_prefactor(int k, double gamma) {
  if (k != 1 && k != 2) throw DomainError("detector label must be 1 or 2");
  const double s = std::sqrt(gamma / 2);
  return k == 1 ? Complex(s, 0.0) : Complex(0.0, s);
}

inline double detector_sign(int k) {
  if (k != 1 && k != 2) throw DomainError("detector label must be 1 or 2");
  return k == 1 ? -1.0 : 1.0;
}

// A_k(t) with C_k M(t) = M(t) A_k(t):
// f_k [e^{-gamma t/2} a + ((1 - e^{-gamma t/2})/gamma)(2E + i g sigma_y) + (-1)^k beta].
inline Matrix commuted_jump_factor(int k, double t, const SystemParams& p) {
  if (!(t >= 0.0)) throw DomainError("commuted_jump_factor: t must be non-negative");
  const Complex f = jump_prefactor(k, p.gamma());
  const JointOperators ops(p.n_fock());
  const double u = std::exp(-p.gamma() * t / 2), v = -std::expm1(-p.gamma() * t / 2) / p.gamma();
  SparseMatrix A = u * ops.a + v * (2 * p.drive() * ops.id + Complex(0, p.g()) * ops.sy) +
                   detector_sign(k) * p.beta() * ops.id;
  return f * Matrix(A);
}

}  // namespace cqed
