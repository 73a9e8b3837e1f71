#pragma once

// Unconditional Lindblad evolution, the analytic steady state and the
// rotating-wave residual X(t).

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "errors.hpp"
#include "hilbert.hpp"
#include "params.hpp"

namespace cqed {

// L rho = K rho + rho K^dag + gamma a rho a^dag with
// K = -i H_int + E(a^dag - a) - gamma n / 2.
class LindbladGenerator {
 public:
  explicit LindbladGenerator(const SystemParams& p) : params_(p), ops_(p.n_fock()) {
    K_ = SparseMatrix(-kI * ops_.h_int(p.g()) + p.drive() * (ops_.ad - ops_.a) - 0.5 * p.gamma() * ops_.num);
    H_ = ops_.h_int(p.g());
  }

  const SystemParams& params() const { return params_; }
  const JointOperators& ops() const { return ops_; }
  const SparseMatrix& coherent_part() const { return K_; }
  const SparseMatrix& h_int() const { return H_; }
  int dim() const { return params_.dim(); }

  Matrix apply(const Matrix& rho) const {
    check(rho);
    const Matrix Kr = K_ * rho;
    const Matrix Kd = K_ * rho.adjoint();
    const Matrix ar = ops_.a * rho;
    const Matrix sandwich = ops_.a * ar.adjoint();
    return Kr + Kd.adjoint() + params_.gamma() * sandwich.adjoint();
  }

  // Same map, assuming rho is Hermitian (halves the sparse products).
  Matrix apply_hermitian(const Matrix& rho) const {
    check(rho);
    Matrix out = K_ * rho;
    const Matrix ar = ops_.a * rho;
    const Matrix sandwich = ops_.a * ar.adjoint();
    Matrix res = out + out.adjoint();
    res.noalias() += params_.gamma() * sandwich.adjoint();
    return res;
  }

 private:
  void check(const Matrix& rho) const {
    if (rho.rows() != dim() || rho.cols() != dim()) {
      std::ostringstream os;
      os << "Lindblad generator of dimension " << dim() << " applied to " << rho.rows() << "x" << rho.cols();
      throw DimensionMismatch(os.str());
    }
  }

  SystemParams params_;
  JointOperators ops_;
  SparseMatrix K_, H_;
};

inline Matrix lindblad_rhs(const Matrix& rho, const LindbladGenerator& gen) { return gen.apply(rho); }

inline double max_step(const SystemParams& p) {
  double h = 0.02 / p.gamma();
  if (p.g() > 0) h = std::min(h, 0.02 / p.g());
  return h;
}

inline void check_step(double dt, const SystemParams& p, const char* who) {
  if (!(dt > 0.0) || dt > max_step(p) * (1 + 1e-12)) {
    std::ostringstream os;
    os << who << ": step " << dt << " outside (0, " << max_step(p) << "]";
    throw StepSizeError(os.str());
  }
}

struct EvolveOptions {
  int observe_stride = 0;  // call the observer every this many steps (0: only ends)
  int error_stride = 200;  // step-halving probe every this many steps (and on the last step)
  std::function<void(double, const Matrix&)> observer;
};

struct EvolveResult {
  Matrix rho;
  int steps = 0;
  double error_estimate = 0.0;   // largest step-halving (Richardson) estimate seen
  double hermiticity_drift = 0;  // largest ||rho - rho^dag||_F before re-Hermitization
  double trace_drift = 0;        // largest |tr rho - 1| before renormalization
};

namespace detail {

inline Matrix rk4_step(const Matrix& rho, double h, const LindbladGenerator& gen) {
  const Matrix k1 = gen.apply_hermitian(rho);
  const Matrix k2 = gen.apply_hermitian(rho + 0.5 * h * k1);
  const Matrix k3 = gen.apply_hermitian(rho + 0.5 * h * k2);
  const Matrix k4 = gen.apply_hermitian(rho + h * k3);
  return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

inline EvolveResult evolve_unconditional(const Matrix& rho0, double dt_total, double dt_step,
                                         const LindbladGenerator& gen, const EvolveOptions& opt = {}) {
  check_step(dt_step, gen.params(), "evolve_unconditional");
  if (!(dt_total >= 0.0)) throw DomainError("evolve_unconditional: negative duration");
  if (rho0.rows() != gen.dim() || rho0.cols() != gen.dim())
    throw DimensionMismatch("evolve_unconditional: initial state has wrong dimension");
  EvolveResult res;
  res.rho = rho0;
  const int steps = dt_total == 0.0 ? 0 : static_cast<int>(std::ceil(dt_total / dt_step - 1e-9));
  const double h = steps ? dt_total / steps : 0.0;
  if (opt.observer) opt.observer(0.0, res.rho);
  for (int s = 1; s <= steps; ++s) {
    Matrix next = detail::rk4_step(res.rho, h, gen);
    if (opt.error_stride > 0 && (s % opt.error_stride == 0 || s == steps)) {
      const Matrix half = detail::rk4_step(detail::rk4_step(res.rho, h / 2, gen), h / 2, gen);
      res.error_estimate = std::max(res.error_estimate, (half - next).norm() / 15.0);
    }
    res.hermiticity_drift = std::max(res.hermiticity_drift, (next - next.adjoint()).norm());
    const Complex tr = next.trace();
    res.trace_drift = std::max(res.trace_drift, std::abs(tr - 1.0));
    res.rho = hermitian_part(next) / tr.real();
    res.steps = s;
    if (opt.observer && ((opt.observe_stride > 0 && s % opt.observe_stride == 0) || s == steps))
      opt.observer(s * h, res.rho);
  }
  return res;
}

// Columns w_+ = |alpha>|+>/sqrt2, w_- = |alpha*>|->/sqrt2 with rho_ss = W W^dag.
inline Matrix steady_state_factor(const SystemParams& p) {
  const Complex a = p.alpha();
  Matrix W(p.dim(), 2);
  W.col(0) = product_state(atom::plus(), coherent_state(a, p).field) / std::sqrt(2.0);
  W.col(1) = product_state(atom::minus(), coherent_state(std::conj(a), p).field) / std::sqrt(2.0);
  return W;
}

inline Matrix build_rho_ss(const SystemParams& p) {
  const Matrix W = steady_state_factor(p);
  return W * W.adjoint();
}

struct RwaResidual {
  double instantaneous;  // ||X(t)||
  double averaged;       // ||(1/t) int_0^t X(s) ds||, equals instantaneous at t = 0
};

namespace detail {

// Largest singular value of a real matrix by power iteration on A^T A.
inline double spectral_norm(const RealMatrix& A) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  RealVector v(A.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = nd(rng);
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < 5000; ++it) {
    const RealVector w = A.transpose() * (A * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = std::sqrt(nw);
    v = w / nw;
    if (std::abs(next - sigma) <= 1e-13 * next) return next;
    sigma = next;
  }
  return sigma;
}

// [[-B, A], [A, B]] = sigma_x (x) A - sigma_z (x) B in the g/e layout.
inline RealMatrix pauli_combination(const RealMatrix& A, const RealMatrix& B) {
  const auto n = A.rows();
  RealMatrix X(2 * n, 2 * n);
  X << -B, A, A, B;
  return X;
}

}  // namespace detail

// 2X(t) = g (a^dag - a - i g sigma_y t)(sigma_x cos[g t (a^dag + a)] - sigma_z sin[g t (a^dag + a)])
//       = g [sigma_x (P C - g t S) - sigma_z (P S + g t C)],  P = a^dag - a.
// Both the instantaneous operator and its time average over [0, t] are
// assembled from one eigendecomposition of a^dag + a; the averages use the
// exact antiderivatives of cos, sin, s cos, s sin on each eigenvalue.
inline RwaResidual rwa_residual(double t, const SystemParams& p) {
  if (!(t >= 0.0)) throw DomainError("rwa_residual: t must be non-negative");
  const double g = p.g();
  const int n = p.n_fock();
  if (g == 0.0) return {0.0, 0.0};
  const RealMatrix a = Matrix(field_annihilator(n)).real();
  const RealMatrix P = a.transpose() - a;
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(a.transpose() + a);
  const RealMatrix& V = es.eigenvectors();
  const RealVector& lam = es.eigenvalues();

  auto spectral = [&](auto f) {
    RealVector d(n);
    for (int i = 0; i < n; ++i) d(i) = f(g * lam(i));
    return RealMatrix(V * d.asDiagonal() * V.transpose());
  };

  const RealMatrix C = spectral([&](double w) { return std::cos(w * t); });
  const RealMatrix S = spectral([&](double w) { return std::sin(w * t); });
  const RealMatrix A = 0.5 * g * (P * C - g * t * S), B = 0.5 * g * (P * S + g * t * C);
  RwaResidual out;
  out.instantaneous = detail::spectral_norm(detail::pauli_combination(A, B));
  if (t == 0.0) {
    out.averaged = out.instantaneous;
    return out;
  }

  const double T = t;
  auto series = [&](double w, double c0, double c2, double c4, int p0) {
    // c0 T^p0 + c2 w^2 T^(p0+2) + c4 w^4 T^(p0+4)
    return std::pow(T, p0) * (c0 + w * w * T * T * (c2 + c4 * w * w * T * T));
  };
  const RealMatrix Ic = spectral([&](double w) {
    return std::abs(w * T) < 1e-3 ? series(w, 1.0, -1.0 / 6, 1.0 / 120, 1) : std::sin(w * T) / w;
  });
  const RealMatrix Is = spectral([&](double w) {
    return std::abs(w * T) < 1e-3 ? w * series(w, 0.5, -1.0 / 24, 1.0 / 720, 2) : (1 - std::cos(w * T)) / w;
  });
  const RealMatrix Isc = spectral([&](double w) {
    return std::abs(w * T) < 1e-3 ? series(w, 0.5, -1.0 / 8, 1.0 / 144, 2)
                                  : T * std::sin(w * T) / w + (std::cos(w * T) - 1) / (w * w);
  });
  const RealMatrix Iss = spectral([&](double w) {
    return std::abs(w * T) < 1e-3 ? w * series(w, 1.0 / 3, -1.0 / 30, 1.0 / 840, 3)
                                  : -T * std::cos(w * T) / w + std::sin(w * T) / (w * w);
  });
  const RealMatrix Abar = (0.5 * g / T) * (P * Ic - g * Iss);
  const RealMatrix Bbar = (0.5 * g / T) * (P * Is + g * Isc);
  out.averaged = detail::spectral_norm(detail::pauli_combination(Abar, Bbar));
  return out;
}

}  // namespace cqed
