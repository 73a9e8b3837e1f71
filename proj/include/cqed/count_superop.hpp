#pragma once

// The per-count superoperator of the approximate theory:
// rho -> int_0^dt A_k(t) rho A_k(t)^dag with the nine scalar integrals in
// closed form.

#include <array>
#include <cmath>

#include "disentangle.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "params.hpp"

namespace cqed {

// rho -> int_0^dt A(t) rho A(t)^dag with A(t) = u a + v S + w,
// u = e^{-gamma t/2}, v = (1-u)/gamma, S = 2E + i g sigma_y, w = (-1)^k beta.
struct CountSuperop {
  int k = 1;
  double dt_total = 0.0;
  std::array<std::array<Complex, 3>, 3> c{};  // c[i][j] = int x_i conj(x_j), x = (u, v, w)

  SystemParams params;

  CountSuperop(int k_, double dt, const SystemParams& p);

  Matrix apply(const Matrix& rho) const;
};

namespace detail {

// Integrals over [0, dt] in units where x = gamma dt, each returned without
// its power of 1/gamma.
struct CountIntegrals {
  double u, uu, uv, v, vv;
};

inline CountIntegrals count_integrals(double x) {
  CountIntegrals r;
  r.u = -2 * std::expm1(-x / 2);  // gamma int u
  r.uu = -std::expm1(-x);         // gamma int u^2
  if (x < 0.5) {
    // Direct power series: the closed forms cancel catastrophically here.
    double uv = 0, v = 0, vv = 0, pw = 1, fact = 1;
    for (int n = 1; n < 30; ++n) {
      pw *= x;
      fact *= n;
      const double sgn = (n % 2) ? -1.0 : 1.0;
      const double half = std::ldexp(1.0, -n);
      const double t = sgn * pw / fact;
      if (n >= 2) {
        uv += t * (1 - 2 * half);
        v += 2 * half * t;
        vv += t * (4 * half - 1);
      }
    }
    r.uv = uv;
    r.v = v;
    r.vv = vv;
  } else {
    r.uv = r.u - r.uu;
    r.v = x - r.u;
    r.vv = x - 2 * r.u + r.uu;
  }
  return r;
}

}  // namespace detail

inline CountSuperop::CountSuperop(int k_, double dt, const SystemParams& p) : k(k_), dt_total(dt), params(p) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw DomainError("count_superop: dt must be non-negative");
  const double gm = p.gamma();
  const Complex w = detector_sign(k) * p.beta();
  const auto I = detail::count_integrals(gm * dt);
  c[0][0] = I.uu / gm;
  c[0][1] = I.uv / (gm * gm);
  c[1][1] = I.vv / (gm * gm * gm);
  c[0][2] = std::conj(w) * I.u / gm;
  c[1][2] = std::conj(w) * I.v / (gm * gm);
  c[2][2] = std::norm(w) * dt;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) c[i][j] = std::conj(c[j][i]);
}

inline Matrix CountSuperop::apply(const Matrix& rho) const {
  const auto n = params.dim();
  if (rho.rows() != n || rho.cols() != n) throw DimensionMismatch("count_superop: state dimension");
  const JointOperators ops(params.n_fock());
  const SparseMatrix S = 2 * params.drive() * ops.id + Complex(0, params.g()) * ops.sy;
  // R_j = rho B_j^dag, B = (a, S, 1).
  const Matrix R0 = (ops.a * rho.adjoint()).adjoint();
  const Matrix R1 = (S * rho.adjoint()).adjoint();
  const Matrix* R[3] = {&R0, &R1, &rho};
  Matrix T[3];
  for (int i = 0; i < 3; ++i) T[i] = c[i][0] * *R[0] + c[i][1] * *R[1] + c[i][2] * *R[2];
  Matrix out = T[2];
  out += ops.a * T[0];
  out += S * T[1];
  return out;
}

inline CountSuperop count_superop(int k, double dt_total, const SystemParams& p) {
  if (!(dt_total > 0.0)) throw DomainError("count_superop: dt must be positive");
  return CountSuperop(k, dt_total, p);
}

}  // namespace cqed
