#pragma once

// Extended-precision conditional states for initial states that are
// block-diagonal in sigma_y with a coherent field in each block (rho_ss,
// |0>|+>, ...).
//
// N(t) is a contraction whose eigenvalue on these states can be ~e^{-100}
// or smaller, so in double precision any rounding in other directions
// swamps the answer. Two facts keep the extended path cheap:
//   * the lowering series of exp(z3 a) is the only place where terms cancel,
//     losing about 2|z3||alpha0| nats, which fixes the working precision;
//   * a M(t) = M(t)(u a + v S), so counts can be applied after N with the
//     ladder operator (a - v S)/u and N acts only once per block.

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include "count_superop.hpp"
#include "jumps.hpp"
#include "disentangle.hpp"
#include "errors.hpp"
#include "hilbert.hpp"

namespace cqed {

// amplitude/weight [0] belong to sigma_y = +1, [1] to sigma_y = -1.
struct BlockCoherentState {
  std::array<Complex, 2> amplitude{};
  std::array<double, 2> weight{0.5, 0.5};
};

inline BlockCoherentState steady_blocks(const SystemParams& p) {
  return {{p.alpha(), std::conj(p.alpha())}, {0.5, 0.5}};
}

struct PreciseConditional {
  double log_weight = 0.0;  // log of the record weight p
  std::array<double, 2> lambda{};
  int n_work = 0;
  int digits = 0;
  std::array<Matrix, 2> factor;    // rho_c block s = factor[s] factor[s]^dag, total trace 1
  std::array<Matrix, 2> g_factor;  // G before the N sandwich, same normalization
  double log_g_trace = 0.0;        // log tr G

  // rho_c on the joint space with n_fock levels (tails beyond are dropped).
  Matrix joint_rho(int n_fock) const {
    Matrix rho = Matrix::Zero(2 * n_fock, 2 * n_fock);
    const Vector2 atoms[2] = {atom::plus(), atom::minus()};
    for (int s = 0; s < 2; ++s)
      for (Eigen::Index c = 0; c < factor[s].cols(); ++c) {
        const Vector v = product_state(atoms[s], factor[s].col(c).head(n_fock));
        rho += v * v.adjoint();
      }
    return rho;
  }
};

struct PreciseOptions {
  int max_digits = 400;
};

namespace precise_detail {

namespace bmp = boost::multiprecision;

template <unsigned D>
struct Engine {
  using R = bmp::number<bmp::cpp_bin_float<D>, bmp::et_off>;
  using C = bmp::cpp_complex<D>;
  using Vec = std::vector<C>;
  using Factor = std::vector<Vec>;

  int n;
  std::vector<R> sq;  // sqrt(j)

  explicit Engine(int n_) : n(n_), sq(n_ + 1) {
    for (int j = 0; j <= n; ++j) sq[j] = bmp::sqrt(R(j));
  }

  static C to_c(Complex z) { return C(R(z.real()), R(z.imag())); }

  Vec coherent(Complex amp) const {
    Vec v(n);
    const C a = to_c(amp);
    v[0] = C(1);
    for (int k = 1; k < n; ++k) v[k] = v[k - 1] * a / sq[k];
    R nrm2 = 0;
    for (const auto& x : v) nrm2 += bmp::norm(x);
    const R inv = 1 / bmp::sqrt(nrm2);
    for (auto& x : v) x *= inv;
    return v;
  }

  Vec lower(const Vec& v) const {
    Vec out(n, C(0));
    for (int j = 0; j + 1 < n; ++j) out[j] = v[j + 1] * sq[j + 1];
    return out;
  }

  // exp(z a) v and exp(z a^dag) v as finite Taylor sums (the truncated ladder
  // operators are nilpotent and compress exactly).
  Vec exp_lower(const C& z, Vec v) const {
    Vec sum = v;
    for (int d = 1; d < n; ++d) {
      const C f = z / R(d);
      for (int j = 0; j + d < n; ++j) v[j] = f * sq[j + 1] * v[j + 1];
      for (int j = 0; j + d < n; ++j) sum[j] += v[j];
    }
    return sum;
  }

  Vec exp_raise(const C& z, Vec v) const {
    Vec sum = v;
    for (int d = 1; d < n; ++d) {
      const C f = z / R(d);
      for (int j = n - 1; j >= d; --j) v[j] = f * sq[j] * v[j - 1];
      for (int j = 0; j < d; ++j) v[j] = C(0);
      for (int j = d; j < n; ++j) sum[j] += v[j];
    }
    return sum;
  }

  // exp(-decay n) exp(z2 a^dag) exp(z3 a) v; the scalar exp(z1) is left to the caller.
  Vec apply_M(const FactoredPropagator& fp, int sign, const Vec& v) const {
    Vec w = exp_raise(to_c(fp.z2(sign)), exp_lower(to_c(fp.z3(sign)), v));
    const R r = bmp::exp(R(-fp.decay));
    R damp = 1;
    for (int j = 0; j < n; ++j) {
      w[j] *= damp;
      damp *= r;
    }
    return w;
  }

  static R norm2(const Factor& F) {
    R s = 0;
    for (const auto& v : F)
      for (const auto& x : v) s += bmp::norm(x);
    return s;
  }

  // Rescales both blocks by a common factor; returns its log.
  static double renormalize(std::array<Factor, 2>& F) {
    const R total = norm2(F[0]) + norm2(F[1]);
    if (!(total > 0)) throw ZeroProbability("precise_conditional: state annihilated");
    const R inv = 1 / bmp::sqrt(total);
    for (auto& blk : F)
      for (auto& v : blk)
        for (auto& x : v) x *= inv;
    return static_cast<double>(bmp::log(total)) / 2;
  }

  // One count on block `sign`: F -> [op F, F] (L x 1), with L L^dag the 2x2
  // Gram matrix of the coefficients of (op, 1) in A(t) integrated over t.
  // `op_shift`/`op_scale` turn the ladder into (a - shift)/scale.
  Factor count(const Factor& F, const CountSuperop& cs, Complex s_block, Complex op_shift, double op_scale) const {
    const auto& c = cs.c;
    Eigen::Matrix2cd G;
    G(0, 0) = c[0][0];
    G(0, 1) = std::conj(s_block) * c[0][1] + c[0][2];
    G(1, 1) = std::norm(s_block) * c[1][1] + s_block * c[1][2] + std::conj(s_block) * c[2][1] + c[2][2];
    G(1, 0) = std::conj(G(0, 1));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(G);
    Factor out;
    const C shift = to_c(op_shift);
    const R inv_scale = R(1) / R(op_scale);
    for (int e = 0; e < 2; ++e) {
      const double lam = es.eigenvalues()(e);
      if (!(lam > 1e-300)) continue;
      const C l0 = to_c(es.eigenvectors()(0, e) * std::sqrt(lam));
      const C l1 = to_c(es.eigenvectors()(1, e) * std::sqrt(lam));
      for (const auto& f : F) {
        Vec y = lower(f);
        for (int j = 0; j < n; ++j) y[j] = ((y[j] - shift * f[j]) * inv_scale) * l0 + f[j] * l1;
        out.push_back(std::move(y));
      }
    }
    return out;
  }

  // Replaces F by a factor with the same F F^dag and as many columns as its
  // numerical rank: modified Gram-Schmidt F = Q R (directions below `drop`
  // relative to the largest column are discarded), then F' = Q chol(R R^dag).
  static Factor compress(const Factor& F, double drop = 1e-25) {
    if (F.size() <= 1) return F;
    R top = 0;
    for (const auto& v : F) { const R nv = norm2_vec(v); if (nv > top) top = nv; }
    const R cut = top * R(drop) * R(drop);
    std::vector<Vec> Q;
    std::vector<std::vector<C>> Rm;  // Rm[i][c]: coefficient of Q_i in column c
    for (std::size_t c = 0; c < F.size(); ++c) {
      Vec w = F[c];
      std::vector<C> coef(Q.size());
      for (std::size_t i = 0; i < Q.size(); ++i) {
        C d = 0;
        for (std::size_t j = 0; j < w.size(); ++j) d += bmp::conj(Q[i][j]) * w[j];
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= d * Q[i][j];
        coef[i] = d;
      }
      const R nw = norm2_vec(w);
      if (nw > cut) {
        const R len = bmp::sqrt(nw);
        for (auto& x : w) x /= len;
        Q.push_back(std::move(w));
        coef.push_back(C(len));
      }
      for (std::size_t i = 0; i < Rm.size(); ++i) Rm[i].push_back(coef[i]);
      if (coef.size() > Rm.size()) Rm.emplace_back(std::vector<C>(c, C(0))).push_back(coef.back());
    }
    const std::size_t k = Q.size();
    // M = R R^dag, lower Cholesky factor L.
    std::vector<std::vector<C>> M(k, std::vector<C>(k, C(0))), L(k, std::vector<C>(k, C(0)));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < F.size(); ++c) M[i][j] += Rm[i][c] * bmp::conj(Rm[j][c]);
    for (std::size_t j = 0; j < k; ++j) {
      R d = M[j][j].real();
      for (std::size_t l = 0; l < j; ++l) d -= bmp::norm(L[j][l]);
      const R ljj = d > 0 ? R(bmp::sqrt(d)) : R(0);
      L[j][j] = C(ljj);
      for (std::size_t i = j + 1; i < k; ++i) {
        C s = M[i][j];
        for (std::size_t l = 0; l < j; ++l) s -= L[i][l] * bmp::conj(L[j][l]);
        L[i][j] = ljj > 0 ? C(s / ljj) : C(0);
      }
    }
    Factor out(k, Vec(F.front().size(), C(0)));
    for (std::size_t col = 0; col < k; ++col)
      for (std::size_t i = col; i < k; ++i)
        for (std::size_t j = 0; j < out[col].size(); ++j) out[col][j] += Q[i][j] * L[i][col];
    return out;
  }

  static R norm2_vec(const Vec& v) {
    R s = 0;
    for (const auto& x : v) s += bmp::norm(x);
    return s;
  }

  static Matrix to_matrix(const Factor& F, int n) {
    Matrix M(n, static_cast<Eigen::Index>(F.size()));
    for (std::size_t c = 0; c < F.size(); ++c)
      for (int j = 0; j < n; ++j) M(j, c) = Complex(static_cast<double>(F[c][j].real()), static_cast<double>(F[c][j].imag()));
    return M;
  }

  PreciseConditional run(const BlockCoherentState& s0, const std::vector<int>& labels, double dt,
                         const SystemParams& p) const {
    PreciseConditional out;
    out.n_work = n;
    out.digits = static_cast<int>(D);
    const int m = static_cast<int>(labels.size());
    const Complex s_block[2] = {Complex(2 * p.drive(), p.g()), Complex(2 * p.drive(), -p.g())};
    const int sign[2] = {+1, -1};
    std::array<Factor, 2> psi;
    for (int s = 0; s < 2; ++s) {
      if (s0.weight[s] < 0) throw DomainError("precise_conditional: negative block weight");
      if (s0.weight[s] == 0) continue;
      Vec v = coherent(s0.amplitude[s]);
      const R w = bmp::sqrt(R(s0.weight[s]));
      for (auto& x : v) x *= w;
      psi[s].push_back(std::move(v));
    }
    const CountSuperop ops[2] = {CountSuperop(1, dt, p), CountSuperop(2, dt, p)};
    const double count_log = m * std::log(p.gamma() / 2) - std::lgamma(m + 1.0);

    // G itself, for checks against closed forms.
    {
      std::array<Factor, 2> G = psi;
      double lg = 0;
      for (int k : labels) {
        for (int s = 0; s < 2; ++s)
          if (!G[s].empty()) G[s] = compress(count(G[s], ops[k - 1], s_block[s], 0.0, 1.0));
        lg += renormalize(G);
      }
      lg += renormalize(G);
      out.log_g_trace = 2 * lg;
      for (int s = 0; s < 2; ++s) out.g_factor[s] = to_matrix(G[s], n);
    }

    // N first, then the counts through the commuted ladder operator.
    const FactoredPropagator fp = factorize_M(dt, p);
    const double u = std::exp(-fp.decay), v = -std::expm1(-fp.decay) / p.gamma();
    std::array<Factor, 2> F;
    for (int s = 0; s < 2; ++s)
      for (const auto& col : psi[s]) F[s].push_back(apply_M(fp, sign[s], col));
    double lf = 0;
    lf += renormalize(F);
    for (int k : labels) {
      for (int s = 0; s < 2; ++s)
        if (!F[s].empty()) F[s] = compress(count(F[s], ops[k - 1], s_block[s], v * s_block[s], u));
      lf += renormalize(F);
    }
    lf += renormalize(F);
    out.log_weight = count_log + 2 * (lf + fp.z1 + std::log(fp.beta_damp));
    for (int s = 0; s < 2; ++s) {
      out.factor[s] = to_matrix(F[s], n);
      out.lambda[s] = static_cast<double>(norm2(F[s]));
    }
    return out;
  }
};

inline double log_poisson(double lambda, int k) {
  if (lambda == 0.0) return k == 0 ? 0.0 : -HUGE_VAL;
  return -lambda + k * std::log(lambda) - std::lgamma(k + 1.0);
}

}  // namespace precise_detail

inline PreciseConditional precise_conditional(const BlockCoherentState& s0, const std::vector<int>& labels,
                                              double dt_total, const SystemParams& p, const PreciseOptions& opt = {}) {
  PhotocountRecord{labels, dt_total, std::nullopt}.validate();
  const FactoredPropagator fp = factorize_M(dt_total, p);
  double loss = 0, amp = std::abs(p.alpha());
  for (int s = 0; s < 2; ++s) {
    const double a0 = std::abs(s0.amplitude[s]);
    loss = std::max(loss, 2 * std::abs(fp.z3(s ? -1 : 1)) * (a0 + 1));
    amp = std::max(amp, a0);
  }
  const int digits = static_cast<int>(std::ceil(loss / std::log(10.0))) + 35;
  // Tail of the initial coherent states small enough to survive the same loss.
  int n = std::max(p.n_fock(), fock_margin(amp));
  for (int s = 0; s < 2; ++s) {
    const double lam = std::norm(s0.amplitude[s]);
    while (0.5 * precise_detail::log_poisson(lam, n) > -(loss + 45)) ++n;
  }
  if (digits > opt.max_digits) {
    std::ostringstream os;
    os << "precise_conditional: needs " << digits << " digits, budget " << opt.max_digits;
    throw CostError(os.str());
  }
  if (digits <= 50) return precise_detail::Engine<50>(n).run(s0, labels, dt_total, p);
  if (digits <= 100) return precise_detail::Engine<100>(n).run(s0, labels, dt_total, p);
  if (digits <= 200) return precise_detail::Engine<200>(n).run(s0, labels, dt_total, p);
  return precise_detail::Engine<400>(n).run(s0, labels, dt_total, p);
}

// Trace distance and Frobenius distance between the block-diagonal state
// F F^dag (per block) and the block-coherent reference, on the factors' levels.
struct BlockDistance {
  double trace = 0.0;
  double frobenius = 0.0;
};

inline BlockDistance block_distance(const std::array<Matrix, 2>& F, const BlockCoherentState& ref) {
  BlockDistance d;
  double frob2 = 0;
  for (int s = 0; s < 2; ++s) {
    const int n = static_cast<int>(F[s].rows());
    const Vector psi = coherent_state(ref.amplitude[s], n, 1.0).field * std::sqrt(ref.weight[s]);
    // Restrict to span{psi, columns of F}.
    Matrix B(n, F[s].cols() + 1);
    B << psi, F[s];
    Eigen::HouseholderQR<Matrix> qr(B);
    const Eigen::Index r = std::min<Eigen::Index>(B.cols(), n);
    const Matrix Q = qr.householderQ() * Matrix::Identity(n, r);
    const Matrix P = Q.adjoint() * F[s], q = Q.adjoint() * psi;
    const Matrix diff = P * P.adjoint() - q * q.adjoint();
    d.trace += 0.5 * hermitian_eigenvalues(diff).cwiseAbs().sum();
    frob2 += diff.squaredNorm();
  }
  d.frobenius = std::sqrt(frob2);
  return d;
}

}  // namespace cqed
