#pragma once

// Photodetection unraveling: jump operators, the Dyson-series oracle for
// conditional states, and first-order Monte Carlo sampling of records.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "disentangle.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "quadrature.hpp"

namespace cqed {

// C_k = f_k [a + (-1)^k beta].
inline Matrix jump_operator(int k, const SystemParams& p) {
  const Complex f = jump_prefactor(k, p.gamma());
  Matrix C = make_annihilator(p);
  C.diagonal().array() += detector_sign(k) * p.beta();
  return f * C;
}

// J_k rho = C_k rho C_k^dag.
inline Matrix apply_jump(const Matrix& C, const Matrix& rho) { return C * rho * C.adjoint(); }

struct PhotocountRecord {
  std::vector<int> labels;
  double dt_total = 0.0;
  std::optional<std::vector<double>> times;

  std::size_t size() const { return labels.size(); }

  void validate() const {
    if (!(dt_total >= 0.0) || !std::isfinite(dt_total)) throw DomainError("record: interval must be non-negative");
    for (int k : labels)
      if (k != 1 && k != 2) throw DomainError("record: detector labels must be 1 or 2");
    if (!times) return;
    if (times->size() != labels.size()) throw DomainError("record: labels and times differ in length");
    double last = 0.0;
    for (double t : *times) {
      if (!(t > last) || !(t < dt_total)) throw DomainError("record: times must increase strictly inside (0, dt)");
      last = t;
    }
  }
};

struct ConditionalResult {
  Matrix rho_c;
  double weight = 0.0;
  double log_weight = 0.0;
  PhotocountRecord record;
};

// || S0(tau) rho - (1 + tau (L - J1 - J2)) rho ||_F, S0(tau) rho = N0 rho N0^dag.
inline double lemma1_residual(double tau, const Matrix& rho, const SystemParams& p) {
  if (!(tau > 0.0)) throw DomainError("lemma1_residual: tau must be positive");
  const Matrix N0 = build_N0(tau, p);
  const LindbladGenerator gen(p);
  Matrix J = Matrix::Zero(p.dim(), p.dim());
  for (int k : {1, 2}) J += apply_jump(jump_operator(k, p), rho);
  const Matrix first_order = rho + tau * (gen.apply(rho) - J);
  return (N0 * rho * N0.adjoint() - first_order).norm();
}

struct DysonOptions {
  long max_nodes = 200000;  // budget for quad_points^m
};

// Time-ordered Dyson term for a record, by tensor Gauss-Legendre on the
// ordered simplex 0 < t1 < ... < tm < dt.
inline ConditionalResult dyson_oracle(const Matrix& rho0, const std::vector<int>& labels, double dt_total,
                                      int quad_points, const SystemParams& p, bool use_exact,
                                      const DysonOptions& opt = {}) {
  PhotocountRecord rec{labels, dt_total, std::nullopt};
  rec.validate();
  const int m = static_cast<int>(labels.size());
  if (m > 3) throw DomainError("dyson_oracle: at most three counts");
  if (m > 0 && quad_points < 8) throw DomainError("dyson_oracle: need at least 8 quadrature points");
  if (rho0.rows() != p.dim() || rho0.cols() != p.dim()) throw DimensionMismatch("dyson_oracle: rho0 dimension");
  const double nodes = std::pow(static_cast<double>(quad_points), m);
  if (nodes > static_cast<double>(opt.max_nodes)) {
    std::ostringstream os;
    os << "dyson_oracle: " << nodes << " quadrature nodes exceed budget " << opt.max_nodes;
    throw CostError(os.str());
  }
  const SmoothEvolver evo(p, use_exact);
  std::vector<Matrix> C;
  for (int k : labels) C.push_back(jump_operator(k, p));

  // States are carried forward in time; each branch keeps its own log scale
  // and the accumulator is kept relative to the largest contribution.
  Matrix acc = Matrix::Zero(p.dim(), p.dim());
  double acc_log = 0.0;
  bool acc_empty = true;
  const QuadratureRule q = m ? gauss_legendre(quad_points) : QuadratureRule{};
  // t_1 = dt u_1, t_{i+1} = t_i + (dt - t_i) u_{i+1}, Jacobian prod (dt - t_i).
  std::function<void(int, const Matrix&, double, double)> walk = [&](int i, const Matrix& rho, double t_prev,
                                                                     double log_w) {
    if (i == m) {
      Matrix r = rho;
      const double l = log_w + evo.sandwich(dt_total - t_prev, r);
      if (acc_empty || l > acc_log) {
        if (!acc_empty) acc *= std::exp(acc_log - l);
        acc_log = l;
        acc_empty = false;
      }
      acc += std::exp(l - acc_log) * r;
      return;
    }
    const double span = dt_total - t_prev;
    for (int a = 0; a < quad_points; ++a) {
      const double ti = t_prev + span * q.nodes[a];
      Matrix r = rho;
      double l = log_w + std::log(span * q.weights[a]) + evo.sandwich(ti - t_prev, r);
      r = C[i] * r * C[i].adjoint();
      const double nrm = r.norm();
      if (!(nrm > 0.0)) continue;
      walk(i + 1, r / nrm, ti, l + std::log(nrm));
    }
  };
  walk(0, rho0, 0.0, 0.0);
  const double tr = acc.trace().real();
  if (acc_empty || !(tr > 0.0)) throw ZeroProbability("dyson_oracle: record has zero probability");
  const double log_p = acc_log + std::log(tr);
  return {acc / tr, std::exp(log_p), log_p, rec};
}

// Factor W with rho = W W^dag, dropping numerically null directions.
inline Matrix density_factor(const Matrix& rho, double rel_cut = 1e-14) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(rho));
  const RealVector& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  std::vector<int> keep;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > rel_cut * top) keep.push_back(i);
  Matrix W(rho.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) W.col(c) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
  return W;
}

// One independent stream per trajectory, derived from (seed, index).
inline std::mt19937_64 trajectory_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x63716564u};
  return std::mt19937_64(seq);
}

struct SampledTrajectory {
  PhotocountRecord record;
  Matrix factor;             // rho_c = factor factor^dag
  double log_weight = 0.0;   // sum of log step norms
  double weight_product = 1.0;

  Matrix rho() const { return factor * factor.adjoint(); }
};

// exp(hK) X by a truncated Taylor series on a sparse generator; only used
// when ||hK||_1 is well below one, so no term cancels another.
inline Matrix apply_exp_taylor(const SparseMatrix& hK, const Matrix& X) {
  Matrix acc = X, term = X;
  const double floor = 1e-17 * X.norm();
  for (int j = 1; j <= 40; ++j) {
    term = (hK * term) / static_cast<double>(j);
    acc += term;
    if (term.norm() <= floor) break;
  }
  return acc;
}

struct SampleOptions {
  double max_jump_probability = 0.1;  // per step, summed over detectors
};

// Density-matrix trajectories in factored form, advanced together so the
// no-count propagator is applied to all of them in one product.
inline std::vector<SampledTrajectory> sample_ensemble(const Matrix& rho0, double dt_total, double dt_step,
                                                      std::uint64_t seed, int n_traj, const SystemParams& p,
                                                      std::uint64_t first_index = 0,
                                                      const SampleOptions& opt = {}) {
  if (p.g() > 0 && dt_step > 0.02 / p.g() * (1 + 1e-12)) throw StepSizeError("sample_record: dt_step > 0.02/g");
  if (!(dt_step > 0.0)) throw StepSizeError("sample_record: dt_step must be positive");
  if (!(dt_total >= 0.0)) throw DomainError("sample_record: negative duration");
  if (n_traj < 1) throw DomainError("sample_record: need at least one trajectory");
  if (rho0.rows() != p.dim()) throw DimensionMismatch("sample_record: rho0 dimension");

  const int steps = dt_total == 0.0 ? 0 : static_cast<int>(std::ceil(dt_total / dt_step - 1e-9));
  const double h = steps ? dt_total / steps : 0.0;
  const Matrix W0 = density_factor(rho0);
  const int r = static_cast<int>(W0.cols());
  // The no-count step: sparse Taylor when hK is small, else a dense N0.
  const Matrix K = exact_smooth_generator(p);
  const bool taylor = steps && h * detail::norm1(K) < 0.5;
  const SparseMatrix hK = taylor ? SparseMatrix((h * K).sparseView()) : SparseMatrix(p.dim(), p.dim());
  const Matrix N0 = steps && !taylor ? matrix_exponential(K, h) : Matrix();
  // A count is placed at the step midpoint: S0(h/2) J S0(h/2). Dropping the
  // no-count evolution on jump steps instead costs O(h ||H||) per count.
  const SparseMatrix hK_half = hK * 0.5;
  const Matrix N0_half = steps && !taylor ? matrix_exponential(K, h / 2) : Matrix();
  auto half_step = [&](const Matrix& X) -> Matrix { return taylor ? apply_exp_taylor(hK_half, X) : Matrix(N0_half * X); };
  const SparseMatrix a = JointOperators(p.n_fock()).a;
  const Complex f[2] = {jump_prefactor(1, p.gamma()), jump_prefactor(2, p.gamma())};
  const Complex shift[2] = {-p.beta(), p.beta()};

  Matrix W(p.dim(), static_cast<Eigen::Index>(r) * n_traj);
  for (int j = 0; j < n_traj; ++j) W.middleCols(j * r, r) = W0;
  std::vector<std::mt19937_64> rngs;
  std::vector<SampledTrajectory> out(n_traj);
  for (int j = 0; j < n_traj; ++j) {
    rngs.push_back(trajectory_rng(seed, first_index + j));
    out[j].record.dt_total = dt_total;
    out[j].record.times.emplace();
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  Matrix next(W.rows(), W.cols());
  for (int s = 1; s <= steps; ++s) {
    const Matrix aW = a * W;
    if (taylor) next = apply_exp_taylor(hK, W);
    else next.noalias() = N0 * W;
    for (int j = 0; j < n_traj; ++j) {
      auto blk = W.middleCols(j * r, r);
      const auto ablk = aW.middleCols(j * r, r);
      double pk[2];
      for (int k = 0; k < 2; ++k) pk[k] = 0.5 * p.gamma() * (ablk + shift[k] * blk).squaredNorm() * h;
      if (pk[0] + pk[1] > opt.max_jump_probability) {
        std::ostringstream os;
        os << "sample_record: jump probability " << pk[0] + pk[1] << " per step exceeds "
           << opt.max_jump_probability << "; reduce dt_step";
        throw StepSizeError(os.str());
      }
      const double u = uni(rngs[j]);
      auto& tr = out[j];
      double norm2;
      if (u < pk[0] + pk[1]) {
        const int k = u < pk[0] ? 0 : 1;
        const Matrix mid = half_step(blk);
        Matrix J = half_step(f[k] * (a * mid + shift[k] * mid));
        norm2 = J.squaredNorm();
        blk = J / std::sqrt(norm2);
        norm2 *= h;  // probability of this branch
        tr.record.labels.push_back(k + 1);
        tr.record.times->push_back((s - 0.5) * h);
      } else {
        const auto nb = next.middleCols(j * r, r);
        norm2 = nb.squaredNorm();
        blk = nb / std::sqrt(norm2);
      }
      if (!(norm2 > 0.0)) throw ZeroProbability("sample_record: step with zero probability");
      tr.log_weight += std::log(norm2);
      tr.weight_product *= norm2;
    }
  }
  for (int j = 0; j < n_traj; ++j) out[j].factor = W.middleCols(j * r, r);
  return out;
}

inline SampledTrajectory sample_record(const Matrix& rho0, double dt_total, double dt_step, std::uint64_t seed,
                                       const SystemParams& p, std::uint64_t index = 0) {
  return std::move(sample_ensemble(rho0, dt_total, dt_step, seed, 1, p, index).front());
}

}  // namespace cqed
