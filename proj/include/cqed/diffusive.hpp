#pragma once

// Homodyne limit: Euler-Maruyama integration of the conditional master
// equation and the difference photocurrent it produces.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include "dynamics.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "jumps.hpp"

namespace cqed {

struct SMEConfig {
  double phi = 0.0;  // local-oscillator phase
  double eta = 1.0;  // detection efficiency
  double dt = 1e-3;
  int n_traj = 1;
  std::uint64_t seed = 0;
  int stride = 100;  // steps between checkpoints

  void validate(const SystemParams& p) const {
    if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("sme: eta must lie in (0, 1]");
    if (n_traj < 1) throw DomainError("sme: n_traj must be positive");
    if (stride < 1) throw DomainError("sme: stride must be positive");
    if (!std::isfinite(phi)) throw DomainError("sme: phi must be finite");
    check_step(dt, p, "sme");
  }
};

// e^{-i phi} a rho + e^{i phi} rho a^dag - tr[rho (e^{-i phi} a + e^{i phi} a^dag)] rho.
inline Matrix sme_innovation(const Matrix& rho, double phi, const LindbladGenerator& gen) {
  const Complex ph = std::polar(1.0, -phi);
  const Matrix ar = ph * (gen.ops().a * rho);
  Matrix out = ar + ar.adjoint();
  out -= out.trace().real() * rho;
  return out;
}

inline Matrix sme_step(const Matrix& rho, double dW, const SMEConfig& cfg, const LindbladGenerator& gen) {
  check_step(cfg.dt, gen.params(), "sme_step");
  Matrix next = rho + cfg.dt * gen.apply_hermitian(rho);
  next += std::sqrt(gen.params().gamma() * cfg.eta) * dW * sme_innovation(rho, cfg.phi, gen);
  next = hermitian_part(next);
  return next / next.trace().real();
}

// I_-/|beta| = gamma eta tr[rho (e^{i phi} a^dag + e^{-i phi} a)] + sqrt(gamma eta) xi.
inline double photocurrent_sample(const Matrix& rho, double xi, const SMEConfig& cfg, const SystemParams& p) {
  const JointOperators ops(p.n_fock());
  const Complex x = (std::polar(1.0, -cfg.phi) * (ops.a * rho)).trace();
  return p.gamma() * cfg.eta * 2 * x.real() + std::sqrt(p.gamma() * cfg.eta) * xi;
}

struct SMETrajectory {
  std::vector<double> times;         // checkpoint times, starting at 0
  std::vector<Matrix> checkpoints;   // rho_c at those times
  std::vector<double> photocurrent;  // one sample per step
  Matrix final_state;
};

inline SMETrajectory sme_trajectory(const Matrix& rho0, double t_total, const SMEConfig& cfg,
                                    const LindbladGenerator& gen, std::uint64_t index = 0) {
  cfg.validate(gen.params());
  if (!(t_total >= 0.0)) throw DomainError("sme_trajectory: negative duration");
  if (rho0.rows() != gen.dim() || rho0.cols() != gen.dim()) throw DimensionMismatch("sme_trajectory: rho0 dimension");
  const int steps = t_total == 0.0 ? 0 : static_cast<int>(std::ceil(t_total / cfg.dt - 1e-9));
  SMEConfig c = cfg;
  if (steps) c.dt = t_total / steps;
  auto rng = trajectory_rng(cfg.seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sq = std::sqrt(c.dt);

  SMETrajectory tr;
  Matrix rho = rho0;
  tr.times.push_back(0.0);
  tr.checkpoints.push_back(rho);
  tr.photocurrent.reserve(steps);
  for (int s = 1; s <= steps; ++s) {
    const double dW = sq * normal(rng);
    tr.photocurrent.push_back(photocurrent_sample(rho, dW / c.dt, c, gen.params()));
    rho = sme_step(rho, dW, c, gen);
    // Explicit Euler amplifies the fast Rabi oscillations by ~(1 + (omega dt)^2/2)
    // per step; once that runs away the state is no longer a density matrix.
    const double purity = observe(rho).purity;
    if (!std::isfinite(purity) || purity > 1.5) {
      std::ostringstream os;
      os << "sme_trajectory: Euler-Maruyama step unstable at t=" << s * c.dt << " (purity " << purity
         << "); reduce dt";
      throw StepSizeError(os.str());
    }
    if (s % c.stride == 0 || s == steps) {
      tr.times.push_back(s * c.dt);
      tr.checkpoints.push_back(rho);
    }
  }
  tr.final_state = rho;
  return tr;
}

struct SMEEnsemble {
  std::vector<double> times;
  std::vector<Matrix> mean;                  // ensemble mean per checkpoint
  std::vector<std::vector<Matrix>> members;  // [checkpoint][trajectory], when kept
  std::vector<double> mean_photocurrent;     // per trajectory, time-averaged
};

inline SMEEnsemble sme_ensemble(const Matrix& rho0, double t_total, const SMEConfig& cfg,
                                const LindbladGenerator& gen, bool keep_members = false) {
  cfg.validate(gen.params());
  SMEEnsemble ens;
  for (int j = 0; j < cfg.n_traj; ++j) {
    SMETrajectory tr = sme_trajectory(rho0, t_total, cfg, gen, static_cast<std::uint64_t>(j));
    if (j == 0) {
      ens.times = tr.times;
      ens.mean.assign(tr.times.size(), Matrix::Zero(gen.dim(), gen.dim()));
      if (keep_members) ens.members.resize(tr.times.size());
    }
    for (std::size_t c = 0; c < tr.times.size(); ++c) {
      ens.mean[c] += tr.checkpoints[c];
      if (keep_members) ens.members[c].push_back(std::move(tr.checkpoints[c]));
    }
    double avg = 0;
    for (double x : tr.photocurrent) avg += x;
    ens.mean_photocurrent.push_back(tr.photocurrent.empty() ? 0.0 : avg / tr.photocurrent.size());
  }
  for (auto& m : ens.mean) m /= static_cast<double>(cfg.n_traj);
  return ens;
}

}  // namespace cqed
