#pragma once

// Ensemble means of trajectory states and a bootstrap error band for the
// trace distance between such a mean and a reference state.

#include <cmath>
#include <random>
#include <vector>

#include "errors.hpp"
#include "hilbert.hpp"

namespace cqed {

struct EnsembleBand {
  double distance = 0.0;  // trace distance between ensemble mean and reference
  double sigma = 0.0;     // rms trace distance of bootstrap means from the ensemble mean
  int samples = 0;

  bool within(double n_sigma = 3.0) const { return distance <= n_sigma * sigma; }
};

// Mean of W_j W_j^dag with multiplicities `counts` (empty = all ones).
inline Matrix weighted_factor_mean(const std::vector<Matrix>& factors, const std::vector<int>& counts = {}) {
  if (factors.empty()) throw DomainError("ensemble: no members");
  const auto n = factors.front().rows();
  Eigen::Index cols = 0;
  for (const auto& W : factors) cols += W.cols();
  Matrix stack(n, cols);
  Eigen::Index at = 0;
  double total = 0;
  for (std::size_t j = 0; j < factors.size(); ++j) {
    const double c = counts.empty() ? 1.0 : counts[j];
    total += c;
    stack.middleCols(at, factors[j].cols()) = std::sqrt(c) * factors[j];
    at += factors[j].cols();
  }
  Matrix mean = stack * stack.adjoint();
  return mean / total;
}

// Members given as factors (rho_j = W_j W_j^dag) so that large ensembles of
// low-rank states stay cheap.
inline EnsembleBand bootstrap_band(const std::vector<Matrix>& factors, const Matrix& reference, int resamples,
                                   std::uint64_t seed) {
  const Matrix mean = weighted_factor_mean(factors);
  EnsembleBand band;
  band.distance = trace_distance(mean, reference);
  band.samples = resamples;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, factors.size() - 1);
  double acc = 0;
  for (int b = 0; b < resamples; ++b) {
    std::vector<int> counts(factors.size(), 0);
    for (std::size_t j = 0; j < factors.size(); ++j) ++counts[pick(rng)];
    const double d = trace_distance(weighted_factor_mean(factors, counts), mean);
    acc += d * d;
  }
  band.sigma = std::sqrt(acc / resamples);
  return band;
}

inline EnsembleBand bootstrap_band_states(const std::vector<Matrix>& states, const Matrix& reference, int resamples,
                                          std::uint64_t seed) {
  if (states.empty()) throw DomainError("ensemble: no members");
  Matrix mean = Matrix::Zero(states.front().rows(), states.front().cols());
  for (const auto& s : states) mean += s;
  mean /= static_cast<double>(states.size());
  EnsembleBand band;
  band.distance = trace_distance(mean, reference);
  band.samples = resamples;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, states.size() - 1);
  double acc = 0;
  for (int b = 0; b < resamples; ++b) {
    Matrix m = Matrix::Zero(mean.rows(), mean.cols());
    for (std::size_t j = 0; j < states.size(); ++j) m += states[pick(rng)];
    m /= static_cast<double>(states.size());
    const double d = trace_distance(m, mean);
    acc += d * d;
  }
  band.sigma = std::sqrt(acc / resamples);
  return band;
}

}  // namespace cqed
