#pragma once

#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "types.hpp"

namespace cqed {

// Smallest Fock dimension that holds a coherent state of the given
// amplitude with negligible leakage: |z|^2 + 6|z| + 10.
inline int fock_margin(double amplitude) {
  const double a = std::abs(amplitude);
  return static_cast<int>(std::ceil(a * a + 6.0 * a + 10.0 - 1e-9));
}

// Physical constants of the driven atom-cavity system together with the
// Fock truncation. Rates are in units where gamma is typically 1.
class SystemParams {
 public:
  SystemParams(double g, double gamma, double drive, Complex beta, int n_fock, double tol = 1e-8)
      : g_(g), gamma_(gamma), e_(drive), beta_(beta), n_fock_(n_fock), tol_(tol) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive");
    if (!std::isfinite(g) || !std::isfinite(drive) || !std::isfinite(beta.real()) ||
        !std::isfinite(beta.imag()))
      throw DomainError("non-finite parameter");
    if (!(tol >= 0.0)) throw DomainError("tol must be non-negative");
    if (n_fock < 2) throw TruncationError("n_fock must be at least 2");
    const int need = fock_margin(std::abs(alpha()));
    if (n_fock < need) {
      std::ostringstream os;
      os << "n_fock=" << n_fock << " below truncation margin " << need << " for |alpha|="
         << std::abs(alpha());
      throw TruncationError(os.str());
    }
  }

  // Picks n_fock from the margin rule, optionally padded by an extra amplitude.
  static SystemParams with_margin(double g, double gamma, double drive, Complex beta,
                                  double extra_amplitude = 0.0, double tol = 1e-8) {
    const Complex a{2.0 * drive / gamma, g / gamma};
    return {g, gamma, drive, beta, fock_margin(std::abs(a) + extra_amplitude), tol};
  }

  double g() const { return g_; }
  double gamma() const { return gamma_; }
  double drive() const { return e_; }
  Complex beta() const { return beta_; }
  int n_fock() const { return n_fock_; }
  int dim() const { return 2 * n_fock_; }
  double tol() const { return tol_; }

  // Steady-state field amplitude (2E + ig)/gamma.
  Complex alpha() const { return {2.0 * e_ / gamma_, g_ / gamma_}; }

  SystemParams with_beta(Complex beta) const { return {g_, gamma_, e_, beta, n_fock_, tol_}; }
  SystemParams with_fock(int n) const { return {g_, gamma_, e_, beta_, n, tol_}; }
  SystemParams with_tol(double tol) const { return {g_, gamma_, e_, beta_, n_fock_, tol}; }

 private:
  double g_, gamma_, e_;
  Complex beta_;
  int n_fock_;
  double tol_;
};

}  // namespace cqed
