#pragma once

// Matrix elements of normally ordered single-mode exponentials
//
//   exp(c) exp(w n) exp(z2 a^dag) exp(z3 a)
//
// in closed form. With x = -z2 z3 the element <j|.|k> is
//   z2^(j-k) sqrt(k!/j!) L_k^(j-k)(x)   for j >= k,
//   z3^(k-j) sqrt(j!/k!) L_j^(k-j)(x)   for j <  k,
// times exp(c + w j). The generalized Laguerre polynomials come from the
// forward three-term recurrence with running rescaling; magnitudes are
// assembled in log space so huge displacements neither overflow nor lose
// the cancellation that a literal product of Taylor series suffers.
//
// Every intermediate Fock sum is bounded by min(j, k), so the truncated
// result is exactly the compression of the infinite-dimensional operator.

#include <cmath>
#include <vector>

#include "types.hpp"

namespace cqed {

struct NormalOrderedExp {
  Complex log_scale = 0.0;  // c
  Complex number = 0.0;     // w
  Complex raise = 0.0;      // z2
  Complex lower = 0.0;      // z3
};

namespace detail {

// Fills the entries on one side of the diagonal: offset m >= 0 with
// (j, k) = (n + m, n) when below, (n, n + m) when above.
inline void fill_laguerre_band(const NormalOrderedExp& f, int m, bool below, int rows, int cols,
                               const std::vector<double>& lgam, Matrix& out) {
  const Complex z = below ? f.raise : f.lower;
  if (m > 0 && z == Complex(0)) return;
  const Complex x = -f.raise * f.lower;
  const double zlog = m > 0 ? m * std::log(std::abs(z)) : 0.0;
  const double zarg = m > 0 ? m * std::arg(z) : 0.0;

  Complex prev = 0.0, cur = 1.0;  // L_{n-1}, L_n
  double shift = 0.0;             // log of the factor divided out of prev/cur
  for (int n = 0;; ++n) {
    const int j = below ? n + m : n;
    const int k = below ? n : n + m;
    if (j >= rows || k >= cols) break;
    if (n == 1) {
      prev = 1.0;
      cur = Complex(1.0 + m) - x;
    } else if (n >= 2) {
      const Complex next = ((2.0 * (n - 1) + 1.0 + m - x) * cur - (n - 1.0 + m) * prev) / static_cast<double>(n);
      prev = cur;
      cur = next;
    }
    const double big = std::max(std::abs(prev), std::abs(cur));
    if (big > 1e100 || (big > 0.0 && big < 1e-100)) {
      prev /= big;
      cur /= big;
      shift += std::log(big);
    }
    if (cur == Complex(0)) continue;
    const double logmag = f.log_scale.real() + f.number.real() * j + zlog +
                          0.5 * (lgam[std::min(j, k)] - lgam[std::max(j, k)]) + shift + std::log(std::abs(cur));
    if (logmag < -745.0) continue;
    const double phase = f.log_scale.imag() + f.number.imag() * j + zarg + std::arg(cur);
    out(j, k) = std::exp(Complex(logmag, phase));
  }
}

}  // namespace detail

// Dense rows x cols leading block of the operator.
inline Matrix materialize_normal_ordered(const NormalOrderedExp& f, int rows, int cols = -1) {
  if (cols < 0) cols = rows;
  Matrix out = Matrix::Zero(rows, cols);
  std::vector<double> lgam(std::max(rows, cols) + 1);
  for (std::size_t i = 0; i < lgam.size(); ++i) lgam[i] = std::lgamma(static_cast<double>(i) + 1.0);
  for (int m = 0; m < rows; ++m) detail::fill_laguerre_band(f, m, true, rows, cols, lgam, out);
  for (int m = 1; m < cols; ++m) detail::fill_laguerre_band(f, m, false, rows, cols, lgam, out);
  return out;
}

}  // namespace cqed
