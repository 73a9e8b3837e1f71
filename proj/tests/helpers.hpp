#pragma once

#include <random>

#include <cqed/hilbert.hpp>

namespace testing_util {

using cqed::Complex;
using cqed::Matrix;

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

// Random density matrix supported on the lowest `levels` Fock states of
// both atomic levels.
inline Matrix random_density(int n_fock, int levels, int rank, std::mt19937_64& rng) {
  Matrix W = Matrix::Zero(2 * n_fock, rank);
  const Matrix R = random_matrix(2 * levels, rank, rng);
  W.topRows(levels) = R.topRows(levels);
  W.middleRows(n_fock, levels) = R.bottomRows(levels);
  Matrix rho = W * W.adjoint();
  return rho / rho.trace().real();
}

inline Matrix random_hermitian(int dim, std::mt19937_64& rng) {
  const Matrix m = random_matrix(dim, dim, rng);
  return 0.5 * (m + m.adjoint());
}

// Relative Frobenius residual restricted to the leading columns of each
// sigma_y block of a joint matrix (both blocks laid out as atom*n + k).
inline double relative_block_columns(const Matrix& got, const Matrix& want, int n_fock, int cols) {
  double num = 0, den = 0;
  for (int b = 0; b < 2; ++b) {
    num += (got.middleCols(b * n_fock, cols) - want.middleCols(b * n_fock, cols)).squaredNorm();
    den += want.middleCols(b * n_fock, cols).squaredNorm();
  }
  return std::sqrt(num / den);
}

}  // namespace testing_util
