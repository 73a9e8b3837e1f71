#pragma once

// Dense matrix exponential by scaling and squaring with a diagonal Pade
// core (Higham 2005). Used as the oracle for every factorization check.

#include <array>
#include <cmath>
#include <sstream>

#include "errors.hpp"
#include "types.hpp"

namespace cqed {

struct ExpmOptions {
  double max_norm = 1e6;  // ||A t||_1 above this raises OverflowError
};

namespace detail {

inline double norm1(const Matrix& A) { return A.cwiseAbs().colwise().sum().maxCoeff(); }

template <std::size_t K>
void pade_odd_even(const Matrix& A, const std::array<double, K>& b, Matrix& U, Matrix& V) {
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  Matrix P = Matrix::Identity(n, n);
  Matrix odd = b[1] * I, even = b[0] * I;
  for (std::size_t k = 2; k < K; k += 2) {
    P = P * A2;
    even += b[k] * P;
    if (k + 1 < K) odd += b[k + 1] * P;
  }
  U.noalias() = A * odd;
  V = even;
}

inline void pade13(const Matrix& A, Matrix& U, Matrix& V) {
  static constexpr double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                                 1187353796428800.,  129060195264000.,   10559470521600.,
                                 670442572800.,      33522128640.,       1323241920.,
                                 40840800.,          960960.,            16380.,
                                 182.,               1.};
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A, A4 = A2 * A2, A6 = A4 * A2;
  Matrix tmp = b[13] * A6 + b[11] * A4 + b[9] * A2;
  Matrix W = A6 * tmp;
  W += b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I;
  U.noalias() = A * W;
  tmp = b[12] * A6 + b[10] * A4 + b[8] * A2;
  V.noalias() = A6 * tmp;
  V += b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
}

}  // namespace detail

inline Matrix matrix_exponential(const Matrix& A, double t, const ExpmOptions& opt = {}) {
  if (A.rows() != A.cols()) throw DimensionMismatch("matrix_exponential: matrix not square");
  if (!A.allFinite() || !std::isfinite(t)) throw DomainError("matrix_exponential: non-finite input");
  const Matrix At = A * t;
  const double nrm = detail::norm1(At);
  if (nrm > opt.max_norm) {
    std::ostringstream os;
    os << "matrix_exponential: ||At||_1 = " << nrm << " exceeds bound " << opt.max_norm;
    throw OverflowError(os.str());
  }
  const auto n = A.rows();
  Matrix U(n, n), V(n, n);
  int squarings = 0;
  if (nrm <= 1.495585217958292e-2) {
    detail::pade_odd_even(At, std::array<double, 4>{120., 60., 12., 1.}, U, V);
  } else if (nrm <= 2.539398330063230e-1) {
    detail::pade_odd_even(At, std::array<double, 6>{30240., 15120., 3360., 420., 30., 1.}, U, V);
  } else if (nrm <= 9.504178996162932e-1) {
    detail::pade_odd_even(
        At, std::array<double, 8>{17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.}, U, V);
  } else if (nrm <= 2.097847961257068) {
    detail::pade_odd_even(At,
                          std::array<double, 10>{17643225600., 8821612800., 2075673600., 302702400.,
                                                 30270240., 2162160., 110880., 3960., 90., 1.},
                          U, V);
  } else {
    constexpr double theta13 = 5.371920351148152;
    squarings = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / theta13))));
    detail::pade13(At / std::ldexp(1.0, squarings), U, V);
  }
  Matrix R = (V - U).partialPivLu().solve(V + U);
  for (int s = 0; s < squarings; ++s) R = R * R;
  return R;
}

}  // namespace cqed
