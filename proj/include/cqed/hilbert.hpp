#pragma once

// Joint atom (x) field space. Basis index = atom * n_fock + n with atom
// |g> = 0, |e> = 1. All joint operators act as 2x2 blocks of field matrices.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "params.hpp"
#include "types.hpp"

namespace cqed {

using Matrix2 = Eigen::Matrix2cd;
using Vector2 = Eigen::Vector2cd;

namespace atom {

inline Matrix2 sigma() { return (Matrix2() << 0, 1, 0, 0).finished(); }  // |g><e|
inline Matrix2 sigma_x() { return (Matrix2() << 0, 1, 1, 0).finished(); }
inline Matrix2 sigma_y() {
  const Matrix2 s = sigma();
  return kI * (s.adjoint() - s);
}
inline Matrix2 sigma_z() { return kI * sigma_y() * sigma_x(); }

inline Vector2 ground() { return Vector2(1, 0); }
inline Vector2 excited() { return Vector2(0, 1); }
// sigma_y eigenvectors (|g> +- i|e>)/sqrt2.
inline Vector2 plus() { return Vector2(1, kI) / std::sqrt(2.0); }
inline Vector2 minus() { return Vector2(1, -kI) / std::sqrt(2.0); }

// Columns are |+>, |->; maps +- coordinates to g/e coordinates.
inline Matrix2 pm_to_ge() {
  Matrix2 u;
  u.col(0) = plus();
  u.col(1) = minus();
  return u;
}

}  // namespace atom

inline SparseMatrix field_annihilator(int n_fock) {
  SparseMatrix a(n_fock, n_fock);
  a.reserve(Eigen::VectorXi::Constant(n_fock, 1));
  for (int n = 1; n < n_fock; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  a.makeCompressed();
  return a;
}

inline SparseMatrix sparse_identity(int n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

// A (x) F for a 2x2 atomic matrix and a field operator.
inline SparseMatrix kron(const Matrix2& A, const SparseMatrix& F) {
  const int n = static_cast<int>(F.rows());
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(4 * F.nonZeros());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      if (A(i, j) == Complex(0)) continue;
      for (int r = 0; r < F.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(F, r); it; ++it)
          trips.emplace_back(i * n + static_cast<int>(it.row()), j * n + static_cast<int>(it.col()),
                             A(i, j) * it.value());
    }
  SparseMatrix out(2 * n, 2 * n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

inline Matrix kron(const Matrix2& A, const Matrix& F) {
  const auto n = F.rows();
  Matrix out(2 * n, 2 * n);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block(i * n, j * n, n, n) = A(i, j) * F;
  return out;
}

// Sparse joint operators for one truncation. Cheap to build; the dynamics
// code keeps one instance around.
struct JointOperators {
  int n_fock;
  SparseMatrix a, ad, num, sigma, sx, sy, sz, id;

  explicit JointOperators(int n) : n_fock(n) {
    const SparseMatrix af = field_annihilator(n);
    const SparseMatrix idf = sparse_identity(n);
    a = kron(Matrix2::Identity(), af);
    ad = SparseMatrix(a.adjoint());
    num = SparseMatrix(ad * a);
    sigma = kron(atom::sigma(), idf);
    sx = kron(atom::sigma_x(), idf);
    sy = kron(atom::sigma_y(), idf);
    sz = kron(atom::sigma_z(), idf);
    id = sparse_identity(2 * n);
  }

  // ig(a^dag sigma - a sigma^dag)
  SparseMatrix h_int(double g) const {
    return SparseMatrix(Complex(0, g) * (SparseMatrix(ad * sigma) - SparseMatrix(a * SparseMatrix(sigma.adjoint()))));
  }
  // -g (a^dag + a) sigma_y / 2
  SparseMatrix h0(double g) const { return SparseMatrix(Complex(-g / 2) * SparseMatrix((ad + a) * sy)); }
  // ig (a^dag - a) sigma_x / 2
  SparseMatrix h1(double g) const { return SparseMatrix(Complex(0, g / 2) * SparseMatrix((ad - a) * sx)); }
};

inline Matrix make_annihilator(const SystemParams& p) { return Matrix(JointOperators(p.n_fock()).a); }

struct AtomicOps {
  Matrix sigma, sx, sy, sz;
};

inline AtomicOps make_atomic_ops(int n_fock) {
  const JointOperators ops(n_fock);
  return {Matrix(ops.sigma), Matrix(ops.sx), Matrix(ops.sy), Matrix(ops.sz)};
}

// X_pm = U^dag X U with U = u (x) 1, u the +- eigenbasis of sigma_y.
inline Matrix to_pm_basis(const Matrix& X) {
  const Eigen::Index n = X.rows() / 2;
  const Matrix2 u = atom::pm_to_ge();
  Matrix Y = Matrix::Zero(X.rows(), X.cols());
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          Y.block(a * n, b * n, n, n) += std::conj(u(c, a)) * u(d, b) * X.block(c * n, d * n, n, n);
  return Y;
}

inline Matrix from_pm_basis(const Matrix& Y) {
  const Eigen::Index n = Y.rows() / 2;
  const Matrix2 u = atom::pm_to_ge();
  Matrix X = Matrix::Zero(Y.rows(), Y.cols());
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          X.block(c * n, d * n, n, n) += u(c, a) * std::conj(u(d, b)) * Y.block(a * n, b * n, n, n);
  return X;
}

// Joint matrix acting as P on the sigma_y = +1 block and M on the -1 block.
inline Matrix block_diagonal_pm(const Matrix& P, const Matrix& M) {
  const Eigen::Index n = P.rows();
  Matrix X(2 * n, 2 * n);
  X.topLeftCorner(n, n) = 0.5 * (P + M);
  X.bottomRightCorner(n, n) = X.topLeftCorner(n, n);
  X.topRightCorner(n, n) = Complex(0, 0.5) * (M - P);
  X.bottomLeftCorner(n, n) = Complex(0, 0.5) * (P - M);
  return X;
}

struct CoherentState {
  Vector field;    // renormalized field amplitudes
  double leakage;  // 1 - sum |c_n|^2 before renormalization
};

// Truncated coherent state, built in log space so large amplitudes do not
// underflow the vacuum coefficient.
inline CoherentState coherent_state(Complex amp, int n_fock, double tol) {
  const double r = std::abs(amp);
  if (fock_margin(r) > n_fock) {
    std::ostringstream os;
    os << "coherent amplitude " << r << " needs n_fock >= " << fock_margin(r) << ", have " << n_fock;
    throw TruncationError(os.str());
  }
  Vector c = Vector::Zero(n_fock);
  const double phase = std::arg(amp);
  double total = 0.0;
  for (int n = 0; n < n_fock; ++n) {
    double mag;
    if (r == 0.0)
      mag = n == 0 ? 1.0 : 0.0;
    else
      mag = std::exp(-0.5 * r * r + n * std::log(r) - 0.5 * std::lgamma(n + 1.0));
    c(n) = std::polar(mag, n * phase);
    total += mag * mag;
  }
  const double leakage = std::max(0.0, 1.0 - total);
  if (leakage > tol) {
    std::ostringstream os;
    os << "coherent state leakage " << leakage << " exceeds tol " << tol;
    throw TruncationError(os.str());
  }
  return {c / std::sqrt(total), leakage};
}

inline CoherentState coherent_state(Complex amp, const SystemParams& p) {
  return coherent_state(amp, p.n_fock(), p.tol());
}

inline Vector product_state(const Vector2& atom_state, const Vector& field) {
  const auto n = field.size();
  Vector v(2 * n);
  v.head(n) = atom_state(0) * field;
  v.tail(n) = atom_state(1) * field;
  return v;
}

inline Vector fock_state(int level, int n_fock) {
  Vector v = Vector::Zero(n_fock);
  v(level) = 1.0;
  return v;
}

inline Matrix projector(const Vector& v) { return v * v.adjoint(); }

inline Matrix hermitian_part(const Matrix& X) { return 0.5 * (X + X.adjoint()); }

inline RealVector hermitian_eigenvalues(const Matrix& X) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(X), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double trace_distance(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw DimensionMismatch("trace_distance: shapes differ");
  return 0.5 * hermitian_eigenvalues(A - B).cwiseAbs().sum();
}

struct DensityReport {
  double hermiticity;  // ||rho - rho^dag||_F
  double trace_error;  // |tr rho - 1|
  double min_eigenvalue;

  bool valid(double tol) const {
    return hermiticity < tol && trace_error < tol && min_eigenvalue >= -tol;
  }
};

inline DensityReport inspect_density(const Matrix& rho) {
  return {(rho - rho.adjoint()).norm(), std::abs(rho.trace() - 1.0), hermitian_eigenvalues(rho).minCoeff()};
}

// Observables written to every time-series row.
struct Observables {
  double trace, purity, photons, sz;
  Complex field;
  double p_plus;  // population of the sigma_y = +1 block
};

inline Observables observe(const Matrix& rho) {
  const Eigen::Index n = rho.rows() / 2;
  Observables o{};
  o.trace = rho.trace().real();
  o.purity = (rho.cwiseProduct(rho.transpose())).sum().real();
  double photons = 0.0;
  Complex field = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double pop = (rho(k, k) + rho(n + k, n + k)).real();
    photons += static_cast<double>(k) * pop;
    if (k + 1 < n) field += std::sqrt(static_cast<double>(k + 1)) * (rho(k + 1, k) + rho(n + k + 1, n + k));
  }
  o.photons = photons;
  o.field = field;
  o.sz = (rho.topLeftCorner(n, n).trace() - rho.bottomRightCorner(n, n).trace()).real();
  // <+|rho_atom|+> with |+> = (1, i)/sqrt2
  o.p_plus = 0.5 * (rho.topLeftCorner(n, n).trace() + rho.bottomRightCorner(n, n).trace() +
                    kI * rho.topRightCorner(n, n).trace() - kI * rho.bottomLeftCorner(n, n).trace())
                       .real();
  return o;
}

}  // namespace cqed
