#include <gtest/gtest.h>

#include <iostream>

#include <cqed/disentangle.hpp>
#include <cqed/dynamics.hpp>

#include "helpers.hpp"

using namespace cqed;
using testing_util::relative_block_columns;

namespace {

constexpr int kInterior = 5;

// Truncation large enough that the first kInterior columns stay clear of the edge.
SystemParams checked(double g, double E, Complex beta = 0.0, double extra = 0.0) {
  return SystemParams::with_margin(g, 1.0, E, beta, std::sqrt(kInterior - 1.0) + extra);
}

Matrix oracle_M(double t, const SystemParams& p) { return matrix_exponential(smooth_generator(p), t); }

}  // namespace

TEST(Factorize, ZeroTime) {
  const auto p = checked(10, 3, Complex(0.3, 0.1));
  const auto fp = factorize_M(0.0, p);
  EXPECT_EQ(fp.z1, 0.0);
  EXPECT_EQ(fp.z2_plus, Complex(0));
  EXPECT_EQ(fp.z3_minus, Complex(0));
  EXPECT_EQ(fp.beta_damp, 1.0);
  EXPECT_LT((materialize(fp, p) - Matrix::Identity(p.dim(), p.dim())).norm(), 1e-15);
  EXPECT_THROW(factorize_M(-1.0, p), DomainError);
}

TEST(Factorize, PureDecayLimit) {
  const auto p = SystemParams(0, 1, 0, 0.0, 12);
  const auto fp = factorize_M(1.3, p);
  EXPECT_EQ(fp.z1, 0.0);
  EXPECT_EQ(fp.z2_plus, Complex(0));
  const Matrix M = materialize(fp, p);
  for (int k = 0; k < 12; ++k) EXPECT_NEAR(M(k, k).real(), std::exp(-0.65 * k), 1e-15);
}

TEST(Factorize, CoefficientsSatisfyTheirOdes) {
  const auto p = checked(10, 3);
  const double t = 0.8;
  const Complex want = Complex(p.drive(), p.g() / 2) * std::exp(t / 2);
  double prev = 0;
  for (double h : {1e-2, 5e-3}) {
    const Complex fd = (factorize_M(t + h, p).z2_plus - factorize_M(t - h, p).z2_plus) / (2 * h);
    const double err = std::abs(fd - want);
    if (prev > 0) EXPECT_NEAR(prev / err, 4.0, 0.05);  // O(h^2)
    prev = err;
  }
  // z3 and z1 follow from the last factor: d/dt of -(2E - ig)(1 - e^{-t/2}).
  const double h = 1e-4;
  const Complex dz3 = (factorize_M(t + h, p).z3_plus - factorize_M(t - h, p).z3_plus) / (2 * h);
  EXPECT_LT(std::abs(dz3 + Complex(p.drive(), -p.g() / 2) * std::exp(-t / 2)), 1e-7);
  const double dz1 = (factorize_M(t + h, p).z1 - factorize_M(t - h, p).z1) / (2 * h);
  EXPECT_NEAR(dz1, std::norm(p.alpha()) * (std::exp(-t / 2) - 1) / 2, 1e-6);
}

TEST(Factorize, MatchesOracleOnInterior) {
  // Spec example point (t=0.7) plus a few more; the margin rule forces n_fock >= 216 here.
  const auto p = checked(10, 3);
  for (double t : {0.05, 0.7, 2.0}) {
    const Matrix M = materialize(factorize_M(t, p), p);
    EXPECT_LT(relative_block_columns(M, oracle_M(t, p), p.n_fock(), kInterior), 1e-8) << t;
  }
}

TEST(Factorize, BlockDiagonalInPmBasis) {
  const auto p = checked(2, 0.5);
  const Matrix Y = to_pm_basis(materialize(factorize_M(0.9, p), p));
  const int n = p.n_fock();
  EXPECT_EQ(Y.topRightCorner(n, n).cwiseAbs().maxCoeff() < 1e-15, true);
  EXPECT_EQ(Y.bottomLeftCorner(n, n).cwiseAbs().maxCoeff() < 1e-15, true);
}

TEST(Factorize, LargeDisplacementAgainstExtendedPrecision) {
  // g=10, E=0, t=3, + block: x = -Z2 Z3 ~ 270, where a Taylor product of the
  // factors (and the double-precision expm oracle) loses the small entries.
  // Reference values: the finite normal-ordering sum at 300 digits.
  struct Ref {
    int j, k;
    Complex v;
  };
  const Ref refs[] = {
      {0, 0, Complex(3.9341976530575743e-32, 0.0)},   {3, 1, Complex(5.7853519789366478e-29, 0.0)},
      {40, 2, Complex(-5.5439042970351462e-19, 0.0)}, {120, 4, Complex(7.2861871232591273e-23, 0.0)},
      {2, 30, Complex(4.181369385590389e-20, 0.0)},   {150, 150, Complex(1.5069129414985817e-72, 0.0)},
      {100, 60, Complex(7.5053588509597031e-27, 0.0)}, {169, 0, Complex(0.0, 5.6046151943899327e-34)},
  };
  const auto p = SystemParams(10, 1, 0, 0.0, 170);
  const Matrix block = materialize_block(factorize_M(3.0, p), +1, 170);
  for (const auto& r : refs)
    EXPECT_LT(std::abs(block(r.j, r.k) - r.v) / std::abs(r.v), 1e-12) << r.j << "," << r.k;
}

TEST(BuildN, IdentityAtZeroAndSemigroup) {
  const auto p0 = checked(10, 3);
  EXPECT_LT((build_N(0.0, p0) - Matrix::Identity(p0.dim(), p0.dim())).norm(), 1e-15);

  const auto p = checked(10, 3, Complex(0.5, 0.0), 3.0);
  const Matrix lhs = build_N(0.3, p) * build_N(0.4, p);
  EXPECT_LT(relative_block_columns(lhs, build_N(0.7, p), p.n_fock(), kInterior), 1e-8);
}

TEST(BuildN, MatchesOracleOfItsExponent) {
  const auto p = checked(10, 3, Complex(0.2, -0.6));
  const double t = 0.6;
  Matrix G = smooth_generator(p);
  G.diagonal().array() -= 0.5 * std::norm(p.beta());
  EXPECT_LT(relative_block_columns(build_N(t, p), matrix_exponential(G, t), p.n_fock(), kInterior), 1e-8);
}

TEST(BuildN0, IdentityAndDegenerateCoupling) {
  const auto p = checked(2, 0.5, Complex(0.3, 0.2));
  EXPECT_LT((build_N0(0.0, p) - Matrix::Identity(p.dim(), p.dim())).norm(), 1e-15);
  const auto p0 = checked(0, 1.5, Complex(0.3, 0.2));
  EXPECT_LT(relative_block_columns(build_N0(0.8, p0), build_N(0.8, p0), p0.n_fock(), kInterior), 1e-10);
}

TEST(BuildN0, ApproximationImprovesWithCoupling) {
  // ||(N0 - N) rho_ss (N0 - N)^dag|| / ||N0 rho_ss N0^dag|| at t = 1, scanned
  // over g. Both propagators shrink rho_ss by ~exp(-|alpha|^2 t), far below
  // what a one-shot expm resolves, so the factors are stepped with
  // renormalization and the scale is carried as a log.
  const double t = 1.0, h = 0.01;
  double last = 1e300;
  for (double g : {2.0, 5.0, 10.0}) {
    const auto p = SystemParams::with_margin(g, 1.0, 3.0, 0.5);
    const Matrix W = steady_state_factor(p);
    const Matrix P0 = build_N0(h, p), P = build_N(h, p);
    Matrix W0 = W, W1 = W;
    double l0 = 0, l1 = 0;
    for (int s = 0; s < static_cast<int>(std::lround(t / h)); ++s) {
      W0 = P0 * W0;
      W1 = P * W1;
      const double n0 = W0.norm(), n1 = W1.norm();
      W0 /= n0;
      W1 /= n1;
      l0 += std::log(n0);
      l1 += std::log(n1);
    }
    const Matrix D = W0 - std::exp(l1 - l0) * W1;
    const double rel = (D * D.adjoint()).norm() / (W0 * W0.adjoint()).norm();
    std::cout << "g=" << g << " relative smooth-evolution error " << rel << "\n";
    EXPECT_LT(rel, last) << "g=" << g;
    last = rel;
  }
}

TEST(Corollary, IdentityUnitarityAndOracle) {
  const auto p = checked(10, 0, 0.0, 0.0);
  EXPECT_LT((corollary_factor(0.0, p) - Matrix::Identity(p.dim(), p.dim())).norm(), 1e-15);
  const double t = 0.5;
  const JointOperators ops(p.n_fock());
  const Matrix U = corollary_factor(t, p);
  const Matrix oracle = matrix_exponential(Matrix(-kI * ops.h0(p.g())), t);
  EXPECT_LT(relative_block_columns(U, oracle, p.n_fock(), kInterior), 1e-8);
  // Unitarity on columns whose displacement stays inside the truncation.
  Matrix cols(p.dim(), 2 * kInterior);
  cols << U.middleCols(0, kInterior), U.middleCols(p.n_fock(), kInterior);
  EXPECT_LT((cols.adjoint() * cols - Matrix::Identity(2 * kInterior, 2 * kInterior)).norm(), 1e-8);
}

TEST(Corollary, GuardRaisesWhenDisplacementOutgrowsTruncation) {
  const auto p = SystemParams::with_margin(10, 1.0, 0.0, 0.0);
  EXPECT_THROW(corollary_factor(4.0, p), TruncationError);
}

TEST(JumpFactor, ZeroDelayAndPrefactor) {
  const auto p = checked(2, 0.5, Complex(0.3, 0.4));
  const Matrix a = make_annihilator(p);
  for (int k : {1, 2}) {
    const Complex f = jump_prefactor(k, p.gamma());
    EXPECT_NEAR(std::norm(f), p.gamma() / 2, 1e-15);
    const Matrix C = f * (a + detector_sign(k) * p.beta() * Matrix::Identity(p.dim(), p.dim()));
    EXPECT_LT((commuted_jump_factor(k, 0.0, p) - C).norm(), 1e-14);
  }
  EXPECT_THROW(jump_prefactor(3, 1.0), DomainError);
}

TEST(JumpFactor, CommutesThroughSmoothPropagator) {
  const auto p = checked(10, 3, Complex(0, 0.5));
  const double t = 0.4;
  const Matrix M = oracle_M(t, p);
  const Matrix a = make_annihilator(p);
  for (int k : {1, 2}) {
    const Matrix C = jump_prefactor(k, 1.0) * (a + detector_sign(k) * p.beta() * Matrix::Identity(p.dim(), p.dim()));
    const Matrix lhs = C * M, rhs = M * commuted_jump_factor(k, t, p);
    EXPECT_LT(relative_block_columns(rhs, lhs, p.n_fock(), kInterior), 1e-8) << k;
  }
}
