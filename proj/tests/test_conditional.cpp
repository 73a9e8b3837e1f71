#include <gtest/gtest.h>

#include <cmath>

#include <cqed/conditional.hpp>
#include <cqed/quadrature.hpp>

#include "helpers.hpp"

using namespace cqed;

namespace {

// A_k(t) without its prefactor f_k.
Matrix bare_factor(int k, double t, const SystemParams& p) {
  return commuted_jump_factor(k, t, p) / jump_prefactor(k, p.gamma());
}

Matrix quadrature_superop(int k, double dt, const SystemParams& p, const Matrix& rho, int q) {
  const auto rule = gauss_legendre(q);
  Matrix acc = Matrix::Zero(rho.rows(), rho.cols());
  for (int i = 0; i < q; ++i) {
    const Matrix A = bare_factor(k, dt * rule.nodes[i], p);
    acc += dt * rule.weights[i] * (A * rho * A.adjoint());
  }
  return acc;
}

std::vector<std::vector<int>> all_records(int m) {
  std::vector<std::vector<int>> out;
  for (int bits = 0; bits < (1 << m); ++bits) {
    std::vector<int> r;
    for (int i = 0; i < m; ++i) r.push_back(((bits >> i) & 1) + 1);
    out.push_back(r);
  }
  return out;
}

double block_ratio(const Matrix& rho) {
  const double pp = observe(rho).p_plus;
  return pp / (1 - pp);
}

}  // namespace

TEST(CountSuperop, VanishesLinearlyWithInterval) {
  std::mt19937_64 rng(1);
  const auto p = SystemParams::with_margin(2.0, 1.0, 0.5, Complex(0.3, 0.2));
  const Matrix rho = testing_util::random_density(p.n_fock(), 5, 2, rng);
  const Matrix a = CountSuperop(1, 1e-9, p).apply(rho), b = CountSuperop(1, 2e-9, p).apply(rho);
  EXPECT_LT(a.norm(), 1e-7);
  EXPECT_LT((b - 2 * a).norm() / b.norm(), 1e-8);
  EXPECT_EQ(CountSuperop(2, 0.0, p).apply(rho).norm(), 0.0);
  EXPECT_THROW(count_superop(1, 0.0, p), DomainError);
}

TEST(CountSuperop, FreeCavityKeepsOnlyDecayTerm) {
  std::mt19937_64 rng(2);
  const SystemParams p(0.0, 1.3, 0.0, 0.0, 30);
  const Matrix rho = testing_util::random_density(30, 6, 3, rng);
  const Matrix a = make_annihilator(p);
  const double dt = 0.7;
  const Matrix want = -std::expm1(-1.3 * dt) / 1.3 * (a * rho * a.adjoint());
  EXPECT_LT((count_superop(2, dt, p).apply(rho) - want).norm(), 1e-14);
}

TEST(CountSuperop, MatchesQuadrature) {
  std::mt19937_64 rng(3);
  for (double dt : {0.01, 0.2, 3.0}) {
    const auto p = SystemParams::with_margin(3.0, 1.0, 1.0, Complex(0.4, -0.3));
    const Matrix rho = testing_util::random_density(p.n_fock(), 5, 2, rng);
    for (int k : {1, 2}) {
      const Matrix got = count_superop(k, dt, p).apply(rho);
      const Matrix want = quadrature_superop(k, dt, p, rho, 40);
      EXPECT_LT((got - want).norm() / want.norm(), 1e-10) << "dt=" << dt << " k=" << k;
    }
  }
}

TEST(CountSuperop, BracketOperatorsCommute) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = SystemParams::with_margin(u(rng) * 3, 0.5 + u(rng), u(rng), Complex(u(rng), u(rng)));
    for (int k : {1, 2}) {
      const Matrix A = bare_factor(k, u(rng), p), B = bare_factor(k, u(rng), p);
      EXPECT_LT((A * B - B * A).norm() / (A * B).norm(), 1e-12);
    }
  }
}

TEST(ConditionalState, EmptyRecordIsSmoothSandwich) {
  std::mt19937_64 rng(5);
  const auto p = SystemParams::with_margin(2.0, 1.0, 0.5, Complex(0.1, 0.3));
  const Matrix rho = testing_util::random_density(p.n_fock(), 4, 2, rng);
  const Matrix N = build_N(0.4, p);
  const Matrix Y = N * rho * N.adjoint();
  const auto res = conditional_state(rho, {}, 0.4, p);
  EXPECT_NEAR(res.weight, Y.trace().real(), 1e-13);
  EXPECT_LT((res.rho_c - Y / Y.trace().real()).norm(), 1e-13);
}

TEST(ConditionalState, AgreesWithApproximateDyson) {
  std::mt19937_64 rng(6);
  const auto p = SystemParams::with_margin(2.0, 1.0, 0.5, Complex(0.3, 0.4));
  const Matrix rho = testing_util::random_density(p.n_fock(), 4, 2, rng);
  const double dt = 0.5;
  for (int m = 0; m <= 2; ++m)
    for (const auto& rec : all_records(m)) {
      const auto got = conditional_state(rho, rec, dt, p);
      const auto want = dyson_oracle(rho, rec, dt, 16, p, false);
      EXPECT_LT(std::abs(got.weight - want.weight) / want.weight, 1e-8) << m;
      EXPECT_LT(trace_distance(got.rho_c, want.rho_c), 1e-8) << m;
    }
}

TEST(ConditionalState, SingleCountFromVacuumPlus) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, Complex(0, 0.5));
  const Matrix rho = projector(product_state(atom::plus(), fock_state(0, p.n_fock())));
  const auto got = conditional_state(rho, {1}, 0.2, p);
  const auto want = dyson_oracle(rho, {1}, 0.2, 16, p, false);
  EXPECT_LT(trace_distance(got.rho_c, want.rho_c), 1e-8);
  EXPECT_LT(std::abs(got.weight - want.weight) / want.weight, 1e-8);
}

TEST(ConditionalState, LongRecordsStayFinite) {
  const auto p = SystemParams::with_margin(2.0, 1.0, 0.5, 0.4);
  const Matrix rho = build_rho_ss(p);
  std::vector<int> rec(40, 2);
  const auto res = conditional_state(rho, rec, 5.0, p);
  EXPECT_TRUE(std::isfinite(res.log_weight));
  EXPECT_TRUE(inspect_density(res.rho_c).valid(1e-10));
  EXPECT_THROW(conditional_state(rho, {3}, 1.0, p), DomainError);
}

TEST(ConditionalState, ShortIntervalCompleteness) {
  const auto p = SystemParams::with_margin(2.0, 1.0, 0.5, 0.3);
  const Matrix rho = build_rho_ss(p);
  const double dt = 0.05;
  double total = 0;
  for (int m = 0; m <= 3; ++m)
    for (const auto& rec : all_records(m)) total += conditional_state(rho, rec, dt, p).weight;
  const double x = p.gamma() * dt * (std::norm(p.alpha()) + std::norm(p.beta()));
  EXPECT_LT(std::abs(total - 1.0), std::pow(x, 4) / 24 + 1e-12);
}

TEST(SmoothOnSteady, ZeroIntervalAndScalarIdentity) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, 0.5);
  const auto r0 = smooth_on_steady(0.0, p);
  EXPECT_NEAR(r0.proportionality, 1.0, 1e-14);
  EXPECT_LT(r0.residual, 1e-13);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 20; ++i) {
    const auto q = SystemParams::with_margin(u(rng), 0.5 + u(rng), u(rng), 0.0);
    EXPECT_LT(smooth_on_steady(u(rng), q).scalar_error, 1e-14 * (1 + std::abs(q.alpha())));
  }
}

TEST(SmoothOnSteady, InvariantAtUnitInterval) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, 0.5);
  EXPECT_LT(smooth_on_steady(1.0, p).residual, 1e-6);
}

TEST(RealBeta, ConditionalStateIsSteady) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, 0.7);
  const auto r = real_beta_invariance({1, 2, 1}, 0.5, p);
  EXPECT_LT(r.distance, 1e-9);
  EXPECT_LT(r.scalar_error, 1e-9);
  EXPECT_LT(real_beta_invariance({}, 0.5, p).distance, 1e-12);
  EXPECT_THROW(real_beta_invariance({1}, 0.5, p.with_beta(Complex(0.7, 0.1))), DomainError);
}

TEST(EigenvalueRatio, TrivialCasesAndGuards) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, Complex(0, 1.0));
  EXPECT_EQ(eigenvalue_ratio({}, 0.4, p), 1.0);
  const auto w = eigenvalue_weights(1.0);
  EXPECT_EQ(w.lambda1, 0.5);
  EXPECT_EQ(w.lambda2, 0.5);
  EXPECT_THROW(eigenvalue_ratio({1}, 0.4, p.with_beta(0.0)), DomainError);
  EXPECT_THROW(eigenvalue_ratio({1}, 0.4, p.with_beta(Complex(0.1, 1.0))), DomainError);
  EXPECT_THROW(eigenvalue_ratio({1}, 0.4, SystemParams::with_margin(0.0, 1.0, 3.0, Complex(0, 1.0))), DomainError);
  const auto v = eigenvalue_weights(3.0);
  EXPECT_DOUBLE_EQ(v.lambda1 + v.lambda2, 1.0);
}

TEST(EigenvalueRatio, ShortIntervalLimit) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, Complex(0, 1.0));
  const double b = (36 + 100 + 1) / 20.0;
  EXPECT_NEAR(eigenvalue_ratio({2}, 1e-9, p), (b + 1) / (b - 1), 1e-8);
  EXPECT_DOUBLE_EQ(eigenvalue_ratio({2}, 0.0, p), (b + 1) / (b - 1));
}

TEST(EigenvalueRatio, MonotoneInCountsOfOneDetector) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, Complex(0, 1.0));
  double last = 1.0;
  for (int m = 1; m <= 6; ++m) {
    const double r = eigenvalue_ratio(std::vector<int>(m, 2), 0.4, p);
    EXPECT_GT(r, last);
    last = r;
  }
}

TEST(EigenvalueRatio, MatchesConditionalBlockTraces) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, Complex(0, 1.0));
  const std::vector<int> rec{2, 2};
  const double engine = steady_block_ratio(rec, 0.4, p);
  const double formula = eigenvalue_ratio(rec, 0.4, p);
  EXPECT_LT(std::abs(engine - formula) / formula, 1e-10) << "engine " << engine << " formula " << formula;
}

TEST(EigenvalueRatio, BlockTracesFollowPerCountScalars) {
  // Each count multiplies the + block by |alpha + w|^2 dt and the - block by
  // |alpha* + w|^2 dt, w = (-1)^k i beta0.
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, Complex(0, 1.0));
  const Matrix rho = build_rho_ss(p);
  const std::vector<int> rec{2, 1, 2};
  const Complex a = p.alpha();
  double want = 1.0;
  for (int k : rec) {
    const Complex w = detector_sign(k) * p.beta();
    want *= std::norm(a + w) / std::norm(std::conj(a) + w);
  }
  EXPECT_LT(std::abs(block_ratio(conditional_state(rho, rec, 0.4, p).rho_c) / want - 1), 1e-10);
  EXPECT_LT(std::abs(steady_block_ratio(rec, 0.4, p) / want - 1), 1e-12);
}

TEST(Precise, AgreesWithDoubleAtShortInterval) {
  const auto p = SystemParams::with_margin(2.0, 1.0, 0.5, Complex(0.4, 0.3), 2.0);
  const Matrix rho = build_rho_ss(p);
  for (const auto& rec : std::vector<std::vector<int>>{{}, {1}, {2, 1}, {2, 2, 1}}) {
    const auto d = conditional_state(rho, rec, 0.3, p);
    const auto q = precise_conditional(steady_blocks(p), rec, 0.3, p);
    EXPECT_NEAR(q.log_weight, d.log_weight, 1e-10);
    EXPECT_LT(trace_distance(q.joint_rho(p.n_fock()), d.rho_c), 1e-8) << rec.size();
    EXPECT_NEAR(q.lambda[0] + q.lambda[1], 1.0, 1e-13);
  }
}

TEST(Precise, AgreesWithDoubleFromVacuum) {
  // |0><0| (x) |+><+|: no cancellation at all, so double is exact here.
  const auto p = SystemParams::with_margin(3.0, 1.0, 1.0, Complex(0.0, 0.6));
  const Matrix rho = projector(product_state(atom::plus(), fock_state(0, p.n_fock())));
  const BlockCoherentState vac{{Complex(0), Complex(0)}, {1.0, 0.0}};
  for (const auto& rec : std::vector<std::vector<int>>{{2}, {1, 2}}) {
    const auto d = conditional_state(rho, rec, 0.8, p);
    const auto q = precise_conditional(vac, rec, 0.8, p);
    EXPECT_NEAR(q.log_weight, d.log_weight, 1e-10);
    EXPECT_LT(trace_distance(q.joint_rho(p.n_fock()), d.rho_c), 1e-10);
    EXPECT_EQ(q.lambda[1], 0.0);
  }
}

TEST(Precise, SmoothInvarianceAtLongIntervals) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, 0.5);
  for (double dt : {0.1, 1.0, 3.0}) {
    const auto r = smooth_on_steady(dt, p);
    EXPECT_LT(r.residual, 1e-12) << dt;
    // N|alpha> = beta_damp e^{z1 + z3 alpha}|alpha>, z3 alpha = |alpha|^2 (e^{-gamma dt/2} - 1).
    const FactoredPropagator fp = factorize_M(dt, p);
    const double want = 2 * (fp.z1 + std::norm(p.alpha()) * std::expm1(-fp.decay) + std::log(fp.beta_damp));
    EXPECT_NEAR(precise_conditional(steady_blocks(p), {}, dt, p).log_weight, want, 1e-10 * std::abs(want)) << dt;
  }
}

TEST(Precise, GuardsAndBudget) {
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, 0.5);
  EXPECT_THROW(precise_conditional(steady_blocks(p), {3}, 1.0, p), DomainError);
  EXPECT_THROW(precise_conditional(steady_blocks(p), {}, 3.0, p, PreciseOptions{60}), CostError);
  BlockCoherentState bad = steady_blocks(p);
  bad.weight[0] = -0.1;
  EXPECT_THROW(precise_conditional(bad, {}, 1.0, p), DomainError);
}

TEST(Precise, LongRecordMatchesPerCountScalars) {
  // From rho_ss each count multiplies block s by |alpha_s + w_k|^2 dt (alpha_+ = alpha,
  // alpha_- = alpha*), and N then scales both blocks by the same smooth factor.
  const auto p = SystemParams::with_margin(10.0, 1.0, 3.0, Complex(0.3, 0.8));
  const double dt = 0.4;
  std::vector<int> rec;
  for (int i = 0; i < 40; ++i) rec.push_back(i % 3 == 0 ? 1 : 2);
  const auto q = precise_conditional(steady_blocks(p), rec, dt, p);
  const Complex alpha[2] = {p.alpha(), std::conj(p.alpha())};
  double log_block[2] = {0, 0};
  for (int k : rec)
    for (int s = 0; s < 2; ++s) log_block[s] += std::log(std::norm(alpha[s] + detector_sign(k) * p.beta()) * dt);
  const double top = std::max(log_block[0], log_block[1]);
  const double mix = top + std::log(0.5 * std::exp(log_block[0] - top) + 0.5 * std::exp(log_block[1] - top));
  const FactoredPropagator fp = factorize_M(dt, p);
  const double smooth = 2 * (fp.z1 + std::norm(p.alpha()) * std::expm1(-fp.decay) + std::log(fp.beta_damp));
  const double want = 40 * std::log(p.gamma() / 2) - std::lgamma(41.0) + mix + smooth;
  EXPECT_NEAR(q.log_weight, want, 1e-9 * std::abs(want));
  EXPECT_NEAR(std::log(q.lambda[0] / q.lambda[1]), log_block[0] - log_block[1], 1e-9);
  EXPECT_LE(q.factor[0].cols(), 2);
}
