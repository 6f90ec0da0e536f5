#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"
#include "weakdiss/lindblad.hpp"
#include "weakdiss/operators.hpp"

using namespace weakdiss;
using weakdiss::testing::max_abs;
using weakdiss::testing::Rng;

// ---------------------------------------------------------------------------
// operator-core
// ---------------------------------------------------------------------------

TEST(Pauli, MatricesAndAlgebra) {
  Operator x(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  EXPECT_EQ(pauli(Axis::x), x);
  EXPECT_EQ(pauli(Axis::z), z);
  for (Axis a : {Axis::x, Axis::y, Axis::z}) {
    const Operator s = pauli(a);
    EXPECT_TRUE(is_hermitian(s));
    EXPECT_EQ(s.trace(), Complex(0.0));
    EXPECT_LT(max_abs(s * s - identity(2)), 1e-15);
  }
  EXPECT_LT(max_abs(pauli(Axis::x) * pauli(Axis::y) - kI * pauli(Axis::z)), 1e-15);
  EXPECT_LT(max_abs(sigma_plus() - 0.5 * (pauli(Axis::x) + kI * pauli(Axis::y))), 1e-15);
  EXPECT_EQ(sigma_minus(), sigma_plus().adjoint());
}

TEST(Bloch, DensityExamples) {
  Operator e = Operator::Zero(2, 2);
  e(0, 0) = 1.0;
  EXPECT_LT(max_abs(bloch_to_density({0, 0, 1}) - e), 1e-15);
  EXPECT_LT(max_abs(bloch_to_density({0, 0, 0}) - 0.5 * identity(2)), 1e-15);
  Operator plus = Operator::Constant(2, 2, 0.5);
  EXPECT_LT(max_abs(bloch_to_density({1, 0, 0}) - plus), 1e-15);
  EXPECT_THROW(bloch_to_density({1.0, 0.1, 0.0}), NormTooLarge);
}

TEST(Bloch, EigenvaluesFollowNorm) {
  Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    const BlochVector v = rng.bloch();
    const Operator rho = bloch_to_density(v);
    Eigen::SelfAdjointEigenSolver<Operator> es(rho);
    EXPECT_NEAR(es.eigenvalues()(0), 0.5 * (1.0 - v.norm()), 1e-12);
    EXPECT_NEAR(es.eigenvalues()(1), 0.5 * (1.0 + v.norm()), 1e-12);
    EXPECT_TRUE(is_density(rho));
  }
}

TEST(Bloch, RoundTrip) {
  Rng rng(12);
  Operator e = Operator::Zero(2, 2);
  e(0, 0) = 1.0;
  EXPECT_NEAR(density_to_bloch(e).z, 1.0, 1e-15);
  EXPECT_NEAR(density_to_bloch(0.5 * identity(2)).norm(), 0.0, 1e-15);
  for (int k = 0; k < 1000; ++k) {
    const BlochVector v = rng.bloch(k % 2 == 0);
    const BlochVector w = density_to_bloch(bloch_to_density(v));
    EXPECT_NEAR(w.x, v.x, 1e-12);
    EXPECT_NEAR(w.y, v.y, 1e-12);
    EXPECT_NEAR(w.z, v.z, 1e-12);
  }
  EXPECT_THROW(density_to_bloch(pauli(Axis::x)), NotDensity);
  EXPECT_THROW(density_to_bloch(identity(3) / 3.0), NotDensity);
}

TEST(Density, Predicates) {
  Rng rng(13);
  EXPECT_TRUE(is_density(rng.density(4)));
  EXPECT_FALSE(is_density(pauli(Axis::z)));
  EXPECT_FALSE(is_density(sigma_plus()));
  Operator neg = Operator::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_FALSE(is_density(neg));
  EXPECT_TRUE(is_hermitian(rng.hermitian(5)));
  EXPECT_FALSE(is_hermitian(Operator::Zero(2, 3)));
}

TEST(Fock, LadderOperators) {
  FockSpace s1{1};
  const auto [a1, ad1] = ladder(s1);
  Operator expect(2, 2);
  expect << 0, 1, 0, 0;
  EXPECT_EQ(a1, expect);
  EXPECT_EQ(ad1, expect.adjoint());

  FockSpace s{12};
  const auto [a, ad] = ladder(s);
  const Operator num = ad * a;
  for (int n = 0; n <= s.n_max; ++n) EXPECT_NEAR(num(n, n).real(), n, 1e-12);
  const Operator comm = a * ad - ad * a;
  for (int i = 0; i <= s.n_max; ++i) {
    for (int j = 0; j <= s.n_max; ++j) {
      const double want = i != j ? 0.0 : (i == s.n_max ? -s.n_max : 1.0);
      EXPECT_NEAR(std::abs(comm(i, j) - want), 0.0, 1e-12);
    }
  }
  const Ket k3 = fock_ket(s, 3);
  EXPECT_LT((a * k3 - std::sqrt(3.0) * fock_ket(s, 2)).norm(), 1e-14);
}

TEST(Fock, Quadratures) {
  FockSpace s{15, 2.5, 1.3};
  const auto [q, p] = quadratures(s);
  EXPECT_TRUE(is_hermitian(q));
  EXPECT_TRUE(is_hermitian(p));
  const Ket vac = fock_ket(s, 0);
  EXPECT_NEAR(std::abs(vac.dot(q * vac)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(vac.dot(p * vac)), 0.0, 1e-15);
  EXPECT_NEAR(vac.dot(q * q * vac).real(), s.hbar / (2.0 * s.omega_f), 1e-14);

  const Operator comm = q * p - p * q;
  EXPECT_NEAR(std::abs(comm(0, 0) - kI * s.hbar), 0.0, 1e-14);
  const Operator dev = comm - kI * s.hbar * identity(s.dim());
  const auto top = s.n_max;
  EXPECT_LT(max_abs(dev.topLeftCorner(top, top)), 1e-13);
  EXPECT_GT(std::abs(dev(top, top)), 1.0);

  const auto [a, ad] = ladder(s);
  EXPECT_LT(max_abs((ad + a) - std::sqrt(2.0 * s.omega_f / s.hbar) * q), 1e-13);
}

TEST(SixLevel, AngularMomentumMatrix) {
  const Operator j = jy_six_level();
  EXPECT_NEAR(std::abs(j(0, 1) - kI * std::sqrt(3.0) / 2.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(j(4, 5) - 0.5 * kI), 0.0, 1e-15);
  EXPECT_TRUE(is_hermitian(j));
  Eigen::SelfAdjointEigenSolver<Operator> es(j);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double want[] = {-1.5, -0.5, -0.5, 0.5, 0.5, 1.5};
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(ev(k), want[k], 1e-12);
  // no coupling between excited and ground blocks
  EXPECT_LT(max_abs(j.block(0, 4, 4, 2)), 1e-15);
}

TEST(SixLevel, JumpOperators) {
  using namespace six_level;
  const auto jumps = sodium_jump_operators();
  ASSERT_EQ(jumps.size(), 3u);
  EXPECT_EQ(jumps[0].label, "0");
  EXPECT_EQ(jumps[1].label, "-");
  EXPECT_EQ(jumps[2].label, "+");
  EXPECT_NEAR(jumps[0].jump(g_m1h, e_m1h).real(), std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(jumps[0].jump(g_p1h, e_p1h).real(), std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(jumps[1].jump(g_p1h, e_m1h).real(), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(jumps[1].jump(g_m1h, e_m3h).real(), 1.0, 1e-15);
  EXPECT_NEAR(jumps[2].jump(g_m1h, e_p1h).real(), 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(jumps[2].jump(g_p1h, e_p3h).real(), 1.0, 1e-15);

  Operator total = Operator::Zero(dim, dim);
  for (const auto& j : jumps) {
    for (int g : {g_m1h, g_p1h}) {
      Ket k = Ket::Zero(dim);
      k(g) = 1.0;
      EXPECT_LT((j.jump * k).norm(), 1e-15);
    }
    total += j.jump.adjoint() * j.jump;
  }
  Operator want = Operator::Zero(dim, dim);
  for (int e = 0; e < 4; ++e) want(e, e) = 1.0;
  EXPECT_LT(max_abs(total - want), 1e-12);
}

TEST(Vectorization, ColumnStacking) {
  Rng rng(14);
  const Operator a = rng.op(3), x = rng.op(3), b = rng.op(3);
  EXPECT_LT((vec(a * x * b) - kron(b.transpose(), a) * vec(x)).norm(), 1e-12);
  EXPECT_EQ(unvec(vec(x), 3), x);
}

// ---------------------------------------------------------------------------
// lindblad
// ---------------------------------------------------------------------------

namespace {

Operator ket_bra(int i, int j, int n = 2) {
  Operator m = Operator::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

std::vector<Dissipator> sample_dissipators() {
  Rng rng(21);
  std::vector<Dissipator> ds;
  ds.push_back(amplitude_damping(0.7));
  ds.push_back(sodium_dissipator(1.0));
  ds.push_back(Dissipator({{rng.op(3), ConstantRate{0.4}, "A"}, {rng.op(3), ConstantRate{1.1}, "B"}}, 3));
  ds.push_back(Dissipator({{pauli(Axis::z), ConstantRate{0.3}, "dephasing"}, {sigma_minus(), ConstantRate{1.0}, "decay"}}, 2));
  return ds;
}

}  // namespace

TEST(Dissipator, ActionOnBasisOperators) {
  const double gamma = 0.8;
  const Dissipator d = amplitude_damping(gamma);
  EXPECT_LT(max_abs(d.apply(ket_bra(0, 0)) - gamma * (ket_bra(1, 1) - ket_bra(0, 0))), 1e-15);
  EXPECT_LT(max_abs(d.apply(0.5 * identity(2)) - 0.5 * gamma * (ket_bra(1, 1) - ket_bra(0, 0))), 1e-15);
  // materialized superoperator agrees with the direct action
  Rng rng(22);
  for (int k = 0; k < 20; ++k) {
    const Operator c = rng.op(2);
    EXPECT_LT(max_abs(unvec(d.superoperator() * vec(c), 2) - d.apply(c)), 1e-14);
  }
}

TEST(Dissipator, TraceAnnihilation) {
  Rng rng(23);
  for (const auto& d : sample_dissipators()) {
    for (int k = 0; k < 50; ++k) EXPECT_LT(std::abs(d.apply(rng.op(d.dim())).trace()), 1e-12);
  }
}

TEST(Dissipator, Validation) {
  EXPECT_THROW(Dissipator({{identity(3), ConstantRate{1.0}, "x"}}, 2), DimensionMismatch);
  EXPECT_THROW(Dissipator({{sigma_minus(), ConstantRate{-1.0}, "x"}}, 2), InvalidChannel);
  EXPECT_THROW(Dissipator({{sigma_minus(), NonMarkovJC{0.0, 1.0}, "x"}}, 2), InvalidChannel);
  EXPECT_THROW(Dissipator({}, 0), DimensionMismatch);
  const Dissipator d = amplitude_damping(1.0);
  EXPECT_THROW(d.evolve(identity(2), -0.1), NegativeTau);
  EXPECT_THROW(d.evolve(identity(3), 0.1), DimensionMismatch);
  EXPECT_THROW((void)nonmarkov_jc_dissipator(1.0, 1.0).superoperator(), InvalidChannel);
}

TEST(Dissipator, EvolveZeroIsIdentity) {
  Rng rng(24);
  for (const auto& d : sample_dissipators()) {
    const Operator c = rng.op(d.dim());
    EXPECT_LT(max_abs(d.evolve(c, 0.0) - c), 1e-15);
  }
}

TEST(TwoLevelChannel, Examples) {
  const Operator half = two_level_damping_apply(ket_bra(0, 0), 1.0, std::log(2.0));
  EXPECT_LT(max_abs(half - 0.5 * identity(2)), 1e-15);
  for (double tau : {0.0, 0.3, 2.0, 9.0}) {
    EXPECT_LT(max_abs(two_level_damping_apply(ket_bra(0, 1), 1.3, tau) - std::exp(-0.65 * tau) * ket_bra(0, 1)), 1e-15);
  }
  Rng rng(25);
  const Operator rho = rng.density(2);
  EXPECT_LT(max_abs(two_level_damping_apply(rho, 1.0, 80.0) - ket_bra(1, 1)), 1e-15);
}

TEST(TwoLevelChannel, MatchesSuperoperatorExponential) {
  Rng rng(26);
  for (double gamma_tau : {0.1, 1.0, 10.0}) {
    const Dissipator d = amplitude_damping(0.5);
    const double tau = gamma_tau / 0.5;
    for (int k = 0; k < 100; ++k) {
      const Operator c = rng.op(2);
      EXPECT_LT(max_abs(d.evolve(c, tau) - two_level_damping_apply(c, 0.5, tau)), 1e-10);
    }
  }
}

TEST(SixLevelChannel, LongTimeSupportOnGroundManifold) {
  Rng rng(27);
  const Dissipator d = sodium_dissipator(1.0);
  for (int k = 0; k < 10; ++k) {
    const Operator rho = rng.density(6);
    const Operator out = d.evolve(rho, 60.0);
    EXPECT_LT(max_abs(out.topRows(4)), 1e-12);
    EXPECT_LT(max_abs(out.leftCols(4)), 1e-12);
    EXPECT_NEAR(std::abs(out.trace() - Complex(1.0)), 0.0, 1e-12);
  }
}

TEST(Properties, TracePreservationDaggerCommutationPositivity) {
  Rng rng(28);
  for (const auto& d : sample_dissipators()) {
    for (double gt : {0.0, 0.1, 1.0, 10.0}) {
      for (int k = 0; k < 100; ++k) {
        const Operator c = rng.op(d.dim());
        const Operator out = d.evolve(c, gt);
        ASSERT_LT(std::abs(out.trace() - c.trace()), 1e-10);
        ASSERT_LT(max_abs(d.evolve(c.adjoint(), gt) - out.adjoint()), 1e-10);
      }
      const Operator rho = d.evolve(rng.density(d.dim()), gt);
      Eigen::SelfAdjointEigenSolver<Operator> es(0.5 * (rho + rho.adjoint()));
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    }
  }
}

TEST(Properties, SemigroupLaw) {
  Rng rng(29);
  for (const auto& d : sample_dissipators()) {
    for (int k = 0; k < 100; ++k) {
      const double t1 = rng.uniform(0.0, 3.0), t2 = rng.uniform(0.0, 3.0);
      const Operator c = rng.op(d.dim());
      ASSERT_LT(max_abs(d.evolve(d.evolve(c, t2), t1) - d.evolve(c, t1 + t2)), 1e-9);
    }
  }
}

TEST(NonMarkov, RateValues) {
  EXPECT_EQ(nonmarkov_gamma(0.0, 1.0, 0.5), 0.0);
  EXPECT_EQ(nonmarkov_gamma(0.0, 1.0, 10.0), 0.0);
  EXPECT_NEAR(nonmarkov_gamma(1.0 / 0.2, 0.2, 200.0), 0.2, 0.01 * 0.2);
  for (double lambda : {0.3, 2.0, 10.0}) {
    const double g0 = 1.0, h = 1e-6;
    const double slope = (nonmarkov_gamma(h, g0, lambda) - nonmarkov_gamma(0.0, g0, lambda)) / h;
    EXPECT_NEAR(slope, g0 * lambda, 1e-4 * g0 * lambda);
    const double curvature = (nonmarkov_gamma(2 * h, g0, lambda) - 2 * nonmarkov_gamma(h, g0, lambda)) / (h * h);
    EXPECT_TRUE(std::isfinite(curvature));
  }
  // critical damping d = 0 is finite and continuous
  const double c = nonmarkov_gamma(1.0, 1.0, 2.0);
  EXPECT_NEAR(c, nonmarkov_gamma(1.0, 1.0, 2.0 + 1e-9), 1e-7);
  EXPECT_THROW(nonmarkov_gamma(1.0, 0.0, 1.0), InvalidChannel);
}

TEST(NonMarkov, AttenuationFactor) {
  EXPECT_EQ(nonmarkov_big_gamma(0.0, 1.0, 0.5), 1.0);
  EXPECT_NEAR(nonmarkov_big_gamma(1.0 / 0.1, 0.1, 100.0), std::exp(-0.5), 0.01 * std::exp(-0.5));
  for (double lambda : {0.2, 0.5, 1.0, 2.0, 10.0}) {
    for (int k = 0; k <= 200; ++k) {
      EXPECT_LE(std::abs(nonmarkov_big_gamma(0.05 * k, 1.0, lambda)), 1.0 + 1e-12);
    }
  }
}

TEST(NonMarkov, CanonicalFormMatchesClosedFormModulus) {
  // alternative closed form written with sqrt(lambda (lambda - 2 g0)), atanh and tanh
  auto alt = [](double tau, double g0, double l) {
    const Complex s = std::sqrt(Complex(l * (l - 2 * g0)));
    const Complex r = std::sqrt(Complex(l - 2 * g0));
    const Complex arg = std::sqrt(Complex(l)) * std::tanh(0.5 * std::sqrt(Complex(l)) * tau * r) / r;
    return std::sqrt(Complex(l - g0) - g0 * std::cosh(tau * s)) / r * std::exp(-0.5 * l * tau + std::atanh(arg));
  };
  for (double lambda : {0.5, 1.0, 10.0, 30.0}) {
    const double g0 = 1.0;
    EXPECT_NEAR(std::abs(std::sqrt(Complex(lambda * lambda - 2 * g0 * lambda)) -
                         std::sqrt(Complex(lambda * (lambda - 2 * g0)))),
                0.0, 1e-14);
    for (double tau : {0.1, 0.7, 1.3, 2.9, 4.1}) {
      const Complex a = alt(tau, g0, lambda);
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) continue;
      EXPECT_NEAR(std::abs(a), std::abs(nonmarkov_big_gamma(tau, g0, lambda)), 1e-9) << lambda << " " << tau;
    }
  }
}

TEST(NonMarkov, PolesOfStrongCouplingRate) {
  const auto poles = nonmarkov_poles(1.0, 0.5, 20.0);
  ASSERT_FALSE(poles.empty());
  EXPECT_NEAR(poles.front(), 4.837, 1e-3);
  for (double p : poles) EXPECT_NEAR(nonmarkov_big_gamma(p, 1.0, 0.5), 0.0, 1e-12);
  EXPECT_TRUE(nonmarkov_poles(1.0, 10.0, 100.0).empty());
  const Dissipator d = nonmarkov_jc_dissipator(1.0, 0.5);
  EXPECT_THROW(d.evolve(identity(2), poles.front()), NoConvergence);
}

TEST(NonMarkov, IntegratedChannelMatchesClosedForm) {
  Rng rng(30);
  for (double lambda : {10.0, 0.5}) {
    const Dissipator d = nonmarkov_jc_dissipator(1.0, lambda);
    std::vector<double> taus;
    for (int k = 0; k <= 50; ++k) taus.push_back(0.1 * k);
    const Operator c = rng.op(2);
    const auto ev = d.evolve_many({c}, taus);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      EXPECT_LT(max_abs(ev[k][0] - nonmarkov_damping_apply(c, 1.0, lambda, taus[k])), 1e-7) << lambda << " " << taus[k];
    }
  }
}

TEST(NonMarkov, ViolatesSemigroupLaw) {
  const Dissipator d = nonmarkov_jc_dissipator(1.0, 1.0);
  const Operator e = ket_bra(0, 0);
  const Operator twice = d.evolve(d.evolve(e, 1.0), 1.0);
  const Operator once = d.evolve(e, 2.0);
  EXPECT_GT(max_abs(twice - once), 1e-2);
  // still trace preserving and dagger commuting
  Rng rng(31);
  const Operator c = rng.op(2);
  EXPECT_LT(std::abs(d.evolve(c, 1.7).trace() - c.trace()), 1e-10);
  EXPECT_LT(max_abs(d.evolve(c.adjoint(), 1.7) - d.evolve(c, 1.7).adjoint()), 1e-10);
}

TEST(SteadyState, UniqueGroundState) {
  const auto space = steady_state(amplitude_damping(1.0));
  EXPECT_EQ(space.rank, 1);
  ASSERT_TRUE(space.unique_state.has_value());
  EXPECT_LT(max_abs(*space.unique_state - ket_bra(1, 1)), 1e-12);
}

TEST(SteadyState, DegenerateSixLevelKeepsCoherences) {
  using namespace six_level;
  const Dissipator d = sodium_dissipator(1.0);
  const auto space = steady_state(d);
  EXPECT_EQ(space.rank, 4);
  EXPECT_FALSE(space.unique_state.has_value());
  // |g1><g2| is a fixed point
  const Operator coh = ket_bra(g_m1h, g_p1h, dim);
  EXPECT_LT((space.projector * vec(coh) - vec(coh)).norm(), 1e-10);
  Rng rng(32);
  for (int k = 0; k < 10; ++k) {
    const Operator c = rng.op(dim);
    const Operator projected = unvec(space.projector * vec(c), dim);
    EXPECT_LT(max_abs(d.evolve(c, 50.0) - projected), 1e-8);
  }
}

TEST(SteadyState, RejectsNonDecayingModes) {
  // no channels: every operator is stationary, kernel is everything
  const Dissipator none({}, 2);
  EXPECT_EQ(steady_state(none).rank, 4);
}
