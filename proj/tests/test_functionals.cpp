#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nlsr/functionals.hpp"
#include "nlsr/groundstate.hpp"
#include "nlsr/modes.hpp"

using namespace nlsr;

namespace {
const ModelParams kParams{4, 2.5, 0.05};
}

TEST(Params, AdmissibilityWindow) {
  EXPECT_NO_THROW((ModelParams{4, 2.5, 0.05}.validate()));
  EXPECT_THROW((ModelParams{4, 3.5, 0.05}.validate()), Error);  // p + 1 = 4.5 > 2^* = 4
  EXPECT_THROW((ModelParams{4, 1.5, 0.05}.validate()), Error);  // p + 1 = 2.5 < 2_* = 3
  EXPECT_THROW((ModelParams{4, 2.5, -1.0}.validate()), Error);
  EXPECT_NO_THROW((ModelParams{3, 3.0, 1.0}.validate()));        // 2_* = 10/3 < 4 < 6
  EXPECT_DOUBLE_EQ((ModelParams{4, 2.5, 1.0}.s_p()), 2.0 - 4.0 / 3.0);
}

TEST(Functionals, GaussianClosedForms) {
  auto g = make_grid(4, 6000, 14.0);
  const double a = 0.7;
  auto u = RadialField::from_function(g, [&](double r) { return a * std::exp(-0.5 * r * r); });
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double p = kParams.p;
  const double l2 = a * a * pi2;
  const double grad = a * a * 2 * pi2;
  const double lp1 = std::pow(a, p + 1) * std::pow(2 * std::numbers::pi / (p + 1), 2);
  const double crit = std::pow(a, 4) * std::pow(2 * std::numbers::pi / 4.0, 2);
  EXPECT_NEAR(mass(u), 0.5 * l2, 1e-6 * l2);
  EXPECT_NEAR(hamiltonian(u, kParams), 0.5 * grad - lp1 / (p + 1) - crit / 4, 1e-4);
  EXPECT_NEAR(K_functional(u, kParams), grad - 4 * (p - 1) / (2 * (p + 1)) * lp1 - crit, 1e-4);
  EXPECT_NEAR(second_moment(u), a * a * 2 * pi2, 1e-6);
  EXPECT_NEAR(S_omega(u, kParams), kParams.omega * mass(u) + hamiltonian(u, kParams), 1e-12);
}

TEST(Functionals, VirialIsDilationDerivativeOfH) {
  auto g = make_grid(4, 4000, 20.0);
  auto u = RadialField::from_function(g, [](double r) { return 1.3 * std::exp(-0.4 * r * r) * (1 + 0.2 * r); });
  const double eps = 1e-3;
  const double dH = (hamiltonian(dilate(u, 1 + eps), kParams) - hamiltonian(dilate(u, 1 - eps), kParams)) / (2 * eps);
  const double K = K_functional(u, kParams);
  EXPECT_NEAR(dH / K, 1.0, 2e-3);
}

TEST(Functionals, DerivedFunctionalsAreConsistent) {
  auto g = make_grid(4, 2000, 15.0);
  auto u = RadialField::from_function(g, [](double r) { return std::exp(-0.3 * r * r); });
  const double S = S_omega(u, kParams), K = K_functional(u, kParams);
  EXPECT_NEAR(J_omega(u, kParams), S - 0.5 * K, 1e-12);
  EXPECT_NEAR(I_omega(u, kParams), S - 2.0 / (4 * 1.5) * K, 1e-12);
  const auto dag = dagger_functionals(u, kParams);
  const auto ddag = ddagger_functionals(u, kParams);
  // H splits into the subcritical part and the critical potential.
  EXPECT_NEAR(dag.H + (ddag.H - ddag.I), hamiltonian(u, kParams), 1e-12);
  EXPECT_NEAR(ddag.I, 0.5 * grad_norm(u) * grad_norm(u), 1e-10);
}

TEST(Functionals, GroundStateSatisfiesStationaryIdentities) {
  const auto gs = solve_phi(kParams, recommended_grid(4, kParams.omega));
  const double grad = grad_norm(gs.profile) * grad_norm(gs.profile);
  const double K = K_functional(gs.profile, kParams);
  EXPECT_LT(std::abs(K) / grad, 1e-5);
  EXPECT_LT(std::abs(N_omega(gs.profile, kParams)) / grad, 1e-8);
  // I and J differ from S by multiples of K, which vanishes at Phi up to the certificate level.
  EXPECT_NEAR(I_omega(gs.profile, kParams), gs.action, 1e-5 * grad);
  EXPECT_NEAR(J_omega(gs.profile, kParams), gs.action, 1e-5 * grad);
}

TEST(Functionals, FirstVariationMatchesCentralDifferences) {
  auto g = make_grid(4, 512, 12.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto u = random_smooth_field(g, rng, 2.0);
    const auto v = random_smooth_field(g, rng, 2.0);
    const double exact = inner_real(first_variation_S(u, kParams), v);
    auto fd = [&](double e) { return (S_omega(u + e * v, kParams) - S_omega(u + (-e) * v, kParams)) / (2 * e); };
    const double e1 = std::abs(fd(1e-2) - exact), e2 = std::abs(fd(5e-3) - exact);
    EXPECT_GE(e1 / e2, 3.5) << "seed " << seed;
    EXPECT_LE(e1 / e2, 4.5) << "seed " << seed;
  }
}

TEST(Functionals, NonlinearPotential) {
  EXPECT_NEAR(nonlinear_potential(2.0, kParams), std::pow(2.0, 1.5) + 4.0, 1e-12);
  EXPECT_EQ(nonlinear_potential(0.0, kParams), 0.0);
}
