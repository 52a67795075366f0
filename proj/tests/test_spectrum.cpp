#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "nlsr/spectrum.hpp"

using namespace nlsr;

namespace {

struct Spectral : ::testing::Test {
  static void SetUpTestSuite() {
    gs = std::make_unique<GroundState>(solve_phi({4, 2.5, 0.05}, recommended_grid(4, 0.05)));
    ops = std::make_unique<LinearizedOperators>(*gs);
    sd = std::make_unique<SpectralData>(solve_mu(*ops, *gs));
  }
  static void TearDownTestSuite() {
    sd.reset();
    ops.reset();
    gs.reset();
  }
  static std::unique_ptr<GroundState> gs;
  static std::unique_ptr<LinearizedOperators> ops;
  static std::unique_ptr<SpectralData> sd;
};
std::unique_ptr<GroundState> Spectral::gs;
std::unique_ptr<LinearizedOperators> Spectral::ops;
std::unique_ptr<SpectralData> Spectral::sd;

}  // namespace

TEST_F(Spectral, CertificateHolds) {
  EXPECT_LT(sd->nu, 0.0);
  EXPECT_NEAR(sd->mu * sd->mu, -sd->nu, 1e-12 * std::abs(sd->nu));
  EXPECT_LT(sd->residual_plus, 1e-4);
  EXPECT_LT(sd->residual_minus, 1e-4);
  EXPECT_NEAR(sd->normalization, 1.0, 1e-6);
  EXPECT_LT(sd->orth_phi_f1, 1e-6);
  EXPECT_LT(sd->orth_phiprime_f2, 1e-6);
  EXPECT_LT(sd->phi_f2, 0.0);
}

TEST_F(Spectral, EigenRelationsHoldPointwise) {
  // L_+ f1 = -mu f2 and L_- f2 = mu f1.
  const auto f1 = sd->f1.real_part(), f2 = sd->f2.real_part();
  auto a = ops->apply_plus(f1);
  auto b = ops->apply_minus(f2);
  const auto& g = gs->grid();
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] += sd->mu * f2[i];
    b[i] -= sd->mu * f1[i];
  }
  EXPECT_LT(std::sqrt(dot(g, a, a)) / (sd->mu * std::sqrt(dot(g, f2, f2))), 1e-8);
  EXPECT_LT(std::sqrt(dot(g, b, b)) / (sd->mu * std::sqrt(dot(g, f1, f1))), 1e-8);
}

TEST_F(Spectral, RayleighQuotientOfMinimizerIsNu) {
  EXPECT_NEAR(rayleigh_quotient(*ops, sd->minimizer.real_part()) / sd->nu, 1.0, 1e-8);
  // Any other admissible direction gives a larger quotient.
  std::vector<double> trial(gs->grid().size());
  for (std::size_t i = 0; i < trial.size(); ++i) {
    const double r = gs->grid().r(i);
    trial[i] = std::exp(-0.05 * r * r) * (1 - 0.1 * r);
  }
  EXPECT_GT(rayleigh_quotient(*ops, trial), sd->nu);
}

TEST_F(Spectral, OperatorCensus) {
  const auto c = operator_census(*ops, *gs);
  EXPECT_EQ(c.L_plus_negative, 1u);
  EXPECT_EQ(c.L_plus_near_zero, 0u);
  EXPECT_EQ(c.L_minus_negative, 0u);
  EXPECT_GT(c.L_minus_second, 0.0);
  EXPECT_LT(c.L_minus_kernel_residual, 1e-5);
  EXPECT_LT(c.L_plus_identity_residual, 1e-5);
}

TEST_F(Spectral, ModesAreConjugatePair) {
  const auto up = sd->U_plus(), um = sd->U_minus();
  EXPECT_EQ(norm_L2(um - up.conj()), 0.0);
  // Omega(U_+, U_-) fixes the normalization of the mode coordinates.
  EXPECT_NEAR(std::abs(omega_form(up, um)), 1.0, 1e-6);
  EXPECT_TRUE(std::isfinite(mode_overlap_ratio(*sd, *gs)));
  EXPECT_GT(mode_overlap_ratio(*sd, *gs), 0.0);
}

TEST(SpectrumOracle, DenseEigenvaluesAgreeOnCoarseGrid) {
  // Independent check: the most negative eigenvalue of the dense product L_- L_+ is -mu^2.
  const ModelParams mp{4, 2.5, 0.2};
  auto g = make_grid(4, 600, 24.0);
  const auto gs = solve_phi(mp, g);
  const LinearizedOperators ops(gs);
  const auto sd = solve_mu(ops, gs);
  const std::size_t n = g->size();
  Eigen::MatrixXd Lp(n, n), Lm(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto cp = ops.apply_plus(e), cm = ops.apply_minus(e);
    for (std::size_t i = 0; i < n; ++i) {
      Lp(i, j) = cp[i];
      Lm(i, j) = cm[i];
    }
    e[j] = 0.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(Lm * Lp);
  double lowest = 1e300;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const auto z = es.eigenvalues()[k];
    if (std::abs(z.imag()) < 1e-8 * std::abs(z.real()) + 1e-12) lowest = std::min(lowest, z.real());
  }
  EXPECT_LT(lowest, 0.0);
  EXPECT_NEAR(lowest / sd.nu, 1.0, 1e-8);
}

TEST(SubcriticalSpectrum, ProjectedModeValueIsFinite) {
  auto g = make_grid(4, 4096, 16.0);
  const auto U = solve_U(4, 2.5, g);
  const auto v = pi_U_prime_rayleigh(U);
  EXPECT_TRUE(std::isfinite(v.rayleigh));
  EXPECT_LT(v.overlap, 1e-3);
}
