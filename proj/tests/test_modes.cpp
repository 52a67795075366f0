#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "nlsr/modes.hpp"

using namespace nlsr;

namespace {

struct Modes : ::testing::Test {
  static void SetUpTestSuite() {
    gs = std::make_unique<GroundState>(solve_phi({4, 2.5, 0.05}, recommended_grid(4, 0.05)));
    sd = std::make_unique<SpectralData>(solve_mu(LinearizedOperators(*gs), *gs));
    frame = std::make_unique<OrbitFrame>(*gs, *sd);
  }
  static void TearDownTestSuite() {
    frame.reset();
    sd.reset();
    gs.reset();
  }
  static std::unique_ptr<GroundState> gs;
  static std::unique_ptr<SpectralData> sd;
  static std::unique_ptr<OrbitFrame> frame;

  static RadialField gamma_direction(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return project_to_Gamma(random_smooth_field(gs->grid_ptr(), rng, 3.0), *frame);
  }
};
std::unique_ptr<GroundState> Modes::gs;
std::unique_ptr<SpectralData> Modes::sd;
std::unique_ptr<OrbitFrame> Modes::frame;

}  // namespace

TEST(Cutoff, SmoothStepProfile) {
  EXPECT_EQ(cutoff_chi(0.5), 1.0);
  EXPECT_EQ(cutoff_chi(1.0), 1.0);
  EXPECT_EQ(cutoff_chi(2.0), 0.0);
  EXPECT_EQ(cutoff_chi(3.0), 0.0);
  EXPECT_NEAR(cutoff_chi(1.5), 0.5, 1e-12);
  for (double x = 1.0; x < 2.0; x += 0.01) EXPECT_GE(cutoff_chi(x), cutoff_chi(x + 0.01));
  EXPECT_EQ(smooth_ramp(0.0), 0.0);
  EXPECT_EQ(smooth_ramp(1.0), 1.0);
}

TEST_F(Modes, GroundStateHasZeroCoordinates) {
  const auto c = measure(gs->profile, *frame, DistanceConfig{0.0157});
  EXPECT_NEAR(c.theta, 0.0, 1e-14);
  EXPECT_NEAR(c.lambda_plus, 0.0, 1e-12);
  EXPECT_NEAR(c.lambda_minus, 0.0, 1e-12);
  EXPECT_NEAR(c.b, 0.0, 1e-12);
  EXPECT_NEAR(c.d_omega, 0.0, 1e-8);
  EXPECT_NEAR(c.d_tilde, 0.0, 1e-8);
}

TEST_F(Modes, DecompositionRecoversCoordinates) {
  const double a = 2e-3, b = -1e-3;
  const auto gamma = 1e-3 * gamma_direction(7);
  const auto eta = a * frame->U_plus() + b * frame->U_minus() + gamma;
  const auto c = decompose(gs->profile + eta, *frame);
  EXPECT_NEAR(c.theta, 0.0, 1e-12);
  EXPECT_NEAR(c.lambda_plus, a, 1e-10);
  EXPECT_NEAR(c.lambda_minus, b, 1e-10);
  EXPECT_NEAR(c.b, 0.0, 1e-10);
  EXPECT_LT(norm_H1(c.Gamma - gamma), 1e-9);
}

TEST_F(Modes, GammaSatisfiesSymplecticOrthogonality) {
  const auto g = gamma_direction(3);
  const double scale = norm_L2(g);
  EXPECT_NEAR(omega_form(g, frame->U_plus()), 0.0, 1e-10 * scale);
  EXPECT_NEAR(omega_form(g, frame->U_minus()), 0.0, 1e-10 * scale);
  EXPECT_NEAR(omega_form(g, gs->omega_derivative), 0.0, 1e-10 * scale * norm_L2(gs->omega_derivative));
  EXPECT_NEAR(inner_real(g, gs->profile), 0.0, 1e-10 * scale * norm_L2(gs->profile));
  // <L Gamma, Gamma> is non-negative on the constrained subspace.
  EXPECT_GT(linearized_form(frame->operators(), g), 0.0);
}

TEST_F(Modes, GaugeEquivariance) {
  const auto psi = gs->profile + 3e-3 * frame->U_plus() + 1e-3 * gamma_direction(11);
  const auto c0 = decompose(psi, *frame);
  for (double t : {0.4, -1.3, 2.9}) {
    const auto c = decompose(std::polar(1.0, t) * psi, *frame);
    double dt = c.theta - c0.theta - t;
    dt = std::remainder(dt, 2.0 * std::numbers::pi);
    EXPECT_NEAR(dt, 0.0, 1e-12);
    EXPECT_NEAR(c.lambda_plus, c0.lambda_plus, 1e-12);
    EXPECT_NEAR(c.lambda_minus, c0.lambda_minus, 1e-12);
    EXPECT_NEAR(c.b, c0.b, 1e-12);
  }
}

TEST_F(Modes, DegenerateGaugeIsReported) {
  auto g = gs->grid_ptr();
  const RadialField zero(g);
  EXPECT_THROW(gauge_theta(zero, *gs), Error);
  const auto m = measure(zero, *frame, DistanceConfig{0.0157});
  EXPECT_TRUE(std::isnan(m.d_omega));
  EXPECT_GT(m.d_tilde, 0.0);
}

TEST_F(Modes, CubicRemainderOnMassSphere) {
  // On the mass sphere, C_omega is cubic in the perturbation: |C| / E^2 halves with the amplitude.
  const double M0 = mass(gs->profile);
  const auto dir = frame->U_plus() + 0.5 * gamma_direction(5);
  auto ratio = [&](double s) {
    const auto psi = onto_mass_sphere(gs->profile + s * dir, M0);
    auto c = decompose(psi, *frame);
    distance_d(c, psi, *frame, DistanceConfig{});
    return std::abs(c.C_omega) / (c.energy_norm * c.energy_norm);
  };
  const double r1 = ratio(2e-2), r2 = ratio(1e-2), r3 = ratio(5e-3);
  EXPECT_NEAR(r1 / r2, 2.0, 0.3);
  EXPECT_NEAR(r2 / r3, 2.0, 0.3);
}

TEST_F(Modes, CalibrationMeetsTargetRatio) {
  const auto cal = calibrate_delta_E(*frame, 0);
  EXPECT_GT(cal.delta_E, 0.0);
  for (const auto& s : cal.samples) {
    if (s.energy_norm <= 4.0 * cal.delta_E) EXPECT_LE(s.ratio, cal.target_ratio) << "direction " << s.direction;
  }
  // Deterministic for a fixed seed.
  EXPECT_EQ(calibrate_delta_E(*frame, 0).delta_E, cal.delta_E);
}

TEST_F(Modes, DistancesCompareWithOrbitDistance) {
  const DistanceConfig cfg{0.0157};
  const auto psi =
      onto_mass_sphere(gs->profile + (2e-3 / norm_H1(frame->U_plus())) * frame->U_plus(), mass(gs->profile));
  const auto c = measure(psi, *frame, cfg);
  EXPECT_GT(c.d_omega, 0.0);
  ASSERT_LT(c.d_omega, cfg.delta_E);
  EXPECT_EQ(c.d_tilde, c.d_omega);  // below delta_E no blending
  const double far = blend_dtilde(10.0 * cfg.delta_E, 0.5, cfg);
  EXPECT_EQ(far, 0.5);
}
