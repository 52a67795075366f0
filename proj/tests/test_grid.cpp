#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nlsr/grid.hpp"
#include "oracles.hpp"

using namespace nlsr;

TEST(RadialGrid, RejectsBadParameters) {
  EXPECT_THROW(RadialGrid(2, 100, 10.0), Error);
  EXPECT_THROW(RadialGrid(4, 2, 10.0), Error);
  EXPECT_THROW(RadialGrid(4, 100, -1.0), Error);
  try {
    RadialGrid(2, 100, 10.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(RadialGrid, CellCentredNodesAndSphereArea) {
  auto g = make_grid(4, 1000, 10.0);
  EXPECT_DOUBLE_EQ(g->spacing(), 0.01);
  EXPECT_DOUBLE_EQ(g->r(0), 0.005);
  EXPECT_NEAR(g->sphere_area(), 2.0 * std::numbers::pi * std::numbers::pi, 1e-12);
  auto g3 = make_grid(3, 10, 1.0);
  EXPECT_NEAR(g3->sphere_area(), 4.0 * std::numbers::pi, 1e-12);
}

TEST(RadialGrid, WeightsIntegratePowersToSecondOrder) {
  // int_{B_R} |x|^2 dx = area R^{d+2} / (d+2).
  for (int d : {3, 4, 5}) {
    double prev = 0.0;
    for (std::size_t n : {200, 400, 800}) {
      auto g = make_grid(d, n, 3.0);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += g->w(i) * g->r(i) * g->r(i);
      const double exact = g->sphere_area() * std::pow(3.0, d + 2) / (d + 2);
      const double err = std::abs(s - exact) / exact;
      if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.3) << "d = " << d << ", n = " << n;
      prev = err;
    }
  }
}

TEST(RadialGrid, QuadratureMatchesAdaptiveOracle) {
  // int_{R^4} (1+|x|^2)^{-4} dx = |S^3| int r^3 (1+r^2)^{-4} dr = |S^3| / 12.
  auto g = make_grid(4, 8192, 60.0);
  std::vector<double> u(g->size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 1.0 / std::pow(1.0 + g->r(i) * g->r(i), 2);
  const double grid_value = dot(*g, u, u);
  const double radial = oracle::integrate_half_line([](double r) { return r * r * r * std::pow(1 + r * r, -4); });
  EXPECT_NEAR(radial, 1.0 / 12.0, 1e-12);
  EXPECT_NEAR(grid_value / (oracle::sphere_area(4) * radial), 1.0, 1e-5);
}

TEST(RadialGrid, GaussianLaplacianConvergesAtSecondOrder) {
  // Lap e^{-r^2} = (4 r^2 - 2d) e^{-r^2}.
  const int d = 4;
  std::vector<double> errs;
  for (std::size_t n : {400, 800, 1600}) {
    auto g = make_grid(d, n, 8.0);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = std::exp(-g->r(i) * g->r(i));
    const auto lap = laplacian<double>(*g, u);
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = g->r(i);
      diff[i] = lap[i] - (4 * r * r - 2 * d) * std::exp(-r * r);
    }
    errs.push_back(std::sqrt(dot(*g, diff, diff)));
  }
  EXPECT_NEAR(errs[0] / errs[1], 4.0, 0.5);
  EXPECT_NEAR(errs[1] / errs[2], 4.0, 0.5);
}

TEST(RadialGrid, LaplacianIsSymmetricAndMatchesEnergy) {
  auto g = make_grid(4, 300, 6.0);
  std::vector<double> u(300), v(300);
  for (std::size_t i = 0; i < 300; ++i) {
    const double r = g->r(i);
    u[i] = std::exp(-r * r / 3) * (1 + r);
    v[i] = std::cos(r) * std::exp(-r / 2);
  }
  const auto lu = laplacian<double>(*g, u);
  const auto lv = laplacian<double>(*g, v);
  EXPECT_NEAR(dot(*g, lu, v), dot(*g, u, lv), 1e-10 * std::abs(dot(*g, lu, v)));
  EXPECT_NEAR(-dot(*g, lu, u), grad_norm_sq<double>(*g, u), 1e-10 * grad_norm_sq<double>(*g, u));
  EXPECT_NEAR(-dot(*g, lu, v), grad_inner<double>(*g, u, v), 1e-10 * std::abs(grad_inner<double>(*g, u, v)));
}

TEST(RadialGrid, GaussianMomentsMatchClosedForms) {
  // In R^4: int e^{-r^2} = pi^2, int r^2 e^{-r^2} = 2 pi^2, int |grad e^{-r^2/2}|^2 = 2 pi^2.
  auto g = make_grid(4, 4000, 12.0);
  auto f = RadialField::from_function(g, [](double r) { return std::exp(-0.5 * r * r); });
  const double pi2 = std::numbers::pi * std::numbers::pi;
  EXPECT_NEAR(norm_L2(f) * norm_L2(f), pi2, 1e-6 * pi2);
  EXPECT_NEAR(grad_norm(f) * grad_norm(f), 2 * pi2, 1e-4 * pi2);
  // ||u||_q^q = (2 pi / q)^2.
  EXPECT_NEAR(lq_power(*g, f.values(), 3.5), std::pow(2 * std::numbers::pi / 3.5, 2), 1e-6);
}

TEST(RadialGrid, InterpolationIsExactForCubics) {
  auto g = make_grid(4, 200, 10.0);
  auto f = RadialField::from_function(g, [](double r) { return 1 + 2 * r - r * r + 0.1 * r * r * r; });
  for (double r : {0.77, 3.14159, 5.5, 8.123}) {
    EXPECT_NEAR(interpolate(f, r).real(), 1 + 2 * r - r * r + 0.1 * r * r * r, 1e-9);
  }
  EXPECT_EQ(interpolate(f, 11.0), Complex(0.0, 0.0));
}

TEST(RadialGrid, ScalingOperatorInvertsAndScalesMass) {
  const double p = 2.5, w = 0.3;
  auto g = make_grid(4, 4000, 40.0);
  auto f = RadialField::from_function(g, [](double r) { return std::exp(-0.5 * r * r); });
  const auto tf = scale_T_omega(f, w, p);
  // ||T f||^2 = w^{-2/(p-1)} w^{d/2} ||f||^2.
  const double expect = std::pow(w, -2.0 / (p - 1.0) + 2.0) * std::pow(norm_L2(f), 2);
  EXPECT_NEAR(std::pow(norm_L2(tf), 2) / expect, 1.0, 1e-6);
  const auto back = scale_T_omega(tf, 1.0 / w, p);
  EXPECT_LT(norm_H1(back - f) / norm_H1(f), 1e-5);
  const auto same = scale_T_omega(f, 1.0, p);
  EXPECT_EQ(norm_L2(same - f), 0.0);
}

TEST(RadialField, RealFlagAndGridChecks) {
  auto g = make_grid(4, 50, 5.0);
  auto h = make_grid(4, 60, 5.0);
  auto f = RadialField::from_function(g, [](double r) { return r; });
  EXPECT_TRUE(f.is_real());
  EXPECT_FALSE((Complex(0, 1) * f).is_real());
  auto k = RadialField::from_function(h, [](double r) { return r; });
  EXPECT_THROW(f + k, Error);
  EXPECT_THROW(inner(f, k), Error);
  std::vector<double> short_values(10, 1.0);
  EXPECT_THROW(RadialField::from_real(g, short_values), Error);
}

TEST(RadialField, SymplecticFormIsImaginaryPartOfInner) {
  auto g = make_grid(4, 100, 5.0);
  auto f = RadialField::from_function(g, [](double r) { return std::exp(-r); });
  const auto if_ = Complex(0, 1) * f;
  // (u, v) conjugates its second slot, so Omega(i f, f) = ||f||^2.
  EXPECT_NEAR(omega_form(if_, f), norm_L2(f) * norm_L2(f), 1e-12);
  EXPECT_NEAR(omega_form(f, if_), -norm_L2(f) * norm_L2(f), 1e-12);
  EXPECT_NEAR(omega_form(f, f), 0.0, 1e-14);
}
