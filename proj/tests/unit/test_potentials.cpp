#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mfnls/potentials.hpp"
#include "mfnls/spectral.hpp"

using namespace mfnls;
using std::numbers::pi;

namespace {

// 2 pi int_0^R f(r) r dr by composite Simpson.
template <class F>
double radial_integral(F f, double radius, int n = 20000) {
  const double h = radius / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * f(r) * r;
  }
  return 2 * pi * s * h / 3.0;
}

}  // namespace

TEST(PairPotential, AnalyticIntegrals) {
  const auto disk = PairPotentialSpec::disk(-2.0, 1.5);
  EXPECT_NEAR(disk.integral(), -2.0 * pi * 2.25, 1e-12);
  EXPECT_NEAR(disk.negative_integral(), 2.0 * pi * 2.25, 1e-12);

  const auto bump = PairPotentialSpec::bump(3.0, 2.0);
  const double oracle =
      radial_integral([](double r) { return r >= 2.0 ? 0.0 : 3.0 * std::exp(1.0 - 1.0 / (1.0 - r * r / 4.0)); }, 2.0);
  EXPECT_NEAR(bump.integral(), oracle, 1e-9);
  EXPECT_DOUBLE_EQ(bump.profile(0.0), 3.0);
  EXPECT_EQ(bump.profile(2.5), 0.0);

  const auto cone = PairPotentialSpec::table({{0.0, 4.0}, {1.0, 0.0}});
  EXPECT_NEAR(cone.integral(), 4.0 * pi / 3.0, 1e-12);
  EXPECT_NEAR(cone.profile(0.25), 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(cone.support_radius(), 1.0);

  // Negative on [0, 1/2] where W = 2r - 1.
  const auto signed_table = PairPotentialSpec::table({{0.0, -1.0}, {1.0, 1.0}, {2.0, 0.0}});
  EXPECT_NEAR(signed_table.negative_integral(), pi / 12, 1e-9);
  EXPECT_THROW(PairPotentialSpec::table({{0.0, 1.0}, {1.0, 1.0}, {1.0, 0.0}}), ValidationError);
}

TEST(PairPotential, DiskRectangleOverlap) {
  EXPECT_NEAR(disk_rectangle_overlap(-2, 2, -2, 2, 1.0), pi, 1e-12);
  EXPECT_NEAR(disk_rectangle_overlap(0, 2, 0, 2, 1.0), pi / 4, 1e-12);
  EXPECT_NEAR(disk_rectangle_overlap(-0.1, 0.1, -0.2, 0.2, 1.0), 0.08, 1e-15);
  EXPECT_NEAR(disk_rectangle_overlap(1.5, 2, 1.5, 2, 1.0), 0.0, 1e-15);
  // Half-plane strip x in [0, 1]: half the disk.
  EXPECT_NEAR(disk_rectangle_overlap(0, 1, -1, 1, 1.0), pi / 2, 1e-12);
}

TEST(PairPotential, DiskGridIntegralIsExact) {
  const GridSpec g = make_grid(8.0, 32);
  const auto disk = PairPotentialSpec::disk(1.0, 1.3);
  const Field2D f = realize_radial(g, disk, 1.0, 1.0, disk.integral());
  EXPECT_NEAR(integral(f).real(), disk.integral(), 1e-12);
}

TEST(PairPotential, ScalingLaw) {
  const GridSpec g = make_grid(8.0, 64);
  const auto w = PairPotentialSpec::bump(-2.0, 2.0);
  const std::size_t n = 16;
  const double beta = 0.25;
  const ScaledPair s = scale_pair_potential(w, n, beta, g);
  EXPECT_NEAR(s.peak_amplitude, std::pow(16.0, -1.0 + 0.5) * -2.0, 1e-14);
  EXPECT_NEAR(s.support_radius, 2.0 / 2.0, 1e-14);
  EXPECT_NEAR(s.grid_integral, w.integral() / n, 1e-10);
  EXPECT_NEAR(integral(s.field).real(), w.integral() / n, 1e-10);
  EXPECT_NEAR(s.at_displacement(0, 0), s.field(32, 32).real(), 1e-15);
  EXPECT_NEAR(s.at_displacement(1, 63), s.field(33, 31).real(), 1e-15);
}

TEST(PairPotential, UnderResolvedRadiusRejected) {
  const GridSpec g = make_grid(8.0, 12);
  EXPECT_THROW(scale_pair_potential(PairPotentialSpec::bump(1.0, 0.5), 64, 0.9, g), ValidationError);
}

TEST(PairPotential, PeriodicConvolutionMatchesDirectSum) {
  const GridSpec g = make_grid(4.0, 8);
  const std::size_t m = 8;
  std::vector<double> w(m * m);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(0.37 * static_cast<double>(i)) + 0.1;
  Field2D rho(g);
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = cplx(std::cos(0.11 * static_cast<double>(i * i)), 0.2);
  const Field2D conv = periodic_convolution(w, rho);
  for (std::size_t ix = 0; ix < m; ++ix)
    for (std::size_t iy = 0; iy < m; ++iy) {
      cplx s = 0.0;
      for (std::size_t jx = 0; jx < m; ++jx)
        for (std::size_t jy = 0; jy < m; ++jy)
          s += w[((ix + m - jx) % m) * m + (iy + m - jy) % m] * rho(jx, jy);
      EXPECT_NEAR(std::abs(conv(ix, iy) - s * g.cell_area()), 0.0, 1e-12);
    }
}

TEST(PairPotential, SmearedPotentialSolvesPoisson) {
  const GridSpec g = make_grid(4.0, 128);
  const ScaledPair s = scale_pair_potential(PairPotentialSpec::bump(1.0, 0.5), 16, 0.5, g);
  const SmearedPotential h = build_smeared(s, 0.25);
  EXPECT_NEAR(integral(h.reference).real(), integral(s.field).real(), 1e-12);
  Field2D lap = apply_laplacian(h.smeared) * cplx(-1.0);
  const Field2D src = s.field - h.reference;
  double worst = 0.0;
  for (std::size_t i = 0; i < lap.size(); ++i) worst = std::max(worst, std::abs(lap[i] - src[i]));
  EXPECT_LT(worst / sup_norm(src), 1e-10);
  EXPECT_NEAR(h.h_l2, norm(h.smeared), 1e-14);
}

TEST(ExternalPotential, Families) {
  const GridSpec g = make_grid(8.0, 16);
  ExternalPotentialSpec a;
  EXPECT_EQ(sup_norm(evaluate_external(a, 0.0, g)), 0.0);
  a.family = ExternalFamily::harmonic;
  EXPECT_NEAR(evaluate_external(a, 0.0, g)(0, 8).real(), 16.0, 1e-14);
  a.time_dependence = TimeDependence::ramp;
  a.rate = 0.5;
  EXPECT_FALSE(a.is_static());
  EXPECT_NEAR(evaluate_external(a, 2.0, g)(0, 8).real(), 32.0, 1e-13);

  ExternalPotentialSpec p;
  p.family = ExternalFamily::power;
  p.coefficient = 2.0;
  p.exponent = 3.0;
  EXPECT_NEAR(evaluate_external(p, 0.0, g)(12, 12).real(), 2.0 * std::pow(std::sqrt(8.0), 3.0), 1e-12);
  p.coefficient = -1.0;
  EXPECT_THROW(evaluate_external(p, 0.0, g), ValidationError);
}

TEST(ExternalPotential, TableInterpolatesInTime) {
  const GridSpec g = make_grid(8.0, 8);
  ExternalPotentialSpec a;
  a.family = ExternalFamily::table;
  a.snapshots.emplace_back(0.0, Field2D(g, std::vector<cplx>(g.nodes(), 1.0)));
  a.snapshots.emplace_back(2.0, Field2D(g, std::vector<cplx>(g.nodes(), -3.0)));
  EXPECT_NEAR(evaluate_external(a, 0.5, g)[5].real(), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(a.negative_part_bound(), 3.0);
  EXPECT_THROW(evaluate_external(a, 2.5, g), ValidationError);
}

TEST(GagliardoNirenberg, GaussianRatio) {
  // ||grad u||^2 = ||u||^2 = pi, ||u||_4^4 = pi/2 for exp(-|x|^2/2).
  const GridSpec g = make_grid(16.0, 64);
  const Field2D u = Field2D::from_function(g, [](double x, double y) { return cplx(std::exp(-(x * x + y * y) / 2)); });
  EXPECT_NEAR(gn_ratio(u), 4 * pi, 1e-10);
  EXPECT_NEAR(gn_ratio(u * cplx(3.0, -1.0)), 4 * pi, 1e-10);
  EXPECT_THROW(gn_ratio(Field2D(g)), ValidationError);
}

TEST(Stability, TrialEstimate) {
  const GridSpec g = make_grid(16.0, 64);
  const auto trials = gaussian_trials(g, {0.5, 1.0, 2.0});
  ASSERT_EQ(trials.size(), 3u);
  const StabilityEstimate pos = stability_ratio_estimate(PairPotentialSpec::disk(1.0, 0.5), trials);
  EXPECT_GT(pos.value, 0.0);
  EXPECT_TRUE(pos.is_upper_bound);
  const StabilityEstimate neg = stability_ratio_estimate(PairPotentialSpec::disk(-1.0, 0.5), trials);
  EXPECT_LT(neg.value, 0.0);
  EXPECT_LT(neg.best_trial, 3u);
}
