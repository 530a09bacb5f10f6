#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfnls/fft.hpp"
#include "mfnls/spectral.hpp"

using namespace mfnls;
using std::numbers::pi;

namespace {

Field2D gauss(const GridSpec& g, double s = 1.0) {
  return Field2D::from_function(g, [s](double x, double y) { return cplx(std::exp(-(x * x + y * y) / (2 * s * s))); });
}

double max_diff(const Field2D& a, const Field2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(make_grid(8.0, 7), ValidationError);
  EXPECT_THROW(make_grid(8.0, 6), ValidationError);
  EXPECT_THROW(make_grid(-1.0, 16), ValidationError);
  EXPECT_THROW(make_grid(std::nan(""), 16), ValidationError);
  EXPECT_NO_THROW(make_grid(8.0, 12));
}

TEST(Grid, CoordinatesAndWavenumbers) {
  const GridSpec g = make_grid(8.0, 16);
  EXPECT_DOUBLE_EQ(g.coordinate(0), -4.0);
  EXPECT_DOUBLE_EQ(g.coordinate(8), 0.0);
  EXPECT_EQ(g.index_of(g.coordinate(5)), 5u);
  const double k0 = 2 * pi / 8.0;
  EXPECT_DOUBLE_EQ(g.wavenumber(1), k0);
  EXPECT_DOUBLE_EQ(g.wavenumber(7), 7 * k0);
  EXPECT_DOUBLE_EQ(g.wavenumber(8), -8 * k0);
  EXPECT_DOUBLE_EQ(g.wavenumber(15), -k0);
  EXPECT_TRUE(g.is_nyquist(8));
  EXPECT_EQ(g.flat(2, 3), 2u * 16 + 3);
}

TEST(Spectral, RoundTripAndParseval) {
  const GridSpec g = make_grid(6.0, 24);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  Field2D f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = cplx(d(rng), d(rng));
  const Field2D hat = to_frequency(f);
  EXPECT_EQ(hat.space(), Space::frequency);
  EXPECT_LT(max_diff(to_position(hat), f), 1e-13);
  EXPECT_NEAR(norm_sq(hat), norm_sq(f), 1e-12 * norm_sq(f));
}

TEST(Spectral, FrequencyLayoutIsXSlow) {
  const GridSpec g = make_grid(8.0, 16);
  const double k = 2 * pi / 8.0;
  const Field2D wave = Field2D::from_function(g, [k](double x, double) { return std::polar(1.0, 2 * k * x); });
  const Field2D hat = to_frequency(wave);
  EXPECT_GT(std::abs(hat(2, 0)), 1.0);
  EXPECT_LT(std::abs(hat(0, 2)), 1e-12);
}

TEST(Spectral, LaplacianAndGradientOfPlaneWaves) {
  const GridSpec g = make_grid(8.0, 16);
  const double kx = 2 * pi / 8.0 * 3, ky = -2 * pi / 8.0 * 2;
  const Field2D w = Field2D::from_function(g, [&](double x, double y) { return std::polar(1.0, kx * x + ky * y); });
  EXPECT_LT(max_diff(apply_laplacian(w), w * cplx(kx * kx + ky * ky)), 1e-11);
  const auto [dx, dy] = gradient(w);
  EXPECT_LT(max_diff(dx, w * cplx(0, kx)), 1e-11);
  EXPECT_LT(max_diff(dy, w * cplx(0, ky)), 1e-11);
}

TEST(Spectral, NyquistDroppedFromGradientOnly) {
  const GridSpec g = make_grid(8.0, 16);
  const double kn = pi / g.spacing();
  const Field2D w = Field2D::from_function(g, [kn](double x, double) { return cplx(std::cos(kn * x)); });
  const auto [dx, dy] = gradient(w);
  EXPECT_LT(sup_norm(dx), 1e-12);
  EXPECT_LT(max_diff(apply_laplacian(w), w * cplx(kn * kn)), 1e-9);
}

TEST(Spectral, PoissonSolveOfCosine) {
  const GridSpec g = make_grid(2 * pi, 32);
  const Field2D rhs = Field2D::from_function(g, [](double x, double y) { return cplx(std::cos(x) * std::cos(2 * y)); });
  const Field2D h = poisson_solve_zero_mean(rhs);
  // Laplacian(cos x cos 2y) = -5 cos x cos 2y.
  EXPECT_LT(max_diff(h, rhs * cplx(-0.2)), 1e-13);
  const Field2D shifted = Field2D::from_function(g, [](double x, double) { return cplx(1.0 + std::cos(x)); });
  EXPECT_THROW(poisson_solve_zero_mean(shifted), ValidationError);
}

TEST(Spectral, GaussianQuadratures) {
  const GridSpec g = make_grid(16.0, 64);
  const Field2D f = gauss(g);
  EXPECT_NEAR(norm_sq(f), pi, 1e-12);
  EXPECT_NEAR(integral(f).real(), 2 * pi, 1e-12);
  EXPECT_NEAR(std::pow(lp_norm(f, 4.0), 4.0), pi / 2, 1e-12);
  EXPECT_NEAR(gradient_norm_sq(f), pi, 1e-11);
  EXPECT_NEAR(sup_norm(f), 1.0, 1e-15);
  EXPECT_NEAR(inner(f, f * cplx(0, 1)).imag(), pi, 1e-12);
  EXPECT_LT(boundary_max(f), 1e-13);
  EXPECT_NO_THROW(require_decayed(f));
  EXPECT_THROW(require_decayed(gauss(g, 3.0)), ValidationError);
}

TEST(Spectral, SobolevMultiplierOnPlaneWave) {
  const GridSpec g = make_grid(8.0, 16);
  const double k = 2 * pi / 8.0 * 2;
  const Field2D w = Field2D::from_function(g, [k](double, double y) { return std::polar(1.0, k * y); });
  EXPECT_LT(max_diff(sobolev_multiplier(w), w * cplx(std::sqrt(1 + k * k))), 1e-12);
}

TEST(Spectral, DilationOfGaussian) {
  const GridSpec g = make_grid(16.0, 64);
  const Field2D d = dilate(gauss(g), 0.5);
  EXPECT_LT(max_diff(d, gauss(g, 2.0)), 1e-6);
  const Field2D out = dilate(gauss(g), 3.0);
  EXPECT_EQ(out(0, 0), cplx(0.0));
  EXPECT_NEAR(out(32, 32).real(), 1.0, 1e-12);
}
