#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfnls/density.hpp"
#include "mfnls/spectral.hpp"

using namespace mfnls;

namespace {

Field2D gaussian(const GridSpec& g, double width, double kx = 0.0, double x0 = 0.0) {
  Field2D f = Field2D::from_function(g, [&](double x, double y) {
    return std::exp(-((x - x0) * (x - x0) + y * y) / (2 * width * width)) * std::polar(1.0, kx * x);
  });
  return f * cplx(1.0 / norm(f));
}

}  // namespace

TEST(Density, ProductStateGivesPureDensity) {
  const GridSpec g = make_grid(8.0, 8);
  const Field2D phi = gaussian(g, 1.0, 0.7);
  for (std::size_t n : {1, 2, 3}) {
    const ReducedDensity gamma = reduced_density_1(product_state(phi, n), n);
    EXPECT_LT((gamma.matrix - pure_density(phi).matrix).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(trace_distance(gamma, phi), 1e-7);
  }
}

TEST(Density, GammaStateSpectrum) {
  // gamma = (1 - 1/N)|phi><phi| + (1/N)|eta><eta|, so Tr|gamma - P| = 2/N.
  const GridSpec g = make_grid(8.0, 8);
  const Field2D phi = gaussian(g, 1.0);
  const Field2D eta = orthogonal_partner(phi, gaussian(g, 1.0, 1.0, 0.5));
  for (std::size_t n : {2, 3}) {
    const ReducedDensity gamma = reduced_density_1(gamma_state(phi, eta, n));
    const Eigen::VectorXd ev = density_spectrum(gamma);
    const double dn = static_cast<double>(n);
    EXPECT_NEAR(ev(ev.size() - 1), 1.0 - 1.0 / dn, 1e-12);
    EXPECT_NEAR(ev(ev.size() - 2), 1.0 / dn, 1e-12);
    EXPECT_NEAR(trace_distance(gamma, phi), 2.0 / dn, 1e-12);
  }
}

TEST(Density, RandomStateIsADensityMatrix) {
  const GridSpec g = make_grid(8.0, 8);
  std::mt19937_64 rng(4);
  const ManyBodyState s = random_symmetric_state(gaussian(g, 1.0), 3, 1.0, rng);
  const ReducedDensity g1 = reduced_density_1(s, 1);
  const ReducedDensity g3 = reduced_density_1(s, 3);
  EXPECT_NEAR(g1.matrix.trace().real(), 1.0, 1e-12);
  EXPECT_LT((g1.matrix - g1.matrix.adjoint()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_GT(density_spectrum(g1).minCoeff(), -1e-13);
  EXPECT_LT((g1.matrix - g3.matrix).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Density, SobolevMatrixSquaresToOneMinusLaplacian) {
  const GridSpec g = make_grid(8.0, 8);
  const Eigen::MatrixXcd s = sobolev_matrix(g);
  EXPECT_LT((s - s.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  const Field2D f = gaussian(g, 1.0, 0.5);
  Eigen::VectorXcd v(64);
  for (int i = 0; i < 64; ++i) v(i) = f[static_cast<std::size_t>(i)];
  const Eigen::VectorXcd sv = s * (s * v);
  const Field2D expect = f + apply_laplacian(f);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(std::abs(sv(i) - expect[static_cast<std::size_t>(i)]), 0.0, 1e-11);
}

TEST(Density, SobolevDistanceOfOrthogonalPure) {
  // For P_eta - P_phi with orthogonal phi, eta the Sobolev trace norm is
  // sqrt((a + b)^2 - 4 |c|^2) with a, b the H1 norms squared and c their H1 product.
  const GridSpec g = make_grid(8.0, 16);
  const Field2D phi = gaussian(g, 1.0);
  const Field2D eta = orthogonal_partner(phi, gaussian(g, 1.0, 1.5, 0.5));
  ManyBodyState one = product_state(eta, 1);
  const ReducedDensity gamma = reduced_density_1(one);
  const double a = norm_sq(phi) + gradient_norm_sq(phi);
  const double b = norm_sq(eta) + gradient_norm_sq(eta);
  const cplx c = inner(sobolev_multiplier(phi), sobolev_multiplier(eta));
  EXPECT_NEAR(sobolev_trace_distance(gamma, phi), std::sqrt((a + b) * (a + b) - 4 * std::norm(c)), 1e-9);
  EXPECT_NEAR(trace_distance(gamma, phi), 2.0, 1e-12);
}
