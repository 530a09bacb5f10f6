#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mfnls/nls.hpp"
#include "mfnls/spectral.hpp"

using namespace mfnls;
using std::numbers::pi;

namespace {

Field2D unit_gaussian(const GridSpec& g, double kx = 0.0) {
  Field2D f = Field2D::from_function(g, [kx](double x, double y) {
    return std::exp(-(x * x + y * y) / 2) * std::polar(1.0, kx * x);
  });
  return f * cplx(1.0 / norm(f));
}

double max_diff(const Field2D& a, const Field2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ExternalPotentialSpec trap() {
  ExternalPotentialSpec a;
  a.family = ExternalFamily::harmonic;
  return a;
}

}  // namespace

TEST(NLS, PlaneWaveIsExact) {
  // c e^{ikx} solves the equation with frequency k^2 + a|c|^2.
  const GridSpec g = make_grid(2 * pi, 16);
  const double k = 3.0, a = -1.7, c = 0.8;
  const Field2D w = Field2D::from_function(g, [&](double x, double) { return c * std::polar(1.0, k * x); });
  NLSParams p;
  p.coupling = a;
  p.dt = 0.01;
  EvolveOptions o;
  o.t_final = 0.37;
  const EvolveResult r = evolve(NLSState{w, 0.0}, p, o);
  EXPECT_DOUBLE_EQ(r.state.t, 0.37);
  EXPECT_EQ(r.steps, 37u);
  EXPECT_LT(max_diff(r.state.phi, w * std::polar(1.0, -(k * k + a * c * c) * 0.37)), 1e-12);
}

TEST(NLS, EnergyOfGaussian) {
  // Unit-mass Gaussian: ||grad||^2 = 1, int |u|^4 = 1/(2 pi), <u, |x|^2 u> = 1.
  const GridSpec g = make_grid(16.0, 64);
  const Field2D u = unit_gaussian(g);
  EXPECT_NEAR(nls_energy(u, -3.0, evaluate_external(trap(), 0.0, g)), 2.0 - 1.5 / (2 * pi), 1e-10);
  NLSParams p;
  p.coupling = -3.0;
  p.external = trap();
  const ConservedReport r = conserved_report(NLSState{u, 0.0}, p, true);
  EXPECT_NEAR(r.mass, 1.0, 1e-13);
  EXPECT_NEAR(r.gradient_norm, 1.0, 1e-10);
  EXPECT_TRUE(std::isfinite(r.sigma4));
}

TEST(NLS, SigmaNormOfGaussian) {
  const GridSpec g = make_grid(16.0, 64);
  EXPECT_NEAR(sigma_norm(unit_gaussian(g), 1), 2.0, 1e-10);
  EXPECT_NEAR(sigma_norm(unit_gaussian(g), 0), std::sqrt(2.0), 1e-12);
}

TEST(NLS, MassConservedAndStepReversible) {
  const GridSpec g = make_grid(12.0, 32);
  const Field2D u = unit_gaussian(g, 0.8);
  NLSParams p;
  p.coupling = -4.0;
  p.dt = 2e-3;
  p.external = trap();
  StrangPropagator prop(g, p);
  NLSState s{u, 0.0};
  for (int i = 0; i < 50; ++i) prop.step(s);
  EXPECT_NEAR(norm_sq(s.phi), 1.0, 1e-13);
  NLSParams back = p;
  back.dt = -p.dt;
  StrangPropagator rev(g, back);
  for (int i = 0; i < 50; ++i) rev.step(s);
  EXPECT_LT(max_diff(s.phi, u), 1e-12);
  EXPECT_NEAR(s.t, 0.0, 1e-14);
}

TEST(NLS, SnapshotStrideAndLanding) {
  const GridSpec g = make_grid(12.0, 32);
  NLSParams p;
  p.dt = 0.03;
  EvolveOptions o;
  o.t_final = 0.1;
  o.snapshot_stride = 2;
  std::size_t calls = 0;
  o.on_snapshot = [&](const NLSState&, const ConservedReport&) { ++calls; };
  const EvolveResult r = evolve(NLSState{unit_gaussian(g), 0.0}, p, o);
  EXPECT_EQ(r.steps, 4u);
  EXPECT_DOUBLE_EQ(r.state.t, 0.1);
  EXPECT_EQ(r.series.size(), calls);
  EXPECT_EQ(r.series.front().t, 0.0);
  EXPECT_DOUBLE_EQ(r.series.back().t, 0.1);
  EXPECT_EQ(r.gradient_history.size(), 4u);
}

TEST(NLS, HarmonicGroundStateEnergy) {
  // Lowest eigenvalue of -Laplacian + |x|^2 in two dimensions is 2.
  const GridSpec g = make_grid(12.0, 48);
  NLSParams p;
  p.external = trap();
  GroundStateOptions o;
  o.energy_tolerance = 0.0;
  o.residual_tolerance = 1e-10;
  const GroundStateResult r = imaginary_time_ground_state(p, unit_gaussian(g, 0.5) + unit_gaussian(g) * cplx(0.2), o);
  EXPECT_NEAR(r.energy, 2.0, 1e-9);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_NEAR(norm(r.profile), 1.0, 1e-12);
}

TEST(NLS, TownesProfile) {
  const GridSpec g = make_grid(32.0, 128);
  const TownesReport t = townes_soliton(g);
  EXPECT_NEAR(t.mass, 11.7009, 1e-3);
  EXPECT_LT(t.discrepancy, 1e-6);
  EXPECT_LT(t.residual, 1e-8);
}

TEST(NLS, LensTransform) {
  EXPECT_DOUBLE_EQ(lens_free_time(0.0), 0.0);
  EXPECT_NEAR(lens_free_time(0.3), std::tan(0.6) / 2, 1e-15);
  const GridSpec g = make_grid(16.0, 64);
  const Field2D u = unit_gaussian(g);
  EXPECT_LT(max_diff(lens_transform(u, 0.0), u), 1e-15);
  EXPECT_THROW(lens_transform(u, 0.8), ValidationError);
  // The trap ground state e^{-|x|^2/2} evolves as e^{-2it}.
  const GridSpec wide = make_grid(24.0, 96);
  NLSParams p;
  p.dt = 1e-3;
  EvolveOptions o;
  o.t_final = lens_free_time(0.25);
  const Field2D g0 = unit_gaussian(wide);
  const Field2D mapped = lens_transform(evolve(NLSState{g0, 0.0}, p, o).state.phi, 0.25);
  EXPECT_LT(max_diff(mapped, g0 * std::polar(1.0, -0.5)), 1e-8);
}

TEST(NLS, BlowUpFlaggedNotThrown) {
  const GridSpec g = make_grid(12.0, 128);
  const Field2D u = unit_gaussian(g) * cplx(std::sqrt(40.0));
  NLSParams p;
  p.coupling = -1.0;
  p.dt = 1e-3;
  EvolveOptions o;
  o.t_final = 1.0;
  o.gradient_ceiling_factor = 5.0;
  const EvolveResult r = evolve(NLSState{u, 0.0}, p, o);
  EXPECT_TRUE(r.blow_up);
  EXPECT_GT(r.blow_up_time, 0.0);
  EXPECT_LT(r.blow_up_time, 1.0);
}
