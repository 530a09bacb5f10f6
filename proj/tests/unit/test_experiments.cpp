#include <gtest/gtest.h>

#include <cmath>

#include "mfnls/experiments.hpp"
#include "mfnls/spectral.hpp"

using namespace mfnls;

namespace {

ExternalPotentialSpec trap() {
  ExternalPotentialSpec a;
  a.family = ExternalFamily::harmonic;
  return a;
}

SweepConfig small() {
  SweepConfig c;
  c.box_length = 8.0;
  c.points = 8;
  c.external = trap();
  c.particles = {2};
  c.t_final = 0.05;
  c.dt = 0.01;
  c.snapshot_stride = 1;
  return c;
}

}  // namespace

TEST(Fit, RecoversPowerLaw) {
  const std::vector<double> x{2, 4, 8, 16};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.75));
  const FitResult f = fit_exponent(x, y);
  EXPECT_NEAR(f.slope, -0.75, 1e-13);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-13);
  EXPECT_THROW(fit_exponent({1, 2}, {1, 2}), ValidationError);
  EXPECT_THROW(fit_exponent({1, 2, 3}, {1, -2, 3}), ValidationError);
}

TEST(Initial, KindsAreNormalised) {
  const GridSpec g = make_grid(12.0, 48);
  InitialSpec s;
  s.width = 0.8;
  s.momentum_x = 1.0;
  EXPECT_NEAR(norm(make_initial(g, s, 0.0, {})), 1.0, 1e-13);
  s.kind = InitialKind::harmonic_ground;
  const Field2D ground = make_initial(g, s, 0.0, trap());
  EXPECT_NEAR(norm(ground), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(ground(24, 24)), 1.0 / std::sqrt(3.14159265358979), 1e-6);
}

TEST(Variance, LineGroupsMatchTensor) {
  const GridSpec g = make_grid(8.0, 12);
  const Field2D phi = make_initial(g, InitialSpec{InitialKind::gaussian, 0.9, 0.2, 0.0, 0.4, 0.0}, 0.0, {});
  for (std::size_t n : {2, 3}) {
    const ScaledPair pair = scale_pair_potential(PairPotentialSpec::bump(-3.0, 3.0), n, 0.1, g);
    const ManyBodyHamiltonian h = make_hamiltonian(g, n, pair, trap());
    const VarianceBreakdown v = variance_line_groups(phi, pair.displacement, evaluate_external(trap(), 0.0, g), n);
    const double exact = energy_variance(h, product_state(phi, n));
    EXPECT_NEAR(v.total(), exact, 1e-9 * exact);
    EXPECT_GT(v.pair_pair, 0.0);
    EXPECT_GT(v.kinetic, 0.0);
  }
}

TEST(Variance, ReportFitsAndReference) {
  SweepConfig c;
  c.box_length = 8.0;
  c.points = 64;
  c.pair = PairPotentialSpec::bump(-1.0, 2.0);
  c.betas = {0.25};
  c.particles = {4, 8, 16};
  const VarianceReport r = variance_product_report(c, false);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(std::isnan(r.rows[0].exact));
  ASSERT_EQ(r.fits.size(), 1u);
  EXPECT_DOUBLE_EQ(r.fits[0].reference, -0.75);
  EXPECT_LT(r.fits[0].fit.slope, 0.0);
}

TEST(Sweep, FreeProductStaysFactorised) {
  const SweepResult r = convergence_sweep(small());
  ASSERT_FALSE(r.records.empty());
  for (const RunRecord& rec : r.records) {
    EXPECT_LT(rec.functionals.trdist, 1e-7);
    EXPECT_NEAR(rec.nls_mass, 1.0, 1e-12);
  }
  EXPECT_DOUBLE_EQ(r.records.back().t, 0.05);
}

TEST(Sweep, OverBudgetCellsAreSkipped) {
  SweepConfig c = small();
  c.particles = {2, 3};
  c.memory_budget = 1e6;
  const SweepResult r = convergence_sweep(c);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].particles, 3u);
  EXPECT_FALSE(r.records.empty());
}

TEST(Gronwall, InequalityHoldsAlongRun) {
  SweepConfig c = small();
  c.points = 12;
  c.pair = PairPotentialSpec::bump(-1.0, 3.0);
  c.initial.momentum_x = 0.5;
  const std::vector<GronwallRow> rows = gronwall_trace(c, 1e-4);
  ASSERT_GE(rows.size(), 3u);
  for (const GronwallRow& r : rows) {
    EXPECT_TRUE(r.holds) << "t=" << r.t;
    EXPECT_NEAR(r.alpha, r.q1 + r.variance, 1e-14);
    EXPECT_LT(std::abs(r.dvar_dt), 1e-3);
  }
}

TEST(Stability, NonInteractingEnergyPerParticle) {
  SweepConfig c = small();
  c.particles = {1, 2};
  const StabilityReport r = stability_probe(c, 0.02, 4000, 1e-11);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(r.rows[0].converged);
  EXPECT_NEAR(r.rows[1].energy_per_particle, r.rows[0].energy, 1e-8);
  EXPECT_NEAR(r.rows[1].energy, 2.0 * r.rows[0].energy, 1e-8);
}

TEST(Smeared, TableShapeAndResiduals) {
  const GridSpec g = make_grid(2.0, 256);
  const auto rows = smeared_norm_table(PairPotentialSpec::bump(1.0, 0.3), g, {4, 16}, {{0.5, 0.25}});
  ASSERT_EQ(rows.size(), 2u);
  for (const SmearedRow& r : rows) {
    EXPECT_LT(r.poisson_residual, 1e-10);
    EXPECT_LT(r.mass_balance, 1e-8);
    EXPECT_GT(r.h_l2, 0.0);
  }
  EXPECT_GT(rows[0].grad_h_l2, rows[1].grad_h_l2);
}
