#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfnls/density.hpp"
#include "mfnls/manybody.hpp"
#include "mfnls/nls.hpp"
#include "mfnls/spectral.hpp"

using namespace mfnls;
using std::numbers::pi;

namespace {

Field2D gaussian(const GridSpec& g, double width, double kx = 0.0, double x0 = 0.0) {
  Field2D f = Field2D::from_function(g, [&](double x, double y) {
    return std::exp(-((x - x0) * (x - x0) + y * y) / (2 * width * width)) * std::polar(1.0, kx * x);
  });
  return f * cplx(1.0 / norm(f));
}

double max_diff(std::span<const cplx> a, std::span<const cplx> b) {
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

TEST(Budget, SizesAndRefusal) {
  EXPECT_EQ(tensor_size(12, 3), 144u * 144u * 144u);
  EXPECT_DOUBLE_EQ(tensor_bytes(16, 2), 16.0 * std::pow(16.0, 4));
  EXPECT_NO_THROW(require_budget(16, 3, default_memory_budget));
  try {
    require_budget(32, 4, default_memory_budget);
    FAIL() << "expected a refusal";
  } catch (const BudgetError& e) {
    EXPECT_NE(std::string(e.what()).find(admissible_table(default_memory_budget)), std::string::npos);
  }
  EXPECT_THROW(zero_state(make_grid(8.0, 8), 2, 100.0), BudgetError);
}

TEST(ManyBody, ProductAndGammaStates) {
  const GridSpec g = make_grid(8.0, 8);
  const Field2D phi = gaussian(g, 1.0, 0.4);
  const Field2D eta = orthogonal_partner(phi, gaussian(g, 0.8, 0.0, 1.0));
  EXPECT_NEAR(std::abs(inner(phi, eta)), 0.0, 1e-14);
  EXPECT_NEAR(norm(eta), 1.0, 1e-14);
  for (std::size_t n : {1, 2, 3}) {
    const ManyBodyState p = product_state(phi, n);
    EXPECT_NEAR(state_norm(p), 1.0, 1e-12);
    const ManyBodyState gam = gamma_state(phi, eta, n);
    EXPECT_NEAR(state_norm(gam), 1.0, 1e-12);
    EXPECT_LT(symmetry_defect(gam).max_relative, 1e-14);
  }
  const ManyBodyState p2 = product_state(phi, 2);
  EXPECT_LT(std::abs(p2.amplitudes[3 * 64 + 17] - phi[3] * phi[17]), 1e-15);
}

TEST(ManyBody, SymmetrizeAndDefect) {
  const GridSpec g = make_grid(8.0, 8);
  const Field2D phi = gaussian(g, 1.0);
  const Field2D eta = orthogonal_partner(phi, gaussian(g, 1.0, 1.0));
  ManyBodyState s = product_state(phi, 2);
  for (std::size_t a = 0; a < 64; ++a)
    for (std::size_t b = 0; b < 64; ++b) s.amplitudes[a * 64 + b] = phi[a] * eta[b];
  const SymmetryDefect d = symmetry_defect(s);
  EXPECT_GT(d.max_relative, 0.5);
  EXPECT_EQ(d.axis_a, 1u);
  EXPECT_EQ(d.axis_b, 2u);
  symmetrize(s);
  EXPECT_LT(symmetry_defect(s).max_relative, 1e-15);
  std::mt19937_64 rng(1);
  const ManyBodyState r = random_symmetric_state(phi, 3, 0.5, rng);
  EXPECT_NEAR(state_norm(r), 1.0, 1e-13);
  EXPECT_LT(symmetry_defect(r).max_relative, 1e-13);
}

TEST(ManyBody, HamiltonianOnPlaneWavesAndPairDiagonal) {
  const GridSpec g = make_grid(2 * pi, 8);
  const Field2D w = Field2D::from_function(g, [](double x, double y) { return std::polar(1.0, 2 * x - y); });
  ManyBodyHamiltonian free = make_hamiltonian(g, 3, std::nullopt, ExternalPotentialSpec{});
  const ManyBodyState s = product_state(w * cplx(1.0 / norm(w)), 3);
  std::vector<cplx> expect(s.amplitudes);
  for (auto& v : expect) v *= 15.0;
  EXPECT_LT(max_diff(apply_hamiltonian(free, s), expect), 1e-11);

  // Pair term: diagonal in position with W_beta at the minimum-image displacement.
  const GridSpec h = make_grid(8.0, 16);
  const ScaledPair pair = scale_pair_potential(PairPotentialSpec::bump(-2.0, 3.0), 2, 0.1, h);
  const ManyBodyHamiltonian ham = make_hamiltonian(h, 2, pair, ExternalPotentialSpec{});
  ManyBodyState delta = zero_state(h, 2);
  const std::size_t a = h.flat(3, 14), b = h.flat(13, 2);
  delta.amplitudes[a * 256 + b] = 1.0;
  const auto out = apply_hamiltonian(ham, delta);
  const auto kin = apply_hamiltonian(make_hamiltonian(h, 2, std::nullopt, ExternalPotentialSpec{}), delta);
  EXPECT_NEAR(std::abs(out[a * 256 + b] - kin[a * 256 + b] - pair.at_displacement(6, 4)), 0.0, 1e-12);
}

TEST(ManyBody, PropagatorUnitaryAndSymmetric) {
  const GridSpec g = make_grid(8.0, 12);
  const Field2D phi = gaussian(g, 1.0, 0.5);
  const ManyBodyHamiltonian h =
      make_hamiltonian(g, 3, scale_pair_potential(PairPotentialSpec::bump(-1.0, 3.0), 3, 0.1, g), trap());
  std::mt19937_64 rng(2);
  ManyBodyState s = random_symmetric_state(phi, 3, 0.2, rng);
  s = evolve_manybody(h, s, 0.05, 0.01);
  EXPECT_NEAR(s.t, 0.05, 1e-15);
  EXPECT_NEAR(state_norm(s), 1.0, 1e-12);
  EXPECT_LT(symmetry_defect(s).max_relative, 1e-10);
}

TEST(ManyBody, NonInteractingProductFollowsLinearFlow) {
  const GridSpec g = make_grid(8.0, 12);
  const Field2D phi = gaussian(g, 1.0, 0.5);
  const ManyBodyHamiltonian h = make_hamiltonian(g, 2, std::nullopt, trap());
  const ManyBodyState s = evolve_manybody(h, product_state(phi, 2), 0.2, 0.01);
  NLSParams p;
  p.dt = 0.01;
  p.external = trap();
  EvolveOptions o;
  o.t_final = 0.2;
  const Field2D f = evolve(NLSState{phi, 0.0}, p, o).state.phi;
  EXPECT_LT(max_diff(s.amplitudes, product_state(f, 2).amplitudes), 1e-12);
}

TEST(ManyBody, ProjectorsAndGammaIdentities) {
  const GridSpec g = make_grid(8.0, 8);
  const Field2D phi = gaussian(g, 1.0, 0.3);
  const Field2D eta = orthogonal_partner(phi, gaussian(g, 1.0, 1.2, 0.5));
  const ManyBodyState prod = product_state(phi, 3);
  const auto q = apply_projector(g, 3, prod.amplitudes, Projector::q, 2, phi);
  EXPECT_LT(tensor_norm_sq(g, 3, q), 1e-26);
  const ManyBodyState gam = gamma_state(phi, eta, 3);
  for (std::size_t site = 1; site <= 3; ++site)
    EXPECT_NEAR(tensor_norm_sq(g, 3, apply_projector(g, 3, gam.amplitudes, Projector::q, site, phi)), 1.0 / 3, 1e-12);
  EXPECT_NEAR(q2_gradient1_sq(gam, phi), gradient_norm_sq(phi) / 3, 1e-10);
  EXPECT_NEAR(gradient1_projected_sq(gam, 1, phi), gradient_norm_sq(eta) / 3, 1e-10);
  EXPECT_NEAR(gradient1_sq(prod), gradient_norm_sq(phi), 1e-10);
}

TEST(ManyBody, ZOperatorForTwoParticles) {
  const GridSpec g = make_grid(4.0, 16);
  const std::size_t m = 16, nodes = 256;
  const Field2D phi = gaussian(g, 0.6);
  const ScaledPair pair = scale_pair_potential(PairPotentialSpec::bump(-1.0, 1.2), 2, 0.1, g);
  const ManyBodyHamiltonian h = make_hamiltonian(g, 2, pair, ExternalPotentialSpec{});
  const ManyBodyState s = gamma_state(phi, orthogonal_partner(phi, gaussian(g, 0.6, 1.0)), 2);
  const auto z = apply_z(h, s.amplitudes, phi);
  const double a = h.coupling;
  for (std::size_t x1 : {0u, 37u, 130u})
    for (std::size_t x2 : {5u, 136u, 255u}) {
      const std::size_t dx = (x1 / m + m - x2 / m) % m, dy = (x1 % m + m - x2 % m) % m;
      const double zval = pair.at_displacement(dx, dy) - a * (std::norm(phi[x1]) + std::norm(phi[x2]));
      EXPECT_NEAR(std::abs(z[x1 * nodes + x2] - zval * s.amplitudes[x1 * nodes + x2]), 0.0, 1e-13);
    }
}

TEST(ManyBody, FunctionalsOfProductState) {
  const GridSpec g = make_grid(8.0, 12);
  const Field2D phi = gaussian(g, 1.0, 0.3);
  const ManyBodyHamiltonian h =
      make_hamiltonian(g, 2, scale_pair_potential(PairPotentialSpec::bump(-1.0, 3.0), 2, 0.1, g), trap());
  const FunctionalReport f = functional_report(h, product_state(phi, 2), phi);
  EXPECT_LT(f.q1, 1e-14);
  EXPECT_LT(f.trdist, 1e-7);
  EXPECT_LT(std::abs(f.gamma_pp_qp) + std::abs(f.gamma_pp_qq) + std::abs(f.gamma_qp_qq), 1e-12);
  EXPECT_NEAR(f.alpha, f.q1 + f.variance, 1e-15);
  const Sandwiches sw = sandwich_terms(h, product_state(phi, 2), phi);
  EXPECT_NEAR(sw.q1_rate(2), 0.0, 1e-13);
}

TEST(ManyBody, VarianceVanishesOnEigenstates) {
  const GridSpec g = make_grid(2 * pi, 8);
  const Field2D w = Field2D::from_function(g, [](double x, double) { return std::polar(1.0 / (2 * pi), x); });
  const ManyBodyHamiltonian h = make_hamiltonian(g, 2, std::nullopt, ExternalPotentialSpec{});
  EXPECT_LT(energy_variance(h, product_state(w, 2)), 1e-24);
  const ManyBodyHamiltonian ht = make_hamiltonian(g, 2, std::nullopt, trap());
  EXPECT_GT(energy_variance(ht, product_state(w, 2)), 1e-3);
}

TEST(ManyBody, DerivativeIdentityConverges) {
  const GridSpec g = make_grid(8.0, 12);
  const Field2D phi = gaussian(g, 1.0, 0.3);
  const Field2D eta = orthogonal_partner(phi, gaussian(g, 1.2, -0.5, 0.6));
  const ManyBodyHamiltonian h =
      make_hamiltonian(g, 2, scale_pair_potential(PairPotentialSpec::bump(-3.0, 3.0), 2, 0.1, g), trap());
  ManyBodyState psi = product_state(phi, 2);
  const ManyBodyState gam = gamma_state(phi, eta, 2);
  for (std::size_t k = 0; k < psi.amplitudes.size(); ++k) psi.amplitudes[k] += cplx(0.1, 0.3) * gam.amplitudes[k];
  normalize(psi);
  const DerivativeCheck coarse = dq1dt_identity_check(h, psi, phi, 0.01);
  const DerivativeCheck fine = dq1dt_identity_check(h, psi, phi, 0.005);
  EXPECT_NEAR(coarse.residual / fine.residual, 4.0, 0.4);
  EXPECT_LT(fine.residual, 1e-2 * std::abs(fine.analytic));
  EXPECT_LT(std::abs(fine.im_pq_qp), 1e-12);
}

TEST(ManyBody, WrongCountertermSignIsDetected) {
  const GridSpec g = make_grid(8.0, 12);
  const Field2D phi = gaussian(g, 1.0, 0.3);
  const Field2D eta = orthogonal_partner(phi, gaussian(g, 1.2, -0.5, 0.6));
  ManyBodyHamiltonian h =
      make_hamiltonian(g, 2, scale_pair_potential(PairPotentialSpec::bump(-3.0, 3.0), 2, 0.1, g), trap());
  h.counterterm_sign = 1.0;
  ManyBodyState psi = product_state(phi, 2);
  const ManyBodyState gam = gamma_state(phi, eta, 2);
  for (std::size_t k = 0; k < psi.amplitudes.size(); ++k) psi.amplitudes[k] += cplx(0.1, 0.3) * gam.amplitudes[k];
  normalize(psi);
  const DerivativeCheck d = dq1dt_identity_check(h, psi, phi, 0.005);
  EXPECT_GT(d.residual, 1e-3 * std::abs(d.finite_difference));
}
