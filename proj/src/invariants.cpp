#include "mfnls/invariants.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "mfnls/density.hpp"
#include "mfnls/experiments.hpp"
#include "mfnls/fft.hpp"
#include "mfnls/spectral.hpp"

namespace mfnls {
namespace {

Field2D gaussian(const GridSpec& g, double width, double kx, double x0 = 0.0) {
  Field2D f = Field2D::from_function(g, [&](double x, double y) {
    return std::exp(-((x - x0) * (x - x0) + y * y) / (2.0 * width * width)) * std::polar(1.0, kx * x);
  });
  f *= 1.0 / norm(f);
  return f;
}

Field2D noise_field(const GridSpec& g, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Field2D f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = cplx(d(rng), d(rng));
  return f;
}

double max_abs_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

class Battery {
 public:
  explicit Battery(const std::function<void(const InvariantResult&)>& sink) : sink_(sink) {}

  void check(std::string name, double value, double threshold, std::string detail = {}) {
    InvariantResult r{std::move(name), std::isfinite(value) && value <= threshold, value, threshold,
                      std::move(detail)};
    if (sink_) sink_(r);
    results_.push_back(std::move(r));
  }
  std::vector<InvariantResult> take() { return std::move(results_); }

 private:
  const std::function<void(const InvariantResult&)>& sink_;
  std::vector<InvariantResult> results_;
};

// Product plus a complex multiple of the gamma state: symmetric, with q1 and every
// sandwich term nonzero.
ManyBodyState perturbed_state(const Field2D& phi, const Field2D& eta, std::size_t n) {
  ManyBodyState psi = product_state(phi, n);
  const ManyBodyState gam = gamma_state(phi, eta, n);
  const cplx c(0.1, 0.3);
  for (std::size_t k = 0; k < psi.amplitudes.size(); ++k) psi.amplitudes[k] += c * gam.amplitudes[k];
  normalize(psi);
  return psi;
}

}  // namespace

std::string format_result(const InvariantResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << std::scientific
     << std::setprecision(3) << r.value << " threshold=" << r.threshold;
  if (!r.detail.empty()) os << " " << r.detail;
  return os.str();
}

std::vector<InvariantResult> run_invariants(Injection inject, std::uint64_t seed,
                                            const std::function<void(const InvariantResult&)>& on_result) {
  Battery b(on_result);
  std::mt19937_64 rng(seed);
  const GridSpec g16 = make_grid(8.0, 16);
  const GridSpec g8 = make_grid(8.0, 8);

  {
    const Field2D f = noise_field(g16, rng);
    b.check("fft.roundtrip", max_abs_diff(to_position(to_frequency(f)).values(), f.values()), 1e-13);
    b.check("spectral.parseval", std::abs(norm_sq(to_frequency(f)) - norm_sq(f)) / norm_sq(f), 1e-13);
    const double k = 2.0 * std::numbers::pi / 8.0 * 3.0;
    const Field2D wave = Field2D::from_function(g16, [k](double x, double) { return std::polar(1.0, k * x); });
    const Field2D lap = apply_laplacian(wave);
    b.check("spectral.laplacian_plane_wave",
            max_abs_diff(lap.values(), (wave * cplx(k * k)).values()) / (k * k), 1e-12);
    Field2D rhs = f;
    rhs -= Field2D(g16, std::vector<cplx>(g16.nodes(), mean(f)));
    Field2D back = apply_laplacian(poisson_solve_zero_mean(rhs));
    back *= -1.0;
    b.check("spectral.poisson_residual", max_abs_diff(back.values(), rhs.values()) / sup_norm(rhs), 1e-12);
  }

  const Field2D phi16 = gaussian(g16, 1.0, 0.5);
  const Field2D eta16 = orthogonal_partner(phi16, gaussian(g16, 1.1, -0.3, 0.7));
  {
    NLSParams p;
    p.coupling = -5.0;
    p.dt = 1e-3;
    p.external.family = ExternalFamily::harmonic;
    StrangPropagator prop(g16, p);
    NLSState s{phi16, 0.0};
    const double m0 = norm_sq(s.phi);
    for (int i = 0; i < 20; ++i) prop.step(s);
    b.check("nls.mass_per_step", std::abs(norm_sq(s.phi) - m0) / 20.0, 1e-13);
    NLSParams back = p;
    back.dt = -p.dt;
    StrangPropagator rev(g16, back);
    for (int i = 0; i < 20; ++i) rev.step(s);
    b.check("nls.time_reversal", max_abs_diff(s.phi.values(), phi16.values()), 1e-12);
  }

  ExternalPotentialSpec trap;
  trap.family = ExternalFamily::harmonic;
  const PairPotentialSpec w = PairPotentialSpec::bump(-3.0, 2.5);
  const double beta = 0.1;
  ManyBodyHamiltonian h2 = make_hamiltonian(g16, 2, scale_pair_potential(w, 2, beta, g16), trap);
  if (inject == Injection::z_sign) h2.counterterm_sign = 1.0;

  {
    ManyBodyState psi = perturbed_state(phi16, eta16, 2);
    if (inject == Injection::asymmetric) {
      // Excitation in slot 1 only: phi x phi + 0.3 eta x phi is not symmetric.
      const std::size_t slot = g16.nodes();
      for (std::size_t a = 0; a < slot; ++a)
        for (std::size_t c = 0; c < slot; ++c)
          psi.amplitudes[a * slot + c] = phi16[a] * phi16[c] + cplx(0.3) * eta16[a] * phi16[c];
      normalize(psi);
    }
    const ManyBodyPropagator prop(h2, 1e-3);
    for (int i = 0; i < 10; ++i) prop.step(psi);
    b.check("manybody.norm", std::abs(state_norm(psi) - 1.0), 1e-12);
    const SymmetryDefect d = symmetry_defect(psi);
    std::ostringstream os;
    os << "axes=(" << d.axis_a << "," << d.axis_b << ")";
    b.check("manybody.symmetry", d.max_relative, 1e-10, os.str());
  }

  {
    const Field2D phi8 = gaussian(g8, 1.0, 0.3);
    const ManyBodyState psi = random_symmetric_state(phi8, 2, 0.3, rng);
    const auto& a = psi.amplitudes;
    const auto p1 = apply_projector(g8, 2, a, Projector::p, 1, phi8);
    const auto pp = apply_projector(g8, 2, p1, Projector::p, 1, phi8);
    const auto q1 = apply_projector(g8, 2, a, Projector::q, 1, phi8);
    const auto pq = apply_projector(g8, 2, q1, Projector::p, 1, phi8);
    std::vector<cplx> sum(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) sum[k] = p1[k] + q1[k];
    b.check("projector.idempotent", max_abs_diff(pp, p1), 1e-12);
    b.check("projector.orthogonal", max_abs_diff(pq, std::vector<cplx>(a.size())), 1e-12);
    b.check("projector.complement", max_abs_diff(sum, a), 1e-12);

    const ReducedDensity gamma = reduced_density_1(psi);
    b.check("density.trace", std::abs(gamma.matrix.trace() - 1.0), 1e-10);
    b.check("density.hermitian", (gamma.matrix - gamma.matrix.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    b.check("density.positive", std::max(0.0, -density_spectrum(gamma).minCoeff()), 1e-10);

    int violations = 0;
    for (int i = 0; i < 10; ++i) {
      const ManyBodyState s = random_symmetric_state(phi8, 2, 0.05 + 0.1 * i, rng);
      const double q = tensor_norm_sq(g8, 2, apply_projector(g8, 2, s.amplitudes, Projector::q, 1, phi8));
      const double d = trace_distance(reduced_density_1(s), phi8);
      if (q > d + 1e-12 || d > std::sqrt(8.0 * q) + 1e-12) ++violations;
    }
    b.check("sandwich.trace_bounds", violations, 0.0, "violations out of 10");
  }

  {
    const ManyBodyState prod = product_state(phi16, 2);
    const FunctionalReport f = functional_report(h2, prod, phi16, FunctionalOptions{false});
    b.check("gamma.product_annihilation",
            std::max({f.q1, f.gamma_pp_qp, f.gamma_pp_qq, f.gamma_qp_qq}), 1e-12);

    const ManyBodyState psi = perturbed_state(phi16, eta16, 2);
    const DerivativeCheck d = dq1dt_identity_check(h2, psi, phi16, 2e-3);
    std::ostringstream os;
    os << "analytic=" << d.analytic << " finite_difference=" << d.finite_difference;
    b.check("dq1dt.identity", d.residual / std::max(1e-3, std::abs(d.analytic)), 1e-4, os.str());
    b.check("dq1dt.im_pq_qp", std::abs(d.im_pq_qp), 1e-12);

    ManyBodyHamiltonian clean = h2;
    clean.counterterm_sign = -1.0;
    const ManyBodyState prod2 = product_state(phi16, 2);
    const VarianceBreakdown v =
        variance_line_groups(phi16, clean.pair, evaluate_external(trap, 0.0, g16), 2);
    const double exact = energy_variance(clean, prod2);
    b.check("variance.line_groups_n2", std::abs(exact - v.total()) / exact, 1e-8);
  }

  {
    const Field2D phi8 = gaussian(g8, 1.0, 0.3);
    const Field2D eta8 = orthogonal_partner(phi8, gaussian(g8, 0.9, 0.0, 0.5));
    const ManyBodyHamiltonian h3 = make_hamiltonian(g8, 3, std::nullopt, trap);
    const ManyBodyState prod = product_state(phi8, 3);
    const double exact = energy_variance(h3, prod);
    const VarianceBreakdown v = variance_line_groups(phi8, {}, evaluate_external(trap, 0.0, g8), 3);
    b.check("variance.line_groups_n3", std::abs(exact - v.total()) / exact, 1e-8);

    const ManyBodyState gam = gamma_state(phi8, eta8, 3);
    const double q = tensor_norm_sq(g8, 3, apply_projector(g8, 3, gam.amplitudes, Projector::q, 1, phi8));
    b.check("gamma_state.q1", std::abs(q - 1.0 / 3.0), 1e-10);

    ManyBodyState psi = prod;
    const ManyBodyPropagator prop(h3, 1e-2);
    NLSParams np;
    np.dt = 1e-2;
    np.external = trap;
    StrangPropagator nls(g8, np);
    NLSState f{phi8, 0.0};
    for (int i = 0; i < 10; ++i) {
      prop.step(psi);
      nls.step(f);
    }
    b.check("factorization.w0", trace_distance(reduced_density_1(psi), f.phi), 1e-10);
  }

  {
    bool refused = false;
    try {
      require_budget(32, 4, default_memory_budget);
    } catch (const BudgetError&) {
      refused = true;
    }
    b.check("budget.refusal_m32_n4", refused ? 0.0 : 1.0, 0.0);
  }
  return b.take();
}

}  // namespace mfnls
