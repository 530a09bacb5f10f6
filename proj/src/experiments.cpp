#include "mfnls/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfnls/spectral.hpp"

namespace mfnls {
namespace {

std::size_t step_count(double span, double dt) {
  return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

void require_sweep(const SweepConfig& cfg) {
  if (cfg.betas.empty() || cfg.particles.empty()) {
    throw ValidationError("sweep: beta and N lists must be nonempty");
  }
  for (double b : cfg.betas)
    if (!(b > 0.0 && b < 1.0)) throw ValidationError("sweep: beta must lie in (0, 1)");
  for (std::size_t n : cfg.particles)
    if (n < 1) throw ValidationError("sweep: N must be positive");
  if (!(cfg.dt > 0.0) || !(cfg.t_final > 0.0)) {
    throw ValidationError("sweep: dt and t_final must be positive");
  }
}

std::optional<ScaledPair> scaled_pair(const SweepConfig& cfg, std::size_t n, double beta,
                                      const GridSpec& grid) {
  if (!cfg.pair) return std::nullopt;
  return scale_pair_potential(*cfg.pair, n, beta, grid);
}

}  // namespace

FitResult fit_exponent(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ValidationError("fit_exponent: length mismatch");
  if (xs.size() < 3) throw ValidationError("fit_exponent: needs at least three points");
  const std::size_t n = xs.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      std::ostringstream os;
      os << "fit_exponent: point " << i << " is not positive (" << xs[i] << ", " << ys[i] << ")";
      throw ValidationError(os.str());
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("fit_exponent: abscissae are all equal");
  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return r;
}

Field2D make_initial(const GridSpec& grid, const InitialSpec& spec, double coupling,
                     const ExternalPotentialSpec& external) {
  if (!(spec.width > 0.0)) throw ValidationError("initial state: width must be positive");
  const double w = spec.width;
  Field2D g = Field2D::from_function(grid, [&](double x, double y) {
    const double dx = x - spec.center_x, dy = y - spec.center_y;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * w * w)) *
           std::polar(1.0, spec.momentum_x * x + spec.momentum_y * y);
  });
  g *= 1.0 / norm(g);
  switch (spec.kind) {
    case InitialKind::gaussian:
      return g;
    case InitialKind::townes: {
      Field2D q = townes_soliton(grid).profile;
      q *= 1.0 / norm(q);
      return q;
    }
    case InitialKind::harmonic_ground: {
      NLSParams p;
      p.coupling = coupling;
      p.external = external;
      GroundStateResult r = imaginary_time_ground_state(p, g);
      r.profile *= 1.0 / norm(r.profile);
      return r.profile;
    }
  }
  return g;
}

SweepResult convergence_sweep(const SweepConfig& cfg, const RecordSink& sink) {
  require_sweep(cfg);
  const GridSpec grid = cfg.grid();
  const double a = cfg.coupling();
  const Field2D phi0 = make_initial(grid, cfg.initial, a, cfg.external);
  const std::size_t steps = step_count(cfg.t_final, cfg.dt);
  const double dt = cfg.t_final / static_cast<double>(steps);

  SweepResult result;
  for (double beta : cfg.betas) {
    std::vector<double> ns, dists;
    for (std::size_t n : cfg.particles) {
      try {
        require_budget(grid.points_per_side(), n, cfg.memory_budget);
      } catch (const BudgetError& e) {
        result.skipped.push_back({n, beta, e.what()});
        continue;
      }
      const ManyBodyHamiltonian h =
          make_hamiltonian(grid, n, scaled_pair(cfg, n, beta, grid), cfg.external);
      ManyBodyState psi = product_state(phi0, n, cfg.memory_budget);
      const ManyBodyPropagator mb(h, dt);
      NLSParams np;
      np.coupling = a;
      np.dt = dt;
      np.external = cfg.external;
      StrangPropagator nls(grid, np);
      NLSState phi{phi0, 0.0};

      FunctionalOptions fo;
      fo.distances = cfg.distances;
      double last_dist = 0.0;
      auto record = [&] {
        RunRecord r;
        r.particles = n;
        r.beta = beta;
        r.t = psi.t;
        r.functionals = functional_report(h, psi, phi.phi, fo);
        const ConservedReport c = conserved_report(phi, np);
        r.nls_mass = c.mass;
        r.nls_energy = c.energy;
        last_dist = r.functionals.trdist;
        if (sink) sink(r);
        result.records.push_back(std::move(r));
      };
      record();
      for (std::size_t k = 1; k <= steps; ++k) {
        mb.step(psi);
        nls.step(phi);
        if (k == steps) {
          psi.t = phi.t = cfg.t_final;
        }
        const bool snap = k == steps || (cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0);
        if (snap) record();
      }
      ns.push_back(static_cast<double>(n));
      dists.push_back(last_dist);
    }
    std::optional<FitResult> fit;
    if (cfg.distances && ns.size() >= 3 &&
        std::all_of(dists.begin(), dists.end(), [](double d) { return d > 0.0; })) {
      fit = fit_exponent(ns, dists);
    }
    result.fits.emplace_back(beta, fit);
  }
  return result;
}

std::vector<GronwallRow> gronwall_trace(const SweepConfig& cfg, double slack) {
  require_sweep(cfg);
  const std::size_t n = cfg.particles.front();
  if (n < 2) throw ValidationError("gronwall_trace: needs N >= 2");
  const double beta = cfg.betas.front();
  const GridSpec grid = cfg.grid();
  require_budget(grid.points_per_side(), n, cfg.memory_budget);
  const double a = cfg.coupling();
  const Field2D phi0 = make_initial(grid, cfg.initial, a, cfg.external);
  const std::size_t steps = step_count(cfg.t_final, cfg.dt);
  const double dt = cfg.t_final / static_cast<double>(steps);

  const ManyBodyHamiltonian h =
      make_hamiltonian(grid, n, scaled_pair(cfg, n, beta, grid), cfg.external);
  ManyBodyState psi = product_state(phi0, n, cfg.memory_budget);
  const ManyBodyPropagator mb(h, dt);
  NLSParams np;
  np.coupling = a;
  np.dt = dt;
  np.external = cfg.external;
  StrangPropagator nls(grid, np);
  NLSState phi{phi0, 0.0};

  FunctionalOptions fo;
  fo.distances = false;
  std::vector<GronwallRow> rows;
  auto record = [&] {
    const FunctionalReport f = functional_report(h, psi, phi.phi, fo);
    const DerivativeCheck d = dq1dt_identity_check(h, psi, phi.phi, dt);
    GronwallRow r;
    r.t = psi.t;
    r.alpha = f.alpha;
    r.q1 = f.q1;
    r.variance = f.variance;
    r.gamma_pp_qp = f.gamma_pp_qp;
    r.gamma_pp_qq = f.gamma_pp_qq;
    r.gamma_qp_qq = f.gamma_qp_qq;
    r.gamma_total = f.gamma_pp_qp + f.gamma_pp_qq + f.gamma_qp_qq;
    r.dalpha_dt = d.alpha_finite_difference;
    r.dvar_dt = d.alpha_finite_difference - d.finite_difference;
    r.slack = slack;
    r.holds = r.dalpha_dt <= r.gamma_total + std::abs(r.dvar_dt) + slack;
    r.identity_residual = d.residual;
    rows.push_back(r);
  };
  record();
  for (std::size_t k = 1; k <= steps; ++k) {
    mb.step(psi);
    nls.step(phi);
    if (k == steps) psi.t = phi.t = cfg.t_final;
    if (k == steps || (cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0)) record();
  }
  return rows;
}

VarianceBreakdown variance_line_groups(const Field2D& phi, const std::vector<double>& pair,
                                       const Field2D& external, std::size_t particles) {
  if (particles < 1) throw ValidationError("variance_line_groups: N must be positive");
  require_same_grid(phi.grid(), external.grid(), "variance_line_groups");
  if (std::abs(norm_sq(phi) - 1.0) > 1e-10) {
    throw ValidationError("variance_line_groups: phi must be normalised");
  }
  const GridSpec& g = phi.grid();
  const double n = static_cast<double>(particles);
  const double w = g.cell_area();

  const Field2D lap = apply_laplacian(phi);
  const double kin = inner(phi, lap).real();
  const double kin2 = norm_sq(lap);

  Field2D rho(g);
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(phi[i]);

  double a1 = 0.0, a2 = 0.0, ka = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double ai = external[i].real();
    a1 += ai * rho[i].real();
    a2 += ai * ai * rho[i].real();
    ka += ai * (std::conj(phi[i]) * lap[i]).real();
  }
  a1 *= w;
  a2 *= w;
  ka *= w;

  VarianceBreakdown out;
  out.particles = particles;
  out.kinetic = (kin2 - kin * kin) / n;
  out.external = (a2 - a1 * a1) / n;
  out.kinetic_external = 2.0 * (ka - a1 * kin) / n;
  if (pair.empty()) return out;

  const Field2D wrho = periodic_convolution(pair, rho);
  std::vector<double> pair_sq(pair.size());
  for (std::size_t d = 0; d < pair.size(); ++d) pair_sq[d] = pair[d] * pair[d];
  const Field2D w2rho = periodic_convolution(pair_sq, rho);

  double v = 0.0, v2 = 0.0, v3 = 0.0, x1 = 0.0, y1 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double r = rho[i].real();
    const double u = wrho[i].real();
    v += r * u;
    v2 += r * w2rho[i].real();
    v3 += r * u * u;
    x1 += u * (std::conj(lap[i]) * phi[i]).real();
    y1 += external[i].real() * r * u;
  }
  v *= w;
  v2 *= w;
  v3 *= w;
  x1 *= w;
  y1 *= w;

  const double cross = 2.0 * (n - 1.0) / n;
  out.kinetic_pair = cross * (x1 - kin * v);
  out.pair_external = cross * (y1 - a1 * v);
  // Same-pair and one-shared-index covariances; disjoint pairs are uncorrelated.
  out.pair_pair = ((n - 1.0) / (2.0 * n)) * (v2 - v * v) +
                  ((n - 1.0) * (n - 2.0) / n) * (v3 - v * v);
  return out;
}

VarianceReport variance_product_report(const SweepConfig& cfg, bool tensor_mode) {
  require_sweep(cfg);
  if (!cfg.external.is_static()) {
    throw ValidationError("variance_product_report: the external potential must be static");
  }
  const GridSpec grid = cfg.grid();
  const Field2D phi = make_initial(grid, cfg.initial, cfg.coupling(), cfg.external);
  const Field2D ext = evaluate_external(cfg.external, 0.0, grid);

  VarianceReport report;
  for (double beta : cfg.betas) {
    std::vector<double> ns, vars;
    for (std::size_t n : cfg.particles) {
      const std::optional<ScaledPair> sp = scaled_pair(cfg, n, beta, grid);
      VarianceRow row;
      row.groups = variance_line_groups(phi, sp ? sp->displacement : std::vector<double>{}, ext, n);
      row.groups.beta = beta;
      row.exact = std::numeric_limits<double>::quiet_NaN();
      row.relative_gap = std::numeric_limits<double>::quiet_NaN();
      if (tensor_mode) {
        const ManyBodyHamiltonian h = make_hamiltonian(grid, n, sp, cfg.external);
        const ManyBodyState psi = product_state(phi, n, cfg.memory_budget);
        row.exact = energy_variance(h, psi);
        const double scale = std::max(std::abs(row.exact), std::abs(row.groups.total()));
        row.relative_gap = scale == 0.0 ? 0.0 : std::abs(row.exact - row.groups.total()) / scale;
      }
      ns.push_back(static_cast<double>(n));
      vars.push_back(row.groups.total());
      report.rows.push_back(row);
    }
    if (ns.size() >= 3 && std::all_of(vars.begin(), vars.end(), [](double v) { return v > 0.0; })) {
      VarianceReport::Fit f;
      f.beta = beta;
      f.fit = fit_exponent(ns, vars);
      f.reference = std::max({-1.0, -1.0 + beta, -2.0 + 2.0 * beta});
      report.fits.push_back(f);
    }
  }
  return report;
}

StabilityReport stability_probe(const SweepConfig& cfg, double tau, std::size_t max_iterations,
                                double tolerance) {
  require_sweep(cfg);
  if (!(tau > 0.0)) throw ValidationError("stability_probe: tau must be positive");
  if (!cfg.external.is_static()) {
    throw ValidationError("stability_probe: the external potential must be static");
  }
  const GridSpec grid = cfg.grid();
  InitialSpec start = cfg.initial;
  start.kind = InitialKind::gaussian;
  const Field2D phi0 = make_initial(grid, start, 0.0, cfg.external);

  StabilityReport report;
  for (double beta : cfg.betas) {
    std::vector<double> per_particle;
    for (std::size_t n : cfg.particles) {
      const ManyBodyHamiltonian h =
          make_hamiltonian(grid, n, scaled_pair(cfg, n, beta, grid), cfg.external);
      ManyBodyState psi = product_state(phi0, n, cfg.memory_budget);
      StabilityRow row;
      row.particles = n;
      row.beta = beta;
      // A coarse stage followed by a fine one: the splitting bias of the fixed point
      // is O(tau^2) in the state and O(tau^4) in the energy.
      for (double stage : {tau, 0.25 * tau}) {
        const ManyBodyPropagator prop(h, stage, true);
        double previous = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (std::size_t it = 0; it < max_iterations; ++it) {
          prop.step(psi);
          psi.t = 0.0;
          normalize(psi);
          ++row.iterations;
          if ((it + 1) % 10 != 0) continue;
          const double e = tensor_inner(psi, apply_hamiltonian(h, psi)).real();
          if (!std::isfinite(e)) throw NumericError("stability_probe: non-finite energy");
          if (std::abs(e - previous) <= tolerance * std::max(1.0, std::abs(e))) {
            converged = true;
            break;
          }
          previous = e;
        }
        row.converged = converged;
      }
      row.energy = tensor_inner(psi, apply_hamiltonian(h, psi)).real();
      row.energy_per_particle = row.energy / static_cast<double>(n);
      per_particle.push_back(row.energy_per_particle);
      report.rows.push_back(row);
    }
    bool falling = per_particle.size() >= 2;
    for (std::size_t i = 1; i < per_particle.size(); ++i) {
      const double drop = per_particle[i - 1] - per_particle[i];
      if (!(drop > 0.05 * std::max(1.0, std::abs(per_particle[i - 1])))) falling = false;
    }
    report.collapse_indicator.emplace_back(beta, falling);
  }
  return report;
}

std::vector<SmearedRow> smeared_norm_table(const PairPotentialSpec& w, const GridSpec& grid,
                                           const std::vector<std::size_t>& particles,
                                           const std::vector<std::pair<double, double>>& betas) {
  std::vector<SmearedRow> rows;
  for (const auto& [beta, beta1] : betas) {
    for (std::size_t n : particles) {
      const ScaledPair sp = scale_pair_potential(w, n, beta, grid);
      const SmearedPotential sm = build_smeared(sp, beta1);
      const Field2D source = sp.field - sm.reference;
      Field2D lap = apply_laplacian(sm.smeared);
      lap *= -1.0;
      const cplx mu = mean(source);
      double worst = 0.0;
      for (std::size_t i = 0; i < lap.size(); ++i)
        worst = std::max(worst, std::abs(lap[i] - (source[i] - mu)));
      SmearedRow r;
      r.particles = n;
      r.beta = beta;
      r.beta1 = beta1;
      r.h_l2 = sm.h_l2;
      r.h_l1 = sm.h_l1;
      r.grad_h_l2 = sm.grad_h_l2;
      r.poisson_residual = worst / sup_norm(source);
      r.mass_balance = std::abs(integral(source)) / (std::abs(w.integral()) / static_cast<double>(n));
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace mfnls
