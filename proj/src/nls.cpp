#include "mfnls/nls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mfnls/fft.hpp"
#include "mfnls/spectral.hpp"

namespace mfnls {
namespace {

double quartic(const Field2D& phi) {
  double s = 0.0;
  for (const auto& v : phi.values()) s += std::norm(v) * std::norm(v);
  return s * phi.grid().cell_area();
}

bool all_finite(const Field2D& f) {
  return std::all_of(f.values().begin(), f.values().end(),
                     [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

Field2D external_at(const ExternalPotentialSpec& spec, double t, const GridSpec& grid) {
  return evaluate_external(spec, t, grid);
}

Field2D helmholtz_inverse(const Field2D& f) {
  return apply_fourier_multiplier(
      f, [](double kx, double ky) { return cplx(1.0 / (1.0 + kx * kx + ky * ky)); });
}

Field2D with_potential(const Field2D& u, const std::vector<double>& v) {
  Field2D out = apply_laplacian(u);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k] * u[k];
  return out;
}

}  // namespace

double nls_energy(const Field2D& phi, double coupling, const Field2D& external) {
  return gradient_norm_sq(phi) + 0.5 * coupling * quartic(phi) +
         inner(phi, pointwise(external, phi)).real();
}

ConservedReport conserved_report(const NLSState& state, const NLSParams& params,
                                 bool with_sigma) {
  ConservedReport r;
  r.t = state.t;
  r.mass = norm_sq(state.phi);
  const Field2D a = external_at(params.external, state.t, state.phi.grid());
  r.energy = nls_energy(state.phi, params.coupling, a);
  r.sup_norm = sup_norm(state.phi);
  r.gradient_norm = std::sqrt(gradient_norm_sq(state.phi));
  r.sigma4 = with_sigma ? sigma_norm(state.phi, 4) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

StrangPropagator::StrangPropagator(const GridSpec& grid, NLSParams params)
    : grid_(grid), params_(std::move(params)) {
  if (params_.dt == 0.0 || !std::isfinite(params_.dt)) {
    throw ValidationError("nls: dt must be finite and nonzero");
  }
  const std::size_t m = grid.points_per_side();
  kinetic_phase_.resize(grid.nodes());
  k_squared_.resize(grid.nodes());
  for (std::size_t ix = 0; ix < m; ++ix) {
    const double kx = grid.wavenumber(ix);
    for (std::size_t iy = 0; iy < m; ++iy) {
      const double ky = grid.wavenumber(iy);
      const double k2 = kx * kx + ky * ky;
      k_squared_[grid.flat(ix, iy)] = k2;
      kinetic_phase_[grid.flat(ix, iy)] = std::polar(1.0, -params_.dt * k2);
    }
  }
  if (params_.external.is_static()) static_external_ = external_at(params_.external, 0.0, grid);
}

void StrangPropagator::diagonal(Field2D& phi, const Field2D& external, double tau) const {
  const double a = params_.coupling;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const double v = external[k].real() + a * std::norm(phi[k]);
    phi[k] *= std::polar(1.0, -tau * v);
  }
}

void StrangPropagator::step(NLSState& state) {
  require_same_grid(state.phi.grid(), grid_, "strang step");
  const double dt = params_.dt;
  const Field2D* external = nullptr;
  Field2D sampled;
  if (static_external_) {
    external = &*static_external_;
  } else {
    sampled = external_at(params_.external, state.t + 0.5 * dt, grid_);
    external = &sampled;
  }
  diagonal(state.phi, *external, 0.5 * dt);

  auto values = state.phi.values();
  const std::size_t m = grid_.points_per_side();
  fft::transform_2d(values, m, fft::Direction::forward);
  double g = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    g += k_squared_[k] * std::norm(values[k]);
    values[k] *= kinetic_phase_[k];
  }
  stage_gradient_ = std::sqrt(g * grid_.cell_area());
  fft::transform_2d(values, m, fft::Direction::inverse);

  diagonal(state.phi, *external, 0.5 * dt);
  state.t += dt;
}

NLSState strang_step(const NLSState& state, const NLSParams& params) {
  StrangPropagator prop(state.phi.grid(), params);
  NLSState next = state;
  prop.step(next);
  return next;
}

EvolveResult evolve(NLSState state, const NLSParams& params, const EvolveOptions& options) {
  if (!(params.dt > 0.0)) throw ValidationError("evolve: dt must be positive");
  const double span = options.t_final - state.t;
  if (!(span > 0.0)) throw ValidationError("evolve: t_final must exceed the current time");
  const auto steps = static_cast<std::size_t>(std::ceil(span / params.dt - 1e-9));
  NLSParams p = params;
  p.dt = span / static_cast<double>(steps);
  const double t0 = state.t;
  StrangPropagator prop(state.phi.grid(), p);

  EvolveResult out;
  auto report = [&](const NLSState& s) {
    ConservedReport r = conserved_report(s, p, options.with_sigma);
    out.series.push_back(r);
    if (options.on_snapshot) options.on_snapshot(s, r);
  };
  report(state);
  const double sup0 = sup_norm(state.phi);
  const double grad0 = std::sqrt(gradient_norm_sq(state.phi));

  for (std::size_t n = 1; n <= steps; ++n) {
    prop.step(state);
    state.t = t0 + static_cast<double>(n) * p.dt;
    ++out.steps;
    const double g = prop.kinetic_stage_gradient_norm();
    out.gradient_history.push_back(g);
    const bool finite = std::isfinite(g) && all_finite(state.phi);
    if (!finite || sup_norm(state.phi) > options.sup_ceiling_factor * sup0 ||
        g > options.gradient_ceiling_factor * grad0) {
      out.blow_up = true;
      out.blow_up_time = state.t;
      if (finite) report(state);
      break;
    }
    const bool at_stride = options.snapshot_stride > 0 && n % options.snapshot_stride == 0;
    if (at_stride || n == steps) report(state);
  }
  out.state = std::move(state);
  return out;
}

GroundStateResult imaginary_time_ground_state(const NLSParams& params, const Field2D& init,
                                              const GroundStateOptions& options) {
  const double n0 = norm(init);
  if (!(n0 > 0.0) || !std::isfinite(n0)) {
    throw ValidationError("ground state: initial field is zero or not finite");
  }
  const GridSpec& grid = init.grid();
  GroundStateResult out;

  if (options.mode == GroundStateMode::townes) {
    const double theta = options.townes_relaxation;
    auto normalize4 = [](Field2D f) {
      const double l4 = lp_norm(f, 4.0);
      if (!(l4 > 1e-300)) throw NumericError("ground state: Townes iterate collapsed to zero");
      return f * cplx(1.0 / l4);
    };
    Field2D u = normalize4(init);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      Field2D cubic(grid);
      for (std::size_t k = 0; k < u.size(); ++k) cubic[k] = std::norm(u[k]) * u[k];
      const double mu = (norm_sq(u) + gradient_norm_sq(u)) / std::pow(lp_norm(u, 4.0), 4.0);
      Field2D q = u * cplx(std::sqrt(mu));
      Field2D eq = apply_laplacian(q) + q;
      for (std::size_t k = 0; k < eq.size(); ++k) eq[k] -= std::norm(q[k]) * q[k];
      out.residual = norm(eq);
      out.iterations = it;
      out.profile = q;
      if (!all_finite(q)) throw NumericError("ground state: Townes iteration produced NaN");
      if (out.residual <= options.residual_tolerance) break;
      Field2D w = normalize4(helmholtz_inverse(cubic));
      u = normalize4(u * cplx(1.0 - theta) + w * cplx(theta));
      if (it + 1 == options.max_iterations) {
        std::ostringstream os;
        os << "ground state: Townes iteration did not converge, residual " << out.residual;
        throw NumericError(os.str());
      }
    }
    out.energy = gradient_norm_sq(out.profile) - 0.5 * std::pow(lp_norm(out.profile, 4.0), 4.0);
    return out;
  }

  const Field2D external = external_at(params.external, 0.0, grid);
  const double a = params.coupling;
  Field2D u = init * cplx(1.0 / n0);
  double previous = std::numeric_limits<double>::infinity();
  std::vector<double> v(grid.nodes());

  auto energy_of = [&](const Field2D& f) { return nls_energy(f, a, external); };

  for (std::size_t it = 0;; ++it) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = external[k].real() + a * std::norm(u[k]);
    const Field2D hu = with_potential(u, v);
    const double lambda = inner(u, hu).real();
    Field2D r = hu - u * cplx(lambda);
    const double e = energy_of(u);
    out.profile = u;
    out.energy = e;
    out.residual = norm(r);
    out.iterations = it;
    if (!std::isfinite(e)) throw NumericError("ground state: energy is not finite");
    if (out.residual <= options.residual_tolerance) break;
    if (options.energy_tolerance > 0.0 && previous - e >= 0.0 &&
        previous - e <= options.energy_tolerance) {
      break;
    }
    if (it == options.max_iterations) {
      std::ostringstream os;
      os << "ground state: no convergence after " << it << " iterations, residual "
         << out.residual;
      throw NumericError(os.str());
    }
    previous = e;

    const double vmin = *std::min_element(v.begin(), v.end());
    Field2D p = r;
    for (std::size_t k = 0; k < p.size(); ++k) p[k] /= std::sqrt(1.0 + v[k] - vmin);
    p = helmholtz_inverse(p);
    for (std::size_t k = 0; k < p.size(); ++k) p[k] /= std::sqrt(1.0 + v[k] - vmin);
    p -= u * inner(u, p);
    const double pn = norm(p);
    if (!(pn > 0.0)) break;
    p *= cplx(1.0 / pn);

    // Lowest Ritz vector of H_u on span{u, p}; u and p are orthonormal.
    const Field2D hp = with_potential(p, v);
    const double h22 = inner(p, hp).real();
    const cplx h12 = 0.5 * (inner(u, hp) + std::conj(inner(p, hu)));
    if (std::abs(h12) < 1e-300) break;
    // low - lambda in cancellation-free form.
    const double d = 0.5 * (h22 - lambda);
    const double root = std::sqrt(d * d + std::norm(h12));
    const double shift = d > 0.0 ? -std::norm(h12) / (d + root) : d - root;
    const cplx ratio = shift / h12;

    double step = 1.0;
    Field2D candidate = u + p * ratio;
    candidate *= cplx(1.0 / norm(candidate));
    while (a != 0.0 && energy_of(candidate) > e && step > 1e-6) {
      step *= 0.5;
      candidate = u + p * (ratio * step);
      candidate *= cplx(1.0 / norm(candidate));
    }
    u = std::move(candidate);
  }
  return out;
}

TownesReport townes_soliton(const GridSpec& grid, const GroundStateOptions& options) {
  GroundStateOptions o = options;
  o.mode = GroundStateMode::townes;
  const Field2D init = Field2D::from_function(
      grid, [](double x, double y) { return cplx(std::exp(-0.5 * (x * x + y * y))); });
  const GroundStateResult g = imaginary_time_ground_state(NLSParams{}, init, o);
  TownesReport r;
  r.profile = g.profile;
  r.mass = norm_sq(g.profile);
  r.gn_value = gn_ratio(g.profile);
  r.residual = g.residual;
  r.discrepancy = std::abs(r.mass - r.gn_value) / r.mass;
  return r;
}

double lens_free_time(double t) { return 0.5 * std::tan(2.0 * t); }

Field2D lens_transform(const Field2D& u, double t) {
  if (!(std::abs(t) < 0.25 * std::numbers::pi)) {
    throw ValidationError("lens_transform: requires |t| < pi/4");
  }
  const double c = std::cos(2.0 * t);
  const double chirp = 0.5 * std::tan(2.0 * t);
  Field2D out = dilate(u, 1.0 / c);
  const auto& g = u.grid();
  const std::size_t m = g.points_per_side();
  for (std::size_t ix = 0; ix < m; ++ix) {
    const double x = g.coordinate(ix);
    for (std::size_t iy = 0; iy < m; ++iy) {
      const double y = g.coordinate(iy);
      out(ix, iy) *= std::polar(1.0 / c, -chirp * (x * x + y * y));
    }
  }
  return out;
}

double sigma_norm(const Field2D& u, int order) {
  if (order < 0 || order > 4) throw ValidationError("sigma_norm: order must lie in 0..4");
  const auto& g = u.grid();
  const std::size_t m = g.points_per_side();
  const Field2D spec = to_frequency(u);
  double total = 0.0;
  for (int k = 0; k <= order; ++k) {
    double d = 0.0;
    double w = 0.0;
    for (std::size_t ix = 0; ix < m; ++ix) {
      const double kx = g.wavenumber(ix);
      const double x = g.coordinate(ix);
      for (std::size_t iy = 0; iy < m; ++iy) {
        const double ky = g.wavenumber(iy);
        const double y = g.coordinate(iy);
        d += std::pow(kx * kx + ky * ky, k) * std::norm(spec(ix, iy));
        w += std::pow(x * x + y * y, k) * std::norm(u(ix, iy));
      }
    }
    total += (d + w) * g.cell_area();
  }
  return std::sqrt(total);
}

}  // namespace mfnls
