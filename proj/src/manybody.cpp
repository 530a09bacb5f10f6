#include "mfnls/manybody.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "mfnls/density.hpp"
#include "mfnls/fft.hpp"
#include "mfnls/nls.hpp"
#include "mfnls/spectral.hpp"

namespace mfnls {
namespace {

using Slots = std::array<std::size_t, max_particles>;

void check_particles(std::size_t n) {
  if (n < 1 || n > max_particles) {
    std::ostringstream os;
    os << "many-body: particle count must lie in 1.." << max_particles << ", got " << n;
    throw ValidationError(os.str());
  }
}

double weight(const GridSpec& g, std::size_t n) {
  return std::pow(g.cell_area(), static_cast<double>(n));
}

// Visits every flat index with its decoded slot indices; the last slot runs fastest.
template <class F>
void for_each_entry(std::size_t n, std::size_t slot, std::size_t total, F&& f) {
  Slots s{};
  for (std::size_t idx = 0; idx < total; ++idx) {
    f(idx, s);
    for (std::size_t j = n; j-- > 0;) {
      if (++s[j] < slot) break;
      s[j] = 0;
    }
  }
}

std::size_t inner_extent(std::size_t slot, std::size_t n, std::size_t axis) {
  std::size_t inner = 1;
  for (std::size_t j = axis + 1; j < n; ++j) inner *= slot;
  return inner;
}

std::vector<std::uint32_t> build_pair_index(const GridSpec& g) {
  const std::size_t m = g.points_per_side();
  const std::size_t slot = g.nodes();
  std::vector<std::uint32_t> out(slot * slot);
  for (std::size_t a = 0; a < slot; ++a) {
    const std::size_t ax = a / m, ay = a % m;
    for (std::size_t b = 0; b < slot; ++b) {
      const std::size_t bx = b / m, by = b % m;
      const std::size_t dx = (ax + m - bx) % m;
      const std::size_t dy = (ay + m - by) % m;
      out[a * slot + b] = static_cast<std::uint32_t>(dx * m + dy);
    }
  }
  return out;
}

std::vector<double> slot_k_squared(const GridSpec& g) {
  const std::size_t m = g.points_per_side();
  std::vector<double> out(g.nodes());
  for (std::size_t ix = 0; ix < m; ++ix)
    for (std::size_t iy = 0; iy < m; ++iy) {
      const double kx = g.wavenumber(ix), ky = g.wavenumber(iy);
      out[g.flat(ix, iy)] = kx * kx + ky * ky;
    }
  return out;
}

// Multiplies slot `axis` of the tensor by the per-slot factor f.
void scale_axis(std::span<cplx> data, std::size_t slot, std::size_t n, std::size_t axis,
                const std::vector<cplx>& f) {
  const std::size_t inner = inner_extent(slot, n, axis);
  const std::size_t block = slot * inner;
  for (std::size_t base = 0; base < data.size(); base += block)
    for (std::size_t s = 0; s < slot; ++s) {
      cplx* p = data.data() + base + s * inner;
      for (std::size_t i = 0; i < inner; ++i) p[i] *= f[s];
    }
}

// Potential energy of one configuration.
double potential_at(const Slots& s, std::size_t n, const std::vector<double>& pair,
                    const std::vector<std::uint32_t>& pair_index, std::size_t slot,
                    const Field2D& external) {
  double v = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    v += external[s[j]].real();
    if (!pair.empty())
      for (std::size_t k = j + 1; k < n; ++k) v += pair[pair_index[s[j] * slot + s[k]]];
  }
  return v;
}

void require_shape(const ManyBodyHamiltonian& h, const ManyBodyState& s) {
  if (s.particles != h.particles) throw ValidationError("many-body: particle count mismatch");
  require_same_grid(s.grid, h.grid, "many-body");
  if (s.amplitudes.size() != tensor_size(s.grid.points_per_side(), s.particles)) {
    throw ValidationError("many-body: tensor size mismatch");
  }
}

bool finite(std::span<const cplx> v) {
  return std::all_of(v.begin(), v.end(), [](cplx z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

double gradient1_sq_of(const GridSpec& g, std::size_t n, std::vector<cplx> t) {
  const std::size_t slot = g.nodes();
  fft::transform_axis(t, g.points_per_side(), n, 0, fft::Direction::forward);
  const std::vector<double> k2 = slot_k_squared(g);
  const std::size_t inner = inner_extent(slot, n, 0);
  double s = 0.0;
  for (std::size_t a = 0; a < slot; ++a)
    for (std::size_t i = 0; i < inner; ++i) s += k2[a] * std::norm(t[a * inner + i]);
  return s * weight(g, n);
}

}  // namespace

std::size_t tensor_size(std::size_t m, std::size_t particles) {
  std::size_t s = 1;
  for (std::size_t j = 0; j < particles; ++j) s *= m * m;
  return s;
}

double tensor_bytes(std::size_t m, std::size_t particles) {
  return 16.0 * std::pow(static_cast<double>(m), 2.0 * static_cast<double>(particles));
}

std::string admissible_table(double budget) {
  std::ostringstream os;
  os << "admissible (M, N) for a budget of " << std::fixed << std::setprecision(0) << budget
     << " bytes (16 * M^(2N) per state):\n";
  os << "     M    N          bytes  admissible\n";
  for (std::size_t m : {8, 12, 16, 24, 32}) {
    for (std::size_t n = 1; n <= max_particles; ++n) {
      const double b = tensor_bytes(m, n);
      os << std::setw(6) << m << std::setw(5) << n << std::setw(15) << std::setprecision(0) << b
         << "  " << (b <= budget ? "yes" : "no") << "\n";
    }
  }
  return os.str();
}

void require_budget(std::size_t m, std::size_t particles, double budget) {
  const double b = tensor_bytes(m, particles);
  if (b > budget) {
    std::ostringstream os;
    os << "memory budget: (M=" << m << ", N=" << particles << ") needs " << std::fixed
       << std::setprecision(0) << b << " bytes, budget is " << budget << " bytes\n"
       << admissible_table(budget);
    throw BudgetError(os.str());
  }
}

ManyBodyState zero_state(const GridSpec& grid, std::size_t particles, double budget) {
  check_particles(particles);
  require_budget(grid.points_per_side(), particles, budget);
  ManyBodyState s;
  s.particles = particles;
  s.grid = grid;
  s.amplitudes.assign(tensor_size(grid.points_per_side(), particles), cplx{0.0, 0.0});
  return s;
}

cplx tensor_inner(const GridSpec& grid, std::size_t particles, std::span<const cplx> a,
                  std::span<const cplx> b) {
  if (a.size() != b.size()) throw ValidationError("tensor_inner: size mismatch");
  cplx s{0.0, 0.0};
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
  return s * weight(grid, particles);
}

cplx tensor_inner(const ManyBodyState& a, std::span<const cplx> b) {
  return tensor_inner(a.grid, a.particles, a.amplitudes, b);
}

double tensor_norm_sq(const GridSpec& grid, std::size_t particles, std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return s * weight(grid, particles);
}

double state_norm(const ManyBodyState& s) {
  return std::sqrt(tensor_norm_sq(s.grid, s.particles, s.amplitudes));
}

void normalize(ManyBodyState& s) {
  const double n = state_norm(s);
  if (!(n > 0.0)) throw NumericError("normalize: zero state");
  for (auto& v : s.amplitudes) v /= n;
}

ManyBodyHamiltonian make_hamiltonian(const GridSpec& grid, std::size_t particles,
                                     const std::optional<ScaledPair>& pair,
                                     const ExternalPotentialSpec& external) {
  check_particles(particles);
  ManyBodyHamiltonian h;
  h.particles = particles;
  h.grid = grid;
  h.external = external;
  if (pair) {
    require_same_grid(pair->field.grid(), grid, "make_hamiltonian");
    if (pair->particles != particles) {
      throw ValidationError("make_hamiltonian: W_beta was scaled for a different N");
    }
    h.pair = pair->displacement;
    h.coupling = pair->base.integral();
  }
  return h;
}

std::vector<cplx> apply_hamiltonian(const ManyBodyHamiltonian& h, const ManyBodyState& state) {
  require_shape(h, state);
  const std::size_t n = state.particles;
  const std::size_t m = state.grid.points_per_side();
  const std::size_t slot = state.grid.nodes();
  std::vector<cplx> out(state.amplitudes);
  for (std::size_t a = 0; a < n; ++a) fft::transform_axis(out, m, n, a, fft::Direction::forward);
  const std::vector<double> k2 = slot_k_squared(state.grid);
  for_each_entry(n, slot, out.size(), [&](std::size_t idx, const Slots& s) {
    double kin = 0.0;
    for (std::size_t j = 0; j < n; ++j) kin += k2[s[j]];
    out[idx] *= kin;
  });
  for (std::size_t a = 0; a < n; ++a) fft::transform_axis(out, m, n, a, fft::Direction::inverse);

  const Field2D external = evaluate_external(h.external, state.t, state.grid);
  const std::vector<std::uint32_t> pair_index =
      h.pair.empty() ? std::vector<std::uint32_t>{} : build_pair_index(state.grid);
  for_each_entry(n, slot, out.size(), [&](std::size_t idx, const Slots& s) {
    out[idx] += potential_at(s, n, h.pair, pair_index, slot, external) * state.amplitudes[idx];
  });
  return out;
}

ManyBodyPropagator::ManyBodyPropagator(ManyBodyHamiltonian h, double dt, bool imaginary)
    : h_(std::move(h)), dt_(dt), imaginary_(imaginary) {
  if (dt == 0.0 || !std::isfinite(dt)) throw ValidationError("many-body: dt must be nonzero");
  const std::vector<double> k2 = slot_k_squared(h_.grid);
  kinetic_.resize(k2.size());
  for (std::size_t s = 0; s < k2.size(); ++s) {
    kinetic_[s] = imaginary_ ? cplx(std::exp(-dt_ * k2[s])) : std::polar(1.0, -dt_ * k2[s]);
  }
  if (!h_.pair.empty()) pair_index_ = build_pair_index(h_.grid);
}

void ManyBodyPropagator::diagonal(ManyBodyState& state, double tau) const {
  const std::size_t n = state.particles;
  const std::size_t slot = state.grid.nodes();
  const Field2D external = evaluate_external(h_.external, state.t + 0.5 * dt_, state.grid);
  auto factor = [this, tau](double v) {
    return imaginary_ ? cplx(std::exp(-tau * v)) : std::polar(1.0, -tau * v);
  };
  std::vector<cplx> ext(slot);
  for (std::size_t s = 0; s < slot; ++s) ext[s] = factor(external[s].real());
  std::vector<cplx> pair(h_.pair.size());
  for (std::size_t d = 0; d < pair.size(); ++d) pair[d] = factor(h_.pair[d]);

  for_each_entry(n, slot, state.amplitudes.size(), [&](std::size_t idx, const Slots& s) {
    cplx f = ext[s[0]];
    for (std::size_t j = 1; j < n; ++j) f *= ext[s[j]];
    if (!pair.empty())
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) f *= pair[pair_index_[s[j] * slot + s[k]]];
    state.amplitudes[idx] *= f;
  });
}

void ManyBodyPropagator::step(ManyBodyState& state) const {
  require_shape(h_, state);
  const std::size_t n = state.particles;
  const std::size_t m = state.grid.points_per_side();
  diagonal(state, 0.5 * dt_);
  for (std::size_t a = 0; a < n; ++a) {
    fft::transform_axis(state.amplitudes, m, n, a, fft::Direction::forward);
    scale_axis(state.amplitudes, state.grid.nodes(), n, a, kinetic_);
    fft::transform_axis(state.amplitudes, m, n, a, fft::Direction::inverse);
  }
  diagonal(state, 0.5 * dt_);
  state.t += dt_;
}

ManyBodyState evolve_manybody(const ManyBodyHamiltonian& h, ManyBodyState state,
                              double t_final, double dt, double budget) {
  require_budget(state.grid.points_per_side(), state.particles, budget);
  if (!(dt > 0.0)) throw ValidationError("evolve_manybody: dt must be positive");
  const double span = t_final - state.t;
  if (!(span > 0.0)) throw ValidationError("evolve_manybody: t_final must exceed t");
  const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
  const double t0 = state.t;
  ManyBodyPropagator prop(h, span / static_cast<double>(steps));
  for (std::size_t k = 1; k <= steps; ++k) {
    prop.step(state);
    state.t = t0 + static_cast<double>(k) * prop.dt();
  }
  if (!finite(state.amplitudes)) throw NumericError("evolve_manybody: non-finite amplitudes");
  return state;
}

std::vector<cplx> apply_projector(const GridSpec& grid, std::size_t particles,
                                  std::span<const cplx> tensor, Projector which,
                                  std::size_t site, const Field2D& phi) {
  if (site < 1 || site > particles) {
    std::ostringstream os;
    os << "apply_projector: site " << site << " outside 1.." << particles;
    throw ValidationError(os.str());
  }
  require_same_grid(grid, phi.grid(), "apply_projector");
  const std::size_t slot = grid.nodes();
  const std::size_t inner = inner_extent(slot, particles, site - 1);
  const std::size_t block = slot * inner;
  const double h2 = grid.cell_area();
  std::vector<cplx> out(tensor.size());
  std::vector<cplx> c(inner);
  for (std::size_t base = 0; base < tensor.size(); base += block) {
    std::fill(c.begin(), c.end(), cplx{0.0, 0.0});
    for (std::size_t s = 0; s < slot; ++s) {
      const cplx w = std::conj(phi[s]) * h2;
      const cplx* p = tensor.data() + base + s * inner;
      for (std::size_t i = 0; i < inner; ++i) c[i] += w * p[i];
    }
    for (std::size_t s = 0; s < slot; ++s) {
      cplx* o = out.data() + base + s * inner;
      const cplx* p = tensor.data() + base + s * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const cplx pv = phi[s] * c[i];
        o[i] = which == Projector::p ? pv : p[i] - pv;
      }
    }
  }
  return out;
}

ManyBodyState product_state(const Field2D& phi, std::size_t particles, double budget) {
  if (std::abs(norm(phi) - 1.0) > 1e-10) {
    throw ValidationError("product_state: phi must be normalised");
  }
  ManyBodyState s = zero_state(phi.grid(), particles, budget);
  for_each_entry(particles, phi.size(), s.amplitudes.size(), [&](std::size_t idx, const Slots& k) {
    cplx v = phi[k[0]];
    for (std::size_t j = 1; j < particles; ++j) v *= phi[k[j]];
    s.amplitudes[idx] = v;
  });
  return s;
}

Field2D orthogonal_partner(const Field2D& phi, const Field2D& candidate) {
  Field2D eta = candidate - phi * (inner(phi, candidate) / norm_sq(phi));
  const double n = norm(eta);
  if (!(n > 1e-12)) throw ValidationError("orthogonal_partner: candidate is parallel to phi");
  return eta * cplx(1.0 / n);
}

ManyBodyState gamma_state(const Field2D& phi, const Field2D& eta, std::size_t particles,
                          double budget) {
  if (std::abs(inner(phi, eta)) > 1e-10) {
    throw ValidationError("gamma_state: eta must be orthogonal to phi");
  }
  ManyBodyState s = zero_state(phi.grid(), particles, budget);
  const double scale = 1.0 / std::sqrt(static_cast<double>(particles));
  for_each_entry(particles, phi.size(), s.amplitudes.size(), [&](std::size_t idx, const Slots& k) {
    cplx total{0.0, 0.0};
    for (std::size_t odd = 0; odd < particles; ++odd) {
      cplx v{1.0, 0.0};
      for (std::size_t j = 0; j < particles; ++j) v *= j == odd ? eta[k[j]] : phi[k[j]];
      total += v;
    }
    s.amplitudes[idx] = scale * total;
  });
  return s;
}

void symmetrize(ManyBodyState& state) {
  const std::size_t n = state.particles;
  if (n < 2) return;
  const std::size_t slot = state.grid.nodes();
  std::vector<std::size_t> stride(n);
  for (std::size_t j = 0; j < n; ++j) stride[j] = inner_extent(slot, n, j);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<cplx> sum(state.amplitudes.size(), cplx{0.0, 0.0});
  double count = 0.0;
  do {
    for_each_entry(n, slot, sum.size(), [&](std::size_t idx, const Slots& s) {
      std::size_t src = 0;
      for (std::size_t j = 0; j < n; ++j) src += s[perm[j]] * stride[j];
      sum[idx] += state.amplitudes[src];
    });
    count += 1.0;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& v : sum) v /= count;
  state.amplitudes = std::move(sum);
}

ManyBodyState random_symmetric_state(const Field2D& phi, std::size_t particles, double scale,
                                     std::mt19937_64& rng) {
  ManyBodyState s = product_state(phi, particles);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cplx> noise(s.amplitudes.size());
  for (auto& v : noise) {
    const double re = normal(rng);
    const double im = normal(rng);
    v = cplx(re, im);
  }
  const double nn = std::sqrt(tensor_norm_sq(s.grid, particles, noise));
  for (std::size_t k = 0; k < noise.size(); ++k) s.amplitudes[k] += (scale / nn) * noise[k];
  symmetrize(s);
  normalize(s);
  return s;
}

SymmetryDefect symmetry_defect(const ManyBodyState& state) {
  SymmetryDefect out;
  const std::size_t n = state.particles;
  const std::size_t slot = state.grid.nodes();
  double peak = 0.0;
  for (const auto& v : state.amplitudes) peak = std::max(peak, std::abs(v));
  if (n < 2 || peak == 0.0) return out;
  std::vector<std::size_t> stride(n);
  for (std::size_t j = 0; j < n; ++j) stride[j] = inner_extent(slot, n, j);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      double worst = 0.0;
      for_each_entry(n, slot, state.amplitudes.size(), [&](std::size_t idx, const Slots& s) {
        const std::size_t swapped =
            idx + (s[b] * stride[a] + s[a] * stride[b]) - (s[a] * stride[a] + s[b] * stride[b]);
        worst = std::max(worst, std::abs(state.amplitudes[idx] - state.amplitudes[swapped]));
      });
      if (worst / peak > out.max_relative || out.axis_a == 0) {
        out.max_relative = worst / peak;
        out.axis_a = a + 1;
        out.axis_b = b + 1;
      }
    }
  return out;
}

std::vector<cplx> apply_z(const ManyBodyHamiltonian& h, std::span<const cplx> tensor,
                          const Field2D& phi) {
  const std::size_t n = h.particles;
  if (n < 2) throw ValidationError("apply_z: needs at least two particles");
  require_same_grid(h.grid, phi.grid(), "apply_z");
  const std::size_t slot = h.grid.nodes();
  const double c = h.counterterm_sign * h.coupling / static_cast<double>(n - 1);
  std::vector<double> rho(slot);
  for (std::size_t s = 0; s < slot; ++s) rho[s] = std::norm(phi[s]);
  const std::vector<std::uint32_t> pair_index =
      h.pair.empty() ? std::vector<std::uint32_t>{} : build_pair_index(h.grid);
  std::vector<cplx> out(tensor.size());
  for_each_entry(n, slot, tensor.size(), [&](std::size_t idx, const Slots& s) {
    double z = c * (rho[s[0]] + rho[s[1]]);
    if (!h.pair.empty()) z += h.pair[pair_index[s[0] * slot + s[1]]];
    out[idx] = z * tensor[idx];
  });
  return out;
}

double energy_variance(const ManyBodyHamiltonian& h, const ManyBodyState& state) {
  std::vector<cplx> hpsi = apply_hamiltonian(h, state);
  const double e = tensor_inner(state, hpsi).real();
  for (std::size_t k = 0; k < hpsi.size(); ++k) hpsi[k] -= e * state.amplitudes[k];
  const double n = static_cast<double>(state.particles);
  return tensor_norm_sq(state.grid, state.particles, hpsi) / (n * n);
}

double gradient1_sq(const ManyBodyState& state) {
  return gradient1_sq_of(state.grid, state.particles, state.amplitudes);
}

double gradient1_projected_sq(const ManyBodyState& state, std::size_t site, const Field2D& phi) {
  return gradient1_sq_of(state.grid, state.particles,
                         apply_projector(state.grid, state.particles, state.amplitudes,
                                         Projector::q, site, phi));
}

double q2_gradient1_sq(const ManyBodyState& state, const Field2D& phi) {
  if (state.particles < 2) throw ValidationError("q2_gradient1_sq: needs two particles");
  return gradient1_projected_sq(state, 2, phi);
}

double Sandwiches::q1_rate(std::size_t particles) const {
  return -2.0 * static_cast<double>(particles - 1) * (pp_qp + pp_qq + pq_qp + pq_qq).imag();
}

Sandwiches sandwich_terms(const ManyBodyHamiltonian& h, const ManyBodyState& state,
                          const Field2D& phi) {
  require_shape(h, state);
  const std::size_t n = state.particles;
  if (n < 2) throw ValidationError("sandwich_terms: needs at least two particles");
  const GridSpec& g = state.grid;
  auto proj = [&](std::span<const cplx> t, Projector w, std::size_t site) {
    return apply_projector(g, n, t, w, site, phi);
  };
  auto ip = [&](std::span<const cplx> a, std::span<const cplx> b) {
    return tensor_inner(g, n, a, b);
  };

  std::vector<cplx> p1 = proj(state.amplitudes, Projector::p, 1);
  std::vector<cplx> q1(state.amplitudes);
  for (std::size_t k = 0; k < q1.size(); ++k) q1[k] -= p1[k];
  const std::vector<cplx> p1p2 = proj(p1, Projector::p, 2);
  std::vector<cplx>& p1q2 = p1;
  for (std::size_t k = 0; k < p1q2.size(); ++k) p1q2[k] -= p1p2[k];
  const std::vector<cplx> q1p2 = proj(q1, Projector::p, 2);
  std::vector<cplx>& q1q2 = q1;
  for (std::size_t k = 0; k < q1q2.size(); ++k) q1q2[k] -= q1p2[k];

  Sandwiches out;
  {
    const std::vector<cplx> z = apply_z(h, q1p2, phi);
    out.pp_qp = ip(p1p2, z);
    out.pq_qp = ip(p1q2, z);
  }
  const std::vector<cplx> z = apply_z(h, q1q2, phi);
  out.pp_qq = ip(p1p2, z);
  out.pq_qq = ip(p1q2, z);
  out.qp_qq = ip(q1p2, z);
  return out;
}

FunctionalReport functional_report(const ManyBodyHamiltonian& h, const ManyBodyState& state,
                                   const Field2D& phi, const FunctionalOptions& options) {
  require_shape(h, state);
  const std::size_t n = state.particles;
  const GridSpec& g = state.grid;
  FunctionalReport r;

  const std::vector<cplx> q1 = apply_projector(g, n, state.amplitudes, Projector::q, 1, phi);
  r.q1 = tensor_norm_sq(g, n, q1);

  std::vector<cplx> hpsi = apply_hamiltonian(h, state);
  r.energy = tensor_inner(state, hpsi).real();
  for (std::size_t k = 0; k < hpsi.size(); ++k) hpsi[k] -= r.energy * state.amplitudes[k];
  r.variance = tensor_norm_sq(g, n, hpsi) / static_cast<double>(n * n);
  hpsi = {};
  r.alpha = r.q1 + r.variance;
  r.grad1 = std::sqrt(gradient1_sq(state));

  if (n >= 2) {
    const Sandwiches s = sandwich_terms(h, state, phi);
    const double two_n = 2.0 * static_cast<double>(n);
    r.gamma_pp_qp = two_n * std::abs(s.pp_qp);
    r.gamma_pp_qq = two_n * std::abs(s.pp_qq);
    r.gamma_qp_qq = two_n * std::abs(s.qp_qq);
    r.q2grad1 = std::sqrt(q2_gradient1_sq(state, phi));

    const std::vector<cplx> q1q2 = apply_projector(g, n, q1, Projector::q, 2, phi);
    if (!h.pair.empty()) {
      const std::vector<std::uint32_t> pair_index = build_pair_index(g);
      const std::size_t slot = g.nodes();
      double acc = 0.0;
      for_each_entry(n, slot, q1q2.size(), [&](std::size_t idx, const Slots& s2) {
        acc += std::abs(h.pair[pair_index[s2[0] * slot + s2[1]]]) * std::norm(q1q2[idx]);
      });
      r.wsq_q1q2 = std::sqrt(static_cast<double>(n) * acc * weight(g, n));
    }
  }
  if (options.distances) {
    const ReducedDensity gamma = reduced_density_1(state);
    r.trdist = trace_distance(gamma, phi);
    r.sobdist = sobolev_trace_distance(gamma, phi);
  }
  return r;
}

DerivativeCheck dq1dt_identity_check(const ManyBodyHamiltonian& h, const ManyBodyState& state,
                                     const Field2D& phi, double dt) {
  if (state.particles < 2) throw ValidationError("dq1dt_identity_check: needs N >= 2");
  if (!(dt > 0.0)) throw ValidationError("dq1dt_identity_check: dt must be positive");
  NLSParams np;
  np.coupling = h.coupling;
  np.external = h.external;

  struct Sample {
    double q1;
    double variance;
  };
  auto sample_after = [&](double step) {
    ManyBodyState s = state;
    ManyBodyPropagator(h, step).step(s);
    np.dt = step;
    NLSState f{phi, state.t};
    StrangPropagator(phi.grid(), np).step(f);
    const std::vector<cplx> q =
        apply_projector(s.grid, s.particles, s.amplitudes, Projector::q, 1, f.phi);
    return Sample{tensor_norm_sq(s.grid, s.particles, q), energy_variance(h, s)};
  };

  DerivativeCheck out;
  const Sample fwd = sample_after(dt);
  const Sample bwd = sample_after(-dt);
  out.finite_difference = (fwd.q1 - bwd.q1) / (2.0 * dt);
  const Sandwiches s = sandwich_terms(h, state, phi);
  out.analytic = s.q1_rate(state.particles);
  out.residual = std::abs(out.finite_difference - out.analytic);
  out.im_pq_qp = s.pq_qp.imag();

  double variance_rate = 0.0;
  if (!h.external.is_static()) {
    const double delta = 1e-4;
    const Field2D rate = (evaluate_external(h.external, state.t + delta, state.grid) -
                          evaluate_external(h.external, state.t - delta, state.grid)) *
                         cplx(0.5 / delta);
    const std::size_t n = state.particles;
    const std::size_t slot = state.grid.nodes();
    std::vector<cplx> hpsi = apply_hamiltonian(h, state);
    const double e = tensor_inner(state, hpsi).real();
    cplx acc = 0.0;
    for_each_entry(n, slot, hpsi.size(), [&](std::size_t idx, const Slots& sl) {
      double a = 0.0;
      for (std::size_t j = 0; j < n; ++j) a += rate[sl[j]].real();
      acc += std::conj(hpsi[idx] - e * state.amplitudes[idx]) * a * state.amplitudes[idx];
    });
    const double nn = static_cast<double>(n);
    variance_rate = 2.0 * (acc * weight(state.grid, n)).real() / (nn * nn);
  }
  out.alpha_finite_difference =
      out.finite_difference + (fwd.variance - bwd.variance) / (2.0 * dt);
  out.alpha_analytic = out.analytic + variance_rate;
  out.alpha_residual = std::abs(out.alpha_finite_difference - out.alpha_analytic);
  return out;
}

}  // namespace mfnls
