#include "mfnls/potentials.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "mfnls/fft.hpp"
#include "mfnls/spectral.hpp"

namespace mfnls {
namespace {

constexpr double pi = std::numbers::pi;

double bump_shape(double u) {
  if (u >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

// int_{r0}^{r1} r (w0 + s (r - r0)) dr
double linear_segment_moment(double r0, double r1, double w0, double s) {
  const double a2 = 0.5 * (r1 * r1 - r0 * r0);
  const double a3 = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
  return w0 * a2 + s * (a3 - r0 * a2);
}

// Area of the disk intersected with the quadrant {x <= X, y <= Y}.
double disk_quadrant_area(double X, double Y, double R) {
  if (X <= -R || Y <= -R) return 0.0;
  X = std::min(X, R);
  auto s = [R](double x) { return std::sqrt(std::max(R * R - x * x, 0.0)); };
  // Antiderivative of s(x).
  auto S = [R, &s](double x) {
    const double u = std::clamp(x / R, -1.0, 1.0);
    return 0.5 * (x * s(x) + R * R * std::asin(u));
  };
  auto chord_full = [&](double lo, double hi) { return hi > lo ? 2.0 * (S(hi) - S(lo)) : 0.0; };
  auto chord_cut = [&](double lo, double hi) {
    return hi > lo ? Y * (hi - lo) + (S(hi) - S(lo)) : 0.0;
  };
  if (Y >= R) return chord_full(-R, X);

  const double xy = std::sqrt(R * R - Y * Y);
  // On |x| <= xy the column [-s, s] is cut at Y; outside it the column is either
  // entirely below Y (Y > 0) or entirely above (Y < 0).
  double area = chord_cut(-xy, std::min(X, xy));
  if (Y >= 0.0) {
    area += chord_full(-R, std::min(X, -xy));
    area += chord_full(xy, X);
  }
  return area;
}

void check_radius(double radius) {
  if (!std::isfinite(radius) || radius <= 0.0) {
    throw ValidationError("pair potential: support radius must be finite and positive");
  }
}

}  // namespace

PairPotentialSpec PairPotentialSpec::disk(double amplitude, double radius) {
  check_radius(radius);
  PairPotentialSpec w;
  w.shape_ = PairShape::disk_indicator;
  w.amplitude_ = amplitude;
  w.radius_ = radius;
  w.integral_ = amplitude * pi * radius * radius;
  w.negative_integral_ = std::max(-w.integral_, 0.0);
  return w;
}

PairPotentialSpec PairPotentialSpec::bump(double amplitude, double radius) {
  check_radius(radius);
  PairPotentialSpec w;
  w.shape_ = PairShape::smooth_bump;
  w.amplitude_ = amplitude;
  w.radius_ = radius;
  const double unit = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double u) { return u * bump_shape(u); }, 0.0, 1.0, 15, 1e-15);
  w.integral_ = 2.0 * pi * amplitude * radius * radius * unit;
  w.negative_integral_ = std::max(-w.integral_, 0.0);
  return w;
}

PairPotentialSpec PairPotentialSpec::table(std::vector<std::pair<double, double>> profile) {
  if (profile.size() < 2) throw ValidationError("pair potential: table needs at least two rows");
  if (profile.front().first != 0.0) {
    throw ValidationError("pair potential: table must start at r = 0");
  }
  for (std::size_t i = 1; i < profile.size(); ++i) {
    if (!(profile[i].first > profile[i - 1].first)) {
      throw ValidationError("pair potential: table radii must increase strictly");
    }
  }
  PairPotentialSpec w;
  w.shape_ = PairShape::table;
  w.radius_ = profile.back().first;
  double peak = 0.0;
  double total = 0.0;
  double negative = 0.0;
  for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
    const auto [r0, w0] = profile[i];
    const auto [r1, w1] = profile[i + 1];
    const double slope = (w1 - w0) / (r1 - r0);
    total += linear_segment_moment(r0, r1, w0, slope);
    if (w0 < 0.0 || w1 < 0.0) {
      if (w0 <= 0.0 && w1 <= 0.0) {
        negative -= linear_segment_moment(r0, r1, w0, slope);
      } else {
        const double rc = r0 - w0 / slope;
        if (w0 < 0.0) negative -= linear_segment_moment(r0, rc, w0, slope);
        else negative -= linear_segment_moment(rc, r1, 0.0, slope);
      }
    }
    if (std::abs(w0) > std::abs(peak)) peak = w0;
  }
  w.amplitude_ = peak;
  w.integral_ = 2.0 * pi * total;
  w.negative_integral_ = 2.0 * pi * negative;
  w.table_ = std::move(profile);
  return w;
}

double PairPotentialSpec::profile(double r) const {
  switch (shape_) {
    case PairShape::disk_indicator:
      return r < radius_ ? amplitude_ : 0.0;
    case PairShape::smooth_bump:
      return amplitude_ * bump_shape(r / radius_);
    case PairShape::table: {
      if (r >= radius_) return 0.0;
      auto it = std::upper_bound(table_.begin(), table_.end(), r,
                                 [](double v, const auto& row) { return v < row.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double t = (r - lo.first) / (hi.first - lo.first);
      return lo.second + t * (hi.second - lo.second);
    }
  }
  return 0.0;
}

double disk_rectangle_overlap(double x0, double x1, double y0, double y1, double radius) {
  return disk_quadrant_area(x1, y1, radius) - disk_quadrant_area(x0, y1, radius) -
         disk_quadrant_area(x1, y0, radius) + disk_quadrant_area(x0, y0, radius);
}

Field2D realize_radial(const GridSpec& grid, const PairPotentialSpec& base, double amplitude_scale,
                       double argument_scale, double target_integral) {
  const double radius = base.support_radius() / argument_scale;
  const double h = grid.spacing();
  if (radius >= 0.5 * grid.box_length() - h) {
    std::ostringstream os;
    os << "potential support radius " << radius << " does not fit in the box of side "
       << grid.box_length();
    throw ValidationError(os.str());
  }
  const std::size_t m = grid.points_per_side();
  Field2D out(grid);
  if (base.shape() == PairShape::disk_indicator) {
    const double value = amplitude_scale * base.amplitude() / grid.cell_area();
    for (std::size_t ix = 0; ix < m; ++ix) {
      const double x = grid.coordinate(ix);
      if (std::abs(x) > radius + h) continue;
      for (std::size_t iy = 0; iy < m; ++iy) {
        const double y = grid.coordinate(iy);
        if (std::abs(y) > radius + h) continue;
        const double area =
            disk_rectangle_overlap(x - 0.5 * h, x + 0.5 * h, y - 0.5 * h, y + 0.5 * h, radius);
        out(ix, iy) = value * area;
      }
    }
    return out;
  }

  double sum = 0.0;
  for (std::size_t ix = 0; ix < m; ++ix) {
    const double x = grid.coordinate(ix);
    for (std::size_t iy = 0; iy < m; ++iy) {
      const double y = grid.coordinate(iy);
      const double v = amplitude_scale * base.profile(argument_scale * std::hypot(x, y));
      out(ix, iy) = v;
      sum += v;
    }
  }
  sum *= grid.cell_area();
  if (sum != 0.0 && target_integral != 0.0) out *= target_integral / sum;
  return out;
}

std::vector<double> displacement_table(const Field2D& centred) {
  const std::size_t m = centred.grid().points_per_side();
  std::vector<double> out(m * m);
  for (std::size_t dx = 0; dx < m; ++dx)
    for (std::size_t dy = 0; dy < m; ++dy)
      out[dx * m + dy] = centred((dx + m / 2) % m, (dy + m / 2) % m).real();
  return out;
}

Field2D periodic_convolution(const std::vector<double>& displacement, const Field2D& rho) {
  const auto& g = rho.grid();
  const std::size_t m = g.points_per_side();
  if (displacement.size() != g.nodes()) throw ValidationError("convolution: size mismatch");
  std::vector<cplx> a(displacement.begin(), displacement.end());
  std::vector<cplx> b(rho.storage());
  fft::transform_2d(a, m, fft::Direction::forward);
  fft::transform_2d(b, m, fft::Direction::forward);
  const double factor = static_cast<double>(m) * g.cell_area();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] *= b[k] * factor;
  fft::transform_2d(a, m, fft::Direction::inverse);
  return Field2D(g, std::move(a));
}

ScaledPair scale_pair_potential(const PairPotentialSpec& base, std::size_t particles, double beta,
                                const GridSpec& grid) {
  if (particles < 1) throw ValidationError("scale_pair_potential: N must be at least 1");
  if (!(beta >= 0.0)) throw ValidationError("scale_pair_potential: beta must be nonnegative");
  const double n = static_cast<double>(particles);
  ScaledPair s;
  s.base = base;
  s.particles = particles;
  s.beta = beta;
  s.peak_amplitude = std::pow(n, -1.0 + 2.0 * beta) * base.amplitude();
  s.support_radius = base.support_radius() * std::pow(n, -beta);
  const double h = grid.spacing();
  if (s.support_radius < 4.0 * h) {
    auto needed = static_cast<std::size_t>(std::ceil(4.0 * grid.box_length() / s.support_radius));
    needed += needed % 2;
    std::ostringstream os;
    os << "scale_pair_potential: scaled radius " << s.support_radius
       << " is under-resolved (needs at least 4 cells); use M >= " << needed;
    throw ValidationError(os.str());
  }
  s.field = realize_radial(grid, base, std::pow(n, -1.0 + 2.0 * beta), std::pow(n, beta),
                           base.integral() / n);
  s.grid_integral = integral(s.field).real();
  s.displacement = displacement_table(s.field);
  return s;
}

SmearedPotential build_smeared(const ScaledPair& scaled, double beta1) {
  if (!(beta1 >= 0.0) || beta1 > scaled.beta) {
    throw ValidationError("build_smeared: beta1 must lie in [0, beta]");
  }
  const GridSpec& grid = scaled.field.grid();
  const double n = static_cast<double>(scaled.particles);
  const double radius = std::pow(n, -beta1);
  if (radius < 4.0 * grid.spacing()) {
    throw ValidationError("build_smeared: reference bump radius is under-resolved");
  }
  const double a = scaled.base.integral();
  SmearedPotential out;
  out.beta1 = beta1;
  out.reference = realize_radial(grid, PairPotentialSpec::disk(a / std::numbers::pi, 1.0),
                                 std::pow(n, -1.0 + 2.0 * beta1), std::pow(n, beta1), a / n);
  out.smeared = poisson_solve_zero_mean(scaled.field - out.reference);
  out.h_l2 = norm(out.smeared);
  out.h_l1 = lp_norm(out.smeared, 1.0);
  out.grad_h_l2 = std::sqrt(gradient_norm_sq(out.smeared));
  return out;
}

double ExternalPotentialSpec::negative_part_bound() const {
  double bound = 0.0;
  if (family == ExternalFamily::table) {
    for (const auto& [t, field] : snapshots)
      for (const auto& v : field.values()) bound = std::max(bound, -v.real());
  }
  return bound;
}

Field2D evaluate_external(const ExternalPotentialSpec& spec, double t, const GridSpec& grid) {
  const double factor = spec.time_dependence == TimeDependence::ramp ? 1.0 + spec.rate * t : 1.0;
  switch (spec.family) {
    case ExternalFamily::zero:
      return Field2D(grid);
    case ExternalFamily::harmonic:
      return Field2D::from_function(
          grid, [factor](double x, double y) { return cplx(factor * (x * x + y * y)); });
    case ExternalFamily::power: {
      if (!(spec.coefficient > 0.0)) {
        throw ValidationError("external potential: power family needs C > 0");
      }
      const double c = spec.coefficient * factor;
      const double s = spec.exponent;
      return Field2D::from_function(
          grid, [c, s](double x, double y) { return cplx(c * std::pow(std::hypot(x, y), s)); });
    }
    case ExternalFamily::table: {
      const auto& snaps = spec.snapshots;
      if (snaps.empty()) throw ValidationError("external potential: empty snapshot table");
      if (t < snaps.front().first || t > snaps.back().first) {
        std::ostringstream os;
        os << "external potential: t = " << t << " outside the table range ["
           << snaps.front().first << ", " << snaps.back().first << "]";
        throw ValidationError(os.str());
      }
      for (const auto& s : snaps) require_same_grid(s.second.grid(), grid, "external table");
      if (snaps.size() == 1) return snaps.front().second * cplx(factor);
      auto it = std::upper_bound(snaps.begin(), snaps.end(), t,
                                 [](double v, const auto& s) { return v < s.first; });
      if (it == snaps.end()) --it;
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (t - lo.first) / (hi.first - lo.first);
      Field2D out = lo.second * cplx(1.0 - w) + hi.second * cplx(w);
      return out * cplx(factor);
    }
  }
  return Field2D(grid);
}

double gn_ratio(const Field2D& u) {
  const double l4 = std::pow(lp_norm(u, 4.0), 4.0);
  if (!(l4 > 0.0)) throw ValidationError("gn_ratio: field vanishes identically");
  return 2.0 * gradient_norm_sq(u) * norm_sq(u) / l4;
}

StabilityEstimate stability_ratio_estimate(const PairPotentialSpec& w,
                                           const std::vector<Field2D>& trials) {
  if (trials.empty()) throw ValidationError("stability_ratio_estimate: no trial functions");
  StabilityEstimate best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Field2D& phi = trials[i];
    const GridSpec& g = phi.grid();
    const Field2D wfield = realize_radial(g, w, 1.0, 1.0, w.integral());
    Field2D rho(g);
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = std::norm(phi[k]);
    const Field2D conv = periodic_convolution(displacement_table(wfield), rho);
    const double numerator = inner(rho, conv).real();
    const double denominator = norm_sq(phi) * gradient_norm_sq(phi);
    if (!(denominator > 0.0)) throw ValidationError("stability_ratio_estimate: degenerate trial");
    const double ratio = numerator / denominator;
    if (ratio < best.value) {
      best.value = ratio;
      best.best_trial = i;
    }
  }
  return best;
}

std::vector<Field2D> gaussian_trials(const GridSpec& grid, const std::vector<double>& widths) {
  std::vector<Field2D> out;
  out.reserve(widths.size());
  for (double s : widths) {
    out.push_back(Field2D::from_function(grid, [s](double x, double y) {
      return cplx(std::exp(-(x * x + y * y) / (2.0 * s * s)));
    }));
  }
  return out;
}

}  // namespace mfnls
