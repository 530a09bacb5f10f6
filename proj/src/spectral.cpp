#include "mfnls/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfnls/fft.hpp"

namespace mfnls {
namespace {

void require_position(const Field2D& f, const char* where) {
  if (f.space() != Space::position) {
    throw ValidationError(std::string(where) + ": expected a position-space field");
  }
}

}  // namespace

Field2D to_frequency(const Field2D& f) {
  require_position(f, "to_frequency");
  std::vector<cplx> v(f.storage());
  fft::transform_2d(v, f.grid().points_per_side(), fft::Direction::forward);
  return Field2D(f.grid(), std::move(v), Space::frequency);
}

Field2D to_position(const Field2D& f) {
  if (f.space() != Space::frequency) {
    throw ValidationError("to_position: expected a frequency-space field");
  }
  std::vector<cplx> v(f.storage());
  fft::transform_2d(v, f.grid().points_per_side(), fft::Direction::inverse);
  return Field2D(f.grid(), std::move(v), Space::position);
}

Field2D apply_fourier_multiplier(const Field2D& f,
                                 const std::function<cplx(double, double)>& multiplier) {
  Field2D spec = to_frequency(f);
  const auto& g = f.grid();
  const std::size_t m = g.points_per_side();
  for (std::size_t ix = 0; ix < m; ++ix) {
    const double kx = g.wavenumber(ix);
    for (std::size_t iy = 0; iy < m; ++iy) {
      spec(ix, iy) *= multiplier(kx, g.wavenumber(iy));
    }
  }
  return to_position(spec);
}

Field2D apply_laplacian(const Field2D& f) {
  return apply_fourier_multiplier(f, [](double kx, double ky) { return cplx(kx * kx + ky * ky); });
}

std::pair<Field2D, Field2D> gradient(const Field2D& f) {
  require_position(f, "gradient");
  const auto& g = f.grid();
  const std::size_t m = g.points_per_side();
  const Field2D spec = to_frequency(f);
  Field2D dx(g, Space::frequency);
  Field2D dy(g, Space::frequency);
  const cplx i(0.0, 1.0);
  for (std::size_t ix = 0; ix < m; ++ix) {
    const double kx = g.is_nyquist(ix) ? 0.0 : g.wavenumber(ix);
    for (std::size_t iy = 0; iy < m; ++iy) {
      const double ky = g.is_nyquist(iy) ? 0.0 : g.wavenumber(iy);
      dx(ix, iy) = i * kx * spec(ix, iy);
      dy(ix, iy) = i * ky * spec(ix, iy);
    }
  }
  return {to_position(dx), to_position(dy)};
}

Field2D poisson_solve_zero_mean(const Field2D& rhs, double mean_tolerance) {
  require_position(rhs, "poisson_solve_zero_mean");
  const double scale = sup_norm(rhs);
  const double avg = std::abs(mean(rhs));
  if (avg > mean_tolerance * scale) {
    std::ostringstream os;
    os << "poisson_solve_zero_mean: right-hand side has mean " << avg
       << " (sup norm " << scale << "); the source pair is not mass balanced";
    throw ValidationError(os.str());
  }
  return apply_fourier_multiplier(rhs, [](double kx, double ky) {
    const double k2 = kx * kx + ky * ky;
    return k2 == 0.0 ? cplx(0.0) : cplx(-1.0 / k2);
  });
}

Field2D sobolev_multiplier(const Field2D& f) {
  return apply_fourier_multiplier(
      f, [](double kx, double ky) { return cplx(std::sqrt(1.0 + kx * kx + ky * ky)); });
}

Field2D dilate(const Field2D& f, double scale) {
  require_position(f, "dilate");
  const auto& g = f.grid();
  const std::size_t m = g.points_per_side();
  const Field2D spec = to_frequency(f);

  // E(i, k) = M^{-1/2} exp(i k (s x_i + L/2)); the Nyquist column uses the
  // real cosine so the interpolant of a real field is real.
  Eigen::MatrixXcd basis(m, m);
  const double half = 0.5 * g.box_length();
  const double norm_factor = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const double x = scale * g.coordinate(i) + half;
    if (x < 0.0 || x >= g.box_length()) {
      basis.row(i).setZero();
      continue;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double kk = g.wavenumber(k);
      basis(i, k) = g.is_nyquist(k) ? cplx(norm_factor * std::cos(kk * x))
                                    : norm_factor * std::polar(1.0, kk * x);
    }
  }
  Eigen::MatrixXcd coeff(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) coeff(a, b) = spec(a, b);
  const Eigen::MatrixXcd out = basis * coeff * basis.transpose();

  Field2D result(g);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) result(a, b) = out(a, b);
  return result;
}

cplx inner(const Field2D& f, const Field2D& g) {
  require_same_grid(f.grid(), g.grid(), "inner");
  cplx s{0.0, 0.0};
  for (std::size_t k = 0; k < f.size(); ++k) s += std::conj(f[k]) * g[k];
  return s * f.grid().cell_area();
}

double norm_sq(const Field2D& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return s * f.grid().cell_area();
}

double norm(const Field2D& f) { return std::sqrt(norm_sq(f)); }

double lp_norm(const Field2D& f, double p) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid().cell_area(), 1.0 / p);
}

double sup_norm(const Field2D& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s = std::max(s, std::abs(v));
  return s;
}

cplx integral(const Field2D& f) {
  cplx s{0.0, 0.0};
  for (const auto& v : f.values()) s += v;
  return s * f.grid().cell_area();
}

cplx mean(const Field2D& f) {
  return integral(f) / (f.grid().box_length() * f.grid().box_length());
}

double gradient_norm_sq(const Field2D& f) {
  const Field2D spec = to_frequency(f);
  const auto& g = f.grid();
  const std::size_t m = g.points_per_side();
  double s = 0.0;
  for (std::size_t ix = 0; ix < m; ++ix) {
    const double kx = g.wavenumber(ix);
    for (std::size_t iy = 0; iy < m; ++iy) {
      const double ky = g.wavenumber(iy);
      s += (kx * kx + ky * ky) * std::norm(spec(ix, iy));
    }
  }
  return s * g.cell_area();
}

double boundary_max(const Field2D& f) {
  const std::size_t m = f.grid().points_per_side();
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    s = std::max({s, std::abs(f(0, i)), std::abs(f(m - 1, i)), std::abs(f(i, 0)),
                  std::abs(f(i, m - 1))});
  }
  return s;
}

void require_decayed(const Field2D& f, double tolerance, const char* what) {
  const double b = boundary_max(f);
  if (b > tolerance) {
    std::ostringstream os;
    os << what << " has not decayed at the box edge: max |f| = " << b << " > " << tolerance
       << "; enlarge the box";
    throw ValidationError(os.str());
  }
}

}  // namespace mfnls
