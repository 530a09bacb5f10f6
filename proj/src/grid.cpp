#include "mfnls/grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mfnls {

GridSpec make_grid(double box_length, std::size_t points_per_side) {
  if (!std::isfinite(box_length) || box_length <= 0.0) {
    throw ValidationError("grid: box length must be finite and positive");
  }
  if (points_per_side % 2 != 0) {
    std::ostringstream os;
    os << "grid: points per side must be even, got " << points_per_side;
    throw ValidationError(os.str());
  }
  if (points_per_side < 8) {
    std::ostringstream os;
    os << "grid: points per side must be at least 8, got " << points_per_side;
    throw ValidationError(os.str());
  }
  GridSpec g;
  g.box_length_ = box_length;
  g.points_ = points_per_side;
  return g;
}

std::size_t GridSpec::index_of(double x) const {
  const double r = std::round((x + 0.5 * box_length_) / spacing());
  if (r < 0.0 || r >= static_cast<double>(points_)) {
    throw ValidationError("grid: coordinate outside the box");
  }
  return static_cast<std::size_t>(r);
}

double GridSpec::wavenumber(std::size_t i) const {
  const double dk = 2.0 * std::numbers::pi / box_length_;
  const auto m = static_cast<std::ptrdiff_t>(points_);
  auto n = static_cast<std::ptrdiff_t>(i);
  if (n >= m / 2) n -= m;
  return dk * static_cast<double>(n);
}

double GridSpec::max_wavenumber() const {
  return std::numbers::pi / spacing();
}

Field2D::Field2D(GridSpec grid, Space space)
    : grid_(grid), values_(grid.nodes(), cplx{0.0, 0.0}), space_(space) {}

Field2D::Field2D(GridSpec grid, std::vector<cplx> values, Space space)
    : grid_(grid), values_(std::move(values)), space_(space) {
  if (values_.size() != grid_.nodes()) {
    throw ValidationError("field: value count does not match grid");
  }
}

Field2D Field2D::from_function(const GridSpec& grid,
                               const std::function<cplx(double, double)>& f) {
  Field2D out(grid);
  const std::size_t m = grid.points_per_side();
  for (std::size_t ix = 0; ix < m; ++ix) {
    const double x = grid.coordinate(ix);
    for (std::size_t iy = 0; iy < m; ++iy) {
      out(ix, iy) = f(x, grid.coordinate(iy));
    }
  }
  return out;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b)) {
    throw ValidationError(std::string(where) + ": fields live on different grids");
  }
}

Field2D& Field2D::operator+=(const Field2D& o) {
  require_same_grid(grid_, o.grid_, "field +=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

Field2D& Field2D::operator-=(const Field2D& o) {
  require_same_grid(grid_, o.grid_, "field -=");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

Field2D& Field2D::operator*=(cplx s) {
  for (auto& v : values_) v *= s;
  return *this;
}

Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
Field2D operator*(Field2D a, cplx s) { return a *= s; }
Field2D operator*(cplx s, Field2D a) { return a *= s; }

Field2D pointwise(const Field2D& a, const Field2D& b) {
  require_same_grid(a.grid(), b.grid(), "pointwise");
  Field2D out(a.grid(), a.space());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

}  // namespace mfnls
