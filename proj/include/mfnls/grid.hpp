#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfnls {

using cplx = std::complex<double>;

/// Errors raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Errors raised when a computation produces non-finite values or fails to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Refusal to allocate beyond the configured memory budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform periodic grid on the torus [-L/2, L/2)^2 with M nodes per side.
///
/// Node (ix, iy) sits at (-L/2 + ix*h, -L/2 + iy*h). Storage everywhere is
/// row-major with x as the slow index. Frequency-space arrays follow the FFT
/// ordering: index i carries wavenumber (2*pi/L)*i for i < M/2 and
/// (2*pi/L)*(i - M) otherwise, so the Nyquist mode is -M/2.
class GridSpec {
 public:
  GridSpec() = default;

  double box_length() const { return box_length_; }
  std::size_t points_per_side() const { return points_; }
  double spacing() const { return box_length_ / static_cast<double>(points_); }
  std::size_t nodes() const { return points_ * points_; }
  /// Quadrature weight h^2 of one node.
  double cell_area() const { return spacing() * spacing(); }

  double coordinate(std::size_t i) const {
    return -0.5 * box_length_ + static_cast<double>(i) * spacing();
  }
  /// Inverse of coordinate(); the result is exact for node coordinates.
  std::size_t index_of(double x) const;

  /// Wavenumber of FFT-ordered index i.
  double wavenumber(std::size_t i) const;
  bool is_nyquist(std::size_t i) const { return i == points_ / 2; }
  double max_wavenumber() const;

  std::size_t flat(std::size_t ix, std::size_t iy) const { return ix * points_ + iy; }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.box_length_ == b.box_length_ && a.points_ == b.points_;
  }

 private:
  friend GridSpec make_grid(double box_length, std::size_t points_per_side);
  double box_length_ = 0.0;
  std::size_t points_ = 0;
};

/// Validates (L, M) and builds the grid: M must be even and at least 8, L finite and positive.
GridSpec make_grid(double box_length, std::size_t points_per_side);

enum class Space { position, frequency };

/// One complex amplitude per grid node.
///
/// Frequency-space values use the unitary DFT normalisation, so the
/// quadrature h^2 * sum |f|^2 gives the same L2 norm in both spaces.
class Field2D {
 public:
  Field2D() = default;
  explicit Field2D(GridSpec grid, Space space = Space::position);
  Field2D(GridSpec grid, std::vector<cplx> values, Space space = Space::position);

  /// Samples f(x, y) at every node.
  static Field2D from_function(const GridSpec& grid,
                               const std::function<cplx(double, double)>& f);

  const GridSpec& grid() const { return grid_; }
  Space space() const { return space_; }
  std::size_t size() const { return values_.size(); }

  std::span<const cplx> values() const { return values_; }
  std::span<cplx> values() { return values_; }
  const std::vector<cplx>& storage() const { return values_; }

  cplx operator()(std::size_t ix, std::size_t iy) const { return values_[grid_.flat(ix, iy)]; }
  cplx& operator()(std::size_t ix, std::size_t iy) { return values_[grid_.flat(ix, iy)]; }
  cplx operator[](std::size_t k) const { return values_[k]; }
  cplx& operator[](std::size_t k) { return values_[k]; }

  Field2D& operator+=(const Field2D& o);
  Field2D& operator-=(const Field2D& o);
  Field2D& operator*=(cplx s);

 private:
  GridSpec grid_;
  std::vector<cplx> values_;
  Space space_ = Space::position;
};

Field2D operator+(Field2D a, const Field2D& b);
Field2D operator-(Field2D a, const Field2D& b);
Field2D operator*(Field2D a, cplx s);
Field2D operator*(cplx s, Field2D a);
/// Pointwise product.
Field2D pointwise(const Field2D& a, const Field2D& b);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where);

}  // namespace mfnls
