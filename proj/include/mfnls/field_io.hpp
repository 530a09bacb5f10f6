#pragma once

#include <iosfwd>
#include <span>

#include "mfnls/grid.hpp"

namespace mfnls {

// Binary field layout, all little-endian: L (float64), M (int64), then M*M
// (re, im) float64 pairs in row-major order.
void write_field_binary(std::ostream& os, const Field2D& f);
Field2D read_field_binary(std::istream& is);

/// CSV with header "x,y,re,im", one row per node.
void write_field_csv(std::ostream& os, const Field2D& f);

// Many-body snapshot layout: N (int64), M (int64), L (float64), t (float64),
// then the flat tensor as (re, im) float64 pairs.
struct TensorSnapshot {
  std::size_t particles = 0;
  GridSpec grid;
  double time = 0.0;
  std::vector<cplx> amplitudes;
};
void write_tensor_binary(std::ostream& os, std::size_t particles, const GridSpec& grid,
                         double time, std::span<const cplx> amplitudes);
TensorSnapshot read_tensor_binary(std::istream& is);

}  // namespace mfnls
