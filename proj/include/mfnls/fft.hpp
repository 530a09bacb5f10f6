#pragma once

#include <cstddef>
#include <span>

#include "mfnls/grid.hpp"

namespace mfnls::fft {

enum class Direction { forward, inverse };

/// In-place unitary 2D DFT of one M x M row-major array.
void transform_2d(std::span<cplx> data, std::size_t m, Direction dir);

/// In-place unitary 2D DFT over the `axis`-th particle slot of a tensor holding
/// `particles` slots of M*M entries each (slot 0 is the slowest index).
/// Every other slot index is batched.
void transform_axis(std::span<cplx> data, std::size_t m, std::size_t particles,
                    std::size_t axis, Direction dir);

}  // namespace mfnls::fft
