#pragma once

#include <Eigen/Dense>

#include <cstddef>

#include "mfnls/grid.hpp"
#include "mfnls/manybody.hpp"

namespace mfnls {

/// One-particle reduced density gamma(x, x') = int Psi(x, ...) Psi*(x', ...) as an
/// M^2 x M^2 matrix with the quadrature weights folded in: entry (a, b) is
/// h^2 gamma(x_a, x_b), so the matrix trace is the continuum trace.
struct ReducedDensity {
  GridSpec grid;
  Eigen::MatrixXcd matrix;
};

/// Partial trace over every particle except `keep_site` (1-based).
ReducedDensity reduced_density_1(const ManyBodyState& state, std::size_t keep_site = 1);

/// |phi><phi| in the same representation.
ReducedDensity pure_density(const Field2D& phi);

/// Tr |gamma - |phi><phi||.
double trace_distance(const ReducedDensity& gamma, const Field2D& phi);

/// Tr |sqrt(1 - Laplacian) (gamma - |phi><phi|) sqrt(1 - Laplacian)|.
double sobolev_trace_distance(const ReducedDensity& gamma, const Field2D& phi);

/// Eigenvalues in ascending order.
Eigen::VectorXd density_spectrum(const ReducedDensity& gamma);

/// Matrix of sqrt(1 - Laplacian) acting on nodal vectors.
Eigen::MatrixXcd sobolev_matrix(const GridSpec& grid);

}  // namespace mfnls
