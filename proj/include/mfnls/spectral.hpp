#pragma once

#include <functional>
#include <utility>

#include "mfnls/grid.hpp"

namespace mfnls {

Field2D to_frequency(const Field2D& f);
Field2D to_position(const Field2D& f);

/// Multiplies the frequency coefficients of a position-space field by m(kx, ky).
Field2D apply_fourier_multiplier(const Field2D& f,
                                 const std::function<cplx(double, double)>& multiplier);

/// Returns -Laplacian(f), i.e. |k|^2 times the coefficients (positive semidefinite).
Field2D apply_laplacian(const Field2D& f);

/// Spectral partial derivatives (d/dx, d/dy). The Nyquist multiplier is zero
/// so that real fields stay real.
std::pair<Field2D, Field2D> gradient(const Field2D& f);

/// Zero-mean solution h of Laplacian(h) = rhs on the torus.
/// Throws ValidationError when |mean(rhs)| > mean_tolerance * sup|rhs|.
Field2D poisson_solve_zero_mean(const Field2D& rhs, double mean_tolerance = 1e-10);

/// Applies sqrt(1 - Laplacian).
Field2D sobolev_multiplier(const Field2D& f);

/// Evaluates g(x) = f(scale * x) at every node by trigonometric interpolation.
/// The field is treated as zero outside the box: nodes whose image scale * x leaves
/// the box get the value 0.
Field2D dilate(const Field2D& f, double scale);

// Quadrature functionals. All use the weight h^2 per node and a fixed
// sequential summation order.
cplx inner(const Field2D& f, const Field2D& g);
double norm_sq(const Field2D& f);
double norm(const Field2D& f);
double lp_norm(const Field2D& f, double p);
double sup_norm(const Field2D& f);
cplx integral(const Field2D& f);
cplx mean(const Field2D& f);
/// ||grad f||^2 computed from the frequency coefficients.
double gradient_norm_sq(const Field2D& f);

/// Largest |f| over the outermost ring of nodes.
double boundary_max(const Field2D& f);
/// Throws ValidationError if the field has not decayed below `tolerance` at the box edge.
void require_decayed(const Field2D& f, double tolerance = 1e-8, const char* what = "field");

}  // namespace mfnls
