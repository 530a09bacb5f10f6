#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "mfnls/grid.hpp"

namespace mfnls {

enum class PairShape { disk_indicator, smooth_bump, table };

/// Unscaled, spherically symmetric, compactly supported pair interaction W.
///
/// disk_indicator: W = w0 on |x| < R.
/// smooth_bump:    W = w0 * exp(1 - 1/(1 - |x|^2/R^2)) on |x| < R (peak w0).
/// table:          piecewise-linear radial profile through (r_i, W_i), zero beyond the last r_i.
class PairPotentialSpec {
 public:
  static PairPotentialSpec disk(double amplitude, double radius);
  static PairPotentialSpec bump(double amplitude, double radius);
  static PairPotentialSpec table(std::vector<std::pair<double, double>> profile);

  PairShape shape() const { return shape_; }
  double amplitude() const { return amplitude_; }
  double support_radius() const { return radius_; }
  /// a = integral of W over the plane.
  double integral() const { return integral_; }
  /// Integral of the negative part |W^-|.
  double negative_integral() const { return negative_integral_; }
  const std::vector<std::pair<double, double>>& profile_table() const { return table_; }

  /// Radial profile W(r).
  double profile(double r) const;

 private:
  PairShape shape_ = PairShape::disk_indicator;
  double amplitude_ = 0.0;
  double radius_ = 0.0;
  double integral_ = 0.0;
  double negative_integral_ = 0.0;
  std::vector<std::pair<double, double>> table_;
};

/// Exact area of [x0, x1] x [y0, y1] intersected with the disk of radius R at the origin.
double disk_rectangle_overlap(double x0, double x1, double y0, double y1, double radius);

/// Grid realisation of x -> amplitude_scale * W(argument_scale * x) centred at the origin.
/// The disk uses exact cell averages, so its quadrature integral equals the analytic
/// one; other shapes are point-sampled and rescaled to `target_integral`.
Field2D realize_radial(const GridSpec& grid, const PairPotentialSpec& base, double amplitude_scale,
                       double argument_scale, double target_integral);

/// W_beta(x) = N^{-1+2 beta} W(N^beta x) on the grid.
struct ScaledPair {
  PairPotentialSpec base;
  std::size_t particles = 1;
  double beta = 0.0;
  Field2D field;                 ///< centred at the origin node (index M/2)
  double peak_amplitude = 0.0;   ///< N^{-1+2 beta} w0
  double support_radius = 0.0;   ///< R N^{-beta}
  double grid_integral = 0.0;    ///< quadrature of the grid realisation
  /// Values indexed by the periodic node displacement: entry (dx, dy) holds
  /// W_beta at the minimum-image displacement of (dx, dy) node steps.
  std::vector<double> displacement;

  double at_displacement(std::size_t dx, std::size_t dy) const {
    return displacement[dx * field.grid().points_per_side() + dy];
  }
};

ScaledPair scale_pair_potential(const PairPotentialSpec& base, std::size_t particles, double beta,
                                const GridSpec& grid);

/// Reorders an origin-centred field into displacement order (origin at index 0).
std::vector<double> displacement_table(const Field2D& centred);

/// Periodic convolution (w * rho)(x_i) = h^2 sum_j w(x_i - x_j) rho(x_j) with w given in
/// displacement order.
Field2D periodic_convolution(const std::vector<double>& displacement, const Field2D& rho);

/// Reference bump U_{beta1} and the smeared potential h with Laplacian(h) = W_beta - U_{beta1}.
struct SmearedPotential {
  double beta1 = 0.0;
  Field2D reference;  ///< U_{beta1}
  Field2D smeared;    ///< h_{beta1, beta}, zero mean
  double h_l2 = 0.0;
  double h_l1 = 0.0;
  double grad_h_l2 = 0.0;
};

SmearedPotential build_smeared(const ScaledPair& scaled, double beta1);

enum class ExternalFamily { zero, harmonic, power, table };
enum class TimeDependence { fixed, ramp };

/// Trapping potential A_t.
///
/// harmonic: |x|^2. power: C |x|^s. table: snapshots (t_i, A_i) interpolated linearly in t.
/// A ramp multiplies the spatial profile by (1 + rate * t).
struct ExternalPotentialSpec {
  ExternalFamily family = ExternalFamily::zero;
  double coefficient = 1.0;
  double exponent = 2.0;
  TimeDependence time_dependence = TimeDependence::fixed;
  double rate = 0.0;
  std::vector<std::pair<double, Field2D>> snapshots;

  bool is_static() const {
    return time_dependence == TimeDependence::fixed &&
           (family != ExternalFamily::table || snapshots.size() <= 1);
  }
  /// sup of the negative part over all snapshots (zero for harmonic and power families).
  double negative_part_bound() const;
};

Field2D evaluate_external(const ExternalPotentialSpec& spec, double t, const GridSpec& grid);

/// 2 ||grad u||^2 ||u||^2 / ||u||_4^4; its infimum over u is the sharp constant a*.
double gn_ratio(const Field2D& u);

/// Minimum over the trials of  int |phi|^2 (|phi|^2 * W) / (||phi||^2 ||grad phi||^2).
/// Always an upper bound on the true infimum.
struct StabilityEstimate {
  double value = 0.0;
  std::size_t best_trial = 0;
  bool is_upper_bound = true;
};

StabilityEstimate stability_ratio_estimate(const PairPotentialSpec& w, const std::vector<Field2D>& trials);

/// Centred Gaussians exp(-|x|^2 / (2 sigma^2)), one per width.
std::vector<Field2D> gaussian_trials(const GridSpec& grid, const std::vector<double>& widths);

}  // namespace mfnls
