#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfnls/grid.hpp"
#include "mfnls/manybody.hpp"
#include "mfnls/nls.hpp"
#include "mfnls/potentials.hpp"

namespace mfnls {

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares line through (log x, log y). Needs at least three positive points.
FitResult fit_exponent(const std::vector<double>& xs, const std::vector<double>& ys);

enum class InitialKind { gaussian, townes, harmonic_ground };

struct InitialSpec {
  InitialKind kind = InitialKind::gaussian;
  double width = 1.0;
  double center_x = 0.0;
  double center_y = 0.0;
  double momentum_x = 0.0;
  double momentum_y = 0.0;
};

/// Normalised one-body initial state. harmonic_ground minimises the NLS energy with the
/// given coupling and trap; townes uses the normalised Townes profile.
Field2D make_initial(const GridSpec& grid, const InitialSpec& spec, double coupling,
                     const ExternalPotentialSpec& external);

struct SweepConfig {
  double box_length = 8.0;
  std::size_t points = 12;
  std::optional<PairPotentialSpec> pair;  ///< absent: W = 0
  ExternalPotentialSpec external;
  std::vector<double> betas{0.1};
  std::vector<std::size_t> particles{2, 3};
  InitialSpec initial;
  double t_final = 0.3;
  double dt = 0.01;
  std::size_t snapshot_stride = 10;
  std::uint64_t seed = 1;
  double memory_budget = default_memory_budget;
  bool distances = true;

  GridSpec grid() const { return make_grid(box_length, points); }
  double coupling() const { return pair ? pair->integral() : 0.0; }
};

/// One snapshot of a co-evolution.
struct RunRecord {
  std::size_t particles = 0;
  double beta = 0.0;
  double t = 0.0;
  FunctionalReport functionals;
  double nls_mass = 0.0;
  double nls_energy = 0.0;
};

struct SkippedCell {
  std::size_t particles = 0;
  double beta = 0.0;
  std::string reason;
};

struct SweepResult {
  std::vector<RunRecord> records;
  std::vector<SkippedCell> skipped;
  /// Per beta: slope of log trdist against log N at t_final (when at least three N ran).
  std::vector<std::pair<double, std::optional<FitResult>>> fits;
};

using RecordSink = std::function<void(const RunRecord&)>;

/// Co-evolves Psi (many-body) and phi (NLS) from phi0^{tensor N} for every (N, beta),
/// recording all functionals every snapshot_stride steps and at t_final.
SweepResult convergence_sweep(const SweepConfig& cfg, const RecordSink& sink = {});

struct GronwallRow {
  double t = 0.0;
  double alpha = 0.0;
  double q1 = 0.0;
  double variance = 0.0;
  double gamma_total = 0.0;
  double gamma_pp_qp = 0.0;
  double gamma_pp_qq = 0.0;
  double gamma_qp_qq = 0.0;
  double dalpha_dt = 0.0;
  double dvar_dt = 0.0;
  double slack = 0.0;
  bool holds = true;
  double identity_residual = 0.0;
};

/// Records the functionals along one co-evolution (the first N and beta of cfg) and
/// checks d(alpha)/dt <= gamma + |dVar/dt| + slack with centred differences over the
/// snapshot spacing. The slack is the supplied one; the identity residual at each
/// snapshot comes from dq1dt_identity_check with the run's dt.
std::vector<GronwallRow> gronwall_trace(const SweepConfig& cfg, double slack);

/// The six line-groups of the energy variance of phi^{tensor N}.
struct VarianceBreakdown {
  std::size_t particles = 0;
  double beta = 0.0;
  double kinetic = 0.0;           ///< kinetic-kinetic
  double kinetic_pair = 0.0;      ///< kinetic-pair cross
  double pair_pair = 0.0;
  double external = 0.0;          ///< external-external
  double kinetic_external = 0.0;
  double pair_external = 0.0;
  double total() const {
    return kinetic + kinetic_pair + pair_pair + external + kinetic_external + pair_external;
  }
};

/// Evaluates every line-group with one-body quadratures and FFT convolutions.
/// `pair` is W_beta in displacement order (empty for W = 0).
VarianceBreakdown variance_line_groups(const Field2D& phi, const std::vector<double>& pair,
                                       const Field2D& external, std::size_t particles);

struct VarianceRow {
  VarianceBreakdown groups;
  double exact = 0.0;  ///< tensor value, NaN in quadrature-only mode
  double relative_gap = 0.0;
};

struct VarianceReport {
  std::vector<VarianceRow> rows;
  /// Per beta: fitted N-exponent of the line-group sum and the reference slope
  /// max(-1, -1 + beta, -2 + 2 beta).
  struct Fit {
    double beta = 0.0;
    FitResult fit;
    double reference = 0.0;
  };
  std::vector<Fit> fits;
};

/// Product-state variance for each (N, beta). With tensor_mode the exact variance from
/// the N-body tensor is reported next to the line-group sum.
VarianceReport variance_product_report(const SweepConfig& cfg, bool tensor_mode);

struct StabilityRow {
  std::size_t particles = 0;
  double beta = 0.0;
  double energy = 0.0;
  double energy_per_particle = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  /// E0/N strictly decreasing over the N list for a beta: labelled heuristic only.
  std::vector<std::pair<double, bool>> collapse_indicator;
};

/// Ground energy of H_{W_beta,0} by imaginary-time Strang steps with renormalisation.
StabilityReport stability_probe(const SweepConfig& cfg, double tau = 0.02,
                                std::size_t max_iterations = 4000, double tolerance = 1e-10);

struct SmearedRow {
  std::size_t particles = 0;
  double beta = 0.0;
  double beta1 = 0.0;
  double h_l2 = 0.0;
  double h_l1 = 0.0;
  double grad_h_l2 = 0.0;
  double poisson_residual = 0.0;  ///< ||Laplacian h - (W_beta - U)||_inf / ||W_beta - U||_inf
  double mass_balance = 0.0;      ///< |int (W_beta - U)| / (a/N)
};

/// Smeared-potential norms over N for each (beta, beta1).
std::vector<SmearedRow> smeared_norm_table(const PairPotentialSpec& w, const GridSpec& grid,
                                           const std::vector<std::size_t>& particles,
                                           const std::vector<std::pair<double, double>>& betas);

}  // namespace mfnls
