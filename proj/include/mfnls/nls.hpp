#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "mfnls/grid.hpp"
#include "mfnls/potentials.hpp"

namespace mfnls {

/// i d/dt phi = (-Laplacian + A_t) phi + a |phi|^2 phi.
struct NLSParams {
  double coupling = 0.0;  ///< a; focusing when negative
  double dt = 1e-3;
  ExternalPotentialSpec external;
};

struct NLSState {
  Field2D phi;
  double t = 0.0;
};

struct ConservedReport {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double sup_norm = 0.0;
  double gradient_norm = 0.0;
  double sigma4 = 0.0;  ///< NaN unless requested
};

/// ||grad phi||^2 + (a/2) int |phi|^4 + <phi, A phi>.
double nls_energy(const Field2D& phi, double coupling, const Field2D& external);

ConservedReport conserved_report(const NLSState& state, const NLSParams& params,
                                 bool with_sigma = false);

/// Strang splitting: half diagonal phase with A_{t+dt/2} + a|phi|^2, exact kinetic
/// flow exp(-i dt |k|^2), half diagonal phase again. Static potentials and the
/// kinetic phases are cached. A negative dt runs the exact inverse step.
class StrangPropagator {
 public:
  StrangPropagator(const GridSpec& grid, NLSParams params);

  void step(NLSState& state);
  /// ||grad phi|| measured on the spectrum inside the last kinetic stage.
  double kinetic_stage_gradient_norm() const { return stage_gradient_; }
  const NLSParams& params() const { return params_; }

 private:
  void diagonal(Field2D& phi, const Field2D& external, double tau) const;

  GridSpec grid_;
  NLSParams params_;
  std::vector<cplx> kinetic_phase_;
  std::vector<double> k_squared_;
  std::optional<Field2D> static_external_;
  double stage_gradient_ = 0.0;
};

/// Convenience single step; builds a fresh propagator.
NLSState strang_step(const NLSState& state, const NLSParams& params);

struct EvolveOptions {
  double t_final = 0.0;
  /// Report every `snapshot_stride` steps (0: only the initial and final states).
  std::size_t snapshot_stride = 0;
  double sup_ceiling_factor = 50.0;
  double gradient_ceiling_factor = 100.0;
  bool with_sigma = false;
  std::function<void(const NLSState&, const ConservedReport&)> on_snapshot;
};

struct EvolveResult {
  NLSState state;
  std::vector<ConservedReport> series;
  bool blow_up = false;
  double blow_up_time = 0.0;
  std::vector<double> gradient_history;  ///< one entry per step
  std::size_t steps = 0;
};

/// Steps until t_final. The step count is ceil((t_final - t)/dt) and the step is shrunk so
/// the run lands on t_final exactly. Blow-up (sup or gradient ceiling, or a non-finite
/// value) halts the run and is recorded, never thrown.
EvolveResult evolve(NLSState state, const NLSParams& params, const EvolveOptions& options);

enum class GroundStateMode { energy, townes };

struct GroundStateOptions {
  GroundStateMode mode = GroundStateMode::energy;
  std::size_t max_iterations = 20000;
  double energy_tolerance = 1e-12;  ///< energy-decrement stop; <= 0 disables it
  double residual_tolerance = 1e-8;
  /// Damping of the fixed-point map in Townes mode (1 = undamped).
  double townes_relaxation = 1.0;
};

struct GroundStateResult {
  Field2D profile;
  double energy = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// energy mode: minimiser of the NLS energy on the unit sphere, by preconditioned
/// gradient descent with a two-dimensional Rayleigh-Ritz step; residual is
/// ||H_u u - lambda u||.
///
/// townes mode: the fixed-point map u -> (1 - Laplacian)^{-1}(|u|^2 u) with L4
/// renormalisation; the returned profile Q solves -Laplacian Q + Q - Q^3 = 0 and the
/// residual is the L2 norm of that equation. `energy` is ||grad Q||^2 - ||Q||_4^4 / 2
/// (zero at the soliton). params are ignored in this mode.
GroundStateResult imaginary_time_ground_state(const NLSParams& params, const Field2D& init,
                                              const GroundStateOptions& options = {});

/// Both estimators of a* from a Townes profile.
struct TownesReport {
  Field2D profile;
  double mass = 0.0;       ///< ||Q||^2
  double gn_value = 0.0;   ///< gn_ratio(Q)
  double residual = 0.0;
  double discrepancy = 0.0;  ///< |mass - gn_value| / mass
};

TownesReport townes_soliton(const GridSpec& grid, const GroundStateOptions& options = {});

/// Free time tan(2t)/2 whose free solution the lens transform maps to time t.
double lens_free_time(double t);

/// (1/cos 2t) u(x / cos 2t) exp(-i |x|^2 tan(2t) / 2), mapping a solution of the free
/// equation at time lens_free_time(t) to the harmonically trapped one (A = |x|^2) at t.
/// Requires |t| < pi/4.
Field2D lens_transform(const Field2D& u, double t);

/// sqrt(sum_{k=0}^m ||(-Laplacian)^{k/2} u||^2 + |||x|^k u||^2).
double sigma_norm(const Field2D& u, int order);

}  // namespace mfnls
