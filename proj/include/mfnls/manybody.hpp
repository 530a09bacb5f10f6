#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mfnls/grid.hpp"
#include "mfnls/potentials.hpp"

namespace mfnls {

inline constexpr std::size_t max_particles = 4;
inline constexpr double default_memory_budget = 1024.0 * 1024.0 * 1024.0;

/// (M^2)^N amplitudes.
std::size_t tensor_size(std::size_t m, std::size_t particles);
/// 16 * M^(2N).
double tensor_bytes(std::size_t m, std::size_t particles);
/// Human-readable table of which (M, N) fit in `budget` bytes.
std::string admissible_table(double budget);
/// Throws BudgetError (message includes admissible_table) when the tensor exceeds budget.
void require_budget(std::size_t m, std::size_t particles, double budget);

/// Rank-N tensor over the grid: slot 0 is the slowest index, each slot holds one
/// particle's M*M node index (x slow). Quadrature weight h^(2N) per entry.
struct ManyBodyState {
  std::size_t particles = 0;
  GridSpec grid;
  std::vector<cplx> amplitudes;
  double t = 0.0;
};

ManyBodyState zero_state(const GridSpec& grid, std::size_t particles,
                         double budget = default_memory_budget);

cplx tensor_inner(const ManyBodyState& a, std::span<const cplx> b);
cplx tensor_inner(const GridSpec& grid, std::size_t particles, std::span<const cplx> a,
                  std::span<const cplx> b);
double tensor_norm_sq(const GridSpec& grid, std::size_t particles, std::span<const cplx> a);
double state_norm(const ManyBodyState& s);
void normalize(ManyBodyState& s);

/// H = -sum Laplacian_j + sum_{j<k} W_beta(x_j - x_k) + sum A_t(x_j), pair term by
/// minimum-image displacement.
struct ManyBodyHamiltonian {
  std::size_t particles = 1;
  GridSpec grid;
  std::vector<double> pair;  ///< W_beta in displacement order; empty means W = 0
  ExternalPotentialSpec external;
  double coupling = 0.0;     ///< a = int W, used by the Z counterterms
  double counterterm_sign = -1.0;  ///< Z = W_beta + sign * a/(N-1) (...); -1 is correct
};

ManyBodyHamiltonian make_hamiltonian(const GridSpec& grid, std::size_t particles,
                                     const std::optional<ScaledPair>& pair,
                                     const ExternalPotentialSpec& external);

/// H Psi at time state.t.
std::vector<cplx> apply_hamiltonian(const ManyBodyHamiltonian& h, const ManyBodyState& state);

/// Strang splitting between the diagonal potential (pair + external, sampled at
/// t + dt/2) and the per-axis kinetic phases. imaginary = true propagates exp(-tau H)
/// instead (no renormalisation).
class ManyBodyPropagator {
 public:
  ManyBodyPropagator(ManyBodyHamiltonian h, double dt, bool imaginary = false);
  void step(ManyBodyState& state) const;
  double dt() const { return dt_; }

 private:
  void diagonal(ManyBodyState& state, double tau) const;

  ManyBodyHamiltonian h_;
  double dt_;
  bool imaginary_;
  std::vector<cplx> kinetic_;      ///< per-slot phase for one full step
  std::vector<std::uint32_t> pair_index_;  ///< (s_j, s_k) -> displacement index
};

/// Steps to t_final with the step shrunk to land on it; throws NumericError on NaN.
ManyBodyState evolve_manybody(const ManyBodyHamiltonian& h, ManyBodyState state,
                              double t_final, double dt,
                              double budget = default_memory_budget);

enum class Projector { p, q };

/// p_j Psi = phi(x_j) int phi*(y) Psi(..., y, ...) dy; q_j = 1 - p_j. Sites are 1-based.
std::vector<cplx> apply_projector(const GridSpec& grid, std::size_t particles,
                                  std::span<const cplx> tensor, Projector which,
                                  std::size_t site, const Field2D& phi);

/// phi^{tensor N}.
ManyBodyState product_state(const Field2D& phi, std::size_t particles,
                            double budget = default_memory_budget);
/// N^{-1/2} sum_k phi x ... x eta (slot k) x ... x phi, with <eta, phi> = 0.
ManyBodyState gamma_state(const Field2D& phi, const Field2D& eta, std::size_t particles,
                          double budget = default_memory_budget);
/// Gram-Schmidt of `candidate` against phi, normalised.
Field2D orthogonal_partner(const Field2D& phi, const Field2D& candidate);

/// Average over all axis permutations.
void symmetrize(ManyBodyState& state);

/// phi^{tensor N} + scale * (complex white noise), symmetrised and normalised.
ManyBodyState random_symmetric_state(const Field2D& phi, std::size_t particles, double scale,
                                     std::mt19937_64& rng);

struct SymmetryDefect {
  double max_relative = 0.0;
  std::size_t axis_a = 0;  ///< 1-based sites of the worst transposition
  std::size_t axis_b = 0;
};

/// Exact check of every axis transposition.
SymmetryDefect symmetry_defect(const ManyBodyState& state);

/// (Z Psi)(x) with Z(x1, x2) = W_beta(x1 - x2) - a/(N-1) (|phi|^2(x1) + |phi|^2(x2)).
std::vector<cplx> apply_z(const ManyBodyHamiltonian& h, std::span<const cplx> tensor,
                          const Field2D& phi);

struct FunctionalReport {
  double q1 = 0.0;
  double variance = 0.0;
  double alpha = 0.0;
  double gamma_pp_qp = 0.0;
  double gamma_pp_qq = 0.0;
  double gamma_qp_qq = 0.0;
  double grad1 = 0.0;
  double q2grad1 = 0.0;
  double wsq_q1q2 = 0.0;
  double trdist = 0.0;
  double sobdist = 0.0;
  double energy = 0.0;  ///< <Psi, H Psi>
};

struct FunctionalOptions {
  bool distances = true;
};

FunctionalReport functional_report(const ManyBodyHamiltonian& h, const ManyBodyState& state,
                                   const Field2D& phi, const FunctionalOptions& options = {});

/// N^{-2} (||H Psi||^2 - <Psi, H Psi>^2), evaluated as N^{-2} ||(H - <H>) Psi||^2.
double energy_variance(const ManyBodyHamiltonian& h, const ManyBodyState& state);

/// ||grad_1 Psi||^2.
double gradient1_sq(const ManyBodyState& state);
/// ||q_2 grad_1 Psi||^2.
double q2_gradient1_sq(const ManyBodyState& state, const Field2D& phi);
/// ||grad_1 q_site Psi||^2.
double gradient1_projected_sq(const ManyBodyState& state, std::size_t site, const Field2D& phi);

/// Projector sandwiches <L Psi, Z R Psi> of the pair (sites 1, 2). The first four make
/// up the q1 derivative; qp_qq enters the transition functional.
struct Sandwiches {
  cplx pp_qp;
  cplx pp_qq;
  cplx pq_qp;
  cplx pq_qq;
  cplx qp_qq;
  /// -2 (N-1) Im(pp_qp + pp_qq + pq_qp + pq_qq).
  double q1_rate(std::size_t particles) const;
};

Sandwiches sandwich_terms(const ManyBodyHamiltonian& h, const ManyBodyState& state,
                          const Field2D& phi);

struct DerivativeCheck {
  double finite_difference = 0.0;
  double analytic = 0.0;
  double residual = 0.0;
  double im_pq_qp = 0.0;
  /// The same comparison for alpha = q1 + Var, whose analytic rate adds
  /// dVar/dt = 2 N^{-2} Re <(H - <H>) Psi, (sum_j dA/dt(x_j)) Psi> (zero for static A).
  double alpha_finite_difference = 0.0;
  double alpha_analytic = 0.0;
  double alpha_residual = 0.0;
};

/// Centred difference of t -> <Psi_t, q1^{phi_t} Psi_t> over one step of size dt forward
/// and backward (both Psi and phi propagated by Strang splitting with the coupling
/// h.coupling) against the analytic sandwich expression at the centre.
DerivativeCheck dq1dt_identity_check(const ManyBodyHamiltonian& h, const ManyBodyState& state,
                                     const Field2D& phi, double dt);

}  // namespace mfnls
