#include "mfnls/density.hpp"

#include <cmath>

#include "mfnls/spectral.hpp"

namespace mfnls {
namespace {

using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXcd weighted(const Field2D& phi) {
  const double h = phi.grid().spacing();
  Eigen::VectorXcd v(static_cast<Eigen::Index>(phi.size()));
  for (std::size_t k = 0; k < phi.size(); ++k) v(static_cast<Eigen::Index>(k)) = h * phi[k];
  return v;
}

double trace_norm(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().sum();
}

Eigen::MatrixXcd difference(const ReducedDensity& gamma, const Field2D& phi) {
  require_same_grid(gamma.grid, phi.grid(), "density difference");
  const Eigen::VectorXcd v = weighted(phi);
  return gamma.matrix - v * v.adjoint();
}

}  // namespace

ReducedDensity reduced_density_1(const ManyBodyState& state, std::size_t keep_site) {
  const std::size_t n = state.particles;
  if (keep_site < 1 || keep_site > n) throw ValidationError("reduced_density_1: site out of range");
  const std::size_t slot = state.grid.nodes();
  std::size_t outer = 1;
  for (std::size_t j = 1; j < keep_site; ++j) outer *= slot;
  std::size_t inner = 1;
  for (std::size_t j = keep_site; j < n; ++j) inner *= slot;
  const double weight = std::pow(state.grid.cell_area(), static_cast<double>(n));

  ReducedDensity out;
  out.grid = state.grid;
  const auto s = static_cast<Eigen::Index>(slot);
  out.matrix = Eigen::MatrixXcd::Zero(s, s);
  for (std::size_t o = 0; o < outer; ++o) {
    Eigen::Map<const RowMatrix> block(state.amplitudes.data() + o * slot * inner, s,
                                      static_cast<Eigen::Index>(inner));
    out.matrix.noalias() += block * block.adjoint();
  }
  out.matrix *= weight;
  return out;
}

ReducedDensity pure_density(const Field2D& phi) {
  const Eigen::VectorXcd v = weighted(phi);
  return ReducedDensity{phi.grid(), v * v.adjoint()};
}

double trace_distance(const ReducedDensity& gamma, const Field2D& phi) {
  return trace_norm(difference(gamma, phi));
}

Eigen::MatrixXcd sobolev_matrix(const GridSpec& grid) {
  const auto s = static_cast<Eigen::Index>(grid.nodes());
  Eigen::MatrixXcd out(s, s);
  Field2D unit(grid);
  for (Eigen::Index b = 0; b < s; ++b) {
    unit[static_cast<std::size_t>(b)] = 1.0;
    const Field2D col = sobolev_multiplier(unit);
    for (Eigen::Index a = 0; a < s; ++a) out(a, b) = col[static_cast<std::size_t>(a)];
    unit[static_cast<std::size_t>(b)] = 0.0;
  }
  return out;
}

double sobolev_trace_distance(const ReducedDensity& gamma, const Field2D& phi) {
  const Eigen::MatrixXcd s = sobolev_matrix(gamma.grid);
  const Eigen::MatrixXcd d = difference(gamma, phi);
  Eigen::MatrixXcd t = s * d * s.adjoint();
  t = 0.5 * (t + t.adjoint()).eval();
  return trace_norm(t);
}

Eigen::VectorXd density_spectrum(const ReducedDensity& gamma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(gamma.matrix, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace mfnls
