#include "mfnls/study.hpp"

#include <fftw3.h>
#include <json.hpp>

#include <Eigen/Core>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "mfnls/experiments.hpp"
#include "mfnls/field_io.hpp"
#include "mfnls/invariants.hpp"
#include "mfnls/snapshot_writer.hpp"
#include "mfnls/spectral.hpp"

#ifndef MFNLS_VERSION
#define MFNLS_VERSION "0.0.0"
#endif

namespace mfnls {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::string& hash, std::initializer_list<const char*> header)
      : os_(path), columns_(header.size()) {
    if (!os_) throw std::runtime_error("cannot write " + path.string());
    os_ << "# config_hash=" << hash << "\n";
    bool first = true;
    for (const char* h : header) {
      os_ << (first ? "" : ",") << h;
      first = false;
    }
    os_ << "\n";
  }

  Csv& operator<<(double v) { return cell(number(v)); }
  Csv& operator<<(std::size_t v) { return cell(std::to_string(v)); }
  Csv& operator<<(bool v) { return cell(v ? "1" : "0"); }
  Csv& operator<<(const std::string& v) { return cell(v); }

  void end_row() {
    if (filled_ != columns_) throw std::logic_error("csv row has the wrong number of cells");
    os_ << "\n";
    filled_ = 0;
  }

 private:
  Csv& cell(const std::string& s) {
    os_ << (filled_ == 0 ? "" : ",") << s;
    ++filled_;
    return *this;
  }

  std::ofstream os_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

struct Context {
  const StudyConfig& cfg;
  std::filesystem::path dir;
  std::string hash;
  json manifest;
  std::ostream& out;
  std::ostream& err;

  std::filesystem::path file(const std::string& suffix) const {
    return dir / (std::string(study_name(cfg.kind)) + suffix);
  }
};

std::string field_bytes(const Field2D& f) {
  std::ostringstream os(std::ios::binary);
  write_field_binary(os, f);
  return os.str();
}

std::string tensor_bytes_of(const ManyBodyState& s) {
  std::ostringstream os(std::ios::binary);
  write_tensor_binary(os, s.particles, s.grid, s.t, s.amplitudes);
  return os.str();
}

void functional_cells(Csv& csv, const FunctionalReport& f) {
  csv << f.q1 << f.variance << f.alpha << f.gamma_pp_qp << f.gamma_pp_qq << f.gamma_qp_qq
      << f.grad1 << f.q2grad1 << f.wsq_q1q2 << f.trdist << f.sobdist;
}

void require_finite(const FunctionalReport& f, double t) {
  for (double v : {f.q1, f.variance, f.alpha, f.grad1, f.trdist}) {
    if (!std::isfinite(v)) {
      throw NumericError("many-body functionals became non-finite at t = " + number(t));
    }
  }
}

json fit_json(const FitResult& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
}

int nls_run(Context& c) {
  const StudyConfig& cfg = c.cfg;
  const GridSpec grid = cfg.grid();
  NLSParams p;
  p.coupling = cfg.coupling;
  p.dt = cfg.dt;
  p.external = cfg.external;
  NLSState s{make_initial(grid, cfg.initial, cfg.coupling, cfg.external), 0.0};

  Csv csv(c.file(".csv"), c.hash, {"t", "mass", "E_NLS", "sup_norm", "sigma4"});
  SnapshotWriter writer(8, cfg.threads > 1);
  std::size_t index = 0;
  EvolveOptions o;
  o.t_final = cfg.t_final;
  o.snapshot_stride = cfg.snapshot_stride;
  o.sup_ceiling_factor = cfg.sup_ceiling;
  o.gradient_ceiling_factor = cfg.gradient_ceiling;
  o.with_sigma = cfg.with_sigma;
  o.on_snapshot = [&](const NLSState& st, const ConservedReport& r) {
    csv << r.t << r.mass << r.energy << r.sup_norm << r.sigma4;
    csv.end_row();
    if (cfg.write_fields) {
      std::ostringstream name;
      name << "field_" << std::setw(6) << std::setfill('0') << index << ".bin";
      writer.push(c.dir / name.str(), field_bytes(st.phi));
    }
    ++index;
  };
  const EvolveResult r = evolve(std::move(s), p, o);
  writer.close();
  c.manifest["results"] = {{"steps", r.steps},
                           {"blow_up", r.blow_up},
                           {"blow_up_time", r.blow_up ? json(r.blow_up_time) : json(nullptr)},
                           {"snapshots", index},
                           {"fields_written", writer.written()}};
  if (r.blow_up) {
    c.err << "nls-run: blow-up indicator raised at t = " << r.blow_up_time << "\n";
    if (cfg.forbid_blowup) return exit_numeric;
  }
  return exit_ok;
}

int ground_state(Context& c) {
  const StudyConfig& cfg = c.cfg;
  const GridSpec grid = cfg.grid();
  Csv csv(c.file(".csv"), c.hash,
          {"mode", "energy", "residual", "iterations", "mass", "gn_ratio", "discrepancy"});
  Field2D profile;
  if (cfg.ground.mode == GroundStateMode::townes) {
    const TownesReport t = townes_soliton(grid, cfg.ground);
    csv << std::string("townes") << std::numeric_limits<double>::quiet_NaN() << t.residual
        << std::size_t{0} << t.mass << t.gn_value << t.discrepancy;
    csv.end_row();
    c.manifest["results"] = {{"a_star_mass", t.mass}, {"a_star_gn", t.gn_value},
                             {"discrepancy", t.discrepancy}, {"residual", t.residual}};
    profile = t.profile;
  } else {
    NLSParams p;
    p.coupling = cfg.coupling;
    p.external = cfg.external;
    InitialSpec start = cfg.initial;
    start.kind = InitialKind::gaussian;
    const Field2D init = make_initial(grid, start, cfg.coupling, cfg.external);
    const GroundStateResult g = imaginary_time_ground_state(p, init, cfg.ground);
    csv << std::string("energy") << g.energy << g.residual << g.iterations << norm_sq(g.profile)
        << std::numeric_limits<double>::quiet_NaN() << std::numeric_limits<double>::quiet_NaN();
    csv.end_row();
    c.manifest["results"] = {{"energy", g.energy}, {"residual", g.residual},
                             {"iterations", g.iterations}};
    profile = g.profile;
  }
  std::ofstream os(c.file("_profile.bin"), std::ios::binary);
  write_field_binary(os, profile);
  return exit_ok;
}

int manybody_run(Context& c) {
  const StudyConfig& cfg = c.cfg;
  const GridSpec grid = cfg.grid();
  const std::size_t n = cfg.particles;
  require_budget(grid.points_per_side(), n, cfg.memory_budget);
  const Field2D phi0 = make_initial(grid, cfg.initial, cfg.coupling, cfg.external);
  std::optional<ScaledPair> sp;
  if (cfg.pair) sp = scale_pair_potential(*cfg.pair, n, cfg.beta, grid);
  const ManyBodyHamiltonian h = make_hamiltonian(grid, n, sp, cfg.external);

  ManyBodyState psi;
  if (cfg.start == ManyBodyStart::random_symmetric) {
    std::mt19937_64 rng(cfg.seed);
    psi = random_symmetric_state(phi0, n, cfg.noise, rng);
  } else {
    psi = product_state(phi0, n, cfg.memory_budget);
  }

  const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_final / cfg.dt - 1e-9));
  const double dt = cfg.t_final / static_cast<double>(steps);
  const ManyBodyPropagator prop(h, dt);
  NLSParams np;
  np.coupling = cfg.coupling;
  np.dt = dt;
  np.external = cfg.external;
  StrangPropagator nls(grid, np);
  NLSState phi{phi0, 0.0};

  Csv csv(c.file(".csv"), c.hash,
          {"t", "q1", "var", "alpha", "gamma_pp_qp", "gamma_pp_qq", "gamma_qp_qq", "grad1",
           "q2grad1", "wsq_q1q2", "trdist", "sobdist"});
  SnapshotWriter writer(4, cfg.threads > 1);
  FunctionalOptions fo;
  fo.distances = cfg.distances;
  std::size_t index = 0;
  auto record = [&] {
    const FunctionalReport f = functional_report(h, psi, phi.phi, fo);
    require_finite(f, psi.t);
    csv << psi.t;
    functional_cells(csv, f);
    csv.end_row();
    if (cfg.write_tensor) {
      std::ostringstream name;
      name << "tensor_" << std::setw(6) << std::setfill('0') << index << ".bin";
      writer.push(c.dir / name.str(), tensor_bytes_of(psi));
    }
    ++index;
  };
  record();
  for (std::size_t k = 1; k <= steps; ++k) {
    prop.step(psi);
    nls.step(phi);
    if (k == steps) psi.t = phi.t = cfg.t_final;
    if (k == steps || (cfg.snapshot_stride > 0 && k % cfg.snapshot_stride == 0)) record();
  }
  writer.close();
  c.manifest["results"] = {{"steps", steps}, {"snapshots", index},
                           {"coupling", cfg.coupling},
                           {"tensor_bytes", tensor_bytes(grid.points_per_side(), n)}};
  return exit_ok;
}

int converge_sweep(Context& c) {
  const SweepConfig s = c.cfg.sweep();
  json cells = json::array();
  auto cell_start = Clock::now();
  std::size_t current_n = 0;
  double current_beta = 0.0;
  const SweepResult r = convergence_sweep(s, [&](const RunRecord& rec) {
    if (rec.particles != current_n || rec.beta != current_beta) {
      cell_start = Clock::now();
      current_n = rec.particles;
      current_beta = rec.beta;
    }
    if (rec.t == s.t_final) {
      cells.push_back({{"N", rec.particles}, {"beta", rec.beta}, {"wall_seconds", seconds_since(cell_start)}});
    }
  });

  Csv csv(c.file(".csv"), c.hash,
          {"N", "beta", "t", "q1", "var", "alpha", "gamma_pp_qp", "gamma_pp_qq", "gamma_qp_qq",
           "grad1", "q2grad1", "wsq_q1q2", "trdist", "sobdist", "nls_mass", "nls_energy",
           "trdist_slope"});
  for (const RunRecord& rec : r.records) {
    double slope = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [beta, fit] : r.fits)
      if (beta == rec.beta && fit) slope = fit->slope;
    csv << rec.particles << rec.beta << rec.t;
    functional_cells(csv, rec.functionals);
    csv << rec.nls_mass << rec.nls_energy << slope;
    csv.end_row();
  }
  json skipped = json::array();
  for (const SkippedCell& sk : r.skipped) {
    skipped.push_back({{"N", sk.particles}, {"beta", sk.beta}, {"reason", sk.reason}});
    c.err << "converge-sweep: skipped N=" << sk.particles << " beta=" << sk.beta << "\n";
  }
  json fits = json::array();
  for (const auto& [beta, fit] : r.fits)
    fits.push_back({{"beta", beta}, {"fit", fit ? fit_json(*fit) : json(nullptr)}});
  c.manifest["cells"] = cells;
  c.manifest["results"] = {{"skipped", skipped}, {"fits", fits}};
  return exit_ok;
}

int gronwall(Context& c) {
  SweepConfig s = c.cfg.sweep();
  s.particles = {c.cfg.particles};
  s.betas = {c.cfg.beta};
  const std::vector<GronwallRow> rows = gronwall_trace(s, c.cfg.slack);
  Csv csv(c.file(".csv"), c.hash,
          {"t", "alpha", "q1", "var", "gamma_pp_qp", "gamma_pp_qq", "gamma_qp_qq", "gamma",
           "dalpha_dt", "dvar_dt", "slack", "holds", "identity_residual"});
  std::size_t violations = 0;
  double worst = 0.0;
  for (const GronwallRow& r : rows) {
    csv << r.t << r.alpha << r.q1 << r.variance << r.gamma_pp_qp << r.gamma_pp_qq << r.gamma_qp_qq
        << r.gamma_total << r.dalpha_dt << r.dvar_dt << r.slack << r.holds << r.identity_residual;
    csv.end_row();
    if (!r.holds) ++violations;
    worst = std::max(worst, r.identity_residual);
  }
  c.manifest["results"] = {{"rows", rows.size()}, {"violations", violations},
                           {"max_identity_residual", worst}};
  return exit_ok;
}

int variance_report(Context& c) {
  const VarianceReport r = variance_product_report(c.cfg.sweep(), c.cfg.tensor_mode);
  Csv csv(c.file(".csv"), c.hash,
          {"N", "beta", "kinetic", "kinetic_pair", "pair_pair", "external", "kinetic_external",
           "pair_external", "total", "exact", "relative_gap"});
  for (const VarianceRow& row : r.rows) {
    const VarianceBreakdown& g = row.groups;
    csv << g.particles << g.beta << g.kinetic << g.kinetic_pair << g.pair_pair << g.external
        << g.kinetic_external << g.pair_external << g.total() << row.exact << row.relative_gap;
    csv.end_row();
  }
  json fits = json::array();
  for (const auto& f : r.fits)
    fits.push_back({{"beta", f.beta}, {"fit", fit_json(f.fit)}, {"reference_slope", f.reference}});
  c.manifest["results"] = {{"fits", fits}};
  return exit_ok;
}

int stability(Context& c) {
  const StabilityReport r =
      stability_probe(c.cfg.sweep(), c.cfg.tau, c.cfg.max_iterations, c.cfg.tolerance);
  Csv csv(c.file(".csv"), c.hash,
          {"N", "beta", "energy", "energy_per_particle", "iterations", "converged"});
  bool all_converged = true;
  for (const StabilityRow& row : r.rows) {
    csv << row.particles << row.beta << row.energy << row.energy_per_particle << row.iterations
        << row.converged;
    csv.end_row();
    if (!row.converged) {
      all_converged = false;
      c.err << "stability-probe: N=" << row.particles << " beta=" << row.beta << " did not converge\n";
    }
  }
  json flags = json::array();
  for (const auto& [beta, falling] : r.collapse_indicator)
    flags.push_back({{"beta", beta}, {"collapse_indicator_heuristic", falling}});
  c.manifest["results"] = {{"collapse", flags}, {"all_converged", all_converged}};
  return exit_ok;
}

int smeared(Context& c) {
  const std::vector<SmearedRow> rows =
      smeared_norm_table(*c.cfg.pair, c.cfg.grid(), c.cfg.particle_list, c.cfg.beta_pairs);
  Csv csv(c.file(".csv"), c.hash,
          {"N", "beta", "beta1", "h_l2", "h_l1", "grad_h_l2", "poisson_residual", "mass_balance"});
  for (const SmearedRow& r : rows) {
    csv << r.particles << r.beta << r.beta1 << r.h_l2 << r.h_l1 << r.grad_h_l2 << r.poisson_residual
        << r.mass_balance;
    csv.end_row();
  }
  json fits = json::array();
  for (const auto& [beta, beta1] : c.cfg.beta_pairs) {
    std::vector<double> ns, l2, grad;
    for (const SmearedRow& r : rows)
      if (r.beta == beta && r.beta1 == beta1) {
        ns.push_back(static_cast<double>(r.particles));
        l2.push_back(r.h_l2);
        grad.push_back(r.grad_h_l2);
      }
    if (ns.size() >= 3)
      fits.push_back({{"beta", beta}, {"beta1", beta1}, {"h_l2", fit_json(fit_exponent(ns, l2))},
                      {"grad_h_l2", fit_json(fit_exponent(ns, grad))}});
  }
  c.manifest["results"] = {{"fits", fits}};
  return exit_ok;
}

int invariants(Context& c) {
  Csv csv(c.file(".csv"), c.hash, {"invariant", "passed", "value", "threshold"});
  bool all = true;
  run_invariants(c.cfg.inject, c.cfg.seed, [&](const InvariantResult& r) {
    c.out << format_result(r) << "\n";
    csv << r.name << r.passed << r.value << r.threshold;
    csv.end_row();
    all = all && r.passed;
  });
  c.manifest["results"] = {{"all_passed", all}};
  return all ? exit_ok : exit_failure;
}

}  // namespace

int run_study(const StudyConfig& cfg, std::ostream& out, std::ostream& err) {
  std::filesystem::create_directories(cfg.output_dir);
  Context c{cfg, cfg.output_dir, config_hash(cfg), json::object(), out, err};
  c.manifest["study"] = study_name(cfg.kind);
  c.manifest["config_hash"] = c.hash;
  c.manifest["config"] = cfg.echo;
  json& versions = c.manifest["versions"];
  versions["mfnls"] = std::string(MFNLS_VERSION);
  versions["fftw"] = std::string(fftw_version);
  versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION);
  versions["compiler"] = std::string(__VERSION__);
  c.manifest["grid"] = {{"box_length", cfg.box_length}, {"points", cfg.points}};
  c.manifest["memory_budget"] = cfg.memory_budget;
  c.manifest["threads"] = cfg.threads;
  c.manifest["seed"] = cfg.seed;

  const auto t0 = Clock::now();
  int code = exit_ok;
  switch (cfg.kind) {
    case StudyKind::nls_run: code = nls_run(c); break;
    case StudyKind::ground_state: code = ground_state(c); break;
    case StudyKind::manybody_run: code = manybody_run(c); break;
    case StudyKind::converge_sweep: code = converge_sweep(c); break;
    case StudyKind::gronwall: code = gronwall(c); break;
    case StudyKind::variance_report: code = variance_report(c); break;
    case StudyKind::stability_probe: code = stability(c); break;
    case StudyKind::smeared_norms: code = smeared(c); break;
    case StudyKind::check_invariants: code = invariants(c); break;
  }
  c.manifest["wall_seconds"] = seconds_since(t0);
  c.manifest["exit_code"] = code;
  std::ofstream os(c.file(".json"));
  os << c.manifest.dump(2) << "\n";
  out << study_name(cfg.kind) << ": wrote " << c.file(".csv").string() << "\n";
  return code;
}

int run_config_file(const std::filesystem::path& path, const std::filesystem::path& output_override,
                    std::ostream& out, std::ostream& err) {
  try {
    StudyConfig cfg = load_config(path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    return run_study(cfg, out, err);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return exit_validation;
  } catch (const BudgetError& e) {
    err << "budget refusal: " << e.what() << "\n";
    return exit_budget;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return exit_numeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace mfnls
