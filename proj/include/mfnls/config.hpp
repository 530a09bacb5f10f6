#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfnls/experiments.hpp"
#include "mfnls/nls.hpp"
#include "mfnls/potentials.hpp"

namespace mfnls {

enum class StudyKind {
  nls_run,
  ground_state,
  manybody_run,
  converge_sweep,
  gronwall,
  variance_report,
  stability_probe,
  smeared_norms,
  check_invariants
};

const char* study_name(StudyKind kind);

enum class ManyBodyStart { product, random_symmetric };

enum class Injection { none, z_sign, asymmetric };

/// Everything a study needs, validated before any allocation.
struct StudyConfig {
  StudyKind kind = StudyKind::nls_run;
  std::filesystem::path output_dir = "out";
  double memory_budget = default_memory_budget;
  std::size_t threads = 1;
  std::uint64_t seed = 1;

  double box_length = 8.0;
  std::size_t points = 64;

  std::optional<PairPotentialSpec> pair;
  ExternalPotentialSpec external;
  InitialSpec initial;
  double coupling = 0.0;  ///< a; equals int W whenever a pair is given

  // nls-run
  double dt = 1e-3;
  double t_final = 1.0;
  std::size_t snapshot_stride = 10;
  bool with_sigma = false;
  double sup_ceiling = 50.0;
  double gradient_ceiling = 100.0;
  bool forbid_blowup = false;
  bool write_fields = false;

  // ground-state
  GroundStateOptions ground;

  // many-body studies
  std::size_t particles = 2;
  double beta = 0.1;
  ManyBodyStart start = ManyBodyStart::product;
  double noise = 0.0;
  bool write_tensor = false;
  bool distances = true;

  // sweeps
  std::vector<double> betas{0.1};
  std::vector<std::size_t> particle_list{2, 3};
  double slack = 1e-4;
  bool tensor_mode = true;
  double tau = 0.02;
  std::size_t max_iterations = 4000;
  double tolerance = 1e-10;
  std::vector<std::pair<double, double>> beta_pairs;

  Injection inject = Injection::none;

  /// Canonical "section.key" -> value text of every key that was read, for hashing
  /// and the manifest echo.
  std::map<std::string, std::string> echo;

  GridSpec grid() const { return make_grid(box_length, points); }
  SweepConfig sweep() const;
};

/// Parses an INI file. Unknown sections or keys raise ValidationError naming them.
StudyConfig load_config(const std::filesystem::path& path);
StudyConfig parse_config(const std::string& text);

/// FNV-1a 64 of the canonical echo, as 16 hex digits.
std::string config_hash(const StudyConfig& cfg);

}  // namespace mfnls
