#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "mfnls/invariants.hpp"
#include "mfnls/manybody.hpp"
#include "mfnls/study.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean-field NLS and few-body Schrodinger studies"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  auto* run = app.add_subcommand("run", "Run the study described by an INI config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output-dir", output_dir, "Output directory (overrides MFNLS_OUTPUT_DIR)");

  std::string inject = "none";
  std::uint64_t seed = 1;
  auto* check = app.add_subcommand("check", "Run the invariant battery");
  check->add_option("--inject", inject, "Plant a fault")
      ->check(CLI::IsMember({"none", "z-sign", "asymmetric"}));
  check->add_option("--seed", seed, "Seed for random test states");

  double budget = mfnls::default_memory_budget;
  auto* info = app.add_subcommand("info", "Print the admissible (M, N) table");
  info->add_option("--budget", budget, "Memory budget in bytes")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mfnls::exit_validation;
  }

  if (*run) {
    if (output_dir.empty())
      if (const char* env = std::getenv("MFNLS_OUTPUT_DIR")) output_dir = env;
    return mfnls::run_config_file(config_path, output_dir, std::cout, std::cerr);
  }
  if (*check) {
    const mfnls::Injection which = inject == "z-sign"       ? mfnls::Injection::z_sign
                                   : inject == "asymmetric" ? mfnls::Injection::asymmetric
                                                            : mfnls::Injection::none;
    bool all = true;
    mfnls::run_invariants(which, seed, [&](const mfnls::InvariantResult& r) {
      std::cout << mfnls::format_result(r) << std::endl;
      all = all && r.passed;
    });
    return all ? 0 : 1;
  }
  std::cout << mfnls::admissible_table(budget);
  return 0;
}
