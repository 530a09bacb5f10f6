#include "mfnls/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mfnls/field_io.hpp"

namespace mfnls {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"study", {"kind", "output_dir", "memory_budget", "threads", "seed"}},
      {"grid", {"box_length", "points"}},
      {"pair", {"shape", "amplitude", "radius", "profile"}},
      {"external", {"family", "coefficient", "exponent", "time", "rate", "snapshots"}},
      {"initial", {"kind", "width", "center_x", "center_y", "momentum_x", "momentum_y"}},
      {"time", {"dt", "t_final", "snapshot_stride"}},
      {"nls",
       {"coupling", "with_sigma", "sup_ceiling", "gradient_ceiling", "forbid_blowup",
        "write_fields"}},
      {"ground",
       {"mode", "max_iterations", "energy_tolerance", "residual_tolerance", "relaxation"}},
      {"manybody", {"particles", "beta", "start", "noise", "write_tensor", "distances"}},
      {"sweep",
       {"betas", "particles", "slack", "tensor_mode", "tau", "max_iterations", "tolerance",
        "beta_pairs"}},
      {"check", {"inject"}},
  };
  return s;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ValidationError("config: key '" + key + "' has value '" + value + "', expected " + want);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (...) {
    bad_value(key, v, "a number");
  }
  if (used != v.size() || !std::isfinite(x)) bad_value(key, v, "a finite number");
  return x;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    bad_value(key, v, "a nonnegative integer");
  }
  try {
    return std::stoull(v);
  } catch (...) {
    bad_value(key, v, "a nonnegative integer");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::pair<double, std::string> split_colon(const std::string& key, const std::string& item) {
  const auto c = item.find(':');
  if (c == std::string::npos) bad_value(key, item, "entries of the form number:value");
  return {to_double(key, trim(item.substr(0, c))), trim(item.substr(c + 1))};
}

class Reader {
 public:
  Reader(const pt::ptree& tree, StudyConfig& cfg) : tree_(tree), cfg_(cfg) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    const std::string value = trim(*v);
    cfg_.echo[section + "." + key] = value;
    return value;
  }

  template <class T, class F>
  void read(const std::string& section, const std::string& key, T& target, F convert) {
    if (const auto v = raw(section, key)) target = convert(section + "." + key, *v);
  }

  void number(const std::string& s, const std::string& k, double& t) { read(s, k, t, to_double); }
  void count(const std::string& s, const std::string& k, std::size_t& t) {
    read(s, k, t, [](const std::string& key, const std::string& v) {
      return static_cast<std::size_t>(to_unsigned(key, v));
    });
  }
  void flag(const std::string& s, const std::string& k, bool& t) { read(s, k, t, to_bool); }

 private:
  const pt::ptree& tree_;
  StudyConfig& cfg_;
};

template <class E>
E choose(const std::string& key, const std::string& v,
         const std::vector<std::pair<const char*, E>>& options) {
  for (const auto& [name, value] : options)
    if (v == name) return value;
  std::string want = "one of";
  for (const auto& [name, value] : options) want += std::string(" ") + name;
  bad_value(key, v, want.c_str());
}

void reject_unknown(const pt::ptree& tree) {
  const auto& s = schema();
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ValidationError("config: unknown key '" + section + "' outside any section");
    }
    const auto it = s.find(section);
    if (it == s.end()) throw ValidationError("config: unknown section '" + section + "'");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw ValidationError("config: unknown key '" + key + "' in section [" + section + "]");
      }
    }
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError("config: " + message);
}

StudyConfig parse_tree(const pt::ptree& tree, const std::filesystem::path& base) {
  reject_unknown(tree);
  StudyConfig c;
  Reader r(tree, c);

  if (const auto v = r.raw("study", "kind")) {
    c.kind = choose<StudyKind>("study.kind", *v,
                               {{"nls-run", StudyKind::nls_run},
                                {"ground-state", StudyKind::ground_state},
                                {"manybody-run", StudyKind::manybody_run},
                                {"converge-sweep", StudyKind::converge_sweep},
                                {"gronwall", StudyKind::gronwall},
                                {"variance-report", StudyKind::variance_report},
                                {"stability-probe", StudyKind::stability_probe},
                                {"smeared-norms", StudyKind::smeared_norms},
                                {"check-invariants", StudyKind::check_invariants}});
  } else {
    throw ValidationError("config: missing key 'kind' in section [study]");
  }
  if (const auto v = r.raw("study", "output_dir")) c.output_dir = *v;
  r.number("study", "memory_budget", c.memory_budget);
  r.count("study", "threads", c.threads);
  if (const auto v = r.raw("study", "seed")) c.seed = to_unsigned("study.seed", *v);
  require(c.memory_budget > 0.0, "study.memory_budget must be positive");
  require(c.threads >= 1, "study.threads must be at least 1");

  r.number("grid", "box_length", c.box_length);
  r.count("grid", "points", c.points);
  make_grid(c.box_length, c.points);

  std::string shape = "none";
  if (const auto v = r.raw("pair", "shape")) shape = *v;
  double amplitude = 0.0, radius = 0.0;
  r.number("pair", "amplitude", amplitude);
  r.number("pair", "radius", radius);
  const auto profile = r.raw("pair", "profile");
  if (shape == "disk" || shape == "bump") {
    require(radius > 0.0, "pair.radius must be positive");
    c.pair = shape == "disk" ? PairPotentialSpec::disk(amplitude, radius)
                             : PairPotentialSpec::bump(amplitude, radius);
  } else if (shape == "table") {
    require(profile.has_value(), "pair.shape = table needs pair.profile");
    std::vector<std::pair<double, double>> points;
    for (const auto& item : split(*profile, ',')) {
      const auto [rad, w] = split_colon("pair.profile", item);
      points.emplace_back(rad, to_double("pair.profile", w));
    }
    c.pair = PairPotentialSpec::table(points);
  } else if (shape != "none") {
    bad_value("pair.shape", shape, "one of none disk bump table");
  }

  if (const auto v = r.raw("external", "family")) {
    c.external.family = choose<ExternalFamily>("external.family", *v,
                                               {{"zero", ExternalFamily::zero},
                                                {"harmonic", ExternalFamily::harmonic},
                                                {"power", ExternalFamily::power},
                                                {"table", ExternalFamily::table}});
  }
  r.number("external", "coefficient", c.external.coefficient);
  r.number("external", "exponent", c.external.exponent);
  if (const auto v = r.raw("external", "time")) {
    c.external.time_dependence = choose<TimeDependence>(
        "external.time", *v, {{"fixed", TimeDependence::fixed}, {"ramp", TimeDependence::ramp}});
  }
  r.number("external", "rate", c.external.rate);
  if (c.external.family == ExternalFamily::power) {
    require(c.external.coefficient > 0.0, "external.coefficient must be positive for power");
    require(c.external.exponent > 0.0, "external.exponent must be positive for power");
  }
  if (const auto v = r.raw("external", "snapshots")) {
    require(c.external.family == ExternalFamily::table,
            "external.snapshots is only meaningful with family = table");
    const GridSpec g = c.grid();
    for (const auto& item : split(*v, ',')) {
      const auto [t, file] = split_colon("external.snapshots", item);
      const std::filesystem::path p = base / file;
      std::ifstream is(p, std::ios::binary);
      require(static_cast<bool>(is), "cannot open external snapshot " + p.string());
      Field2D f = read_field_binary(is);
      require(f.grid() == g, "external snapshot " + p.string() + " is on a different grid");
      c.external.snapshots.emplace_back(t, std::move(f));
    }
  }
  if (c.external.family == ExternalFamily::table) {
    require(!c.external.snapshots.empty(), "external.family = table needs external.snapshots");
  }

  if (const auto v = r.raw("initial", "kind")) {
    c.initial.kind = choose<InitialKind>("initial.kind", *v,
                                         {{"gaussian", InitialKind::gaussian},
                                          {"townes", InitialKind::townes},
                                          {"harmonic_ground", InitialKind::harmonic_ground}});
  }
  r.number("initial", "width", c.initial.width);
  r.number("initial", "center_x", c.initial.center_x);
  r.number("initial", "center_y", c.initial.center_y);
  r.number("initial", "momentum_x", c.initial.momentum_x);
  r.number("initial", "momentum_y", c.initial.momentum_y);
  require(c.initial.width > 0.0, "initial.width must be positive");

  r.number("time", "dt", c.dt);
  r.number("time", "t_final", c.t_final);
  r.count("time", "snapshot_stride", c.snapshot_stride);
  require(c.dt > 0.0, "time.dt must be positive");
  require(c.t_final > 0.0, "time.t_final must be positive");

  c.coupling = c.pair ? c.pair->integral() : 0.0;
  if (const auto v = r.raw("nls", "coupling")) {
    const double a = to_double("nls.coupling", *v);
    if (c.pair) {
      require(std::abs(a - c.coupling) <= 1e-10 * std::max(1.0, std::abs(c.coupling)),
              "nls.coupling " + *v + " disagrees with the integral of W (" +
                  std::to_string(c.coupling) + ")");
    }
    c.coupling = a;
  }
  r.flag("nls", "with_sigma", c.with_sigma);
  r.number("nls", "sup_ceiling", c.sup_ceiling);
  r.number("nls", "gradient_ceiling", c.gradient_ceiling);
  r.flag("nls", "forbid_blowup", c.forbid_blowup);
  r.flag("nls", "write_fields", c.write_fields);
  require(c.sup_ceiling > 1.0 && c.gradient_ceiling > 1.0, "blow-up ceilings must exceed 1");

  if (const auto v = r.raw("ground", "mode")) {
    c.ground.mode = choose<GroundStateMode>(
        "ground.mode", *v, {{"energy", GroundStateMode::energy}, {"townes", GroundStateMode::townes}});
  }
  r.count("ground", "max_iterations", c.ground.max_iterations);
  r.number("ground", "energy_tolerance", c.ground.energy_tolerance);
  r.number("ground", "residual_tolerance", c.ground.residual_tolerance);
  r.number("ground", "relaxation", c.ground.townes_relaxation);

  r.count("manybody", "particles", c.particles);
  r.number("manybody", "beta", c.beta);
  if (const auto v = r.raw("manybody", "start")) {
    c.start = choose<ManyBodyStart>(
        "manybody.start", *v,
        {{"product", ManyBodyStart::product}, {"random_symmetric", ManyBodyStart::random_symmetric}});
  }
  r.number("manybody", "noise", c.noise);
  r.flag("manybody", "write_tensor", c.write_tensor);
  r.flag("manybody", "distances", c.distances);
  require(c.particles >= 1 && c.particles <= max_particles, "manybody.particles must lie in 1..4");
  require(c.beta > 0.0 && c.beta < 1.0, "manybody.beta must lie in (0, 1)");
  require(c.noise >= 0.0, "manybody.noise must be nonnegative");

  if (const auto v = r.raw("sweep", "betas")) {
    c.betas.clear();
    for (const auto& item : split(*v, ',')) c.betas.push_back(to_double("sweep.betas", item));
    require(!c.betas.empty(), "sweep.betas is empty");
    for (double b : c.betas) require(b > 0.0 && b < 1.0, "sweep.betas must lie in (0, 1)");
  }
  if (const auto v = r.raw("sweep", "particles")) {
    c.particle_list.clear();
    for (const auto& item : split(*v, ','))
      c.particle_list.push_back(static_cast<std::size_t>(to_unsigned("sweep.particles", item)));
    require(!c.particle_list.empty(), "sweep.particles is empty");
    for (std::size_t n : c.particle_list) require(n >= 1, "sweep.particles must be positive");
  }
  r.number("sweep", "slack", c.slack);
  r.flag("sweep", "tensor_mode", c.tensor_mode);
  r.number("sweep", "tau", c.tau);
  r.count("sweep", "max_iterations", c.max_iterations);
  r.number("sweep", "tolerance", c.tolerance);
  if (const auto v = r.raw("sweep", "beta_pairs")) {
    for (const auto& item : split(*v, ',')) {
      const auto [b, b1] = split_colon("sweep.beta_pairs", item);
      c.beta_pairs.emplace_back(b, to_double("sweep.beta_pairs", b1));
    }
  }

  if (const auto v = r.raw("check", "inject")) {
    c.inject = choose<Injection>(
        "check.inject", *v,
        {{"none", Injection::none}, {"z-sign", Injection::z_sign}, {"asymmetric", Injection::asymmetric}});
  }

  const bool needs_pair = c.kind == StudyKind::smeared_norms;
  require(!needs_pair || c.pair.has_value(), "this study needs a [pair] section");
  if (c.kind == StudyKind::smeared_norms) {
    require(!c.beta_pairs.empty(), "smeared-norms needs sweep.beta_pairs");
  }
  require(c.kind != StudyKind::gronwall || c.particles >= 2,
          "gronwall needs manybody.particles >= 2");
  return c;
}

}  // namespace

const char* study_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::nls_run: return "nls-run";
    case StudyKind::ground_state: return "ground-state";
    case StudyKind::manybody_run: return "manybody-run";
    case StudyKind::converge_sweep: return "converge-sweep";
    case StudyKind::gronwall: return "gronwall";
    case StudyKind::variance_report: return "variance-report";
    case StudyKind::stability_probe: return "stability-probe";
    case StudyKind::smeared_norms: return "smeared-norms";
    case StudyKind::check_invariants: return "check-invariants";
  }
  return "unknown";
}

SweepConfig StudyConfig::sweep() const {
  SweepConfig s;
  s.box_length = box_length;
  s.points = points;
  s.pair = pair;
  s.external = external;
  s.betas = betas;
  s.particles = particle_list;
  s.initial = initial;
  s.t_final = t_final;
  s.dt = dt;
  s.snapshot_stride = snapshot_stride;
  s.seed = seed;
  s.memory_budget = memory_budget;
  s.distances = distances;
  return s;
}

StudyConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return parse_tree(tree, std::filesystem::current_path());
}

StudyConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("config: cannot read " + path.string());
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return parse_tree(tree, path.parent_path());
}

std::string config_hash(const StudyConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : cfg.echo) feed(k + "=" + v + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mfnls
