#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "micromaser/cli_io.hpp"

namespace micromaser {

using nlohmann::json;

const char* to_string(Command c) {
  switch (c) {
    case Command::steady: return "steady";
    case Command::sweep: return "sweep";
    case Command::trajectory: return "trajectory";
    case Command::trap: return "trap";
  }
  return "?";
}

namespace {

const std::set<std::string> kKnownKeys = {
    "format_version", "label", "note", "mode", "method", "maser_atomic_decay",
    "g", "tau", "kappa", "quality_factor", "frequency_hz", "gamma", "n_th", "temperature_k",
    "R", "N", "n_max",
    "n_atoms", "seed", "snapshots", "burn_in",
    "D_grid",
    "n_grid", "fock_tolerance",
    "output_dir", "threads",
};

double get_number(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ValidationError(key, "must be a number");
  return v.get<double>();
}

std::optional<double> opt_number(const json& doc, const char* key) {
  if (!doc.contains(key)) return std::nullopt;
  return get_number(doc, key);
}

long long get_integer(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number_integer()) throw ValidationError(key, "must be an integer");
  return v.get<long long>();
}

std::string get_string(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_string()) throw ValidationError(key, "must be a string");
  return v.get<std::string>();
}

std::vector<double> parse_D_grid(const json& v) {
  std::vector<double> grid;
  auto number = [](const json& x) {
    if (!x.is_number()) throw ValidationError("D_grid", "entries must be numbers");
    return x.get<double>();
  };
  if (v.is_array()) {
    for (const auto& x : v) grid.push_back(number(x));
  } else if (v.is_object()) {
    for (const auto& [k, _] : v.items())
      if (k != "start" && k != "stop" && k != "count" && k != "extra")
        throw ValidationError("D_grid." + k, "unknown key");
    if (!v.contains("start") || !v.contains("stop") || !v.contains("count"))
      throw ValidationError("D_grid", "object form needs start, stop and count");
    const double start = number(v.at("start"));
    const double stop = number(v.at("stop"));
    if (!v.at("count").is_number_integer()) throw ValidationError("D_grid.count", "must be an integer");
    const long long count = v.at("count").get<long long>();
    if (count < 1) throw ValidationError("D_grid.count", "must be >= 1");
    for (long long i = 0; i < count; ++i)
      grid.push_back(count == 1 ? start : start + (stop - start) * double(i) / double(count - 1));
    if (v.contains("extra")) {
      if (!v.at("extra").is_array()) throw ValidationError("D_grid.extra", "must be an array");
      for (const auto& x : v.at("extra")) grid.push_back(number(x));
      std::sort(grid.begin(), grid.end());
    }
  } else {
    throw ValidationError("D_grid", "must be an array or {start, stop, count}");
  }
  if (grid.empty()) throw ValidationError("D_grid", "must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0) || !std::isfinite(grid[i])) throw ValidationError("D_grid", "values must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ValidationError("D_grid", "must be strictly increasing");
  }
  return grid;
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  if (cfg.format_version != kFormatVersion)
    throw ValidationError("format_version", "unsupported version '" + cfg.format_version + "'");
  if (cfg.mode != "maser" && cfg.mode != "laser") throw ValidationError("mode", "must be 'maser' or 'laser'");
  if (cfg.method != "auto" && cfg.method != "analytic" && cfg.method != "fixed_point")
    throw ValidationError("method", "must be 'auto', 'analytic' or 'fixed_point'");
  cfg.params.validate_pumped();
  switch (cfg.command) {
    case Command::steady:
      if (cfg.method == "analytic" && cfg.params.gamma != 0)
        throw ValidationError("method", "analytic requires gamma == 0");
      break;
    case Command::sweep:
      if (cfg.D_grid.empty()) throw ValidationError("D_grid", "must not be empty");
      if (!(cfg.params.g > 0)) throw ValidationError("g", "must be > 0 for a sweep");
      break;
    case Command::trajectory:
      if (cfg.n_atoms < 1) throw ValidationError("n_atoms", "must be >= 1");
      if (cfg.burn_in < 0) throw ValidationError("burn_in", "must be >= 0");
      for (long long k : cfg.snapshots)
        if (k < 1 || k > cfg.n_atoms) throw ValidationError("snapshots", "indices must lie in [1, n_atoms]");
      break;
    case Command::trap:
      if (cfg.n_grid_min < 0 || cfg.n_grid_max < cfg.n_grid_min)
        throw ValidationError("n_grid", "need 0 <= min <= max");
      if (!(cfg.fock_tolerance > 0)) throw ValidationError("fock_tolerance", "must be > 0");
      break;
  }
}

RunConfig parse_config(const json& doc, Command command, bool validate) {
  if (!doc.is_object()) throw ValidationError("config", "top level must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (!kKnownKeys.count(key)) throw ValidationError(key, "unknown key");

  RunConfig cfg;
  cfg.command = command;
  if (doc.contains("format_version")) cfg.format_version = get_string(doc, "format_version");
  if (doc.contains("label")) cfg.label = get_string(doc, "label");
  if (doc.contains("note")) cfg.note = get_string(doc, "note");
  if (doc.contains("mode")) cfg.mode = get_string(doc, "mode");
  if (doc.contains("method")) cfg.method = get_string(doc, "method");
  if (doc.contains("maser_atomic_decay")) {
    if (!doc.at("maser_atomic_decay").is_boolean()) throw ValidationError("maser_atomic_decay", "must be boolean");
    cfg.maser_atomic_decay = doc.at("maser_atomic_decay").get<bool>();
  }

  auto& p = cfg.params;
  if (!doc.contains("g")) throw ValidationError("g", "required");
  p.g = get_number(doc, "g");
  p.gamma = opt_number(doc, "gamma").value_or(0.0);
  if (doc.contains("n_max")) p.n_max = get_integer(doc, "n_max");

  cfg.quality_factor = opt_number(doc, "quality_factor");
  cfg.frequency_hz = opt_number(doc, "frequency_hz");
  cfg.temperature_k = opt_number(doc, "temperature_k");

  if (doc.contains("kappa") && cfg.quality_factor)
    throw ValidationError("kappa", "give either kappa or quality_factor, not both");
  if (doc.contains("kappa")) {
    p.kappa = get_number(doc, "kappa");
  } else if (cfg.quality_factor) {
    if (!cfg.frequency_hz) throw ValidationError("frequency_hz", "required with quality_factor");
    if (!(*cfg.quality_factor > 0)) throw ValidationError("quality_factor", "must be > 0");
    if (!(*cfg.frequency_hz > 0)) throw ValidationError("frequency_hz", "must be > 0");
    p.kappa = kappa_from_quality(*cfg.frequency_hz, *cfg.quality_factor);
  } else {
    throw ValidationError("kappa", "required (or quality_factor with frequency_hz)");
  }

  if (doc.contains("n_th") && cfg.temperature_k)
    throw ValidationError("n_th", "give either n_th or temperature_k, not both");
  if (cfg.temperature_k) {
    if (!cfg.frequency_hz) throw ValidationError("frequency_hz", "required with temperature_k");
    if (*cfg.temperature_k < 0) throw ValidationError("temperature_k", "must be >= 0");
    p.n_th = thermal_photon_number(*cfg.frequency_hz, *cfg.temperature_k);
  } else {
    p.n_th = opt_number(doc, "n_th").value_or(0.0);
  }

  if (doc.contains("R") && doc.contains("N")) throw ValidationError("R", "give either R or N, not both");
  if (doc.contains("N")) cfg.N_given = get_number(doc, "N");

  if (doc.contains("n_atoms")) cfg.n_atoms = get_integer(doc, "n_atoms");
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ValidationError("seed", "must be a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("snapshots")) {
    const auto& s = doc.at("snapshots");
    if (!s.is_array()) throw ValidationError("snapshots", "must be an array of atom indices");
    for (const auto& k : s) {
      if (!k.is_number_integer()) throw ValidationError("snapshots", "must be integers");
      cfg.snapshots.push_back(k.get<long long>());
    }
  }
  if (doc.contains("burn_in")) cfg.burn_in = get_integer(doc, "burn_in");
  if (doc.contains("n_grid")) {
    const auto& ng = doc.at("n_grid");
    if (!ng.is_object()) throw ValidationError("n_grid", "must be {min, max}");
    for (const auto& [k, _] : ng.items())
      if (k != "min" && k != "max") throw ValidationError("n_grid." + k, "unknown key");
    if (ng.contains("min")) cfg.n_grid_min = get_integer(ng, "min");
    if (ng.contains("max")) cfg.n_grid_max = get_integer(ng, "max");
  }
  if (doc.contains("fock_tolerance")) cfg.fock_tolerance = get_number(doc, "fock_tolerance");
  if (doc.contains("output_dir")) cfg.output_dir = get_string(doc, "output_dir");
  if (doc.contains("threads")) {
    const long long t = get_integer(doc, "threads");
    if (t < 0) throw ValidationError("threads", "must be >= 0");
    cfg.threads = static_cast<unsigned>(t);
  }

  if (command == Command::sweep) {
    if (!doc.contains("D_grid")) throw ValidationError("D_grid", "required for sweep");
    cfg.D_grid = parse_D_grid(doc.at("D_grid"));
    if (!cfg.N_given) throw ValidationError("N", "required for sweep");
    cfg.N_fixed = *cfg.N_given;
    if (!(cfg.N_fixed > 0)) throw ValidationError("N", "must be > 0");
    if (!(p.g > 0)) throw ValidationError("g", "must be > 0 for a sweep");
    p.n_th = 0;
    // tau varies per point; validate against the longest transit.
    p.tau = cfg.D_grid.back() / (std::sqrt(cfg.N_fixed) * p.g);
  } else {
    if (!doc.contains("tau")) throw ValidationError("tau", "required");
    p.tau = get_number(doc, "tau");
    if (doc.contains("D_grid")) cfg.D_grid = parse_D_grid(doc.at("D_grid"));
  }

  if (cfg.N_given) {
    if (!(*cfg.N_given > 0)) throw ValidationError("N", "must be > 0");
    if (p.kappa < 0) throw ValidationError("kappa", "must be >= 0");
    p.R = 2 * p.kappa * *cfg.N_given;
  } else if (doc.contains("R")) {
    p.R = get_number(doc, "R");
  } else {
    throw ValidationError("R", "required (or N)");
  }

  if (validate) validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, Command command, bool validate) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc, command, validate);
}

nlohmann::ordered_json RunConfig::resolved() const {
  nlohmann::ordered_json j;
  j["format_version"] = format_version;
  j["command"] = to_string(command);
  if (!label.empty()) j["label"] = label;
  if (!note.empty()) j["note"] = note;
  j["mode"] = mode;
  if (command == Command::steady) j["method"] = method;
  j["maser_atomic_decay"] = maser_atomic_decay;
  j["g"] = params.g;
  j["tau"] = params.tau;
  j["kappa"] = params.kappa;
  j["kappa_source"] = quality_factor ? "omega/(2Q) from quality_factor and frequency_hz" : "given";
  if (quality_factor) j["quality_factor"] = *quality_factor;
  if (frequency_hz) j["frequency_hz"] = *frequency_hz;
  j["gamma"] = params.gamma;
  j["n_th"] = params.n_th;
  j["n_th_source"] = temperature_k ? "Bose-Einstein occupation at temperature_k" : "given";
  if (temperature_k) j["temperature_k"] = *temperature_k;
  j["R"] = params.R;
  j["R_source"] = N_given ? "2 kappa N" : "given";
  j["n_max"] = params.n_max;
  j["derived"] = {
      {"N", params.N()},
      {"D", params.D()},
      {"g_tau", params.g_tau()},
      {"kappa_over_g", params.g > 0 ? params.kappa / params.g : 0.0},
      {"gamma_over_g", params.g > 0 ? params.gamma / params.g : 0.0},
      {"R_tau", params.R * params.tau},
      {"photon_lifetime", 1 / (2 * params.kappa)},
  };
  switch (command) {
    case Command::trajectory:
      j["n_atoms"] = n_atoms;
      j["seed"] = seed;
      j["snapshots"] = snapshots;
      j["burn_in"] = burn_in;
      j["snapshot_timing"] = "at_atom_exit";
      break;
    case Command::sweep:
      j["N_fixed"] = N_fixed;
      j["D_grid"] = D_grid;
      j["tau_note"] = "tau recomputed per point as D/(sqrt(N) g); derived values above use the largest D";
      break;
    case Command::trap:
      j["n_grid"] = {{"min", n_grid_min}, {"max", n_grid_max}};
      j["fock_tolerance"] = fock_tolerance;
      break;
    case Command::steady:
      break;
  }
  return j;
}

}  // namespace micromaser
