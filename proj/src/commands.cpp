#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "micromaser/cli_io.hpp"
#include "micromaser/steady_state.hpp"
#include "micromaser/trajectory.hpp"

namespace micromaser {

using nlohmann::ordered_json;

// ---------------------------------------------------------------- CSV

std::string format_number(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : kUndefined; }

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

CsvTable CsvTable::parse(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("CsvTable: no column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

const OutputFile* CommandOutput::find(const std::string& name) const {
  for (const auto& f : files)
    if (f.name == name) return &f;
  return nullptr;
}

namespace {

ordered_json optional_json(const std::optional<double>& x) {
  return x ? ordered_json(*x) : ordered_json(kUndefined);
}

CsvTable distribution_table(const RVector<double>& p) {
  CsvTable t{{"n", "P_n"}, {}};
  for (Index n = 0; n < p.size(); ++n) t.rows.push_back({std::to_string(n), format_number(p(n))});
  return t;
}

void add_common(CommandOutput& out, const RunConfig& cfg, const ordered_json& summary) {
  out.files.push_back({"summary.json", summary.dump(2) + "\n"});
  out.files.push_back({"config.resolved.json", cfg.resolved().dump(2) + "\n"});
}

Mode transit_mode(const RunConfig& cfg) { return cfg.mode == "laser" ? Mode::laser_transit : Mode::maser_transit; }

}  // namespace

// ---------------------------------------------------------------- commands

CommandOutput cli_steady(const RunConfig& cfg) {
  validate_config(cfg);
  const bool analytic = cfg.method == "analytic" || (cfg.method == "auto" && cfg.params.gamma == 0);
  FixedPointOptions fp;
  fp.maser_atomic_decay = cfg.maser_atomic_decay;
  const SteadyStateResult r =
      analytic ? analytic_product_stats(cfg.params) : fixed_point_stats(cfg.params, transit_mode(cfg), fp);

  CommandOutput out;
  out.files.push_back({"steady_state.csv", distribution_table(r.stats.p).str()});
  ordered_json s;
  s["command"] = "steady";
  s["method"] = to_string(r.method);
  s["mean_n"] = r.stats.mean;
  s["v"] = optional_json(r.stats.v);
  s["residual"] = r.residual;
  s["iterations"] = r.iterations;
  s["tail_mass"] = r.stats.tail;
  if (r.exit_stats) {
    s["exit_mean_n"] = r.exit_stats->mean;
    s["exit_v"] = optional_json(r.exit_stats->v);
  }
  if (r.mean_p_a) s["mean_p_a"] = *r.mean_p_a;
  s["N"] = cfg.params.N();
  s["D"] = cfg.params.D();
  s["g_tau"] = cfg.params.g_tau();
  add_common(out, cfg, s);
  return out;
}

CommandOutput cli_sweep(const RunConfig& cfg) {
  validate_config(cfg);
  SweepOptions opts;
  opts.threads = cfg.threads;
  const SweepResult r = pump_sweep(cfg.params, cfg.D_grid, cfg.N_fixed, opts);

  CommandOutput out;
  CsvTable t{{"D", "tau", "mean_n", "v", "converged"}, {}};
  for (const auto& pt : r.points)
    t.rows.push_back({format_number(pt.D), format_number(pt.tau), pt.converged ? format_number(pt.mean_n) : kUndefined,
                      pt.converged ? format_optional(pt.v) : kUndefined, pt.converged ? "1" : "0"});
  out.files.push_back({"sweep.csv", t.str()});

  const std::size_t ok = r.converged_count();
  const double fraction = double(ok) / double(r.points.size());
  ordered_json s;
  s["command"] = "sweep";
  s["points"] = r.points.size();
  s["converged"] = ok;
  s["converged_fraction"] = fraction;
  double best = -1, best_D = 0;
  for (const auto& pt : r.points)
    if (pt.converged && pt.mean_n > best) {
      best = pt.mean_n;
      best_D = pt.D;
    }
  if (ok) {
    s["argmax_mean_n_D"] = best_D;
    s["max_mean_n"] = best;
  }
  ordered_json failures = ordered_json::array();
  for (const auto& pt : r.points)
    if (!pt.converged) failures.push_back({{"D", pt.D}, {"error", pt.error}});
  s["failures"] = failures;
  add_common(out, cfg, s);
  if (fraction < 0.9) {
    out.exit_code = 1;
    out.message = "sweep: only " + std::to_string(ok) + " of " + std::to_string(r.points.size()) + " points converged";
  }
  return out;
}

CommandOutput cli_trajectory(const RunConfig& cfg) {
  validate_config(cfg);
  TrajectoryOptions opts;
  opts.n_atoms = cfg.n_atoms;
  opts.seed = cfg.seed;
  opts.snapshot_at = cfg.snapshots;
  opts.mode = transit_mode(cfg);
  opts.maser_atomic_decay = cfg.maser_atomic_decay;
  const TrajectoryRecord rec = run_trajectory(cfg.params, opts);

  CommandOutput out;
  CsvTable t{{"atom", "t_R", "t_cav", "p_a", "projection_noise", "mean_n", "v", "tail_mass"}, {}};
  t.rows.reserve(rec.rows.size());
  for (const auto& r : rec.rows)
    t.rows.push_back({std::to_string(r.atom), format_number(r.t_R), format_number(r.t_cav), format_number(r.p_a),
                      format_number(r.projection_noise), format_number(r.mean_n), format_optional(r.v),
                      format_number(r.tail)});
  out.files.push_back({"trajectory.csv", t.str()});
  for (const auto& [k, p] : rec.snapshots)
    out.files.push_back({"snapshot_" + std::to_string(k) + ".csv", distribution_table(p).str()});

  const long long from = std::min(cfg.burn_in + 1, cfg.n_atoms);
  const auto [v_lo, v_hi] = rec.v_band(from, cfg.n_atoms);
  const auto [v_min_all, v_max_all] = rec.v_band(1, cfg.n_atoms);
  ordered_json s;
  s["command"] = "trajectory";
  s["n_atoms"] = cfg.n_atoms;
  s["seed"] = cfg.seed;
  s["burn_in"] = cfg.burn_in;
  s["median_p_a"] = rec.median_p_a(from);
  s["v_min"] = std::isfinite(v_lo) ? ordered_json(v_lo) : ordered_json(kUndefined);
  s["v_max"] = std::isfinite(v_hi) ? ordered_json(v_hi) : ordered_json(kUndefined);
  s["v_min_all_atoms"] = std::isfinite(v_min_all) ? ordered_json(v_min_all) : ordered_json(kUndefined);
  s["rejections"] = rec.rejections;
  s["final_tail_mass"] = rec.final_tail;
  ordered_json modes = ordered_json::object();
  for (const auto& [k, p] : rec.snapshots) {
    Index mode = 0;
    p.maxCoeff(&mode);
    modes[std::to_string(k)] = mode;
  }
  s["snapshot_modes"] = modes;
  add_common(out, cfg, s);
  return out;
}

CommandOutput cli_trap(const RunConfig& cfg) {
  validate_config(cfg);
  TrapOptions opts;
  opts.near_tolerance = cfg.fock_tolerance;
  const TrapReport rep = trap_condition(cfg.params, cfg.n_grid_min, cfg.n_grid_max, opts);

  CommandOutput out;
  CsvTable t{{"n", "f_n", "is_zero", "fock_candidate_residual"}, {}};
  for (const auto& r : rep.rows)
    t.rows.push_back({std::to_string(r.n), format_number(r.f), r.is_zero ? "1" : "0", format_number(r.fock_residual)});
  out.files.push_back({"trap.csv", t.str()});

  ordered_json s;
  s["command"] = "trap";
  s["exponent_grouping"] = rep.exponent_grouping;
  s["zeros"] = rep.zeros();
  s["zeros_n_ge_1"] = rep.zeros(1);
  s["fock_candidates"] = rep.fock_candidates();
  s["near_fock_candidates"] = rep.near_fock_candidates();
  s["min_residual_n"] = rep.min_residual_n;
  ordered_json residuals = ordered_json::object();
  for (Index n : rep.near_fock_candidates())
    residuals[std::to_string(n)] = rep.rows[static_cast<std::size_t>(n - cfg.n_grid_min)].fock_residual;
  s["near_fock_residuals"] = residuals;
  add_common(out, cfg, s);
  return out;
}

CommandOutput run_command(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::steady: return cli_steady(cfg);
    case Command::sweep: return cli_sweep(cfg);
    case Command::trajectory: return cli_trajectory(cfg);
    case Command::trap: return cli_trap(cfg);
  }
  throw std::logic_error("run_command: unknown command");
}

void write_outputs(const std::filesystem::path& dir, const CommandOutput& out) {
  std::filesystem::create_directories(dir);
  for (const auto& f : out.files) {
    const auto target = dir / f.name;
    const auto tmp = dir / (f.name + ".tmp");
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot write " + tmp.string());
      os << f.content;
      if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
  }
}

}  // namespace micromaser
