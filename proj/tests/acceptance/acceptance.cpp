// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "micromaser/cli_io.hpp"
#include "micromaser/steady_state.hpp"
#include "micromaser/trajectory.hpp"

using namespace micromaser;

namespace {

const std::filesystem::path kConfigDir = MICROMASER_CONFIG_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

// Shared across criteria 3, 4, 5 and 7.
struct Fig1to4 {
  RunConfig cfg;
  SteadyStateResult steady;
  TrajectoryRecord record;
};

const Fig1to4& fig1to4() {
  static const Fig1to4 run = [] {
    Fig1to4 r;
    r.cfg = load_config(kConfigDir / "micromaser-fig1to4.json", Command::trajectory);
    r.steady = fixed_point_stats(r.cfg.params, Mode::maser_transit);
    TrajectoryOptions opts;
    opts.n_atoms = r.cfg.n_atoms;
    opts.seed = r.cfg.seed;
    opts.snapshot_at = r.cfg.snapshots;
    r.record = run_trajectory(r.cfg.params, opts);
    return r;
  }();
  return run;
}

Verdict cross_validation() {
  std::mt19937_64 rng(20240917);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * open_unit_interval(rng()); };
  double worst_p = 0, worst_v = 0;
  int samples = 0;
  for (; samples < 50; ++samples) {
    SystemParams p;
    p.g = 39e3;
    p.kappa = 0.1;
    p.n_max = 120;
    const double N = uniform(1, 50);
    p.tau = uniform(0.3, 3) / p.g;
    p.n_th = uniform(0, 0.1);
    p = p.with_N(N);
    const auto a = analytic_product_stats(p);
    const auto f = fixed_point_stats(p, Mode::maser_transit);
    worst_p = std::max(worst_p, (a.stats.p - f.stats.p).cwiseAbs().maxCoeff());
    if (a.stats.v && f.stats.v) worst_v = std::max(worst_v, std::abs(*a.stats.v - *f.stats.v));
  }
  return {worst_p < 2e-3 && worst_v < 0.02, std::to_string(samples) + " samples, max |dP| = " + fmt(worst_p) +
                                                ", max |dv| = " + fmt(worst_v)};
}

Verdict micromaser_variance() {
  const RunConfig cfg = load_config(kConfigDir / "micromaser-ref1a.json", Command::steady);
  const auto a = analytic_product_stats(cfg.params);
  const auto f = fixed_point_stats(cfg.params, Mode::maser_transit);
  const double v = *a.stats.v;
  return {std::abs(v - 0.5522) <= 0.05, "N = " + fmt(cfg.params.N()) + ", v = " + fmt(v) +
                                            " (fixed point " + fmt(*f.stats.v) + ")"};
}

Verdict steady_vs_trajectory() {
  const auto& run = fig1to4();
  const double v = *run.steady.stats.v;
  const auto [lo, hi] = run.record.v_band(2000, 10000);
  const bool ok = std::abs(v - 0.597) <= 0.02 && lo <= v && v <= hi;
  return {ok, "N = " + fmt(run.cfg.params.N()) + ", fixed-point v = " + fmt(v) + ", trajectory v over atoms 2000-10000 in [" +
                  fmt(lo) + ", " + fmt(hi) + "]"};
}

Verdict snapshots() {
  const auto& run = fig1to4();
  bool ok = true;
  std::string detail;
  for (long long k : {7000LL, 9000LL}) {
    const auto it = run.record.snapshots.find(k);
    if (it == run.record.snapshots.end()) return {false, "snapshot " + std::to_string(k) + " missing"};
    const auto stats = photon_stats(it->second);
    Index mode = 0;
    it->second.maxCoeff(&mode);
    // Peaks holding at least 1% of the mode; the thermal-trap remnant near n = 3
    // sits three orders of magnitude below and is listed separately.
    const auto peaks = distribution_peaks(it->second, 1e-2);
    const auto all_peaks = distribution_peaks(it->second, 1e-6);
    const bool single = peaks.size() == 1;
    const bool mode_ok = mode >= 13 && mode <= 15;
    const bool v_ok = stats.v && *stats.v >= 0.3 && *stats.v <= 0.8;
    ok = ok && single && mode_ok && v_ok;
    detail += "atom " + std::to_string(k) + ": mode " + std::to_string(mode) + ", v = " + fmt(stats.v.value_or(NAN)) +
              ", peaks >= 1% of mode: " + std::to_string(peaks.size()) + ", minor local maxima: " +
              std::to_string(all_peaks.size() - peaks.size()) + "; ";
  }
  return {ok, detail};
}

Verdict exit_atoms() {
  const auto& run = fig1to4();
  const double median = run.record.median_p_a(run.cfg.burn_in + 1);
  std::size_t mismatches = 0;
  for (const auto& r : run.record.rows)
    if (r.projection_noise != r.p_a * (1 - r.p_a)) ++mismatches;

  // The same identity after a trip through the CSV text.
  RunConfig small = run.cfg;
  small.n_atoms = 200;
  small.snapshots.clear();
  const auto out = cli_trajectory(small);
  const auto table = CsvTable::parse(out.find("trajectory.csv")->content);
  const auto ip = table.column("p_a"), in = table.column("projection_noise");
  std::size_t csv_mismatches = 0;
  for (const auto& row : table.rows) {
    const double p = std::stod(row[ip]);
    if (std::stod(row[in]) != p * (1 - p)) ++csv_mismatches;
  }
  const bool ok = median >= 0.7 && median <= 0.9 && mismatches == 0 && csv_mismatches == 0;
  return {ok, "median p_a after atom " + std::to_string(run.cfg.burn_in) + " = " + fmt(median) + ", rows with (dJ)^2 != p_a(1-p_a): " +
                  std::to_string(mismatches) + " of " + std::to_string(run.record.rows.size()) + " (CSV: " +
                  std::to_string(csv_mismatches) + " of " + std::to_string(table.rows.size()) + ")"};
}

Verdict microlaser_curve() {
  const RunConfig cfg = load_config(kConfigDir / "microlaser-ref3.json", Command::sweep);
  SweepOptions opts;
  opts.threads = cfg.threads;
  const auto sweep = pump_sweep(cfg.params, cfg.D_grid, cfg.N_fixed, opts);
  auto at = [&](double D) -> const SweepPoint* {
    for (const auto& pt : sweep.points)
      if (std::abs(pt.D - D) < 1e-9) return &pt;
    return nullptr;
  };
  const auto *lo = at(0.8), *hi = at(1.2), *pi1 = at(31.4), *pi2 = at(62.8);
  if (!lo || !hi || !pi1 || !pi2) return {false, "preset D grid lacks 0.8, 1.2, 31.4 or 62.8"};
  if (sweep.converged_count() != sweep.points.size())
    return {false, std::to_string(sweep.points.size() - sweep.converged_count()) + " sweep points failed"};
  double best = -1, best_D = 0;
  for (const auto& pt : sweep.points)
    if (pt.mean_n > best) {
      best = pt.mean_n;
      best_D = pt.D;
    }
  const double rise = hi->mean_n / lo->mean_n;
  const bool ok = rise > 5 && best_D >= 1.4 && best_D <= 1.9 && pi1->mean_n < 0.5 && pi2->mean_n < 0.5;
  return {ok, "<n>(1.2)/<n>(0.8) = " + fmt(rise) + ", argmax D = " + fmt(best_D) + " (<n> = " + fmt(best) +
                  "), <n>(31.4) = " + fmt(pi1->mean_n) + ", <n>(62.8) = " + fmt(pi2->mean_n) + ", " +
                  std::to_string(sweep.points.size()) + " points"};
}

Verdict trap_negative() {
  const auto& run = fig1to4();
  const auto report = trap_condition(run.cfg.params, 0, 30);
  const auto zeros = report.zeros(1);
  const auto [v_min, v_max] = run.record.v_band(1, run.cfg.n_atoms);
  const bool ok = zeros.empty() && v_min > 0.1;
  return {ok, "n_th = " + fmt(run.cfg.params.n_th) + ": zeros of f(n) for n >= 1: " + std::to_string(zeros.size()) +
                  ", trajectory min v = " + fmt(v_min)};
}

Verdict numerical_hygiene() {
  std::string detail;
  bool ok = true;

  const RunConfig cfg = load_config(kConfigDir / "micromaser-fig1to4.json", Command::trajectory);
  const SystemParams& p = cfg.params;
  const FockSpace fs(p.n_max);

  // Trace drift and positivity along 300 passes (cached propagator), with the
  // RK4 route checked on the first 20.
  {
    const AtomPass<double> pass(p, Mode::maser_transit);
    const Liouvillian<double> decay(LiouvillianSpec{Mode::cavity_decay, p});
    ArrivalSampler sampler(1 / p.R, p.tau, 7);
    auto rho = thermal_state<double>(fs, p.n_th);
    double drift = 0, drift_rk4 = 0, min_eig = 1;
    for (int k = 0; k < 300; ++k) {
      const double before = trace(rho).real();
      const auto out = pass(rho);
      drift = std::max(drift, std::abs(trace(out.field).real() - before));
      min_eig = std::min(min_eig, min_eigenvalue(out.field));
      if (k < 20) {
        const auto joint = evolve(LiouvillianSpec{Mode::maser_transit, p}, with_upper_atom(rho), p.tau);
        drift_rk4 = std::max(drift_rk4, std::abs(trace(joint).real() - before));
        min_eig = std::min(min_eig, min_eigenvalue(joint));
      }
      rho = evolve(decay, out.field, sampler.sample_gap() - p.tau);
      min_eig = std::min(min_eig, min_eigenvalue(rho));
    }
    const bool t_ok = drift < 1e-9 && drift_rk4 < 1e-9;
    const bool pos_ok = min_eig >= -1e-8;
    ok = ok && t_ok && pos_ok;
    detail += "trace drift per pass " + fmt(drift, 3) + " (RK4 " + fmt(drift_rk4, 3) + "), min eigenvalue " +
              fmt(min_eig, 3) + "; ";
  }

  // RK4 convergence order on one atom pass from a coherent field.
  {
    SystemParams q = p;
    q.n_max = 40;
    const auto rho = coherent_state<double>(FockSpace(40), {2.0, 0.0});
    auto pass_with = [&](int steps) {
      EvolveOptions o;
      o.step = q.tau / steps;
      return atom_pass_map(q, Mode::maser_transit, rho, o).field.matrix();
    };
    const auto r1 = pass_with(16), r2 = pass_with(32), r4 = pass_with(64);
    const double ratio = (r1 - r2).cwiseAbs().maxCoeff() / (r2 - r4).cwiseAbs().maxCoeff();
    const bool r_ok = ratio >= 12 && ratio <= 20;
    ok = ok && r_ok;
    detail += "RK4 step-halving ratio " + fmt(ratio, 4) + "; ";
  }

  {
    const auto stats = photon_stats(coherent_state<double>(FockSpace(40), {2.0, 0.0}));
    const bool c_ok = stats.v && std::abs(*stats.v - 1) <= 1e-3;
    ok = ok && c_ok;
    detail += "coherent v " + fmt(stats.v.value_or(NAN), 10) + "; ";
  }

  {
    const auto thermal = thermal_state<double>(fs, p.n_th);
    const auto rhs = liouvillian_rhs(LiouvillianSpec{Mode::cavity_decay, p}, thermal);
    const double r = rhs.cwiseAbs().maxCoeff();
    ok = ok && r < 1e-10;
    detail += "thermal stationarity max|drho/dt| " + fmt(r, 3);
  }
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "method cross-validation", cross_validation},
      {2, "micromaser variance (ref1a)", micromaser_variance},
      {3, "steady state vs trajectory", steady_vs_trajectory},
      {4, "P(n) snapshots at atoms 7000 and 9000", snapshots},
      {5, "exit-atom p_a and projection noise", exit_atoms},
      {6, "microlaser curve structure", microlaser_curve},
      {7, "trap condition and Fock non-attainment", trap_negative},
      {8, "numerical hygiene", numerical_hygiene},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::cout << "criterion " << c.id << " [PRIMARY] " << (v.pass ? "PASS" : "FAIL") << " " << c.name << ": "
              << v.detail << " (" << fmt(secs, 3) << " s)" << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
