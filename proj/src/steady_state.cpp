#include "micromaser/steady_state.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace micromaser {

namespace {

void require_tail_below_guard(const PhotonStats<double>& s, const char* op) {
  if (s.tail > kTailGuard)
    throw TruncationError(std::string(op) + ": tail mass " + std::to_string(s.tail) +
                              " exceeds guard; raise n_max",
                          s.tail);
}

RVector<double> thermal_populations(Index n_max, double n_th) {
  return photon_distribution(thermal_state<double>(FockSpace(n_max), n_th));
}

}  // namespace

SteadyStateResult analytic_product_stats(const SystemParams& params) {
  params.validate_pumped();
  if (params.gamma != 0)
    throw std::invalid_argument("analytic_product_stats: only valid for gamma == 0; use fixed_point_stats");
  const double N = params.N();
  const double gt = params.g_tau();
  const double n_th = params.n_th;

  RVector<double> p(params.n_max);
  p(0) = 1;
  for (Index m = 1; m < params.n_max; ++m) {
    const double s = std::sin(gt * std::sqrt(double(m)));
    const double ratio = (n_th * double(m) + N * s * s) / (double(m) * (1 + n_th));
    p(m) = p(m - 1) * ratio;
    if (p(m) > 1e250) p.head(m + 1) /= p(m);
  }
  p /= p.sum();

  SteadyStateResult r;
  r.stats = photon_stats(p);
  r.method = SteadyMethod::analytic_product;
  require_tail_below_guard(r.stats, "analytic_product_stats");
  return r;
}

CoarseGrainedMap coarse_grained_map(const SystemParams& params, Mode mode, bool maser_atomic_decay) {
  require_transit_mode(mode, "coarse_grained_map");
  const Index n = params.n_max;
  const FockSpace fs(n);

  CoarseGrainedMap map;
  map.transit.resize(n, n);
  map.p_a.resize(n);
  const AtomPass<double> pass(params, mode, Sectors::populations, maser_atomic_decay);
  for (Index k = 0; k < n; ++k) {
    const auto out = pass(fock_state<double>(fs, k));
    map.transit.col(k) = photon_distribution(out.field);
    map.p_a(k) = out.p_a;
  }

  const Liouvillian<double> decay(LiouvillianSpec{Mode::cavity_decay, params});
  const CMatrix<double> gen = decay.sector_generator(decay.superoperator(), decay.sector_positions(0));
  const RMatrix<double> L = gen.real();
  const double rate = params.R;
  const RMatrix<double> shifted = rate * RMatrix<double>::Identity(n, n) - L;
  map.gap = shifted.partialPivLu().solve(rate * RMatrix<double>::Identity(n, n));
  return map;
}

SteadyStateResult fixed_point_stats(const SystemParams& params, Mode mode, const FixedPointOptions& opts) {
  params.validate_pumped();
  const CoarseGrainedMap map = coarse_grained_map(params, mode, opts.maser_atomic_decay);
  const RMatrix<double> cycle = map.cycle();

  RVector<double> p = thermal_populations(params.n_max, params.n_th);
  RMatrix<double> jump = cycle;  // cycle^span
  long long span = 1;
  long long iterations = 0;
  int since_squaring = 0;
  std::vector<double> history;
  double residual = std::numeric_limits<double>::infinity();

  // Plain iteration; when progress is slow, advance by repeated squares of
  // the cycle. The residual is always that of a single atom.
  constexpr int kSquareEvery = 64;
  constexpr std::size_t kHistoryCap = 4096;
  while (true) {
    RVector<double> next = cycle * p;
    next /= next.sum();
    residual = (next - p).lpNorm<1>();
    if (history.size() < kHistoryCap) history.push_back(residual);
    if (!std::isfinite(residual)) throw ConvergenceError("fixed_point_stats: non-finite iterate", history);
    if (residual < opts.tolerance) {
      p = next;
      ++iterations;
      break;
    }
    if (span == 1) {
      p = next;
    } else {
      p = jump * p;
      p /= p.sum();
    }
    iterations += span;
    if (iterations >= opts.max_iterations)
      throw ConvergenceError("fixed_point_stats: no convergence after " + std::to_string(iterations) +
                                 " atoms, residual " + std::to_string(residual),
                             history);
    if (++since_squaring >= kSquareEvery && 2 * span <= opts.max_iterations - iterations) {
      jump = (jump * jump).eval();
      span *= 2;
      since_squaring = 0;
    }
  }

  SteadyStateResult r;
  r.method = SteadyMethod::fixed_point;
  r.stats = photon_stats(p);
  r.iterations = iterations;
  r.residual = residual;
  r.residual_history = std::move(history);
  RVector<double> exit = map.transit * p;
  exit /= exit.sum();
  r.exit_stats = photon_stats(exit);
  r.mean_p_a = map.p_a.dot(p);
  require_tail_below_guard(r.stats, "fixed_point_stats");
  require_tail_below_guard(*r.exit_stats, "fixed_point_stats");
  return r;
}

std::vector<double> SweepResult::axis() const {
  std::vector<double> out;
  for (const auto& pt : points) out.push_back(pt.D);
  return out;
}

std::vector<double> SweepResult::mean_n() const {
  std::vector<double> out;
  for (const auto& pt : points) out.push_back(pt.mean_n);
  return out;
}

std::size_t SweepResult::converged_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const SweepPoint& p) { return p.converged; }));
}

SweepResult pump_sweep(const SystemParams& base, std::span<const double> D_grid, double N_fixed,
                       const SweepOptions& opts) {
  if (D_grid.empty()) throw ValidationError("D_grid", "must not be empty");
  for (std::size_t i = 0; i < D_grid.size(); ++i) {
    if (!(D_grid[i] > 0) || !std::isfinite(D_grid[i])) throw ValidationError("D_grid", "values must be positive");
    if (i > 0 && !(D_grid[i] > D_grid[i - 1])) throw ValidationError("D_grid", "must be strictly increasing");
  }
  if (!(N_fixed > 0)) throw ValidationError("N", "must be > 0");
  if (!(base.g > 0)) throw ValidationError("g", "must be > 0 for a pump sweep");
  if (!(base.kappa > 0)) throw ValidationError("kappa", "must be > 0");

  SweepResult result;
  result.points.resize(D_grid.size());
  auto run_point = [&](std::size_t i) {
    SweepPoint& pt = result.points[i];
    pt.D = D_grid[i];
    SystemParams p = base.with_N(N_fixed);
    p.n_th = 0;
    p.tau = pt.D / (std::sqrt(N_fixed) * p.g);
    pt.tau = p.tau;
    try {
      p.validate_pumped();
      const auto ss = fixed_point_stats(p, Mode::laser_transit, opts.fixed_point);
      pt.stats = ss.stats;
      pt.mean_n = ss.stats.mean;
      pt.v = ss.stats.v;
      pt.converged = true;
    } catch (const std::exception& e) {
      pt.error = e.what();
      pt.mean_n = std::numeric_limits<double>::quiet_NaN();
    }
  };

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, D_grid.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < D_grid.size(); ++i) run_point(i);
    return result;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < D_grid.size(); i = next++) run_point(i);
    });
  pool.clear();
  return result;
}

std::vector<Index> distribution_peaks(const RVector<double>& p, double relative_floor) {
  std::vector<Index> peaks;
  const Index n = p.size();
  if (n == 0) return peaks;
  const double floor = relative_floor * p.maxCoeff();
  for (Index k = 0; k < n; ++k) {
    if (p(k) < floor) continue;
    const bool left = k == 0 || p(k) > p(k - 1);
    const bool right = k == n - 1 || p(k) >= p(k + 1);
    if (left && right) peaks.push_back(k);
  }
  return peaks;
}

VariancePeakReport variance_peak_scan(const SystemParams& base, double N_fixed, double D_lo, double D_hi,
                                      int points, const SweepOptions& opts) {
  if (!(D_hi > D_lo) || !(D_lo > 0)) throw ValidationError("D_window", "need 0 < D_lo < D_hi");
  if (points < 3) throw ValidationError("points", "need at least 3 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = D_lo + (D_hi - D_lo) * i / (points - 1);

  VariancePeakReport rep;
  rep.sweep = pump_sweep(base, grid, N_fixed, opts);
  const auto& pts = rep.sweep.points;
  auto v_at = [&](std::size_t i) { return pts[i].converged && pts[i].v ? *pts[i].v : -1.0; };
  double best = -1;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double v = v_at(i);
    if (v > v_at(i - 1) && v >= v_at(i + 1) && v > best) {
      best = v;
      rep.spike = i;
    }
  }
  if (!rep.spike) return rep;

  const auto& at = pts[*rep.spike];
  rep.spike_D = at.D;
  rep.distribution_peaks = distribution_peaks(at.stats.p);
  rep.peak_at_zero = !rep.distribution_peaks.empty() && rep.distribution_peaks.front() == 0;
  if (!rep.distribution_peaks.empty() && rep.distribution_peaks.back() != 0)
    rep.upper_peak = rep.distribution_peaks.back();
  for (std::size_t i = *rep.spike + 1; i < pts.size(); ++i) {
    if (pts[i].converged && pts[i].v && *pts[i].v < 1) {
      rep.sub_poissonian_D = pts[i].D;
      break;
    }
  }
  return rep;
}

}  // namespace micromaser
