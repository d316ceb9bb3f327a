#include "micromaser/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace micromaser {

ArrivalSampler::ArrivalSampler(double mu, double tau, std::uint64_t seed) : engine_(seed), mu_(mu), tau_(tau) {
  if (!(mu > 0)) throw ValidationError("mu", "mean arrival spacing must be > 0");
  if (!(tau >= 0)) throw ValidationError("tau", "must be >= 0");
}

double ArrivalSampler::sample_gap() {
  while (true) {
    ++draws_;
    const double t = gap_from_deviate(mu_, uniform());
    if (t >= tau_) return t;
    ++rejections_;
  }
}

double projection_noise(double p_a) {
  if (!(p_a >= 0 && p_a <= 1)) throw std::domain_error("projection_noise: p_a must lie in [0, 1]");
  return p_a * (1 - p_a);
}

double TrajectoryRecord::median_p_a(long long from) const {
  std::vector<double> xs;
  for (const auto& r : rows)
    if (r.atom >= from) xs.push_back(r.p_a);
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  if (xs.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(xs.begin(), mid);
  return (lower + upper) / 2;
}

std::pair<double, double> TrajectoryRecord::v_band(long long from, long long to) const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (r.atom < from || r.atom > to || !r.v) continue;
    lo = std::min(lo, *r.v);
    hi = std::max(hi, *r.v);
  }
  return {lo, hi};
}

namespace {

bool is_diagonal(const DensityMatrix<double>& rho) {
  const auto& m = rho.matrix();
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != std::complex<double>(0)) return false;
  return true;
}

}  // namespace

TrajectoryRecord run_trajectory(const SystemParams& params, const TrajectoryOptions& opts) {
  params.validate();
  if (opts.n_atoms < 1) throw ValidationError("n_atoms", "must be >= 1");
  const FockSpace fs(params.n_max);

  DensityMatrix<double> rho = opts.initial ? *opts.initial : thermal_state<double>(fs, params.n_th);
  require_space(rho.space(), Space::field, "run_trajectory");
  if (rho.n_max() != params.n_max) throw ValidationError("initial", "n_max does not match params");

  const Sectors sectors = is_diagonal(rho) ? Sectors::populations : Sectors::all;
  const AtomPass<double> pass(params, opts.mode, sectors, opts.maser_atomic_decay);
  const Liouvillian<double> decay(LiouvillianSpec{Mode::cavity_decay, params});
  ArrivalSampler sampler(1 / params.R, params.tau, opts.seed);

  TrajectoryRecord rec;
  rec.rows.reserve(static_cast<std::size_t>(opts.n_atoms));
  RVector<double> accumulated;
  if (opts.average_from > 0) accumulated = RVector<double>::Zero(params.n_max);

  for (long long k = 1; k <= opts.n_atoms; ++k) {
    const std::string where = "run_trajectory: atom " + std::to_string(k) + ": ";
    try {
      const double t_R = sampler.sample_gap();
      const double t_cav = t_R - params.tau;
      auto out = pass(rho);
      if (!out.field.matrix().allFinite()) throw IntegrationError("non-finite field state");

      const auto stats = photon_stats(out.field);
      if (stats.tail > kTailGuard)
        throw TruncationError("tail mass " + std::to_string(stats.tail) + " exceeds guard; raise n_max",
                              stats.tail);

      TrajectoryRow row;
      row.atom = k;
      row.t_R = t_R;
      row.t_cav = t_cav;
      row.p_a = out.p_a;
      row.projection_noise = projection_noise(out.p_a);
      row.mean_n = stats.mean;
      row.v = stats.v;
      row.tail = stats.tail;
      rec.rows.push_back(row);

      if (std::find(opts.snapshot_at.begin(), opts.snapshot_at.end(), k) != opts.snapshot_at.end())
        rec.snapshots[k] = stats.p;
      if (opts.average_from > 0 && k >= opts.average_from) {
        accumulated += stats.p;
        ++rec.averaged_atoms;
      }
      rho = evolve(decay, out.field, t_cav);
    } catch (const TruncationError& e) {
      throw TruncationError(where + e.what(), e.tail_mass());
    } catch (const IntegrationError& e) {
      throw IntegrationError(where + e.what());
    }
  }

  rec.rejections = sampler.rejections();
  rec.final_tail = tail_mass(rho);
  if (rec.averaged_atoms > 0) rec.mean_exit_distribution = accumulated / double(rec.averaged_atoms);
  rec.final_field = std::move(rho);
  return rec;
}

std::vector<Index> TrapReport::zeros(Index from) const {
  std::vector<Index> out;
  for (const auto& r : rows)
    if (r.is_zero && r.n >= from) out.push_back(r.n);
  return out;
}

std::vector<Index> TrapReport::fock_candidates() const {
  std::vector<Index> out;
  for (const auto& r : rows)
    if (r.fock_candidate) out.push_back(r.n);
  return out;
}

std::vector<Index> TrapReport::near_fock_candidates() const {
  std::vector<Index> out;
  for (const auto& r : rows)
    if (r.near_fock_candidate) out.push_back(r.n);
  return out;
}

TrapReport trap_condition(const SystemParams& params, Index n_lo, Index n_hi, const TrapOptions& opts) {
  if (n_lo < 0 || n_hi < n_lo) throw ValidationError("n_grid", "need 0 <= min <= max");
  const double N = params.N();
  const double gt = params.g_tau();
  TrapReport rep;
  double best = std::numeric_limits<double>::infinity();
  for (Index n = n_lo; n <= n_hi; ++n) {
    const double dn = double(n);
    const double s = std::sin(std::sqrt(dn) * gt);
    const double damping = std::exp(-(params.gamma + (2 * dn - 1) * params.kappa) * params.tau);
    TrapRow row;
    row.n = n;
    row.f = -2 * dn * params.n_th - 2 * N * s * s * damping;
    row.is_zero = std::abs(row.f) <= opts.zero_tolerance;
    row.fock_residual = std::abs(std::sin(gt * std::sqrt(dn + 1)));
    row.fock_candidate = row.fock_residual < opts.fock_tolerance;
    row.near_fock_candidate = row.fock_residual < opts.near_tolerance;
    if (row.fock_residual < best) {
      best = row.fock_residual;
      rep.min_residual_n = n;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace micromaser
