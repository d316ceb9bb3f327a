#ifndef MICROMASER_TRAJECTORY_HPP
#define MICROMASER_TRAJECTORY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "micromaser/lindblad.hpp"

namespace micromaser {

/// Maps 64 random bits to a double strictly inside (0, 1): ((u >> 12) + 0.5) · 2^-52.
/// With 53 bits the top value 1 - 2^-54 would round to 1.
inline double open_unit_interval(std::uint64_t bits) {
  return (double(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// t_R = −μ ln(x).
inline double gap_from_deviate(double mu, double x) { return -mu * std::log(x); }

/// Poisson arrivals with mean spacing mu. Gaps shorter than the transit time
/// would put two atoms in the cavity; they are redrawn and counted.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the standard,
/// so a seed reproduces the same gaps on every conforming platform.
class ArrivalSampler {
 public:
  ArrivalSampler(double mu, double tau, std::uint64_t seed);

  double uniform() { return open_unit_interval(engine_()); }
  /// Next accepted t_R (>= tau).
  double sample_gap();

  double mu() const { return mu_; }
  double tau() const { return tau_; }
  std::uint64_t rejections() const { return rejections_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  double mu_;
  double tau_;
  std::uint64_t rejections_ = 0;
  std::uint64_t draws_ = 0;
};

/// Measurement variance of J = |a><a| on the exiting atom: p_a(1 − p_a).
double projection_noise(double p_a);

struct TrajectoryRow {
  long long atom = 0;  // 1-based
  double t_R = 0;
  double t_cav = 0;
  double p_a = 0;
  double projection_noise = 0;
  double mean_n = 0;           // at atom exit
  std::optional<double> v;     // at atom exit
  double tail = 0;
};

struct TrajectoryOptions {
  long long n_atoms = 1;
  std::uint64_t seed = 0;
  std::vector<long long> snapshot_at;  // 1-based atom indices; P(n) taken at atom exit
  /// Accumulate the mean exit distribution from this atom on (0: off).
  long long average_from = 0;
  Mode mode = Mode::maser_transit;
  bool maser_atomic_decay = false;
  /// Defaults to the thermal state at n_th.
  std::optional<DensityMatrix<double>> initial;
};

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  std::map<long long, RVector<double>> snapshots;
  std::uint64_t rejections = 0;
  double final_tail = 0;
  std::optional<RVector<double>> mean_exit_distribution;
  long long averaged_atoms = 0;
  DensityMatrix<double> final_field{Space::field, 2, CMatrix<double>::Zero(2, 2)};

  /// Median p_a over rows with atom index >= from.
  double median_p_a(long long from = 1) const;
  /// (min, max) of v over atoms in [from, to]; rows without v are skipped.
  std::pair<double, double> v_band(long long from, long long to) const;
};

/// Atom-by-atom simulation: sample a gap, pass an upper-state atom through
/// the cavity, then let the empty cavity decay for t_cav = t_R − tau.
TrajectoryRecord run_trajectory(const SystemParams& params, const TrajectoryOptions& opts);

struct TrapRow {
  Index n = 0;
  double f = 0;
  bool is_zero = false;
  double fock_residual = 0;  // |sin(gτ√(n+1))|
  bool fock_candidate = false;
  bool near_fock_candidate = false;
};

struct TrapOptions {
  double zero_tolerance = 1e-12;
  double fock_tolerance = 1e-6;
  double near_tolerance = 0.05;
};

struct TrapReport {
  std::vector<TrapRow> rows;
  /// The damping factor is evaluated as exp[−(γ + (2n−1)κ)τ] so that the exponent is dimensionless.
  std::string exponent_grouping = "exp[-(gamma + (2n-1) kappa) tau]";
  Index min_residual_n = 0;

  std::vector<Index> zeros(Index from = 0) const;
  std::vector<Index> fock_candidates() const;
  std::vector<Index> near_fock_candidates() const;
};

/// f(n) = −2 n n_th − 2N sin²(√n gτ) exp[−(γ + (2n−1)κ)τ] over n in [n_lo, n_hi].
TrapReport trap_condition(const SystemParams& params, Index n_lo, Index n_hi, const TrapOptions& opts = {});

}  // namespace micromaser

#endif  // MICROMASER_TRAJECTORY_HPP
