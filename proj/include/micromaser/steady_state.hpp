#ifndef MICROMASER_STEADY_STATE_HPP
#define MICROMASER_STEADY_STATE_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "micromaser/lindblad.hpp"

namespace micromaser {

enum class SteadyMethod { analytic_product, fixed_point };

inline const char* to_string(SteadyMethod m) {
  return m == SteadyMethod::analytic_product ? "analytic_product" : "fixed_point";
}

struct SteadyStateResult {
  /// Distribution seen by an arriving atom (equal to the time average during gaps).
  PhotonStats<double> stats;
  SteadyMethod method = SteadyMethod::analytic_product;
  long long iterations = 0;
  /// L1 (trace) norm of the last single-atom update.
  double residual = 0;

  // fixed_point only
  std::optional<PhotonStats<double>> exit_stats;  // right after an atom leaves
  std::optional<double> mean_p_a;
  std::vector<double> residual_history;
};

/// P_n = P_0 ∏_{m≤n} [n_th·m + N sin²(gτ√m)] / [m(1+n_th)]. Requires gamma == 0.
SteadyStateResult analytic_product_stats(const SystemParams& params);

struct FixedPointOptions {
  double tolerance = 1e-10;
  long long max_iterations = 1'000'000;
  bool maser_atomic_decay = false;
};

/// Population transfer of one atom cycle: atom transit then an empty-cavity gap.
struct CoarseGrainedMap {
  RMatrix<double> transit;  // P_exit = transit · P_arrival
  RVector<double> p_a;      // exit upper-state population for each incoming Fock state
  RMatrix<double> gap;      // P_arrival = gap · P_exit, averaged over the gap law
  RMatrix<double> cycle() const { return gap * transit; }
};

/// The gap t_cav is exponential with mean 1/R (the law produced by sampling
/// t_R = −ln(x)/R and rejecting t_R < τ), so the averaged empty-cavity map is
/// the resolvent R·(R − L)^-1 of the cavity-decay generator.
CoarseGrainedMap coarse_grained_map(const SystemParams& params, Mode mode, bool maser_atomic_decay = false);

/// Fixed point of the coarse-grained one-atom cycle, iterated from the
/// thermal state at n_th.
SteadyStateResult fixed_point_stats(const SystemParams& params, Mode mode, const FixedPointOptions& opts = {});

struct SweepPoint {
  double D = 0;
  double tau = 0;
  double mean_n = 0;
  std::optional<double> v;
  bool converged = false;
  std::string error;
  PhotonStats<double> stats;
};

struct SweepResult {
  std::vector<SweepPoint> points;

  std::vector<double> axis() const;
  std::vector<double> mean_n() const;
  std::size_t converged_count() const;
};

struct SweepOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  FixedPointOptions fixed_point;
};

/// Laser characteristic at fixed N: for each D, tau = D/(√N g), R = 2κN,
/// n_th = 0, laser_transit mode. Failed points are recorded, not thrown.
SweepResult pump_sweep(const SystemParams& base, std::span<const double> D_grid, double N_fixed,
                       const SweepOptions& opts = {});

struct VariancePeakReport {
  SweepResult sweep;
  std::optional<std::size_t> spike;  // index into sweep.points of the largest interior local max of v
  double spike_D = 0;
  std::vector<Index> distribution_peaks;  // local maxima of P(n) at the spike
  bool peak_at_zero = false;
  std::optional<Index> upper_peak;           // largest-n local maximum, if any besides n = 0
  std::optional<double> sub_poissonian_D;    // first D past the spike with v < 1
};

/// Local maxima of P(n) holding at least `relative_floor` of the largest entry.
std::vector<Index> distribution_peaks(const RVector<double>& p, double relative_floor = 1e-3);

VariancePeakReport variance_peak_scan(const SystemParams& base, double N_fixed, double D_lo, double D_hi,
                                      int points, const SweepOptions& opts = {});

}  // namespace micromaser

#endif  // MICROMASER_STEADY_STATE_HPP
