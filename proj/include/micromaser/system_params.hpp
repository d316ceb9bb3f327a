#ifndef MICROMASER_SYSTEM_PARAMS_HPP
#define MICROMASER_SYSTEM_PARAMS_HPP

#include <cmath>
#include <numbers>

#include "micromaser/errors.hpp"
#include "micromaser/fwd.hpp"

namespace micromaser {

/// Physical configuration of one cavity mode pumped by two-level atoms.
/// Rates are angular (s^-1), times in seconds. The cavity damping follows the
/// convention kappa·(a†aρ − 2aρa† + ρa†a), so the photon lifetime is 1/(2κ).
struct SystemParams {
  double g = 0;      // atom-field coupling
  double tau = 0;    // transit (interaction) time, identical for every atom
  double kappa = 0;  // cavity damping
  double gamma = 0;  // atomic damping
  double n_th = 0;   // mean thermal photon number of the cavity reservoir
  double R = 0;      // atom flux
  Index n_max = 64;  // photon-number truncation

  /// Atoms per photon lifetime, R/(2κ).
  double N() const {
    if (!(kappa > 0)) throw ValidationError("kappa", "N = R/(2 kappa) requires kappa > 0");
    return R / (2 * kappa);
  }
  /// Pump parameter sqrt(N)·g·tau.
  double D() const { return std::sqrt(N()) * g * tau; }
  double g_tau() const { return g * tau; }

  /// Throws ValidationError naming the first offending field.
  void validate() const {
    auto finite = [](const char* name, double x) {
      if (!std::isfinite(x)) throw ValidationError(name, "must be finite");
    };
    finite("g", g);
    finite("tau", tau);
    finite("kappa", kappa);
    finite("gamma", gamma);
    finite("n_th", n_th);
    finite("R", R);
    if (g < 0) throw ValidationError("g", "must be >= 0");
    if (!(tau > 0)) throw ValidationError("tau", "must be > 0");
    if (kappa < 0) throw ValidationError("kappa", "must be >= 0");
    if (gamma < 0) throw ValidationError("gamma", "must be >= 0");
    if (n_th < 0) throw ValidationError("n_th", "must be >= 0");
    if (!(R > 0)) throw ValidationError("R", "must be > 0");
    if (n_max < 2) throw ValidationError("n_max", "must be >= 2");
    if (R * tau > 1) throw ValidationError("R", "R*tau must be <= 1 (at most one atom in the cavity)");
  }

  /// validate() plus kappa > 0, needed wherever N enters.
  void validate_pumped() const {
    validate();
    if (!(kappa > 0)) throw ValidationError("kappa", "must be > 0");
  }

  /// Copy with R chosen so that R/(2κ) = n_atoms_per_lifetime.
  SystemParams with_N(double n_atoms_per_lifetime) const {
    SystemParams p = *this;
    p.R = 2 * kappa * n_atoms_per_lifetime;
    return p;
  }
};

/// κ = ω/(2Q) for a mode at `frequency_hz`, consistent with the 1/(2κ) lifetime.
inline double kappa_from_quality(double frequency_hz, double quality_factor) {
  return 2 * std::numbers::pi * frequency_hz / (2 * quality_factor);
}

/// Bose-Einstein occupation of a mode at `frequency_hz` and temperature T.
inline double thermal_photon_number(double frequency_hz, double temperature_k) {
  constexpr double h = 6.62607015e-34;
  constexpr double k_b = 1.380649e-23;
  if (temperature_k <= 0) return 0;
  return 1 / std::expm1(h * frequency_hz / (k_b * temperature_k));
}

}  // namespace micromaser

#endif  // MICROMASER_SYSTEM_PARAMS_HPP
