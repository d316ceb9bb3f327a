#ifndef MICROMASER_LINDBLAD_HPP
#define MICROMASER_LINDBLAD_HPP

// Master-equation generators for atom transits and empty-cavity decay, a
// fixed-step RK4 integrator, and cached exact propagators for fixed durations.
//
// Dissipators use the form  rate·(c†cρ − 2cρc† + ρc†c)  throughout.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "micromaser/errors.hpp"
#include "micromaser/quantum_core.hpp"
#include "micromaser/system_params.hpp"

namespace micromaser {

enum class Mode {
  laser_transit,  // atom in cavity: JC coupling, cavity damping κ, atomic damping γ, no thermal photons
  maser_transit,  // atom in cavity: JC coupling, thermal cavity reservoir (κ, n_th), no atomic damping
  cavity_decay,   // empty cavity: thermal cavity reservoir only
};

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::laser_transit: return "laser_transit";
    case Mode::maser_transit: return "maser_transit";
    case Mode::cavity_decay: return "cavity_decay";
  }
  return "?";
}

inline Space mode_space(Mode m) { return m == Mode::cavity_decay ? Space::field : Space::joint; }

struct LiouvillianSpec {
  Mode mode = Mode::maser_transit;
  SystemParams params;
  /// Adds the γ channel to maser_transit. Off by default.
  bool maser_atomic_decay = false;
};

/// Resonant interaction-picture JC Hamiltonian g(a ⊗ S+ + a† ⊗ S−).
template <typename Scalar = double>
DenseOperator<Scalar> jc_hamiltonian(const SystemParams& params) {
  const FockSpace fs(params.n_max);
  const auto a = annihilation_op<Scalar>(fs);
  const auto s = atomic_ops<Scalar>();
  return Scalar(params.g) * (tensor<Scalar>(a, s.S_plus) + tensor<Scalar>(a.adjoint(), s.S_minus));
}

/// The right-hand side dρ/dt for one LiouvillianSpec, with operators kept sparse.
template <typename Scalar = double>
class Liouvillian {
 public:
  using Matrix = CMatrix<Scalar>;
  using Sparse = SparseOp<Scalar>;

  explicit Liouvillian(const LiouvillianSpec& spec)
      : mode_(spec.mode), space_(mode_space(spec.mode)), n_max_(spec.params.n_max) {
    const auto& p = spec.params;
    if (n_max_ < 2) throw std::invalid_argument("Liouvillian: n_max must be >= 2");
    const FockSpace fs(n_max_);
    Matrix a = annihilation_op<Scalar>(fs);
    Matrix s_minus = atomic_ops<Scalar>().S_minus;
    if (space_ == Space::joint) {
      const Matrix id_atom = Matrix::Identity(2, 2);
      const Matrix id_field = Matrix::Identity(n_max_, n_max_);
      s_minus = tensor<Scalar>(id_field, s_minus);
      a = tensor<Scalar>(a, id_atom);
      if (p.g != 0) {
        hamiltonian_ = jc_hamiltonian<Scalar>(p).sparseView();
        fastest_rate_ = std::max(fastest_rate_, p.g);
      }
    }
    const Matrix a_dag = a.adjoint();
    switch (mode_) {
      case Mode::laser_transit:
        add_channel(p.kappa, a);
        add_channel(p.gamma, s_minus);
        break;
      case Mode::maser_transit:
        add_channel(p.kappa * (1 + p.n_th), a);
        add_channel(p.kappa * p.n_th, a_dag);
        if (spec.maser_atomic_decay) add_channel(p.gamma, s_minus);
        break;
      case Mode::cavity_decay:
        add_channel(p.kappa * (1 + p.n_th), a);
        add_channel(p.kappa * p.n_th, a_dag);
        break;
    }
  }

  Mode mode() const { return mode_; }
  Space space() const { return space_; }
  Index n_max() const { return n_max_; }
  Index dim() const { return space_dimension(space_, n_max_); }
  /// Largest of g, κ(1+n_th), γ among the terms present; sets the RK4 step.
  double fastest_rate() const { return fastest_rate_; }

  Matrix operator()(const Matrix& rho) const {
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    if (hamiltonian_.nonZeros() > 0) {
      const Complex<Scalar> minus_i(0, -1);
      out += minus_i * (hamiltonian_ * rho);
      out -= minus_i * (rho * hamiltonian_);
    }
    for (const auto& ch : channels_) {
      const Matrix c_rho = ch.c * rho;
      out -= ch.rate * (ch.cdag_c * rho - Scalar(2) * (c_rho * ch.cdag) + rho * ch.cdag_c);
    }
    return out;
  }

  /// Excitation number of each basis state: n for the field, n + [atom up]
  /// for the joint space. Every generator here conserves q_i − q_j of ρ_ij.
  std::vector<Index> charges() const {
    std::vector<Index> q(static_cast<std::size_t>(dim()));
    for (Index i = 0; i < dim(); ++i)
      q[static_cast<std::size_t>(i)] = space_ == Space::field ? i : i / 2 + (i % 2 == kUpper ? 1 : 0);
    return q;
  }

  /// Column-major vec superoperator: vec(AXB) = (Bᵀ ⊗ A) vec(X).
  Sparse superoperator() const {
    const Index d = dim();
    Sparse id(d, d);
    id.setIdentity();
    Sparse sup(d * d, d * d);
    if (hamiltonian_.nonZeros() > 0) {
      const Sparse h_t = hamiltonian_.transpose();
      const Sparse comm = Sparse(Eigen::kroneckerProduct(id, hamiltonian_)) -
                          Sparse(Eigen::kroneckerProduct(h_t, id));
      sup += Complex<Scalar>(0, -1) * comm;
    }
    for (const auto& ch : channels_) {
      const Sparse cdc_t = ch.cdag_c.transpose();
      const Sparse c_conj = ch.c.conjugate();
      const Sparse term = Sparse(Eigen::kroneckerProduct(id, ch.cdag_c)) +
                          Sparse(Eigen::kroneckerProduct(cdc_t, id)) -
                          Scalar(2) * Sparse(Eigen::kroneckerProduct(c_conj, ch.c));
      sup -= ch.rate * term;
    }
    sup.makeCompressed();
    return sup;
  }

  /// Linear (column-major) positions of the matrix elements with q_i − q_j = delta.
  std::vector<Index> sector_positions(Index delta) const {
    const auto q = charges();
    const Index d = dim();
    std::vector<Index> pos;
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i)
        if (q[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(j)] == delta) pos.push_back(i + d * j);
    return pos;
  }

  /// Dense generator restricted to the given sector positions.
  Matrix sector_generator(const Sparse& sup, const std::vector<Index>& positions) const {
    const Index d = dim();
    std::vector<Index> slot(static_cast<std::size_t>(d * d), -1);
    for (std::size_t k = 0; k < positions.size(); ++k)
      slot[static_cast<std::size_t>(positions[k])] = static_cast<Index>(k);
    const Index m = static_cast<Index>(positions.size());
    Matrix block = Matrix::Zero(m, m);
    for (Index k = 0; k < m; ++k) {
      for (typename Sparse::InnerIterator it(sup, positions[static_cast<std::size_t>(k)]); it; ++it) {
        const Index row = slot[static_cast<std::size_t>(it.row())];
        if (row < 0) throw std::logic_error("Liouvillian: generator leaks out of charge sector");
        block(row, k) = it.value();
      }
    }
    return block;
  }

 private:
  struct Channel {
    Scalar rate;
    Sparse c, cdag, cdag_c;
  };

  void add_channel(double rate, const Matrix& c) {
    if (rate == 0) return;
    Channel ch{Scalar(rate), c.sparseView(), c.adjoint().sparseView(), (c.adjoint() * c).sparseView()};
    channels_.push_back(std::move(ch));
    fastest_rate_ = std::max(fastest_rate_, rate);
  }

  Mode mode_;
  Space space_;
  Index n_max_;
  Sparse hamiltonian_;
  std::vector<Channel> channels_;
  double fastest_rate_ = 0;
};

template <typename Scalar = double>
CMatrix<Scalar> liouvillian_rhs(const LiouvillianSpec& spec, const DensityMatrix<Scalar>& rho) {
  const Liouvillian<Scalar> L(spec);
  require_space(rho.space(), L.space(), "liouvillian_rhs");
  if (rho.n_max() != L.n_max()) throw std::invalid_argument("liouvillian_rhs: n_max mismatch");
  return L(rho.matrix());
}

struct EvolveOptions {
  /// Fixed step; 0 selects 0.01 / fastest_rate.
  double step = 0;
  bool guard_truncation = true;
  double trace_tolerance = 1e-6;
};

/// Number of RK4 steps used for duration t (always >= 1 for t > 0).
inline long rk4_steps(double fastest_rate, double t, const EvolveOptions& opts = {}) {
  if (t <= 0) return 0;
  double h = opts.step;
  if (h <= 0) {
    if (fastest_rate <= 0) return 0;
    h = 0.01 / fastest_rate;
  }
  return std::max(1L, static_cast<long>(std::ceil(t / h - 1e-9)));
}

template <typename Scalar>
DensityMatrix<Scalar> evolve(const Liouvillian<Scalar>& L, const DensityMatrix<Scalar>& rho, double t,
                             const EvolveOptions& opts = {}) {
  require_space(rho.space(), L.space(), "evolve");
  if (rho.n_max() != L.n_max()) throw std::invalid_argument("evolve: n_max mismatch");
  if (!(t >= 0)) throw std::invalid_argument("evolve: t must be >= 0");
  if (opts.guard_truncation) {
    const Scalar tail = tail_mass(rho);
    if (tail > Scalar(kTailGuard))
      throw TruncationError("evolve: input tail mass " + std::to_string(double(tail)) + " exceeds guard", tail);
  }
  const long steps = rk4_steps(L.fastest_rate(), t, opts);
  if (steps == 0) return rho;
  const Scalar h = Scalar(t / double(steps));

  using Matrix = CMatrix<Scalar>;
  Matrix x = rho.matrix();
  const Complex<Scalar> trace_in = x.trace();
  for (long s = 0; s < steps; ++s) {
    const Matrix k1 = L(x);
    const Matrix k2 = L(x + (h / 2) * k1);
    const Matrix k3 = L(x + (h / 2) * k2);
    const Matrix k4 = L(x + h * k3);
    x += (h / 6) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
    x = (x + x.adjoint()).eval() / Scalar(2);
  }
  if (!x.allFinite()) throw IntegrationError("evolve: non-finite entries");
  const Scalar drift = std::abs(x.trace() - trace_in);
  if (drift > Scalar(opts.trace_tolerance))
    throw IntegrationError("evolve: trace drift " + std::to_string(double(drift)));
  DensityMatrix<Scalar> out(rho.space(), rho.n_max(), std::move(x));
  if (opts.guard_truncation) {
    const Scalar tail = tail_mass(out);
    if (tail > Scalar(kTailGuard))
      throw TruncationError("evolve: tail mass " + std::to_string(double(tail)) + " exceeds guard", tail);
  }
  return out;
}

/// ρ(t) by fixed-step classical RK4, re-Hermitised after each step.
template <typename Scalar>
DensityMatrix<Scalar> evolve(const LiouvillianSpec& spec, const DensityMatrix<Scalar>& rho, double t,
                             const EvolveOptions& opts = {}) {
  return evolve(Liouvillian<Scalar>(spec), rho, t, opts);
}

enum class Sectors {
  populations,  // only q_i == q_j; enough for phase-invariant (e.g. diagonal field) inputs
  all,
};

/// exp(L·t) for a fixed duration, stored per charge sector.
///
/// Sectors Δ and −Δ are transposes of each other, so together they are
/// closed under Hermitian conjugation. Each such pair is exponentiated as a
/// real generator acting on the Hermitian coordinates (ρ_ii, Re ρ_ij, Im ρ_ij
/// for i < j), which is a quarter of the cost of the complex block.
template <typename Scalar = double>
class Propagator {
 public:
  using Matrix = CMatrix<Scalar>;
  using Real = RMatrix<Scalar>;

  Propagator(const LiouvillianSpec& spec, double duration, Sectors sectors = Sectors::populations)
      : spec_(spec), duration_(duration), space_(mode_space(spec.mode)), n_max_(spec.params.n_max) {
    if (!(duration >= 0)) throw std::invalid_argument("Propagator: duration must be >= 0");
    const Liouvillian<Scalar> L(spec);
    const auto sup = L.superoperator();
    const Index d = L.dim();
    Index max_delta = 0;
    if (sectors == Sectors::all) {
      const auto q = L.charges();
      max_delta = *std::max_element(q.begin(), q.end()) - *std::min_element(q.begin(), q.end());
    }
    covered_.assign(static_cast<std::size_t>(d * d), 0);
    for (Index delta = 0; delta <= max_delta; ++delta) {
      std::vector<Index> positions = L.sector_positions(delta);
      if (delta > 0) {
        const auto mirrored = L.sector_positions(-delta);
        positions.insert(positions.end(), mirrored.begin(), mirrored.end());
      }
      if (positions.empty()) continue;
      Sector s = hermitian_coordinates(positions, d);
      const Matrix gen = L.sector_generator(sup, positions);
      // Real generator in Hermitian coordinates: decode, apply, encode.
      Matrix decoded = Matrix::Zero(Index(positions.size()), s.size());
      for (Index k = 0; k < s.size(); ++k) {
        const auto& c = s.coords[static_cast<std::size_t>(k)];
        const Complex<Scalar> w = c.imaginary ? Complex<Scalar>(0, 1) : Complex<Scalar>(1);
        decoded(c.slot, k) = w;
        if (c.mirror_slot >= 0) decoded(c.mirror_slot, k) = std::conj(w);
      }
      const Matrix image = gen * decoded;
      Real g_real(s.size(), s.size());
      for (Index k = 0; k < s.size(); ++k) {
        const auto& c = s.coords[static_cast<std::size_t>(k)];
        if (c.imaginary)
          g_real.row(k) = image.row(c.slot).imag();
        else
          g_real.row(k) = image.row(c.slot).real();
      }
      s.map = (g_real * Scalar(duration)).exp();
      for (Index pos : positions) covered_[static_cast<std::size_t>(pos)] = 1;
      sectors_.push_back(std::move(s));
    }
  }

  double duration() const { return duration_; }
  Space space() const { return space_; }
  Index n_max() const { return n_max_; }
  const LiouvillianSpec& spec() const { return spec_; }

  DensityMatrix<Scalar> apply(const DensityMatrix<Scalar>& rho) const {
    require_space(rho.space(), space_, "Propagator::apply");
    if (rho.n_max() != n_max_) throw std::invalid_argument("Propagator::apply: n_max mismatch");
    const Index d = rho.dim();
    const Complex<Scalar>* in = rho.matrix().data();
    for (Index k = 0; k < d * d; ++k)
      if (!covered_[static_cast<std::size_t>(k)] && in[k] != Complex<Scalar>(0))
        throw std::invalid_argument("Propagator::apply: state has support outside the built sectors");
    Matrix out = Matrix::Zero(d, d);
    for (const auto& s : sectors_) {
      RVector<Scalar> x(s.size());
      for (Index k = 0; k < s.size(); ++k) {
        const auto& c = s.coords[static_cast<std::size_t>(k)];
        // Average with the mirror so a slightly non-Hermitian input is symmetrised.
        const Complex<Scalar> z =
            c.mirror_position < 0 ? in[c.position] : (in[c.position] + std::conj(in[c.mirror_position])) / Scalar(2);
        x(k) = c.imaginary ? z.imag() : z.real();
      }
      const RVector<Scalar> y = s.map * x;
      for (Index k = 0; k < s.size(); ++k) {
        const auto& c = s.coords[static_cast<std::size_t>(k)];
        const Complex<Scalar> w = c.imaginary ? Complex<Scalar>(0, y(k)) : Complex<Scalar>(y(k));
        out.data()[c.position] += w;
        if (c.mirror_position >= 0) out.data()[c.mirror_position] += std::conj(w);
      }
    }
    return {space_, n_max_, std::move(out)};
  }

  /// Real dimension of each stored sector pair, Δ = 0 first.
  std::vector<Index> sector_sizes() const {
    std::vector<Index> out;
    for (const auto& s : sectors_) out.push_back(s.size());
    return out;
  }

 private:
  struct Coordinate {
    Index position;            // column-major index of ρ_ij (i <= j)
    Index mirror_position;     // index of ρ_ji, or -1 on the diagonal
    Index slot, mirror_slot;   // the same, within the sector's position list
    bool imaginary;
  };
  struct Sector {
    std::vector<Coordinate> coords;
    Real map;
    Index size() const { return static_cast<Index>(coords.size()); }
  };

  static Sector hermitian_coordinates(const std::vector<Index>& positions, Index d) {
    std::vector<Index> slot(static_cast<std::size_t>(d * d), -1);
    for (std::size_t k = 0; k < positions.size(); ++k) slot[static_cast<std::size_t>(positions[k])] = Index(k);
    Sector s;
    for (Index pos : positions) {
      const Index i = pos % d, j = pos / d;
      if (i > j) continue;
      const Index sl = slot[static_cast<std::size_t>(pos)];
      if (i == j) {
        s.coords.push_back({pos, -1, sl, -1, false});
        continue;
      }
      const Index mirror = j + d * i;
      const Index msl = slot[static_cast<std::size_t>(mirror)];
      if (msl < 0) throw std::logic_error("Propagator: sector pair is not closed under transpose");
      s.coords.push_back({pos, mirror, sl, msl, false});
      s.coords.push_back({pos, mirror, sl, msl, true});
    }
    return s;
  }

  LiouvillianSpec spec_;
  double duration_;
  Space space_;
  Index n_max_;
  std::vector<Sector> sectors_;
  std::vector<char> covered_;
};

// --------------------------------------------------------------- atom pass

template <typename Scalar = double>
struct AtomPassResult {
  DensityMatrix<Scalar> field;
  Scalar p_a;  // upper-state population of the exiting atom
};

inline void require_transit_mode(Mode mode, const char* op) {
  if (mode == Mode::cavity_decay)
    throw std::invalid_argument(std::string(op) + ": needs an atom-in-cavity mode");
}

/// Inject an upper-state atom, evolve for tau with RK4, trace the atom out.
template <typename Scalar>
AtomPassResult<Scalar> atom_pass_map(const SystemParams& params, Mode mode,
                                     const DensityMatrix<Scalar>& rho_field,
                                     const EvolveOptions& opts = {}) {
  require_transit_mode(mode, "atom_pass_map");
  require_space(rho_field.space(), Space::field, "atom_pass_map");
  LiouvillianSpec spec{mode, params};
  spec.params.n_max = rho_field.n_max();
  const auto joint = evolve(spec, with_upper_atom(rho_field), params.tau, opts);
  return {partial_trace_atom(joint), upper_state_population(joint)};
}

/// The atom pass with a cached exact propagator over tau.
template <typename Scalar = double>
class AtomPass {
 public:
  AtomPass(const SystemParams& params, Mode mode, Sectors sectors = Sectors::populations,
           bool maser_atomic_decay = false)
      : propagator_(make_spec(params, mode, maser_atomic_decay), params.tau, sectors) {}

  AtomPassResult<Scalar> operator()(const DensityMatrix<Scalar>& rho_field) const {
    require_space(rho_field.space(), Space::field, "AtomPass");
    const auto joint = propagator_.apply(with_upper_atom(rho_field));
    return {partial_trace_atom(joint), upper_state_population(joint)};
  }

  const Propagator<Scalar>& propagator() const { return propagator_; }
  Index n_max() const { return propagator_.n_max(); }

 private:
  static LiouvillianSpec make_spec(const SystemParams& params, Mode mode, bool decay) {
    require_transit_mode(mode, "AtomPass");
    return {mode, params, decay};
  }
  Propagator<Scalar> propagator_;
};

}  // namespace micromaser

#endif  // MICROMASER_LINDBLAD_HPP
