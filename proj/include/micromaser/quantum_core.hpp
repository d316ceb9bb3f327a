#ifndef MICROMASER_QUANTUM_CORE_HPP
#define MICROMASER_QUANTUM_CORE_HPP

// Operator algebra and states on a truncated Fock space, the two-level atom
// and their joint space.
//
// Conventions (frozen, golden files depend on them):
//   atom basis   : index 0 = upper |a>, index 1 = lower |b>
//   joint index  : 2·n + s  (field index major, atom index minor)

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "micromaser/fwd.hpp"

namespace micromaser {

enum class Space { field, atom, joint };

inline const char* to_string(Space s) {
  switch (s) {
    case Space::field: return "field";
    case Space::atom: return "atom";
    case Space::joint: return "joint";
  }
  return "?";
}

inline constexpr Index kUpper = 0;
inline constexpr Index kLower = 1;

/// Photon-number truncation: states |0> ... |n_max-1>.
struct FockSpace {
  Index n_max;

  explicit FockSpace(Index n) : n_max(n) {
    if (n < 2) throw std::invalid_argument("FockSpace: n_max must be >= 2");
  }
};

inline Index space_dimension(Space s, Index n_max) {
  switch (s) {
    case Space::field: return n_max;
    case Space::atom: return 2;
    case Space::joint: return 2 * n_max;
  }
  return 0;
}

template <typename Scalar = double>
class DensityMatrix {
 public:
  using Matrix = CMatrix<Scalar>;

  /// `n_max` is ignored for the atom space.
  DensityMatrix(Space space, Index n_max, Matrix entries)
      : space_(space), n_max_(space == Space::atom ? 0 : n_max), rho_(std::move(entries)) {
    if (space != Space::atom && n_max < 2)
      throw std::invalid_argument("DensityMatrix: n_max must be >= 2");
    const Index d = space_dimension(space, n_max);
    if (rho_.rows() != d || rho_.cols() != d)
      throw std::invalid_argument(std::string("DensityMatrix: ") + to_string(space) +
                                  " space expects dimension " + std::to_string(d));
  }

  Space space() const { return space_; }
  Index n_max() const { return n_max_; }
  Index dim() const { return rho_.rows(); }
  const Matrix& matrix() const { return rho_; }
  Complex<Scalar> operator()(Index i, Index j) const { return rho_(i, j); }

 private:
  Space space_;
  Index n_max_;
  Matrix rho_;
};

inline void require_space(Space actual, Space expected, const char* op) {
  if (actual != expected)
    throw std::invalid_argument(std::string(op) + ": expected " + to_string(expected) +
                                " space, got " + to_string(actual));
}

// ---------------------------------------------------------------- operators

/// a[n-1, n] = sqrt(n).
template <typename Scalar = double>
DenseOperator<Scalar> annihilation_op(const FockSpace& space) {
  DenseOperator<Scalar> a = DenseOperator<Scalar>::Zero(space.n_max, space.n_max);
  for (Index n = 1; n < space.n_max; ++n) a(n - 1, n) = std::sqrt(Scalar(n));
  return a;
}

template <typename Scalar = double>
DenseOperator<Scalar> creation_op(const FockSpace& space) {
  return annihilation_op<Scalar>(space).adjoint();
}

template <typename Scalar = double>
DenseOperator<Scalar> number_op(const FockSpace& space) {
  DenseOperator<Scalar> n = DenseOperator<Scalar>::Zero(space.n_max, space.n_max);
  for (Index k = 0; k < space.n_max; ++k) n(k, k) = Scalar(k);
  return n;
}

template <typename Scalar = double>
struct AtomicOps {
  DenseOperator<Scalar> S_plus;   // |a><b|
  DenseOperator<Scalar> S_minus;  // |b><a|
};

template <typename Scalar = double>
AtomicOps<Scalar> atomic_ops() {
  AtomicOps<Scalar> ops{DenseOperator<Scalar>::Zero(2, 2), DenseOperator<Scalar>::Zero(2, 2)};
  ops.S_plus(kUpper, kLower) = 1;
  ops.S_minus(kLower, kUpper) = 1;
  return ops;
}

/// Kronecker product field ⊗ atom, field index major.
template <typename Scalar>
DenseOperator<Scalar> tensor(const DenseOperator<Scalar>& field_op,
                             const DenseOperator<Scalar>& atom_op) {
  if (field_op.rows() != field_op.cols() || field_op.rows() < 2)
    throw std::invalid_argument("tensor: field operator must be square with dim >= 2");
  if (atom_op.rows() != 2 || atom_op.cols() != 2)
    throw std::invalid_argument("tensor: atom operator must be 2x2");
  const Index n = field_op.rows();
  DenseOperator<Scalar> out(2 * n, 2 * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) out.template block<2, 2>(2 * i, 2 * j) = field_op(i, j) * atom_op;
  return out;
}

// ------------------------------------------------------------------- states

template <typename Scalar = double>
DensityMatrix<Scalar> fock_state(const FockSpace& space, Index n) {
  if (n < 0 || n >= space.n_max) throw std::out_of_range("fock_state: n outside truncation");
  CMatrix<Scalar> rho = CMatrix<Scalar>::Zero(space.n_max, space.n_max);
  rho(n, n) = 1;
  return {Space::field, space.n_max, std::move(rho)};
}

/// Geometric distribution with mean n_th, renormalised on the truncated space.
template <typename Scalar = double>
DensityMatrix<Scalar> thermal_state(const FockSpace& space, Scalar n_th) {
  if (n_th < 0) throw std::invalid_argument("thermal_state: n_th must be >= 0");
  CMatrix<Scalar> rho = CMatrix<Scalar>::Zero(space.n_max, space.n_max);
  const Scalar ratio = n_th / (1 + n_th);
  Scalar weight = 1, total = 0;
  for (Index n = 0; n < space.n_max; ++n) {
    rho(n, n) = weight;
    total += weight;
    weight *= ratio;
  }
  rho /= total;
  return {Space::field, space.n_max, std::move(rho)};
}

/// Pure coherent state |alpha><alpha|, renormalised on the truncated space.
template <typename Scalar = double>
DensityMatrix<Scalar> coherent_state(const FockSpace& space, Complex<Scalar> alpha) {
  CVector<Scalar> psi(space.n_max);
  psi(0) = std::exp(-std::norm(alpha) / 2);
  for (Index n = 1; n < space.n_max; ++n) psi(n) = psi(n - 1) * alpha / std::sqrt(Scalar(n));
  psi.normalize();
  return {Space::field, space.n_max, psi * psi.adjoint()};
}

template <typename Scalar = double>
DensityMatrix<Scalar> atom_state(Index level) {
  if (level != kUpper && level != kLower) throw std::out_of_range("atom_state: level must be 0 or 1");
  CMatrix<Scalar> rho = CMatrix<Scalar>::Zero(2, 2);
  rho(level, level) = 1;
  return {Space::atom, 0, std::move(rho)};
}

template <typename Scalar>
DensityMatrix<Scalar> product_state(const DensityMatrix<Scalar>& field,
                                    const DensityMatrix<Scalar>& atom) {
  require_space(field.space(), Space::field, "product_state");
  require_space(atom.space(), Space::atom, "product_state");
  return {Space::joint, field.n_max(), tensor<Scalar>(field.matrix(), atom.matrix())};
}

/// rho_field ⊗ |a><a|: the state of the field with a freshly injected atom.
template <typename Scalar>
DensityMatrix<Scalar> with_upper_atom(const DensityMatrix<Scalar>& field) {
  return product_state(field, atom_state<Scalar>(kUpper));
}

// --------------------------------------------------------------- reductions

template <typename Scalar>
DensityMatrix<Scalar> partial_trace_atom(const DensityMatrix<Scalar>& joint) {
  require_space(joint.space(), Space::joint, "partial_trace_atom");
  const Index n_max = joint.n_max();
  const auto& rho = joint.matrix();
  CMatrix<Scalar> out(n_max, n_max);
  for (Index j = 0; j < n_max; ++j)
    for (Index i = 0; i < n_max; ++i)
      out(i, j) = rho(2 * i, 2 * j) + rho(2 * i + 1, 2 * j + 1);
  return {Space::field, n_max, std::move(out)};
}

/// Photon-number distribution P(n); joint states are traced over the atom.
template <typename Scalar>
RVector<Scalar> photon_distribution(const DensityMatrix<Scalar>& rho) {
  if (rho.space() == Space::joint) return photon_distribution(partial_trace_atom(rho));
  require_space(rho.space(), Space::field, "photon_distribution");
  return rho.matrix().diagonal().real();
}

/// P(n_max-1) + P(n_max-2). Anything above kTailGuard means the truncation
/// biases the result.
inline constexpr double kTailGuard = 1e-8;

template <typename Derived>
typename Derived::Scalar tail_mass(const Eigen::MatrixBase<Derived>& p) {
  const Index n = p.size();
  return p(n - 1) + p(n - 2);
}

template <typename Scalar>
Scalar tail_mass(const DensityMatrix<Scalar>& rho) {
  return tail_mass(photon_distribution(rho));
}

template <typename Scalar = double>
struct PhotonStats {
  RVector<Scalar> p;
  Scalar mean = 0;
  Scalar second_moment = 0;
  /// sqrt(variance/mean); empty when the mean is zero (vacuum).
  std::optional<Scalar> v;
  Scalar tail = 0;

  Scalar variance() const { return second_moment - mean * mean; }
};

inline constexpr double kZeroMean = 1e-12;

template <typename Derived>
PhotonStats<typename Derived::Scalar> photon_stats(const Eigen::MatrixBase<Derived>& distribution) {
  using Scalar = typename Derived::Scalar;
  PhotonStats<Scalar> s;
  s.p = distribution;
  for (Index n = 0; n < s.p.size(); ++n) {
    s.mean += Scalar(n) * s.p(n);
    s.second_moment += Scalar(n) * Scalar(n) * s.p(n);
  }
  if (s.mean > Scalar(kZeroMean)) s.v = std::sqrt(std::max(Scalar(0), s.variance()) / s.mean);
  s.tail = tail_mass(s.p);
  return s;
}

template <typename Scalar>
PhotonStats<Scalar> photon_stats(const DensityMatrix<Scalar>& rho_field) {
  require_space(rho_field.space(), Space::field, "photon_stats");
  return photon_stats(photon_distribution(rho_field));
}

/// p_a = Tr[rho (I ⊗ |a><a|)], clamped to [0, 1]. Values further than 1e-9
/// outside that range indicate a broken state and throw.
template <typename Scalar>
Scalar upper_state_population(const DensityMatrix<Scalar>& joint) {
  require_space(joint.space(), Space::joint, "upper_state_population");
  Scalar p = 0;
  for (Index n = 0; n < joint.n_max(); ++n) p += joint(2 * n + kUpper, 2 * n + kUpper).real();
  if (!(p >= Scalar(-1e-9) && p <= Scalar(1 + 1e-9)))
    throw std::domain_error("upper_state_population: p_a outside [0,1]: " + std::to_string(double(p)));
  return std::clamp(p, Scalar(0), Scalar(1));
}

// -------------------------------------------------------------- diagnostics

template <typename Scalar>
Scalar hermiticity_error(const DensityMatrix<Scalar>& rho) {
  return (rho.matrix() - rho.matrix().adjoint()).cwiseAbs().maxCoeff();
}

template <typename Scalar>
Complex<Scalar> trace(const DensityMatrix<Scalar>& rho) {
  return rho.matrix().trace();
}

template <typename Scalar>
Scalar min_eigenvalue(const DensityMatrix<Scalar>& rho) {
  const CMatrix<Scalar> h = (rho.matrix() + rho.matrix().adjoint()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<CMatrix<Scalar>> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace micromaser

#endif  // MICROMASER_QUANTUM_CORE_HPP
