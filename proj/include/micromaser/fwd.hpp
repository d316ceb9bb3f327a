#ifndef MICROMASER_FWD_HPP
#define MICROMASER_FWD_HPP

#include <complex>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace micromaser {

using Index = Eigen::Index;
static constexpr auto DYN = Eigen::Dynamic;

template <typename Scalar>
using Complex = std::complex<Scalar>;
template <typename Scalar>
using CMatrix = Eigen::Matrix<Complex<Scalar>, DYN, DYN>;
template <typename Scalar>
using CVector = Eigen::Matrix<Complex<Scalar>, DYN, 1>;
template <typename Scalar>
using RMatrix = Eigen::Matrix<Scalar, DYN, DYN>;
template <typename Scalar>
using RVector = Eigen::Matrix<Scalar, DYN, 1>;
template <typename Scalar>
using SparseOp = Eigen::SparseMatrix<Complex<Scalar>>;

/// Operators are plain dense complex matrices; the space they act on is
/// implied by their dimension (n_max, 2 or 2·n_max).
template <typename Scalar>
using DenseOperator = CMatrix<Scalar>;

template <typename Scalar>
class DensityMatrix;
template <typename Scalar>
struct PhotonStats;

}  // namespace micromaser

#endif  // MICROMASER_FWD_HPP
