// Copyright 2026 The qmsep developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmsep {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// One global default for all rank, support and residual decisions, relative
/// to the largest singular value / eigenvalue of the operator at hand.  Every
/// operation accepts an override.
inline constexpr double kDefaultRelTol = 1e-10;

/// Verdict tolerance for detailed-balance style residual decisions: looser
/// than the rank tolerance to absorb least-squares conditioning.
inline constexpr double kBalanceTol = 1e-8;

/// Thrown when two computations that must agree (two routes to the same
/// mathematical object) disagree beyond tolerance.  Indicates numerical-rank
/// instability rather than invalid input.
class NumericalInconsistency : public std::runtime_error {
 public:
  explicit NumericalInconsistency(const std::string& what)
      : std::runtime_error(what) {}
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}
}  // namespace detail

/// Matrix unit |e_j><e_k| on C^n (0-based indices).
inline Mat matrix_unit(int n, int j, int k) {
  detail::require(n >= 1 && j >= 0 && j < n && k >= 0 && k < n,
                  "matrix_unit: index out of range");
  Mat e = Mat::Zero(n, n);
  e(j, k) = 1.0;
  return e;
}

/// Hilbert-Schmidt inner product tr(a^* b).  Conjugate-symmetric in (a, b).
inline Cplx hs_inner(const Mat& a, const Mat& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "hs_inner: shape mismatch");
  return (a.conjugate().cwiseProduct(b)).sum();
}

/// Frobenius (Hilbert-Schmidt) norm.
inline double frobenius(const Mat& a) { return a.norm(); }

/// Operator (spectral) norm: the largest singular value.
inline double op_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(a).singularValues()(0);
}

/// Trace norm: the sum of singular values.
inline double trace_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Mat>(a).singularValues().sum();
}

/// The conjugation theta: entrywise complex conjugation in the computational
/// basis.  Involutive and antiunitary: <theta v, theta u> = <u, v>.
inline Vec theta_conj(const Vec& v) { return v.conjugate(); }
inline Mat theta_conj(const Mat& a) { return a.conjugate(); }

/// The reversing operation Theta(A) = theta A^* theta.  Chasing entries,
/// (theta A^* theta)v = conj(A^* conj(v)) = conj(A^*) v, and conj(A^*) is the
/// plain transpose; so Theta is transposition in the defining basis.  It is a
/// linear *-antihomomorphism: Theta(AB) = Theta(B)Theta(A), Theta^2 = id.
inline Mat theta_map(const Mat& a) {
  detail::require(a.rows() == a.cols(), "theta_map: matrix must be square");
  return a.transpose();
}

/// The unitary flip F on C^n (x) C^n with F(e_j (x) e_k) = e_k (x) e_j.
/// Self-inverse.  Under column-stacking it is the commutation matrix:
/// F vec(X) = vec(X^T).
inline Mat flip(int n) {
  detail::require(n >= 1, "flip: dimension must be positive");
  Mat f = Mat::Zero(n * n, n * n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) f(k * n + j, j * n + k) = 1.0;
  return f;
}

/// Kronecker product a (x) b.
inline Mat tensor(const Mat& a, const Mat& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}
inline Vec tensor(const Vec& a, const Vec& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

/// Column-stacking vectorization.  The convention fixed once and for all:
/// vec(A X B) = (B^T (x) A) vec(X).
inline Vec vectorize(const Mat& a) {
  return Eigen::Map<const Vec>(a.data(), a.size());
}

/// Inverse of vectorize for an r x c matrix (square r = c by default).
inline Mat devectorize(const Vec& v, int rows, int cols = -1) {
  if (cols < 0) cols = rows;
  detail::require(rows >= 1 && cols >= 1 && v.size() == rows * cols,
                  "devectorize: size mismatch");
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

/// Spectral decomposition of a Hermitian matrix.  `eigenvalues` ascending,
/// `eigenvectors` unitary with eigenvectors.col(j) for eigenvalues(j).
struct HermitianEig {
  RVec eigenvalues;
  Mat eigenvectors;
};

/// Full spectral decomposition.  Inputs must be Hermitian within
/// rel_tol * ||A||; they are symmetrized as (A + A^*)/2 before solving so
/// round-off asymmetry never reaches the solver.
inline HermitianEig hermitian_eig(const Mat& a,
                                  double rel_tol = kDefaultRelTol) {
  detail::require(a.rows() == a.cols(), "hermitian_eig: matrix must be square");
  detail::require(a.allFinite(), "hermitian_eig: non-finite entries");
  const double scale = a.norm();
  detail::require((a - a.adjoint()).norm() <= rel_tol * std::max(scale, 1.0),
                  "hermitian_eig: matrix is not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<Mat> solver((a + a.adjoint()) / 2.0);
  detail::require(solver.info() == Eigen::Success,
                  "hermitian_eig: eigensolver failed");
  return HermitianEig{solver.eigenvalues(), solver.eigenvectors()};
}

namespace detail {
/// Shared eigendecomposition step for positive-semidefinite inputs: checks
/// positivity within rel_tol relative to the spectral radius and returns the
/// decomposition together with the retention cutoff rel_tol * spectral_radius.
struct PsdEig {
  HermitianEig eig;
  double cutoff;
};
inline PsdEig psd_eig(const Mat& a, double rel_tol, const char* who) {
  HermitianEig eig = hermitian_eig(a, std::max(rel_tol, 1e-9));
  const int n = static_cast<int>(eig.eigenvalues.size());
  const double radius =
      n == 0 ? 0.0 : std::max(std::abs(eig.eigenvalues(0)),
                              std::abs(eig.eigenvalues(n - 1)));
  if (n > 0 && eig.eigenvalues(0) < -rel_tol * radius) {
    throw std::invalid_argument(std::string(who) +
                                ": matrix is not positive semidefinite "
                                "within tolerance");
  }
  return PsdEig{std::move(eig), rel_tol * radius};
}
}  // namespace detail

/// Orthogonal projection onto the span of eigenvectors of A with eigenvalue
/// above rel_tol * spectral_radius.  A must be positive semidefinite within
/// the same tolerance.
inline Mat support_projection(const Mat& a, double rel_tol = kDefaultRelTol) {
  detail::PsdEig dec = detail::psd_eig(a, rel_tol, "support_projection");
  const int n = static_cast<int>(dec.eig.eigenvalues.size());
  Mat p = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    if (dec.eig.eigenvalues(j) > dec.cutoff) {
      p += dec.eig.eigenvectors.col(j) * dec.eig.eigenvectors.col(j).adjoint();
    }
  }
  return p;
}

/// Numerical rank of a positive semidefinite matrix at the same cutoff as
/// support_projection.
inline int support_rank(const Mat& a, double rel_tol = kDefaultRelTol) {
  detail::PsdEig dec = detail::psd_eig(a, rel_tol, "support_rank");
  int r = 0;
  for (int j = 0; j < dec.eig.eigenvalues.size(); ++j)
    if (dec.eig.eigenvalues(j) > dec.cutoff) ++r;
  return r;
}

/// Matrix logarithm of a positive semidefinite A restricted to its support:
/// V log(Lambda_+) V^* over retained eigenpairs, and 0 on the orthogonal
/// complement of the support.
inline Mat log_on_support(const Mat& a, double rel_tol = kDefaultRelTol) {
  detail::PsdEig dec = detail::psd_eig(a, rel_tol, "log_on_support");
  const int n = static_cast<int>(dec.eig.eigenvalues.size());
  Mat result = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    if (dec.eig.eigenvalues(j) > dec.cutoff) {
      result += std::log(dec.eig.eigenvalues(j)) *
                (dec.eig.eigenvectors.col(j) *
                 dec.eig.eigenvectors.col(j).adjoint());
    }
  }
  return result;
}

/// Square root of a positive semidefinite matrix: V sqrt(Lambda_+) V^* over
/// retained eigenpairs (negative round-off eigenvalues are clipped to zero).
inline Mat sqrt_psd(const Mat& a, double rel_tol = kDefaultRelTol) {
  detail::PsdEig dec = detail::psd_eig(a, rel_tol, "sqrt_psd");
  const int n = static_cast<int>(dec.eig.eigenvalues.size());
  Mat result = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    if (dec.eig.eigenvalues(j) > 0.0) {
      result += std::sqrt(dec.eig.eigenvalues(j)) *
                (dec.eig.eigenvectors.col(j) *
                 dec.eig.eigenvectors.col(j).adjoint());
    }
  }
  return result;
}

/// Inverse square root of a strictly positive matrix.  Refuses (rather than
/// regularizes) when any eigenvalue sits at or below the faithfulness floor
/// rel_tol * spectral_radius.
inline Mat inv_sqrt_positive(const Mat& a, double rel_tol = kDefaultRelTol) {
  detail::PsdEig dec = detail::psd_eig(a, rel_tol, "inv_sqrt_positive");
  const int n = static_cast<int>(dec.eig.eigenvalues.size());
  detail::require(n > 0 && dec.eig.eigenvalues(0) > dec.cutoff,
                  "inv_sqrt_positive: matrix is not faithful (an eigenvalue "
                  "sits at or below the tolerance floor)");
  Mat result = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    result += (1.0 / std::sqrt(dec.eig.eigenvalues(j))) *
              (dec.eig.eigenvectors.col(j) *
               dec.eig.eigenvectors.col(j).adjoint());
  }
  return result;
}

/// Orthonormal basis of a linear span, with singular values below
/// rel_tol * sigma_max discarded.  `basis` holds the orthonormal columns in
/// the vectorized ambient space; `ambient_dim` is their length.
struct SpanBasis {
  int ambient_dim = 0;
  Mat basis;  // ambient_dim x dim(), orthonormal columns
  double tol_used = kDefaultRelTol;

  int dim() const { return static_cast<int>(basis.cols()); }
  Mat projector() const { return basis * basis.adjoint(); }
};

/// Span of the given column vectors (SVD-based orthonormalization).
inline SpanBasis span_basis_cols(const Mat& columns,
                                 double rel_tol = kDefaultRelTol) {
  detail::require(columns.rows() >= 1, "span_basis_cols: empty ambient space");
  SpanBasis out;
  out.ambient_dim = static_cast<int>(columns.rows());
  out.tol_used = rel_tol;
  if (columns.cols() == 0) {
    out.basis = Mat::Zero(columns.rows(), 0);
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(columns, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  while (rank < sv.size() && sv(rank) > rel_tol * smax && sv(rank) > 0.0)
    ++rank;
  out.basis = svd.matrixU().leftCols(rank);
  return out;
}

/// Hilbert-Schmidt span of a family of equally shaped matrices.
inline SpanBasis span_basis(const std::vector<Mat>& mats,
                            double rel_tol = kDefaultRelTol) {
  detail::require(!mats.empty(), "span_basis: empty input list");
  const Eigen::Index rows = mats.front().rows();
  const Eigen::Index cols = mats.front().cols();
  Mat stacked(rows * cols, static_cast<Eigen::Index>(mats.size()));
  for (std::size_t j = 0; j < mats.size(); ++j) {
    detail::require(mats[j].rows() == rows && mats[j].cols() == cols,
                    "span_basis: shape mismatch within family");
    stacked.col(static_cast<Eigen::Index>(j)) = vectorize(mats[j]);
  }
  return span_basis_cols(stacked, rel_tol);
}

/// Distance of a (not necessarily normalized) vector from a subspace,
/// relative to the vector's norm.  Zero vectors are inside every subspace.
inline double containment_residual(const SpanBasis& space, const Vec& v) {
  detail::require(static_cast<int>(v.size()) == space.ambient_dim,
                  "containment_residual: ambient dimension mismatch");
  const double nv = v.norm();
  if (nv == 0.0) return 0.0;
  const Vec rest = v - space.basis * (space.basis.adjoint() * v);
  return rest.norm() / nv;
}

/// Mutual-containment test: equal dimension and every basis vector of each
/// space lies in the other within tol.
inline bool same_subspace(const SpanBasis& a, const SpanBasis& b,
                          double tol = 1e-8) {
  detail::require(a.ambient_dim == b.ambient_dim,
                  "same_subspace: ambient dimension mismatch");
  if (a.dim() != b.dim()) return false;
  for (int j = 0; j < b.dim(); ++j)
    if (containment_residual(a, b.basis.col(j)) > tol) return false;
  for (int j = 0; j < a.dim(); ++j)
    if (containment_residual(b, a.basis.col(j)) > tol) return false;
  return true;
}

/// Matrix exponential (scaling-and-squaring Pade approximation).
inline Mat expm(const Mat& a) {
  detail::require(a.rows() == a.cols(), "expm: matrix must be square");
  detail::require(a.allFinite(), "expm: non-finite entries");
  return a.exp();
}

}  // namespace qmsep
