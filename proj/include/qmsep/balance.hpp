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

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qmsep/gksl.hpp"

namespace qmsep {

namespace detail {

inline void require_balance_inputs(const GkslGenerator& gen,
                                   const DensityMatrix& rho, double rel_tol,
                                   const std::string& who) {
  require(rho.faithful, who + ": rho must be faithful");
  require(is_special_for(gen, rho.mat, rel_tol),
          who + ": generator is not special for rho");
  const double invariance = apply_Lstar(gen, rho.mat).norm();
  require(invariance <= kBalanceTol * std::max(1.0, gen.G.norm()),
          who + ": rho is not invariant (residual " +
              std::to_string(invariance) + ")");
}

/// Solves a_k = sum_l u_{kl} b_l in the Hilbert-Schmidt sense.  In the
/// special representation the b_l are linearly independent (the jumps are,
/// and rho^{1/2} is invertible), so the solution is unique when it exists;
/// otherwise u is the least-squares candidate and the residual exposes the
/// failure.  Returns (u, max_k residual_k).
inline std::pair<Mat, double> witness_least_squares(const std::vector<Mat>& a,
                                                    const std::vector<Mat>& b) {
  const int d = static_cast<int>(b.size());
  const int nn = static_cast<int>(b.front().size());
  Mat m(nn, d);
  for (int l = 0; l < d; ++l) m.col(l) = vectorize(b[l]);
  const Eigen::JacobiSVD<Mat> svd(m,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
  Mat u(d, d);
  double residual = 0.0;
  for (int k = 0; k < d; ++k) {
    const Vec target = vectorize(a[k]);
    const Vec coeff = svd.solve(target);
    u.row(k) = coeff.transpose();
    residual = std::max(residual, (target - m * coeff).norm());
  }
  return {u, residual};
}

}  // namespace detail

/// Verdict for the standard quantum detailed-balance condition: existence of
/// a symmetric unitary u with rho^{1/2} L_k^* = sum_l u_{kl} L_l rho^{1/2}.
struct SqdbReport {
  bool holds = false;
  Mat u;  // the unique candidate coefficient matrix, verdict aside
  double residual_jump = 0.0;
  double residual_unitary = 0.0;
  double residual_symmetric = 0.0;
};

/// Verdict for the conjugation variant: self-adjoint unitary u with
/// rho^{1/2} theta L_k^* theta = sum_l u_{kl} L_l rho^{1/2}, plus the drift
/// condition rho^{1/2} theta G^* theta = G rho^{1/2}.
struct SqdbThetaReport {
  bool holds = false;
  Mat u;
  double residual_jump = 0.0;
  double residual_unitary = 0.0;
  double residual_selfadjoint = 0.0;
  double g_condition_residual = 0.0;
};

/// The gap between the KMS dual and the conjugated generator, fitted as an
/// inner derivation: L' - Theta L Theta = i[K, .] with K Hermitian and
/// traceless (the trace is pure gauge).  A small fit residual together with
/// a small ||[K, rho]|| certifies the inner-derivation form.
struct DerivationGapReport {
  Mat K;
  double derivation_residual = 0.0;
  double k_rho_commutator = 0.0;
};

struct BalanceReport {
  SqdbReport sqdb;
  SqdbThetaReport sqdb_theta;
  DerivationGapReport gap;
};

/// Direct recomputation of the jump-condition residual from a given witness,
/// independent of how the witness was found.
inline double sqdb_witness_residual(const GkslGenerator& gen,
                                    const DensityMatrix& rho, const Mat& u,
                                    bool theta_variant,
                                    double rel_tol = kDefaultRelTol) {
  const Mat shalf = sqrt_psd(rho.mat, rel_tol);
  const int d = static_cast<int>(gen.jumps.size());
  detail::require(u.rows() == d && u.cols() == d,
                  "sqdb_witness_residual: u has wrong shape");
  double residual = 0.0;
  for (int k = 0; k < d; ++k) {
    const Mat lhs = theta_variant ? Mat(shalf * theta_map(gen.jumps[k]))
                                  : Mat(shalf * gen.jumps[k].adjoint());
    Mat rhs = Mat::Zero(gen.dim, gen.dim);
    for (int l = 0; l < d; ++l) rhs += u(k, l) * gen.jumps[l] * shalf;
    residual = std::max(residual, (lhs - rhs).norm());
  }
  return residual;
}

inline SqdbReport sqdb_check(const GkslGenerator& gen,
                             const DensityMatrix& rho,
                             double rel_tol = kDefaultRelTol) {
  detail::require_balance_inputs(gen, rho, rel_tol, "sqdb_check");
  const Mat shalf = sqrt_psd(rho.mat, rel_tol);
  std::vector<Mat> a;
  std::vector<Mat> b;
  for (const Mat& l : gen.jumps) {
    a.push_back(shalf * l.adjoint());
    b.push_back(l * shalf);
  }
  SqdbReport report;
  std::tie(report.u, report.residual_jump) =
      detail::witness_least_squares(a, b);
  const int d = static_cast<int>(gen.jumps.size());
  report.residual_unitary =
      (report.u * report.u.adjoint() - Mat::Identity(d, d)).norm();
  report.residual_symmetric = (report.u - report.u.transpose()).norm();
  report.holds = report.residual_jump <= kBalanceTol &&
                 report.residual_unitary <= kBalanceTol &&
                 report.residual_symmetric <= kBalanceTol;
  return report;
}

inline SqdbThetaReport sqdb_theta_check(const GkslGenerator& gen,
                                        const DensityMatrix& rho,
                                        double rel_tol = kDefaultRelTol) {
  detail::require_balance_inputs(gen, rho, rel_tol, "sqdb_theta_check");
  const Mat shalf = sqrt_psd(rho.mat, rel_tol);
  std::vector<Mat> a;
  std::vector<Mat> b;
  for (const Mat& l : gen.jumps) {
    a.push_back(shalf * theta_map(l));  // theta L^* theta = L^T
    b.push_back(l * shalf);
  }
  SqdbThetaReport report;
  std::tie(report.u, report.residual_jump) =
      detail::witness_least_squares(a, b);
  const int d = static_cast<int>(gen.jumps.size());
  report.residual_unitary =
      (report.u * report.u.adjoint() - Mat::Identity(d, d)).norm();
  report.residual_selfadjoint = (report.u - report.u.adjoint()).norm();
  report.g_condition_residual =
      op_norm(shalf * theta_map(gen.G) - gen.G * shalf);
  report.holds = report.residual_jump <= kBalanceTol &&
                 report.residual_unitary <= kBalanceTol &&
                 report.residual_selfadjoint <= kBalanceTol &&
                 report.g_condition_residual <= kBalanceTol;
  return report;
}

namespace detail {

/// Orthonormal (Frobenius) basis of the real space of Hermitian traceless
/// n x n matrices, n^2 - 1 elements.
inline std::vector<Mat> hermitian_traceless_basis(int n) {
  std::vector<Mat> basis;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      basis.push_back(
          inv_sqrt2 * (matrix_unit(n, j, k) + matrix_unit(n, k, j)));
      basis.push_back(Cplx(0.0, 1.0) * inv_sqrt2 *
                      (matrix_unit(n, j, k) - matrix_unit(n, k, j)));
    }
  }
  for (int m = 1; m < n; ++m) {
    Mat diag = Mat::Zero(n, n);
    for (int j = 0; j < m; ++j) diag(j, j) = 1.0;
    diag(m, m) = -static_cast<double>(m);
    basis.push_back(diag / std::sqrt(static_cast<double>(m) * (m + 1)));
  }
  return basis;
}

}  // namespace detail

/// Fits L' - Theta L Theta = i[K, .] by linear least squares over Hermitian
/// traceless K.  The conjugated generator is obtained at the matrix level:
/// Theta is transposition, which acts on vectorized operators as the flip,
/// so superop(Theta L Theta) = F superop(L) F.
inline DerivationGapReport derivation_gap(const GkslGenerator& gen,
                                          const DensityMatrix& rho,
                                          double rel_tol = kDefaultRelTol) {
  detail::require_balance_inputs(gen, rho, rel_tol, "derivation_gap");
  const int n = gen.dim;
  const GkslGenerator dual = kms_dual(gen, rho, rel_tol);
  const Mat m_dual = superoperator(dual, SuperopKind::heisenberg).mat;
  const Mat m = superoperator(gen, SuperopKind::heisenberg).mat;
  const Mat f = flip(n);
  const Mat delta = m_dual - f * m * f;

  const std::vector<Mat> basis = detail::hermitian_traceless_basis(n);
  const Mat id = Mat::Identity(n, n);
  const int params = static_cast<int>(basis.size());
  const int rows = n * n * n * n;
  // The coefficients are real (K is Hermitian), so split the complex
  // least-squares system into stacked real and imaginary parts.
  RMat a_real(2 * rows, params);
  std::vector<Mat> superops;
  superops.reserve(params);
  for (int p = 0; p < params; ++p) {
    const Mat s = Cplx(0.0, 1.0) * (tensor(id, basis[p]) -
                                    tensor(Mat(basis[p].transpose()), id));
    superops.push_back(s);
    const Vec col = vectorize(s);
    a_real.col(p).topRows(rows) = col.real();
    a_real.col(p).bottomRows(rows) = col.imag();
  }
  const Vec target = vectorize(delta);
  RVec b_real(2 * rows);
  b_real.topRows(rows) = target.real();
  b_real.bottomRows(rows) = target.imag();
  const RVec x =
      Eigen::JacobiSVD<RMat>(a_real, Eigen::ComputeThinU | Eigen::ComputeThinV)
          .solve(b_real);

  DerivationGapReport report;
  report.K = Mat::Zero(n, n);
  Mat fitted = Mat::Zero(n * n, n * n);
  for (int p = 0; p < params; ++p) {
    report.K += x(p) * basis[p];
    fitted += x(p) * superops[p];
  }
  report.derivation_residual = (delta - fitted).norm();
  report.k_rho_commutator = (report.K * rho.mat - rho.mat * report.K).norm();
  return report;
}

inline BalanceReport balance_report(const GkslGenerator& gen,
                                    const DensityMatrix& rho,
                                    double rel_tol = kDefaultRelTol) {
  return BalanceReport{sqdb_check(gen, rho, rel_tol),
                       sqdb_theta_check(gen, rho, rel_tol),
                       derivation_gap(gen, rho, rel_tol)};
}

}  // namespace qmsep
