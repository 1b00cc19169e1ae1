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

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "qmsep/gksl.hpp"

namespace qmsep {

/// Driven cycle on C^n: jumps sqrt(lambda) S and sqrt(mu) S^* for the cyclic
/// right shift S e_j = e_{j+1 mod n}, plus a diagonal Hamiltonian.
struct CycleSpec {
  int n = 3;
  double lambda = 1.0;
  double mu = 1.0;
  RVec h_diag;  // empty means zero
};

/// Classical-jump model: one jump sqrt(gamma_lm) |e_m><e_l| per positive rate
/// gamma_lm, plus a diagonal Hamiltonian.  gamma must have zero diagonal.
struct GenericSpec {
  int n = 2;
  RMat gamma;
  RVec h_diag;  // empty means zero
};

namespace detail {
inline Mat diag_hamiltonian(int n, const RVec& h_diag, const char* who) {
  if (h_diag.size() == 0) return Mat::Zero(n, n);
  require(h_diag.size() == n, std::string(who) + ": h_diag length mismatch");
  Mat h = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) h(j, j) = h_diag(j);
  return h;
}
}  // namespace detail

/// The cyclic right shift on C^n.
inline Mat shift_matrix(int n) {
  Mat s = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) s((j + 1) % n, j) = 1.0;
  return s;
}

/// Builds the cycle generator together with its faithful invariant state 1/n.
/// The representation is already special for 1/n (shifts have zero diagonal).
inline std::pair<GkslGenerator, DensityMatrix> cycle_model(
    const CycleSpec& spec, double rel_tol = kDefaultRelTol) {
  detail::require(spec.n >= 3, "cycle_model: n must be at least 3");
  detail::require(spec.lambda > 0.0 && spec.mu > 0.0,
                  "cycle_model: rates must be positive");
  const Mat s = shift_matrix(spec.n);
  const std::vector<Mat> jumps = {std::sqrt(spec.lambda) * s,
                                  std::sqrt(spec.mu) * s.adjoint()};
  const Mat h = detail::diag_hamiltonian(spec.n, spec.h_diag, "cycle_model");
  DensityMatrix rho = maximally_mixed(spec.n);
  GkslGenerator gen =
      make_special(build_generator(h, jumps, rel_tol), rho, rel_tol);
  return {std::move(gen), std::move(rho)};
}

/// Builds the generic generator.  Jumps are rho-traceless for every diagonal
/// rho and mutually independent, so the representation is special for any
/// faithful diagonal state; callers normalize against their chosen state.
inline GkslGenerator generic_model(const GenericSpec& spec,
                                   double rel_tol = kDefaultRelTol) {
  detail::require(spec.n >= 2, "generic_model: n must be at least 2");
  detail::require(spec.gamma.rows() == spec.n && spec.gamma.cols() == spec.n,
                  "generic_model: gamma must be n x n");
  std::vector<Mat> jumps;
  for (int l = 0; l < spec.n; ++l) {
    detail::require(spec.gamma(l, l) == 0.0,
                    "generic_model: gamma must have zero diagonal");
    for (int m = 0; m < spec.n; ++m) {
      detail::require(spec.gamma(l, m) >= 0.0,
                      "generic_model: rates must be nonnegative");
      if (spec.gamma(l, m) > 0.0) {
        jumps.push_back(std::sqrt(spec.gamma(l, m)) *
                        matrix_unit(spec.n, m, l));
      }
    }
  }
  detail::require(!jumps.empty(), "generic_model: all rates are zero");
  const Mat h = detail::diag_hamiltonian(spec.n, spec.h_diag, "generic_model");
  return build_generator(h, jumps, rel_tol);
}

/// Stationary probability vector of the classical chain with rate matrix
/// gamma (the diagonal invariant state of the generic model).  Errors out on
/// reducible chains with a multi-dimensional stationary space: the convex
/// mixture must then be picked explicitly by the caller.
inline RVec classical_stationary(const RMat& gamma,
                                 double rel_tol = kDefaultRelTol) {
  const int n = static_cast<int>(gamma.rows());
  detail::require(gamma.cols() == n && n >= 2,
                  "classical_stationary: gamma must be square");
  RMat q = gamma;
  for (int l = 0; l < n; ++l) q(l, l) = -gamma.row(l).sum();
  Eigen::JacobiSVD<RMat> svd(q.transpose(), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  int rank = 0;
  while (rank < n && sv(rank) > std::max(rel_tol, 1e-12) * std::max(smax, 1.0))
    ++rank;
  detail::require(rank < n,
                  "classical_stationary: no stationary vector found");
  detail::require(rank == n - 1,
                  "classical_stationary: reducible chain (stationary space "
                  "has dimension > 1); pick a convex mixture explicitly");
  RVec pi = svd.matrixV().col(n - 1);
  if (pi.sum() < 0.0) pi = -pi;
  detail::require(pi.minCoeff() > -1e-10,
                  "classical_stationary: stationary vector has mixed signs");
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

/// Entropy production of the classical chain:
///   1/2 sum over ordered pairs with gamma_lm > 0 of
///     (rho_l gamma_lm - rho_m gamma_ml) ln(rho_l gamma_lm / (rho_m gamma_ml)),
/// which is +infinity as soon as some channel carries flux one way only, and
/// zero exactly under classical detailed balance.
inline double classical_ep(const RMat& gamma, const RVec& rho_diag) {
  const int n = static_cast<int>(gamma.rows());
  detail::require(gamma.cols() == n, "classical_ep: gamma must be square");
  detail::require(rho_diag.size() == n, "classical_ep: length mismatch");
  detail::require(rho_diag.minCoeff() >= -1e-12 &&
                      std::abs(rho_diag.sum() - 1.0) <= 1e-8,
                  "classical_ep: rho_diag is not a probability vector");
  double ep = 0.0;
  for (int l = 0; l < n; ++l) {
    for (int m = 0; m < n; ++m) {
      if (gamma(l, m) <= 0.0) continue;
      const double forward = rho_diag(l) * gamma(l, m);
      const double backward = rho_diag(m) * gamma(m, l);
      if (forward == 0.0 && backward == 0.0) continue;
      if (forward == 0.0 || backward == 0.0)
        return std::numeric_limits<double>::infinity();
      ep += 0.5 * (forward - backward) * std::log(forward / backward);
    }
  }
  return ep;
}

/// Two-level model: jumps |e1><e2| and |e2><e1| with Hamiltonian
/// H = i kappa (|e2><e1| - |e1><e2|), kappa real nonzero; the normalized
/// trace 1/2 is a faithful invariant state and the representation is special
/// for it.
inline std::pair<GkslGenerator, DensityMatrix> two_level_model(
    double kappa, double rel_tol = kDefaultRelTol) {
  detail::require(kappa != 0.0, "two_level_model: kappa must be nonzero");
  const Mat l1 = matrix_unit(2, 0, 1);
  const Mat l2 = matrix_unit(2, 1, 0);
  const Mat h =
      Cplx(0.0, kappa) * (matrix_unit(2, 1, 0) - matrix_unit(2, 0, 1));
  DensityMatrix rho = maximally_mixed(2);
  GkslGenerator gen =
      make_special(build_generator(h, {l1, l2}, rel_tol), rho, rel_tol);
  return {std::move(gen), std::move(rho)};
}

/// Real orthonormal basis of the conjugation-invariant complex span of the
/// given (complex) orthonormal columns: the real and imaginary parts of the
/// inputs are pooled and re-orthonormalized over the reals, and the top
/// k = cols directions kept.  Every output column is entrywise real, so it is
/// fixed by the conjugation theta.
inline Mat theta_real_span(const Mat& cluster_vectors) {
  const int n = static_cast<int>(cluster_vectors.rows());
  const int k = static_cast<int>(cluster_vectors.cols());
  detail::require(k >= 1, "theta_real_span: empty cluster");
  RMat candidates(n, 2 * k);
  candidates.leftCols(k) = cluster_vectors.real();
  candidates.rightCols(k) = cluster_vectors.imag();
  Eigen::JacobiSVD<RMat> svd(candidates, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  // The pooled parts always span at least k real directions (each input is
  // recovered as Re + i Im); the span is conjugation-invariant exactly when
  // they span no more than k.
  detail::require(sv(k - 1) > 1e-8,
                  "theta_real_span: cluster vectors are numerically degenerate");
  detail::require(k >= static_cast<int>(sv.size()) || sv(k) <= 1e-8,
                  "theta_real_span: cluster span is not conjugation-invariant");
  return svd.matrixU().leftCols(k).cast<Cplx>();
}

/// Orthonormal eigenbasis of rho consisting of conjugation-fixed (entrywise
/// real) vectors.  Requires rho to commute with the conjugation, i.e. to have
/// real entries up to tolerance; eigenvalues are returned per output column,
/// ascending.
struct ThetaEigenbasis {
  RVec eigenvalues;
  Mat vectors;  // columns f_j, entrywise real, theta f_j = f_j
};

inline ThetaEigenbasis theta_eigenbasis(const DensityMatrix& rho,
                                        double rel_tol = kDefaultRelTol) {
  const int n = rho.dim();
  detail::require(
      (rho.mat - rho.mat.conjugate()).norm() <=
          1e2 * rel_tol * std::max(1.0, rho.mat.norm()),
      "theta_eigenbasis: rho does not commute with the conjugation (entries "
      "are not real)");
  const RVec& vals = rho.eig.eigenvalues;
  const Mat& vecs = rho.eig.eigenvectors;
  const double ctol = rel_tol * std::max(std::abs(vals(n - 1)), 1.0);

  ThetaEigenbasis out;
  out.eigenvalues.resize(n);
  out.vectors.resize(n, n);
  int start = 0;
  int filled = 0;
  while (start < n) {
    int stop = start + 1;
    while (stop < n && vals(stop) - vals(stop - 1) <= ctol) ++stop;
    const Mat real_basis = theta_real_span(vecs.middleCols(start, stop - start));
    for (int j = 0; j < real_basis.cols(); ++j) {
      const Vec f = real_basis.col(j);
      out.vectors.col(filled) = f;
      out.eigenvalues(filled) = (f.adjoint() * rho.mat * f)(0, 0).real();
      ++filled;
    }
    start = stop;
  }
  return out;
}

}  // namespace qmsep
