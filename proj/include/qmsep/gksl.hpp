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
#include <optional>
#include <utility>
#include <vector>

#include "qmsep/matops.hpp"

namespace qmsep {

/// A density matrix with its spectral decomposition and support projection
/// cached.  `faithful` is true when the smallest eigenvalue clears the strict
/// positivity floor.
struct DensityMatrix {
  Mat mat;
  HermitianEig eig;
  Mat support;
  bool faithful = false;
  double tol_used = kDefaultRelTol;

  int dim() const { return static_cast<int>(mat.rows()); }
};

/// Validates positivity (within rel_tol relative to the spectral radius) and
/// unit trace (within trace_tol), then caches the decomposition.
inline DensityMatrix make_density(const Mat& m,
                                  double rel_tol = kDefaultRelTol,
                                  double trace_tol = 1e-8) {
  detail::require(m.rows() == m.cols(), "make_density: matrix must be square");
  detail::PsdEig dec = detail::psd_eig(m, rel_tol, "make_density");
  detail::require(std::abs(m.trace().real() - 1.0) <= trace_tol &&
                      std::abs(m.trace().imag()) <= trace_tol,
                  "make_density: trace must equal 1");
  DensityMatrix rho;
  rho.mat = (m + m.adjoint()) / 2.0;
  rho.tol_used = rel_tol;
  const int n = static_cast<int>(m.rows());
  rho.support = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    if (dec.eig.eigenvalues(j) > dec.cutoff) {
      rho.support += dec.eig.eigenvectors.col(j) *
                     dec.eig.eigenvectors.col(j).adjoint();
    }
  }
  rho.faithful = dec.eig.eigenvalues(0) > rel_tol;
  rho.eig = std::move(dec.eig);
  return rho;
}

/// The normalized trace 1/n.
inline DensityMatrix maximally_mixed(int n) {
  detail::require(n >= 1, "maximally_mixed: dimension must be positive");
  return make_density(Mat::Identity(n, n) / static_cast<double>(n));
}

/// A Lindblad-form generator: Hamiltonian H, jump operators {L_l} and the
/// derived drift G = -1/2 sum_l L_l^* L_l - iH.  In Heisenberg form the
/// generator acts as L(x) = G^* x + sum_l L_l^* x L_l + x G; its predual is
/// L_*(s) = G s + sum_l L_l s L_l^* + s G^*.
///
/// `special_for` records the state the representation was normalized against:
/// when set, tr(rho L_l) = 0 for every l and {1, L_1, L_2, ...} are linearly
/// independent.
struct GkslGenerator {
  int dim = 0;
  Mat H;
  std::vector<Mat> jumps;
  Mat G;
  std::optional<Mat> special_for;
};

/// Drift matrix G = -1/2 sum_l L_l^* L_l - iH.
inline Mat drift(const Mat& h, const std::vector<Mat>& jumps) {
  Mat g = Cplx(0.0, -1.0) * h;
  for (const Mat& l : jumps) g -= 0.5 * (l.adjoint() * l);
  return g;
}

/// Builds a generator from a Hermitian H and a nonempty family of equally
/// shaped square jump operators.  H is symmetrized before use.
inline GkslGenerator build_generator(const Mat& h,
                                     const std::vector<Mat>& jumps,
                                     double rel_tol = kDefaultRelTol) {
  detail::require(!jumps.empty(), "build_generator: empty jump family");
  detail::require(h.rows() == h.cols() && h.rows() >= 1,
                  "build_generator: H must be square");
  const int n = static_cast<int>(h.rows());
  detail::require(
      (h - h.adjoint()).norm() <= rel_tol * std::max(h.norm(), 1.0),
      "build_generator: H is not Hermitian within tolerance");
  for (const Mat& l : jumps) {
    detail::require(l.rows() == n && l.cols() == n,
                    "build_generator: jump shape mismatch");
    detail::require(l.allFinite(), "build_generator: non-finite jump entries");
  }
  GkslGenerator gen;
  gen.dim = n;
  gen.H = (h + h.adjoint()) / 2.0;
  gen.jumps = jumps;
  gen.G = drift(gen.H, gen.jumps);
  return gen;
}

/// Heisenberg action L(x) = G^* x + sum_l L_l^* x L_l + x G.
inline Mat apply_L(const GkslGenerator& gen, const Mat& x) {
  detail::require(x.rows() == gen.dim && x.cols() == gen.dim,
                  "apply_L: shape mismatch");
  Mat out = gen.G.adjoint() * x + x * gen.G;
  for (const Mat& l : gen.jumps) out += l.adjoint() * x * l;
  return out;
}

/// Schroedinger (predual) action L_*(s) = G s + sum_l L_l s L_l^* + s G^*.
inline Mat apply_Lstar(const GkslGenerator& gen, const Mat& s) {
  detail::require(s.rows() == gen.dim && s.cols() == gen.dim,
                  "apply_Lstar: shape mismatch");
  Mat out = gen.G * s + s * gen.G.adjoint();
  for (const Mat& l : gen.jumps) out += l * s * l.adjoint();
  return out;
}

enum class SuperopKind { heisenberg, schrodinger };

/// An n^2 x n^2 matrix acting on column-stacked operators.
struct Superoperator {
  int n = 0;
  Mat mat;
  SuperopKind kind = SuperopKind::heisenberg;
};

/// Matrix form of the generator on vectorized operators, using
/// vec(A X B) = (B^T (x) A) vec(X):
///   schrodinger: 1 (x) G + conj(G) (x) 1 + sum_l conj(L_l) (x) L_l
///   heisenberg:  1 (x) G^* + G^T (x) 1 + sum_l L_l^T (x) L_l^*
inline Superoperator superoperator(const GkslGenerator& gen, SuperopKind kind) {
  const int n = gen.dim;
  const Mat id = Mat::Identity(n, n);
  Superoperator sop;
  sop.n = n;
  sop.kind = kind;
  if (kind == SuperopKind::schrodinger) {
    sop.mat = tensor(id, gen.G) + tensor(gen.G.conjugate(), id);
    for (const Mat& l : gen.jumps) sop.mat += tensor(l.conjugate(), l);
  } else {
    sop.mat = tensor(id, gen.G.adjoint()) + tensor(Mat(gen.G.transpose()), id);
    for (const Mat& l : gen.jumps) {
      sop.mat += tensor(Mat(l.transpose()), Mat(l.adjoint()));
    }
  }
  return sop;
}

/// True when the representation is special for rho: every jump is
/// rho-traceless and {1, L_1, L_2, ...} are linearly independent at the
/// span tolerance.
inline bool is_special_for(const GkslGenerator& gen, const Mat& rho,
                           double rel_tol = kDefaultRelTol) {
  const int n = gen.dim;
  for (const Mat& l : gen.jumps) {
    const double scale = std::max(1.0, l.norm() * rho.norm());
    if (std::abs((rho * l).trace()) > 1e2 * rel_tol * scale) return false;
  }
  std::vector<Mat> family;
  family.reserve(gen.jumps.size() + 1);
  family.push_back(Mat::Identity(n, n));
  for (const Mat& l : gen.jumps) family.push_back(l);
  return span_basis(family, rel_tol).dim() ==
         static_cast<int>(gen.jumps.size()) + 1;
}

/// Normalizes a generator to the special representation for a faithful rho:
/// shifts every jump to L_l - tr(rho L_l) 1, compensates the Hamiltonian by
/// H -> H - (1/(2i)) sum_l (conj(c_l) L_l - c_l L_l^*) so the generator's
/// superoperator is unchanged, and removes linear dependencies in the shifted
/// family.  Dependencies are removed by a unitary remix of the jumps (the
/// gauge freedom of the representation, which also leaves the superoperator
/// fixed) that rotates the family onto the left singular directions of its
/// span; members with vanishing singular value are pruned.  Families that are
/// already traceless and independent are returned unchanged.
inline GkslGenerator make_special(const GkslGenerator& gen,
                                  const DensityMatrix& rho,
                                  double rel_tol = kDefaultRelTol) {
  detail::require(rho.dim() == gen.dim, "make_special: dimension mismatch");
  detail::require(rho.faithful, "make_special: rho must be faithful");
  const int n = gen.dim;
  const Mat id = Mat::Identity(n, n);

  std::vector<Mat> shifted;
  shifted.reserve(gen.jumps.size());
  Mat h = gen.H;
  bool any_shift = false;
  for (const Mat& l : gen.jumps) {
    const Cplx c = (rho.mat * l).trace();
    shifted.push_back(l - c * id);
    // (1/(2i)) X = -(i/2) X, so the compensation adds +(i/2)(conj(c)L - cL^*),
    // which is Hermitian because the bracket is anti-Hermitian.
    h += Cplx(0.0, 0.5) * (std::conj(c) * l - c * l.adjoint());
    if (std::abs(c) > rel_tol * std::max(1.0, l.norm())) any_shift = true;
  }
  h = (h + h.adjoint()) / 2.0;

  // Independence test for {1} united with the shifted family.
  const int d = static_cast<int>(shifted.size());
  Mat stacked(n * n, d + 1);
  stacked.col(0) = vectorize(id);
  for (int j = 0; j < d; ++j) stacked.col(j + 1) = vectorize(shifted[j]);
  const bool independent =
      span_basis_cols(stacked, rel_tol).dim() == d + 1;

  GkslGenerator out;
  out.dim = n;
  out.H = any_shift ? h : gen.H;
  if (independent) {
    out.jumps = any_shift ? shifted : gen.jumps;
  } else if (d > 0) {
    // Unitary remix: columns of B are the vectorized shifted jumps; with
    // B = U S V^*, the combinations M_j = sum_l V_lj L_l satisfy
    // vec(M_j) = sigma_j u_j, so sum_j M_j^* x M_j = sum_l L_l^* x L_l and
    // the dependent directions come out as exact zeros.
    Mat b(n * n, d);
    for (int j = 0; j < d; ++j) b.col(j) = vectorize(shifted[j]);
    Eigen::JacobiSVD<Mat> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double ref = std::max(sv.size() > 0 ? sv(0) : 0.0,
                                std::sqrt(static_cast<double>(n)));
    for (int j = 0; j < sv.size(); ++j) {
      if (sv(j) > rel_tol * ref) {
        out.jumps.push_back(devectorize(sv(j) * svd.matrixU().col(j), n));
      }
    }
  }
  out.G = drift(out.H, out.jumps);
  out.special_for = rho.mat;
  return out;
}

/// Invariant states extracted from the kernel of the predual superoperator.
/// `kernel_dim` > 1 signals that the extraction is not exhaustive (any convex
/// combination of kernel states is again invariant).
struct InvariantStates {
  std::vector<DensityMatrix> states;
  int kernel_dim = 0;
};

inline InvariantStates invariant_states(const GkslGenerator& gen,
                                        double rel_tol = kDefaultRelTol) {
  const Mat m = superoperator(gen, SuperopKind::schrodinger).mat;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const int total = static_cast<int>(sv.size());
  int rank = 0;
  while (rank < total && sv(rank) > rel_tol * std::max(smax, 1.0)) ++rank;

  InvariantStates out;
  out.kernel_dim = total - rank;
  if (out.kernel_dim == 0) {
    throw NumericalInconsistency(
        "invariant_states: empty kernel — trace preservation guarantees at "
        "least one invariant state, so the superoperator is numerically "
        "inconsistent");
  }
  const int n = gen.dim;
  for (int j = rank; j < total; ++j) {
    const Mat x = devectorize(svd.matrixV().col(j), n);
    const Mat xh = (x + x.adjoint()) / 2.0;
    for (const double sign : {1.0, -1.0}) {
      const Mat y = sign * xh;
      const double tr = y.trace().real();
      if (tr <= 1e-8 * std::max(1.0, y.norm())) continue;
      const Mat cand = y / tr;
      HermitianEig eig = hermitian_eig(cand, 1e-8);
      const double radius = std::max(std::abs(eig.eigenvalues(0)),
                                     std::abs(eig.eigenvalues(n - 1)));
      if (eig.eigenvalues(0) < -1e2 * rel_tol * std::max(radius, 1.0)) continue;
      // Clip round-off negatives so the cached decomposition is clean.
      Mat clipped = Mat::Zero(n, n);
      for (int k = 0; k < n; ++k) {
        clipped += std::max(eig.eigenvalues(k), 0.0) *
                   (eig.eigenvectors.col(k) * eig.eigenvectors.col(k).adjoint());
      }
      clipped /= clipped.trace().real();
      bool duplicate = false;
      for (const DensityMatrix& prev : out.states) {
        if ((prev.mat - clipped).norm() <= 1e-8) duplicate = true;
      }
      if (!duplicate) out.states.push_back(make_density(clipped, rel_tol));
    }
  }
  return out;
}

/// Predual evolution s(t) = exp(t L_*)(s0), trace-preserving within 1e-10 and
/// positive within the same round-off floor.
inline DensityMatrix evolve(const GkslGenerator& gen, const Mat& sigma0,
                            double t, double rel_tol = kDefaultRelTol) {
  detail::require(t >= 0.0, "evolve: time must be nonnegative");
  detail::require(sigma0.rows() == gen.dim && sigma0.cols() == gen.dim,
                  "evolve: shape mismatch");
  const Mat m = superoperator(gen, SuperopKind::schrodinger).mat;
  const Vec v = expm(t * m) * vectorize(sigma0);
  Mat st = devectorize(v, gen.dim);
  if (std::abs(st.trace().real() - sigma0.trace().real()) > 1e-10 ||
      std::abs(st.trace().imag()) > 1e-10) {
    throw NumericalInconsistency(
        "evolve: trace drifted beyond 1e-10 — the predual superoperator or "
        "its exponential is numerically inconsistent");
  }
  return make_density(st, std::max(rel_tol, 1e-10), 1e-9);
}

/// KMS-dual generator for a faithful invariant rho the representation is
/// special for: G' = rho^{1/2} G^* rho^{-1/2}, L'_l = rho^{1/2} L_l^*
/// rho^{-1/2}, with H' = i(G' + 1/2 sum_l L'^*_l L'_l) recovered from the
/// dual drift.  The dual is again special for rho, and the pairing
/// tr(rho^{1/2} a rho^{1/2} T_t(b)) = tr(rho^{1/2} T'_t(a) rho^{1/2} b)
/// holds for the two semigroups.
inline GkslGenerator kms_dual(const GkslGenerator& gen,
                              const DensityMatrix& rho,
                              double rel_tol = kDefaultRelTol) {
  detail::require(rho.dim() == gen.dim, "kms_dual: dimension mismatch");
  detail::require(rho.faithful, "kms_dual: rho must be faithful");
  detail::require(is_special_for(gen, rho.mat, rel_tol),
                  "kms_dual: generator is not special for rho");
  detail::require(apply_Lstar(gen, rho.mat).norm() <=
                      1e-8 * std::max(1.0, gen.G.norm()),
                  "kms_dual: rho is not invariant for the generator");
  const Mat shalf = sqrt_psd(rho.mat, rel_tol);
  const Mat sinv = inv_sqrt_positive(rho.mat, rel_tol);

  GkslGenerator dual;
  dual.dim = gen.dim;
  dual.jumps.reserve(gen.jumps.size());
  for (const Mat& l : gen.jumps) dual.jumps.push_back(shalf * l.adjoint() * sinv);
  const Mat gdual = shalf * gen.G.adjoint() * sinv;
  Mat hdual = Cplx(0.0, 1.0) * gdual;
  for (const Mat& l : dual.jumps) hdual += Cplx(0.0, 0.5) * (l.adjoint() * l);
  if ((hdual - hdual.adjoint()).norm() >
      1e-8 * std::max(1.0, hdual.norm())) {
    throw NumericalInconsistency(
        "kms_dual: recovered dual Hamiltonian is not Hermitian — rho is not "
        "an invariant state of the generator to working precision");
  }
  dual.H = (hdual + hdual.adjoint()) / 2.0;
  dual.G = drift(dual.H, dual.jumps);
  dual.special_for = rho.mat;
  return dual;
}

}  // namespace qmsep
