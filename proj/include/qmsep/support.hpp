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
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qmsep/twopoint.hpp"

namespace qmsep {

namespace detail {

struct FamilyBuild {
  std::vector<Mat> members;
  int order_used = 0;
};

/// Iterated commutators delta_G^m(L_l) = [G, [G, ... [G, L_l]]] for
/// m = 0..max_m, flattened in (m, l) lexicographic order.  Vanishing members
/// are dropped, and the iteration stops early as soon as a whole order adds
/// nothing to the Hilbert-Schmidt span of the family (once that happens no
/// later order can add anything either, since the span is then stable under
/// [G, .]).
inline FamilyBuild build_commutator_family(const GkslGenerator& gen, int max_m,
                                           double rel_tol) {
  const int n = gen.dim;
  if (max_m < 0) max_m = n * n - 1;
  require(max_m >= 0, "commutator_family: max_m must be >= 0");
  const double g_scale = std::max(1.0, gen.G.norm());

  FamilyBuild out;
  std::vector<Mat> chains;  // delta_G^m(L_l) for the current order m
  for (const Mat& l : gen.jumps) {
    if (l.norm() > rel_tol) chains.push_back(l);
  }

  Mat stack(n * n, 0);  // unit-normalized vectorizations, for rank tracking
  int rank = 0;
  for (int m = 0; m <= max_m && !chains.empty(); ++m) {
    const int members_before = static_cast<int>(out.members.size());
    for (const Mat& c : chains) out.members.push_back(c);

    Mat wider(n * n, stack.cols() + static_cast<int>(chains.size()));
    wider.leftCols(stack.cols()) = stack;
    for (int j = 0; j < static_cast<int>(chains.size()); ++j) {
      wider.col(stack.cols() + j) = vectorize(chains[j]) / chains[j].norm();
    }
    const SpanBasis span = span_basis_cols(wider, rel_tol);
    if (m > 0 && span.dim() <= rank) {
      out.members.resize(members_before);  // order m contributed nothing
      break;
    }
    rank = span.dim();
    stack = span.basis;
    out.order_used = m;

    std::vector<Mat> next;
    for (const Mat& c : chains) {
      Mat commuted = gen.G * c - c * gen.G;
      if (commuted.norm() > rel_tol * g_scale * std::max(1.0, c.norm())) {
        // Rescale runaway chains; spans are scale-free, and literal values
        // are preserved at every order reached before this kicks in.
        if (commuted.norm() > 1e8) commuted /= commuted.norm();
        next.push_back(std::move(commuted));
      }
    }
    chains = std::move(next);
  }
  return out;
}

}  // namespace detail

/// All iterated commutators delta_G^m(L_l) for m = 0..max_m (default
/// n^2 - 1), with early stopping once an order stops enlarging the span.
inline std::vector<Mat> commutator_family(const GkslGenerator& gen,
                                          int max_m = -1,
                                          double rel_tol = kDefaultRelTol) {
  return detail::build_commutator_family(gen, max_m, rel_tol).members;
}

/// The smallest subspace containing u and invariant under every member of
/// the commutator family, together with whether it is also invariant under
/// the drift G.
struct ReachabilityReport {
  SpanBasis space;
  int dim = 0;
  bool g_invariant = false;
  int truncation_order = 0;
};

inline ReachabilityReport reachable_space(const GkslGenerator& gen,
                                          const Vec& u,
                                          double rel_tol = kDefaultRelTol) {
  detail::require(u.size() == gen.dim,
                  "reachable_space: vector dimension mismatch");
  detail::require(u.norm() > 0.0, "reachable_space: u must be nonzero");
  const int n = gen.dim;
  const detail::FamilyBuild family =
      detail::build_commutator_family(gen, -1, rel_tol);

  Mat basis = u / u.norm();
  int stable_sweeps = 0;
  while (basis.cols() < n && stable_sweeps < 2) {
    const auto members = static_cast<int>(family.members.size());
    Mat grown(n, basis.cols() * (members + 1));
    grown.leftCols(basis.cols()) = basis;
    for (int j = 0; j < members; ++j) {
      grown.middleCols(basis.cols() * (j + 1), basis.cols()) =
          family.members[j] * basis;
    }
    const SpanBasis span = span_basis_cols(grown, rel_tol);
    stable_sweeps = (span.dim() == basis.cols()) ? stable_sweeps + 1 : 0;
    basis = span.basis;
  }

  ReachabilityReport report;
  report.space = SpanBasis{n, basis, rel_tol};
  report.dim = static_cast<int>(basis.cols());
  report.truncation_order = family.order_used;
  const Mat p = report.space.projector();
  const Mat leak = (Mat::Identity(n, n) - p) * gen.G * p;
  report.g_invariant = leak.norm() <= kBalanceTol * std::max(1.0, gen.G.norm());
  return report;
}

/// The support of the evolved pure state at time t > 0, realized as
/// exp(tG) applied to the reachable space and re-orthonormalized.  The
/// dimension matches the reachable space since exp(tG) is invertible.
inline SpanBasis support_at_t(const GkslGenerator& gen, const Vec& u, double t,
                              double rel_tol = kDefaultRelTol) {
  detail::require(t > 0.0, "support_at_t: t must be positive");
  const ReachabilityReport reach = reachable_space(gen, u, rel_tol);
  const Mat pushed = expm(t * gen.G) * reach.space.basis;
  return span_basis_cols(pushed, rel_tol);
}

/// Comparison of the Hilbert-Schmidt spans of {L_l rho^{1/2}} (forward) and
/// {rho^{1/2} L_l^T} (backward); their coincidence is the span criterion the
/// Phi-support test must agree with.
struct HsSpanReport {
  bool equal = false;
  int forward_dim = 0;
  int backward_dim = 0;
};

inline HsSpanReport hs_span_condition(const GkslGenerator& gen,
                                      const DensityMatrix& rho,
                                      double rel_tol = kDefaultRelTol) {
  detail::require(is_special_for(gen, rho.mat, rel_tol),
                  "hs_span_condition: generator is not special for rho");
  if (gen.jumps.empty()) return HsSpanReport{true, 0, 0};
  const Mat shalf = sqrt_psd(rho.mat, rel_tol);
  std::vector<Mat> fwd;
  std::vector<Mat> bwd;
  for (const Mat& l : gen.jumps) {
    fwd.push_back(l * shalf);
    bwd.push_back(shalf * theta_map(l));  // theta L^* theta = L^T
  }
  const SpanBasis f = span_basis(fwd, rel_tol);
  const SpanBasis b = span_basis(bwd, rel_tol);
  HsSpanReport report;
  report.forward_dim = f.dim();
  report.backward_dim = b.dim();
  report.equal = same_subspace(f, b, kBalanceTol);
  return report;
}

namespace detail {
/// Mass of the positive operator a lying outside the support of b, as a
/// fraction of tr(a).  Mass-based inclusion is robust to eigenvector wobble
/// near a rank boundary, where projector distances are not.
inline double support_leak_fraction(const Mat& a, const Mat& b,
                                    double rel_tol) {
  const double mass = std::real(a.trace());
  if (mass <= 0.0) return 0.0;
  const Mat pb = support_projection(b, rel_tol);
  const double outside =
      std::real(((Mat::Identity(a.rows(), a.cols()) - pb) * a).trace());
  return std::max(outside, 0.0) / mass;
}

inline bool same_support_by_mass(const Mat& a, const Mat& b, double rel_tol) {
  return support_leak_fraction(a, b, rel_tol) <= kBalanceTol &&
         support_leak_fraction(b, a, rel_tol) <= kBalanceTol;
}
}  // namespace detail

/// True iff the supports of the completely positive images Phi_fwd(D) and
/// Phi_bwd(D) coincide, computed directly from the images.  The result is
/// cross-checked against hs_span_condition, to which it is provably
/// equivalent; a disagreement indicates numerical-rank instability and is
/// raised as an inconsistency rather than silently resolved.
inline bool phi_support_check(const GkslGenerator& gen,
                              const DensityMatrix& rho,
                              double rel_tol = kDefaultRelTol) {
  const Mat phi_f = phi_forward(gen, rho, rel_tol).mat;
  const Mat phi_b = phi_backward(gen, rho, rel_tol).mat;
  bool equal;
  const double mass_f = std::real(phi_f.trace());
  const double mass_b = std::real(phi_b.trace());
  if (mass_f <= rel_tol && mass_b <= rel_tol) {
    equal = true;  // no completely positive part at all
  } else {
    equal = detail::same_support_by_mass(phi_f, phi_b, rel_tol);
  }
  const HsSpanReport spans = hs_span_condition(gen, rho, rel_tol);
  if (spans.equal != equal) {
    std::ostringstream msg;
    msg << "phi_support_check: direct support comparison ("
        << (equal ? "equal" : "different")
        << ") disagrees with the span criterion ("
        << (spans.equal ? "equal" : "different")
        << "; dims " << spans.forward_dim << "/" << spans.backward_dim
        << "); numerical rank is unstable, consider adjusting rel_tol";
    throw NumericalInconsistency(msg.str());
  }
  return equal;
}

/// Decision report for the forward-backward support condition: do the
/// supports of the forward and backward two-point densities coincide for
/// all t > 0?
struct FbsReport {
  bool holds = false;
  std::string method;  // "theorem", "full-space", "constant-support", "sampled"
  std::string details;
};

inline FbsReport fbs_check(const GkslGenerator& gen, const DensityMatrix& rho,
                           double rel_tol = kDefaultRelTol) {
  detail::require(is_special_for(gen, rho.mat, rel_tol),
                  "fbs_check: generator is not special for rho");
  detail::require(rho.faithful, "fbs_check: rho must be faithful");
  FbsReport report;

  // (1) Under the commutation condition rho^{1/2} G^T = G rho^{1/2} the
  // support condition reduces exactly to the span criterion.
  const Mat shalf = sqrt_psd(rho.mat, rel_tol);
  const double g_residual =
      op_norm(shalf * theta_map(gen.G) - gen.G * shalf);
  if (g_residual <= kBalanceTol * std::max(1.0, op_norm(gen.G))) {
    const HsSpanReport spans = hs_span_condition(gen, rho, rel_tol);
    report.holds = spans.equal;
    report.method = "theorem";
    std::ostringstream details;
    details << "drift condition residual " << g_residual << "; span dims "
            << spans.forward_dim << "/" << spans.backward_dim;
    report.details = details.str();
    return report;
  }

  // (2) Otherwise examine the reachable spaces of r under the lifted
  // forward and backward generators.
  const RVector r = build_r(rho, rel_tol);
  const ReachabilityReport fwd =
      reachable_space(lift_forward(gen), r.vec, rel_tol);
  const ReachabilityReport bwd =
      reachable_space(lift_backward(gen), r.vec, rel_tol);
  const int full = gen.dim * gen.dim;
  if (fwd.dim == full && bwd.dim == full) {
    report.holds = true;
    report.method = "full-space";
    std::ostringstream details;
    details << "both reachable spaces span the full doubled space (dim "
            << full << ")";
    report.details = details.str();
    return report;
  }

  // (3) If both spaces are invariant under the lifted drifts the supports
  // are constant in t and can be compared once.
  if (fwd.g_invariant && bwd.g_invariant) {
    report.holds = same_subspace(fwd.space, bwd.space, kBalanceTol);
    report.method = "constant-support";
    std::ostringstream details;
    details << "drift-invariant reachable spaces of dims " << fwd.dim << "/"
            << bwd.dim << (report.holds ? " coincide" : " differ");
    report.details = details.str();
    return report;
  }

  // (4) No decision procedure applies; sample the evolved densities and
  // report per-sample equality without a universal claim.
  report.method = "sampled";
  bool all_equal = true;
  std::ostringstream details;
  for (const double t : {1e-2, 1e-1, 1.0}) {
    const Mat df = forward_density(gen, rho, t, rel_tol).mat;
    const Mat db = backward_density(gen, rho, t, rel_tol).mat;
    const bool equal = detail::same_support_by_mass(df, db, rel_tol);
    all_equal = all_equal && equal;
    details << "t=" << t << ": " << (equal ? "equal" : "differ") << "; ";
  }
  report.holds = all_equal;
  report.details = details.str() + "sampled only, not a universal claim";
  return report;
}

}  // namespace qmsep
