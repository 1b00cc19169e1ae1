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
#include <limits>
#include <utility>
#include <vector>

#include "qmsep/support.hpp"

namespace qmsep {

namespace detail {

inline void require_state(const Mat& a, double rel_tol, const char* who) {
  psd_eig(a, rel_tol, who);  // validates shape, Hermiticity, positivity
  require(std::abs(std::real(a.trace()) - 1.0) <= 1e-8,
          std::string(who) + ": input must have unit trace");
}

/// (1/2) Re tr[(a - b)(log a - log b)] with logarithms taken on the
/// respective supports (zero on the kernels).  No trace normalization is
/// assumed, so this serves both unit-trace states and the unnormalized
/// completely positive images.  Caller is responsible for the
/// equal-supports precondition that makes the value finite and meaningful.
inline double symmetrized_divergence(const Mat& a, const Mat& b,
                                     double rel_tol) {
  const Mat log_a = log_on_support(a, rel_tol);
  const Mat log_b = log_on_support(b, rel_tol);
  const double value = 0.5 * std::real(((a - b) * (log_a - log_b)).trace());
  if (value < -1e-8) {
    throw NumericalInconsistency(
        "symmetrized_divergence: value " + std::to_string(value) +
        " is negative beyond tolerance");
  }
  return std::max(value, 0.0);
}

}  // namespace detail

/// Relative entropy S(a, b) = tr[a (log a - log b)] in nats; +infinity when
/// the support of a is not contained in that of b.
inline double relative_entropy(const Mat& a, const Mat& b,
                               double rel_tol = kDefaultRelTol) {
  detail::require_state(a, rel_tol, "relative_entropy: first argument");
  detail::require_state(b, rel_tol, "relative_entropy: second argument");
  if (detail::support_leak_fraction(a, b, rel_tol) > kBalanceTol) {
    return std::numeric_limits<double>::infinity();
  }
  const Mat log_a = log_on_support(a, rel_tol);
  const Mat log_b = log_on_support(b, rel_tol);
  const double value = std::real((a * (log_a - log_b)).trace());
  if (value < -1e-8) {
    throw NumericalInconsistency("relative_entropy: value " +
                                 std::to_string(value) +
                                 " is negative beyond tolerance");
  }
  return std::max(value, 0.0);
}

/// Symmetrized relative entropy (1/2) tr[(a - b)(log a - log b)] in nats;
/// +infinity unless the supports coincide.
inline double symmetric_relative_entropy(const Mat& a, const Mat& b,
                                         double rel_tol = kDefaultRelTol) {
  detail::require_state(a, rel_tol,
                        "symmetric_relative_entropy: first argument");
  detail::require_state(b, rel_tol,
                        "symmetric_relative_entropy: second argument");
  if (!detail::same_support_by_mass(a, b, rel_tol)) {
    return std::numeric_limits<double>::infinity();
  }
  return detail::symmetrized_divergence(a, b, rel_tol);
}

/// One sample of the limit estimator: the symmetrized relative entropy
/// between the forward and backward two-point densities at time t, and its
/// difference quotient (the entropy at t = 0 is zero).
struct LimitSample {
  double t = 0.0;
  double s = 0.0;
  double s_over_t = 0.0;
};

/// Full entropy-production report.
struct SupportDiagnosis {
  bool spans_equal = false;
  int forward_dim = 0;
  int backward_dim = 0;
};

struct EpReport {
  double value = 0.0;   // nats; +infinity exactly when infinite is set
  bool infinite = false;
  SupportDiagnosis support_diagnosis;
  // Spectra of the forward and backward completely positive images, each
  // sorted descending and paired up, as computed-with diagnostics.
  std::vector<std::pair<double, double>> formula_terms;
  std::vector<LimitSample> limit_trace;
};

/// The entropy production rate of the semigroup with invariant state rho:
/// +infinity when the supports of the completely positive images differ,
/// else the closed form
///   (1/2) tr[(Phi_fwd(D) - Phi_bwd(D)) (log Phi_fwd(D) - log Phi_bwd(D))].
inline EpReport entropy_production(const GkslGenerator& gen,
                                   const DensityMatrix& rho,
                                   double rel_tol = kDefaultRelTol) {
  detail::require(rho.faithful, "entropy_production: rho must be faithful");
  detail::require(is_special_for(gen, rho.mat, rel_tol),
                  "entropy_production: generator is not special for rho");
  const double invariance = apply_Lstar(gen, rho.mat).norm();
  detail::require(invariance <= kBalanceTol * std::max(1.0, gen.G.norm()),
                  "entropy_production: rho is not invariant (residual " +
                      std::to_string(invariance) + ")");

  EpReport report;
  const HsSpanReport spans = hs_span_condition(gen, rho, rel_tol);
  report.support_diagnosis =
      SupportDiagnosis{spans.equal, spans.forward_dim, spans.backward_dim};

  if (!phi_support_check(gen, rho, rel_tol)) {
    report.value = std::numeric_limits<double>::infinity();
    report.infinite = true;
    return report;
  }

  const Mat phi_f = phi_forward(gen, rho, rel_tol).mat;
  const Mat phi_b = phi_backward(gen, rho, rel_tol).mat;
  report.value = detail::symmetrized_divergence(phi_f, phi_b, rel_tol);
  report.infinite = false;

  const RVec spec_f = hermitian_eig(phi_f, rel_tol).eigenvalues;
  const RVec spec_b = hermitian_eig(phi_b, rel_tol).eigenvalues;
  std::vector<double> sf(spec_f.data(), spec_f.data() + spec_f.size());
  std::vector<double> sb(spec_b.data(), spec_b.data() + spec_b.size());
  std::sort(sf.rbegin(), sf.rend());
  std::sort(sb.rbegin(), sb.rend());
  const double cutoff =
      rel_tol * std::max({1.0, std::abs(sf.front()), std::abs(sb.front())});
  for (std::size_t j = 0; j < sf.size(); ++j) {
    if (std::max(std::abs(sf[j]), std::abs(sb[j])) <= cutoff) break;
    report.formula_terms.emplace_back(sf[j], sb[j]);
  }
  return report;
}

/// Difference-quotient samples S(t)/t of the limit definition, one per grid
/// point, in the order given.  No extrapolation is performed; when the
/// support condition holds the samples approach the closed-form value as
/// t decreases.
inline std::vector<LimitSample> ep_limit_estimate(
    const GkslGenerator& gen, const DensityMatrix& rho,
    const std::vector<double>& t_grid, double rel_tol = kDefaultRelTol) {
  for (const double t : t_grid) {
    detail::require(t > 0.0, "ep_limit_estimate: all grid times must be > 0");
  }
  const TwoPointDensity d = build_D(build_r(rho, rel_tol));
  const GkslGenerator fwd = lift_forward(gen);
  const GkslGenerator bwd = lift_backward(gen);
  std::vector<LimitSample> samples;
  samples.reserve(t_grid.size());
  for (const double t : t_grid) {
    const Mat df = evolve(fwd, d.mat, t, rel_tol).mat;
    const Mat db = evolve(bwd, d.mat, t, rel_tol).mat;
    const double s = symmetric_relative_entropy(df, db, rel_tol);
    samples.push_back(LimitSample{t, s, s / t});
  }
  return samples;
}

}  // namespace qmsep
