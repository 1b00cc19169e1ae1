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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "helpers.hpp"
#include "qmsep/balance.hpp"
#include "qmsep/entropy.hpp"

namespace qmsep {
namespace {

/// A reversible classical chain dressed with arbitrary jump phases and a
/// diagonal Hamiltonian; the balance conditions hold with a phase-carrying
/// witness, so these models exercise the complex branches of the checks.
std::pair<GkslGenerator, DensityMatrix> balanced_phased_model(
    int n, std::mt19937& rng) {
  const auto balanced = test::balanced_gamma(n, rng);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.141592653589793);
  std::uniform_real_distribution<double> energy(-1.0, 1.0);
  std::vector<Mat> jumps;
  for (int l = 0; l < n; ++l) {
    for (int m = 0; m < n; ++m) {
      if (l == m || balanced.first(l, m) <= 0.0) continue;
      const Cplx ph = std::exp(Cplx(0.0, phase(rng)));
      jumps.push_back(ph * std::sqrt(balanced.first(l, m)) *
                      matrix_unit(n, m, l));
    }
  }
  Mat h = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) h(j, j) = energy(rng);
  GkslGenerator gen = build_generator(h, jumps);
  DensityMatrix rho = make_density(Mat(balanced.second.cast<Cplx>().asDiagonal()));
  return {std::move(gen), std::move(rho)};
}

TEST_CASE("standard balance of the two-level model", "[balance]") {
  const auto [gen, rho] = two_level_model(1.0);
  const SqdbReport report = sqdb_check(gen, rho);
  CHECK(report.holds);
  CHECK(report.residual_jump < 1e-10);
  CHECK(report.residual_unitary < 1e-10);
  CHECK(report.residual_symmetric < 1e-10);

  Mat swap = Mat::Zero(2, 2);
  swap(0, 1) = 1.0;
  swap(1, 0) = 1.0;
  CHECK((report.u - swap).norm() < 1e-10);

  // Re-verify the witness directly, and reject a wrong one.
  CHECK(sqdb_witness_residual(gen, rho, report.u, false) < 1e-10);
  CHECK(sqdb_witness_residual(gen, rho, Mat::Identity(2, 2), false) ==
        Catch::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(sqdb_witness_residual(gen, rho, Mat::Identity(3, 3), false),
                  std::invalid_argument);
}

TEST_CASE("conjugation balance of the two-level model", "[balance]") {
  for (const double kappa : {0.5, 1.0, 3.0}) {
    const auto [gen, rho] = two_level_model(kappa);
    const SqdbThetaReport report = sqdb_theta_check(gen, rho);

    // Every jump-level residual vanishes; the drift condition alone fails,
    // by exactly the strength of the Hamiltonian coupling.
    CHECK_FALSE(report.holds);
    CHECK(report.residual_jump < 1e-10);
    CHECK(report.residual_unitary < 1e-10);
    CHECK(report.residual_selfadjoint < 1e-10);
    CHECK(report.g_condition_residual ==
          Catch::Approx(std::sqrt(2.0) * kappa).epsilon(1e-10));

    Mat swap = Mat::Zero(2, 2);
    swap(0, 1) = 1.0;
    swap(1, 0) = 1.0;
    CHECK((report.u - swap).norm() < 1e-10);
    CHECK(sqdb_witness_residual(gen, rho, report.u, true) < 1e-10);
  }
}

TEST_CASE("balance of symmetric and asymmetric cycles", "[balance]") {
  const auto [sym, sym_rho] = cycle_model(CycleSpec{3, 1.5, 1.5});
  CHECK(sqdb_check(sym, sym_rho).holds);
  CHECK(sqdb_theta_check(sym, sym_rho).holds);

  const auto [gen, rho] = cycle_model(CycleSpec{3, 2.0, 1.0});
  const SqdbReport report = sqdb_check(gen, rho);
  CHECK_FALSE(report.holds);
  CHECK(report.residual_jump < 1e-10);  // the candidate exists ...
  // ... but is neither unitary nor symmetric: u = [[0, sqrt(2)],
  // [1/sqrt(2), 0]], so uu^* = diag(2, 1/2).
  Mat expected_u = Mat::Zero(2, 2);
  expected_u(0, 1) = std::sqrt(2.0);
  expected_u(1, 0) = 1.0 / std::sqrt(2.0);
  CHECK((report.u - expected_u).norm() < 1e-10);
  const Mat gram = report.u * report.u.adjoint();
  CHECK(std::real(gram(0, 0)) == Catch::Approx(2.0).epsilon(1e-10));
  CHECK(std::real(gram(1, 1)) == Catch::Approx(0.5).epsilon(1e-10));
  CHECK(report.residual_unitary ==
        Catch::Approx(std::sqrt(1.25)).epsilon(1e-10));
  CHECK(report.residual_symmetric == Catch::Approx(1.0).epsilon(1e-10));

  // The conjugation variant fails the same way while the drift condition
  // holds: the cycle drift is diagonal.
  const SqdbThetaReport theta = sqdb_theta_check(gen, rho);
  CHECK_FALSE(theta.holds);
  CHECK(theta.residual_jump < 1e-10);
  CHECK(theta.g_condition_residual < 1e-10);
  CHECK(theta.residual_selfadjoint > 0.5);
}

TEST_CASE("balanced rates satisfy both balance conditions", "[balance]") {
  std::mt19937 rng(701);
  for (int trial = 0; trial < 3; ++trial) {
    const auto [gen, rho] = balanced_phased_model(3, rng);
    const SqdbReport sqdb = sqdb_check(gen, rho);
    const SqdbThetaReport theta = sqdb_theta_check(gen, rho);
    CHECK(sqdb.holds);
    CHECK(theta.holds);
    CHECK(sqdb_witness_residual(gen, rho, sqdb.u, false) < 1e-10);
    CHECK(sqdb_witness_residual(gen, rho, theta.u, true) < 1e-10);

    // The phases force a genuinely complex witness.
    if (trial == 0) CHECK(sqdb.u.imag().norm() > 1e-3);

    // Conjugation balance implies zero entropy production.
    CHECK(entropy_production(gen, rho).value < 1e-9);
  }
}

TEST_CASE("balance verdicts are gauge covariant", "[balance]") {
  std::mt19937 rng(702);

  // Remixing the jumps by a unitary preserves the verdicts.
  const auto [tl, tl_rho] = two_level_model(1.0);
  const Mat v = test::random_unitary(2, rng);
  std::vector<Mat> remixed(2, Mat::Zero(2, 2));
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) remixed[k] += v(k, l) * tl.jumps[l];
  }
  const GkslGenerator remixed_gen = build_generator(tl.H, remixed);
  CHECK(sqdb_check(remixed_gen, tl_rho).holds);
  const SqdbThetaReport remixed_theta = sqdb_theta_check(remixed_gen, tl_rho);
  CHECK_FALSE(remixed_theta.holds);
  CHECK(remixed_theta.g_condition_residual ==
        Catch::Approx(std::sqrt(2.0)).epsilon(1e-10));

  // Conjugating the whole model by a real orthogonal matrix preserves the
  // drift-condition residual and the verdicts.
  const auto [cyc, cyc_rho] = cycle_model(CycleSpec{3, 2.0, 1.0});
  const auto [rot, rot_rho] =
      test::rotate_pair(cyc, cyc_rho, test::random_orthogonal(3, rng));
  CHECK_FALSE(sqdb_check(rot, rot_rho).holds);
  const SqdbThetaReport rotated = sqdb_theta_check(rot, rot_rho);
  CHECK_FALSE(rotated.holds);
  CHECK(rotated.g_condition_residual < 1e-9);

  std::mt19937 rng_balanced(703);
  const auto [bal, bal_rho] = balanced_phased_model(3, rng_balanced);
  const auto [bal_rot, bal_rot_rho] =
      test::rotate_pair(bal, bal_rho, test::random_orthogonal(3, rng_balanced));
  CHECK(sqdb_theta_check(bal_rot, bal_rot_rho).holds);
}

TEST_CASE("derivation gap vanishes under conjugation balance", "[balance]") {
  const auto [sym, sym_rho] = cycle_model(CycleSpec{3, 1.5, 1.5});
  const DerivationGapReport sym_gap = derivation_gap(sym, sym_rho);
  CHECK(sym_gap.derivation_residual < 1e-10);
  CHECK(sym_gap.K.norm() < 1e-8);
  CHECK(sym_gap.k_rho_commutator < 1e-10);

  std::mt19937 rng(704);
  const auto [bal, bal_rho] = balanced_phased_model(3, rng);
  const DerivationGapReport bal_gap = derivation_gap(bal, bal_rho);
  CHECK(bal_gap.derivation_residual < 1e-8);
  CHECK(bal_gap.k_rho_commutator < 1e-8);
}

TEST_CASE("derivation gap of the two-level model", "[balance]") {
  // The dual differs from the conjugated generator by exactly the inner
  // derivation with K = -2H, which commutes with the invariant state.
  const auto [gen, rho] = two_level_model(0.7);
  const DerivationGapReport gap = derivation_gap(gen, rho);
  CHECK(gap.derivation_residual < 1e-10);
  CHECK((gap.K + 2.0 * gen.H).norm() < 1e-8);
  CHECK(gap.k_rho_commutator < 1e-10);
}

TEST_CASE("derivation gap of the driven cycle", "[balance]") {
  // The gap of the asymmetric cycle is purely dissipative: it is orthogonal
  // to every inner derivation, so the fit returns K = 0 and the residual is
  // the full gap norm |lambda - mu| sqrt(2) n.
  const auto [gen, rho] = cycle_model(CycleSpec{3, 2.0, 1.0});
  const DerivationGapReport gap = derivation_gap(gen, rho);
  CHECK(gap.K.norm() < 1e-10);
  CHECK(gap.derivation_residual ==
        Catch::Approx(std::sqrt(18.0)).epsilon(1e-9));

  const auto [gen2, rho2] = cycle_model(CycleSpec{3, 3.0, 0.5});
  CHECK(derivation_gap(gen2, rho2).derivation_residual ==
        Catch::Approx(2.5 * std::sqrt(18.0)).epsilon(1e-9));
}

TEST_CASE("conjugated generator acts as flip conjugation", "[balance]") {
  std::mt19937 rng(705);
  const GkslGenerator gen = test::random_model(3, 2, rng);
  const Mat m = superoperator(gen, SuperopKind::heisenberg).mat;
  const Mat f = flip(3);
  const Mat conjugated = f * m * f;
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      const Mat x = matrix_unit(3, j, k);
      const Mat via_superop = devectorize(conjugated * vectorize(x), 3);
      const Mat direct = theta_map(apply_L(gen, theta_map(x)));
      CHECK((via_superop - direct).norm() < 1e-12);
    }
  }
}

TEST_CASE("aggregate balance report", "[balance]") {
  const auto [gen, rho] = two_level_model(1.0);
  const BalanceReport report = balance_report(gen, rho);
  CHECK(report.sqdb.holds == sqdb_check(gen, rho).holds);
  CHECK(report.sqdb_theta.holds == sqdb_theta_check(gen, rho).holds);
  CHECK(report.sqdb.holds);
  CHECK_FALSE(report.sqdb_theta.holds);
  CHECK(report.gap.derivation_residual < 1e-10);
}

TEST_CASE("balance checks validate their inputs", "[balance]") {
  const auto [gen, rho] = two_level_model(1.0);

  Mat tilted = Mat::Zero(2, 2);
  tilted(0, 0) = 0.7;
  tilted(1, 1) = 0.3;
  CHECK_THROWS_AS(sqdb_check(gen, make_density(tilted)),
                  std::invalid_argument);
  CHECK_THROWS_AS(sqdb_theta_check(gen, make_density(tilted)),
                  std::invalid_argument);

  Mat pure = Mat::Zero(2, 2);
  pure(0, 0) = 1.0;
  CHECK_THROWS_AS(derivation_gap(gen, make_density(pure)),
                  std::invalid_argument);

  GkslGenerator unspecial = gen;
  unspecial.jumps[0] += 0.4 * Mat::Identity(2, 2);
  unspecial.G = drift(unspecial.H, unspecial.jumps);
  CHECK_THROWS_AS(sqdb_check(unspecial, rho), std::invalid_argument);
}

}  // namespace
}  // namespace qmsep
