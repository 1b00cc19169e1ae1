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
//
// Deterministic random builders shared by the test binaries.

#pragma once

#include <random>
#include <stdexcept>
#include <utility>

#include "qmsep/qmsep.hpp"

namespace qmsep::test {

inline Mat random_matrix(int n, std::mt19937& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat a(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(r, c) = Cplx(dist(rng), dist(rng));
  }
  return a;
}

inline Mat random_real_matrix(int n, std::mt19937& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat a(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(r, c) = Cplx(dist(rng), 0.0);
  }
  return a;
}

inline Mat random_hermitian(int n, std::mt19937& rng) {
  const Mat a = random_matrix(n, rng);
  return 0.5 * (a + a.adjoint());
}

inline Mat random_real_symmetric(int n, std::mt19937& rng) {
  const Mat a = random_real_matrix(n, rng);
  return 0.5 * (a + a.transpose());
}

inline Mat random_unitary(int n, std::mt19937& rng) {
  return Eigen::HouseholderQR<Mat>(random_matrix(n, rng)).householderQ();
}

inline Vec random_vector(int n, std::mt19937& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vec v(n);
  for (int j = 0; j < n; ++j) v(j) = Cplx(dist(rng), dist(rng));
  return v;
}

inline DensityMatrix random_faithful_state(int n, std::mt19937& rng) {
  const Mat a = random_matrix(n, rng);
  Mat s = a * a.adjoint() + 0.2 * Mat::Identity(n, n);
  s /= s.trace();
  return make_density(s);
}

/// Faithful state with real entries, hence commuting with the conjugation.
inline DensityMatrix random_real_faithful_state(int n, std::mt19937& rng) {
  const Mat a = random_real_matrix(n, rng);
  Mat s = a * a.transpose() + 0.2 * Mat::Identity(n, n);
  s /= s.trace();
  return make_density(s);
}

inline GkslGenerator random_model(int n, int d, std::mt19937& rng) {
  std::vector<Mat> jumps;
  for (int k = 0; k < d; ++k) jumps.push_back(random_matrix(n, rng));
  return build_generator(random_hermitian(n, rng), jumps);
}

/// Real-structured model (real symmetric H, real jumps).  Note that even a
/// real model can have a complex invariant state (conjugating the fixed-point
/// equation flips the sign of H), so pair this with an explicitly real state
/// when the two-point machinery is involved.
inline GkslGenerator random_real_model(int n, int d, std::mt19937& rng) {
  std::vector<Mat> jumps;
  for (int k = 0; k < d; ++k) jumps.push_back(random_real_matrix(n, rng));
  return build_generator(random_real_symmetric(n, rng), jumps);
}

/// The unique faithful invariant state of gen together with the generator
/// normalized to the special representation for it.  Throws when the model
/// does not have a unique faithful invariant state (the random models used
/// in the tests do; a failure indicates a bad seed choice).
inline std::pair<GkslGenerator, DensityMatrix> specialized_invariant_pair(
    const GkslGenerator& gen) {
  const InvariantStates inv = invariant_states(gen);
  if (inv.kernel_dim != 1 || inv.states.size() != 1) {
    throw std::runtime_error(
        "test helper: model has a degenerate invariant-state kernel");
  }
  const DensityMatrix& rho = inv.states.front();
  if (!rho.faithful) {
    throw std::runtime_error(
        "test helper: model's invariant state is not faithful");
  }
  return {make_special(gen, rho), rho};
}

/// Rate matrix with every off-diagonal entry positive, so every transition
/// has a positive reverse rate.
inline RMat random_gamma(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(0.2, 2.0);
  RMat gamma = RMat::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (r != c) gamma(r, c) = dist(rng);
    }
  }
  return gamma;
}

/// Random real orthogonal matrix (QR of a real Gaussian), returned with
/// complex scalar type for direct use on complex operators.
inline Mat random_orthogonal(int n, std::mt19937& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  RMat a(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) a(r, c) = dist(rng);
  }
  const RMat q = Eigen::HouseholderQR<RMat>(a).householderQ();
  return q.cast<Cplx>();
}

/// Conjugates a model and its state by a real orthogonal q.  Realness of the
/// state, invariance, faithfulness and the special property all survive.
inline std::pair<GkslGenerator, DensityMatrix> rotate_pair(
    const GkslGenerator& gen, const DensityMatrix& rho, const Mat& q) {
  GkslGenerator out;
  out.dim = gen.dim;
  out.H = q * gen.H * q.adjoint();
  for (const Mat& l : gen.jumps) out.jumps.push_back(q * l * q.adjoint());
  out.G = drift(out.H, out.jumps);
  const DensityMatrix rotated = make_density(q * rho.mat * q.adjoint());
  if (gen.special_for.has_value()) out.special_for = rotated.mat;
  return {std::move(out), rotated};
}

/// Classical-jump model dressed with random jump phases and conjugated by a
/// random real orthogonal: complex jumps and a non-diagonal real faithful
/// invariant state the representation is special for.
inline std::pair<GkslGenerator, DensityMatrix> random_stationary_model(
    int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.141592653589793);
  std::uniform_real_distribution<double> entry(-1.0, 1.0);
  const RMat gamma = random_gamma(n, rng);
  std::vector<Mat> jumps;
  for (int l = 0; l < n; ++l) {
    for (int m = 0; m < n; ++m) {
      if (gamma(l, m) > 0.0) {
        // A phase leaves both the diagonal dynamics and the jump-part images
        // unchanged but makes the jump genuinely complex.
        jumps.push_back(std::exp(Cplx(0.0, angle(rng))) *
                        std::sqrt(gamma(l, m)) * matrix_unit(n, m, l));
      }
    }
  }
  Mat h = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) h(j, j) = entry(rng);
  GkslGenerator gen = build_generator(h, jumps);
  const RVec pi = classical_stationary(gamma);
  Mat rho_mat = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) rho_mat(j, j) = pi(j);
  gen.special_for = rho_mat;
  return rotate_pair(gen, make_density(rho_mat), random_orthogonal(n, rng));
}

/// Rate matrix in classical detailed balance with its stationary vector:
/// gamma_lm = c_lm / pi_l for a symmetric positive c, so that
/// pi_l gamma_lm = c_lm = pi_m gamma_ml.
inline std::pair<RMat, RVec> balanced_gamma(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> dist(0.2, 2.0);
  RVec pi(n);
  for (int j = 0; j < n; ++j) pi(j) = dist(rng);
  pi /= pi.sum();
  RMat c = RMat::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int col = r + 1; col < n; ++col) {
      c(r, col) = dist(rng);
      c(col, r) = c(r, col);
    }
  }
  RMat gamma = RMat::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) {
      if (r != col) gamma(r, col) = c(r, col) / pi(r);
    }
  }
  return {gamma, pi};
}

}  // namespace qmsep::test
