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
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qmsep/gksl.hpp"

namespace qmsep::io {

using json = nlohmann::json;

/// On-disk model: dimension, Hamiltonian, jump operators, optional reference
/// state, free-form metadata.  Matrices are stored as {"re": rows, "im":
/// rows} with split real and imaginary n x n arrays; numbers round-trip at
/// full double precision.
struct ModelFile {
  int dim = 0;
  Mat H;
  std::vector<Mat> L;
  std::optional<Mat> rho;
  std::map<std::string, std::string> metadata;
};

namespace detail {

inline RMat real_rows_from_json(const json& j, const std::string& path,
                                int expect) {
  if (!j.is_array() || static_cast<int>(j.size()) != expect) {
    throw std::invalid_argument(path + ": expected " + std::to_string(expect) +
                                " rows");
  }
  RMat out(expect, expect);
  for (int r = 0; r < expect; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != expect) {
      throw std::invalid_argument(path + "[" + std::to_string(r) +
                                  "]: expected " + std::to_string(expect) +
                                  " numbers");
    }
    for (int c = 0; c < expect; ++c) {
      if (!row[c].is_number()) {
        throw std::invalid_argument(path + "[" + std::to_string(r) + "][" +
                                    std::to_string(c) + "]: expected a number");
      }
      out(r, c) = row[c].get<double>();
    }
  }
  return out;
}

}  // namespace detail

inline Mat matrix_from_json(const json& j, const std::string& path,
                            int expect_dim) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im")) {
    throw std::invalid_argument(
        path + R"(: expected a matrix object with "re" and "im" arrays)");
  }
  const RMat re = detail::real_rows_from_json(j["re"], path + ".re", expect_dim);
  const RMat im = detail::real_rows_from_json(j["im"], path + ".im", expect_dim);
  return re.cast<Cplx>() + Cplx(0.0, 1.0) * im.cast<Cplx>();
}

inline json matrix_to_json(const Mat& m) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json re_row = json::array();
    json im_row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re_row.push_back(m(r, c).real());
      im_row.push_back(m(r, c).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

inline ModelFile parse_model(const json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("model: expected a JSON object");
  }
  if (!j.contains("dim") || !j["dim"].is_number_integer()) {
    throw std::invalid_argument("model.dim: expected an integer");
  }
  ModelFile model;
  model.dim = j["dim"].get<int>();
  if (model.dim < 1) {
    throw std::invalid_argument("model.dim: must be >= 1");
  }
  if (!j.contains("H")) {
    throw std::invalid_argument("model.H: missing");
  }
  model.H = matrix_from_json(j["H"], "model.H", model.dim);
  if (!j.contains("L") || !j["L"].is_array() || j["L"].empty()) {
    throw std::invalid_argument(
        "model.L: expected a nonempty array of matrix objects");
  }
  for (std::size_t k = 0; k < j["L"].size(); ++k) {
    model.L.push_back(matrix_from_json(
        j["L"][k], "model.L[" + std::to_string(k) + "]", model.dim));
  }
  if (j.contains("rho")) {
    model.rho = matrix_from_json(j["rho"], "model.rho", model.dim);
  }
  if (j.contains("metadata")) {
    const json& meta = j["metadata"];
    if (!meta.is_object()) {
      throw std::invalid_argument("model.metadata: expected an object");
    }
    for (const auto& [key, value] : meta.items()) {
      if (!value.is_string()) {
        throw std::invalid_argument("model.metadata." + key +
                                    ": expected a string");
      }
      model.metadata[key] = value.get<std::string>();
    }
  }
  return model;
}

inline json model_to_json(const ModelFile& model) {
  json j;
  j["dim"] = model.dim;
  j["H"] = matrix_to_json(model.H);
  j["L"] = json::array();
  for (const Mat& l : model.L) j["L"].push_back(matrix_to_json(l));
  if (model.rho) j["rho"] = matrix_to_json(*model.rho);
  if (!model.metadata.empty()) {
    json meta = json::object();
    for (const auto& [key, value] : model.metadata) meta[key] = value;
    j["metadata"] = std::move(meta);
  }
  return j;
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open model file: " + path);
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": malformed JSON: " + e.what());
  }
  return parse_model(j);
}

inline void save_model(const ModelFile& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::invalid_argument("cannot write model file: " + path);
  }
  out << model_to_json(model).dump(2) << "\n";
}

/// FNV-1a digest of the canonical serialization, used to tie reports to
/// their inputs.
inline std::string input_digest(const json& j) {
  const std::string dump = j.dump();
  std::uint64_t hash = 1469598103934665603ULL;
  for (const unsigned char c : dump) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return std::string("fnv1a:") + buf;
}

/// Finite values are emitted as JSON numbers, infinity as the string "inf"
/// (never a large float).
inline json finite_or_inf(double value) {
  if (std::isinf(value)) return json("inf");
  return json(value);
}

/// Tolerance override hook: QMSEP_REL_TOL replaces the default relative
/// tolerance when set; malformed values are an error, not a silent default.
inline double env_rel_tol() {
  const char* env = std::getenv("QMSEP_REL_TOL");
  if (env == nullptr || *env == '\0') return kDefaultRelTol;
  char* end = nullptr;
  const double value = std::strtod(env, &end);
  if (end == nullptr || *end != '\0' || !(value > 0.0) || value >= 1.0) {
    throw std::invalid_argument(
        std::string("QMSEP_REL_TOL: expected a number in (0, 1), got \"") +
        env + "\"");
  }
  return value;
}

inline json versions() {
  return json{
      {"qmsep", "0.1.0"},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
  };
}

}  // namespace qmsep::io
