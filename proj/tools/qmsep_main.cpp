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
// Command-line surface of the library.  Exit codes: 0 success, 2 validation
// failure (bad arguments, malformed or inconsistent input), 3 internal
// numerical inconsistency.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmsep/io.hpp"
#include "qmsep/qmsep.hpp"

namespace {

using qmsep::io::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitInconsistency = 3;

json tolerances_json(double rel_tol) {
  return json{{"rel_tol", rel_tol}, {"verdict_tol", qmsep::kBalanceTol}};
}

json report_skeleton(const std::string& command, const json& input,
                     double rel_tol) {
  return json{{"command", command},
              {"input_digest", qmsep::io::input_digest(input)},
              {"tolerances", tolerances_json(rel_tol)},
              {"log_base", "nats"},
              {"versions", qmsep::io::versions()}};
}

void emit(const json& report) { std::cout << report.dump(2) << "\n"; }

qmsep::Mat load_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open state file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": malformed JSON: " + e.what());
  }
  json matrix = j.is_object() && j.contains("rho") ? j["rho"] : j;
  if (!matrix.is_object() || !matrix.contains("re")) {
    throw std::invalid_argument(
        path + R"(: expected a matrix object {"re": ..., "im": ...})");
  }
  const int dim = matrix["re"].is_array()
                      ? static_cast<int>(matrix["re"].size())
                      : 0;
  return qmsep::io::matrix_from_json(matrix, path, dim);
}

struct LoadedModel {
  qmsep::io::ModelFile file;
  json canonical;  // digest input: model JSON plus any state-file override
  qmsep::GkslGenerator gen;
  qmsep::DensityMatrix rho;
  bool was_special = false;
};

/// Loads the model, builds the generator, and resolves the reference state:
/// --rho wins, then the file's embedded rho, then the unique faithful
/// invariant state.  Several invariant-state candidates are never picked
/// among silently.
LoadedModel load_for_state_command(const std::string& model_path,
                                   const std::string& rho_path,
                                   double rel_tol) {
  LoadedModel loaded;
  loaded.file = qmsep::io::load_model(model_path);
  loaded.canonical = qmsep::io::model_to_json(loaded.file);
  loaded.gen =
      qmsep::build_generator(loaded.file.H, loaded.file.L, rel_tol);

  qmsep::Mat rho_mat;
  if (!rho_path.empty()) {
    rho_mat = load_state_file(rho_path);
    loaded.canonical["rho_override"] = qmsep::io::matrix_to_json(rho_mat);
  } else if (loaded.file.rho) {
    rho_mat = *loaded.file.rho;
  } else {
    const qmsep::InvariantStates inv =
        qmsep::invariant_states(loaded.gen, rel_tol);
    if (inv.kernel_dim != 1 || inv.states.size() != 1 ||
        !inv.states.front().faithful) {
      std::ostringstream msg;
      msg << "no reference state given and the invariant state is not "
             "unique-and-faithful (kernel dimension "
          << inv.kernel_dim << "); candidates:";
      for (const qmsep::DensityMatrix& s : inv.states) {
        msg << "\n  " << qmsep::io::matrix_to_json(s.mat).dump()
            << (s.faithful ? " (faithful)" : " (not faithful)");
      }
      msg << "\npass one explicitly with --rho";
      throw std::invalid_argument(msg.str());
    }
    rho_mat = inv.states.front().mat;
  }
  loaded.rho = qmsep::make_density(rho_mat, rel_tol);
  loaded.was_special =
      qmsep::is_special_for(loaded.gen, loaded.rho.mat, rel_tol);
  loaded.gen = qmsep::make_special(loaded.gen, loaded.rho, rel_tol);
  return loaded;
}

int run_validate(const std::string& model_path, double rel_tol) {
  const qmsep::io::ModelFile file = qmsep::io::load_model(model_path);
  const json canonical = qmsep::io::model_to_json(file);
  const qmsep::GkslGenerator gen =
      qmsep::build_generator(file.H, file.L, rel_tol);
  json report = report_skeleton("validate", canonical, rel_tol);
  report["dim"] = file.dim;
  report["num_jumps"] = static_cast<int>(file.L.size());
  report["h_hermiticity_residual"] = (file.H - file.H.adjoint()).norm();
  if (file.rho) {
    const qmsep::DensityMatrix rho = qmsep::make_density(*file.rho, rel_tol);
    report["rho"] = {{"present", true},
                     {"faithful", rho.faithful},
                     {"special_for_rho",
                      qmsep::is_special_for(gen, rho.mat, rel_tol)}};
  } else {
    report["rho"] = {{"present", false}};
  }
  emit(report);
  return kExitOk;
}

int run_invariant(const std::string& model_path, double rel_tol) {
  const qmsep::io::ModelFile file = qmsep::io::load_model(model_path);
  const json canonical = qmsep::io::model_to_json(file);
  const qmsep::GkslGenerator gen =
      qmsep::build_generator(file.H, file.L, rel_tol);
  const qmsep::InvariantStates inv = qmsep::invariant_states(gen, rel_tol);
  json report = report_skeleton("invariant", canonical, rel_tol);
  report["kernel_dim"] = inv.kernel_dim;
  report["states"] = json::array();
  for (const qmsep::DensityMatrix& s : inv.states) {
    json eigs = json::array();
    for (Eigen::Index j = 0; j < s.eig.eigenvalues.size(); ++j) {
      eigs.push_back(s.eig.eigenvalues(j));
    }
    report["states"].push_back(json{{"matrix", qmsep::io::matrix_to_json(s.mat)},
                                    {"faithful", s.faithful},
                                    {"eigenvalues", eigs}});
  }
  emit(report);
  return kExitOk;
}

int run_ep(const std::string& model_path, const std::string& rho_path,
           const std::vector<double>& limit_check, const std::string& csv_path,
           double rel_tol) {
  const LoadedModel loaded =
      load_for_state_command(model_path, rho_path, rel_tol);
  const qmsep::EpReport ep =
      qmsep::entropy_production(loaded.gen, loaded.rho, rel_tol);

  json report = report_skeleton("ep", loaded.canonical, rel_tol);
  report["was_special"] = loaded.was_special;
  report["value"] = qmsep::io::finite_or_inf(ep.value);
  report["infinite"] = ep.infinite;
  report["support_diagnosis"] = {
      {"spans_equal", ep.support_diagnosis.spans_equal},
      {"forward_dim", ep.support_diagnosis.forward_dim},
      {"backward_dim", ep.support_diagnosis.backward_dim}};
  report["formula_terms"] = json::array();
  for (const auto& [fwd, bwd] : ep.formula_terms) {
    report["formula_terms"].push_back(json::array({fwd, bwd}));
  }

  if (!limit_check.empty()) {
    const std::vector<qmsep::LimitSample> samples =
        qmsep::ep_limit_estimate(loaded.gen, loaded.rho, limit_check, rel_tol);
    report["limit_check"] = json::array();
    for (const qmsep::LimitSample& sample : samples) {
      report["limit_check"].push_back(json{
          {"t", sample.t},
          {"S", qmsep::io::finite_or_inf(sample.s)},
          {"S_over_t", qmsep::io::finite_or_inf(sample.s_over_t)}});
    }
    if (!csv_path.empty()) {
      std::ofstream csv(csv_path);
      if (!csv) {
        throw std::invalid_argument("cannot write CSV file: " + csv_path);
      }
      csv << "t,S,S_over_t\n";
      char buf[200];
      for (const qmsep::LimitSample& sample : samples) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", sample.t,
                      sample.s, sample.s_over_t);
        csv << buf;
      }
    }
  }
  emit(report);
  return kExitOk;
}

json matrix_or_null(const qmsep::Mat& m) {
  if (m.size() == 0) return json(nullptr);
  return qmsep::io::matrix_to_json(m);
}

int run_balance(const std::string& model_path, const std::string& rho_path,
                double rel_tol) {
  const LoadedModel loaded =
      load_for_state_command(model_path, rho_path, rel_tol);
  const qmsep::BalanceReport balance =
      qmsep::balance_report(loaded.gen, loaded.rho, rel_tol);

  json report = report_skeleton("balance", loaded.canonical, rel_tol);
  report["was_special"] = loaded.was_special;
  report["sqdb"] = {{"holds", balance.sqdb.holds},
                    {"u", matrix_or_null(balance.sqdb.u)},
                    {"residual_jump", balance.sqdb.residual_jump},
                    {"residual_unitary", balance.sqdb.residual_unitary},
                    {"residual_symmetric", balance.sqdb.residual_symmetric}};
  report["sqdb_theta"] = {
      {"holds", balance.sqdb_theta.holds},
      {"u", matrix_or_null(balance.sqdb_theta.u)},
      {"residual_jump", balance.sqdb_theta.residual_jump},
      {"residual_unitary", balance.sqdb_theta.residual_unitary},
      {"residual_selfadjoint", balance.sqdb_theta.residual_selfadjoint},
      {"g_condition_residual", balance.sqdb_theta.g_condition_residual}};
  report["derivation_gap"] = {
      {"K", matrix_or_null(balance.gap.K)},
      {"derivation_residual", balance.gap.derivation_residual},
      {"K_rho_commutator", balance.gap.k_rho_commutator}};
  emit(report);
  return kExitOk;
}

int run_support(const std::string& model_path, const std::string& rho_path,
                double rel_tol) {
  const LoadedModel loaded =
      load_for_state_command(model_path, rho_path, rel_tol);
  const qmsep::HsSpanReport spans =
      qmsep::hs_span_condition(loaded.gen, loaded.rho, rel_tol);
  const bool phi_equal =
      qmsep::phi_support_check(loaded.gen, loaded.rho, rel_tol);
  const qmsep::FbsReport fbs =
      qmsep::fbs_check(loaded.gen, loaded.rho, rel_tol);

  json report = report_skeleton("support", loaded.canonical, rel_tol);
  report["was_special"] = loaded.was_special;
  report["hs_span"] = {{"equal", spans.equal},
                       {"forward_dim", spans.forward_dim},
                       {"backward_dim", spans.backward_dim}};
  report["phi_supports_equal"] = phi_equal;
  report["fbs"] = {{"holds", fbs.holds},
                   {"method", fbs.method},
                   {"details", fbs.details}};
  emit(report);
  return kExitOk;
}

qmsep::RVec parse_h_diag(const std::vector<double>& h, int n,
                         const char* who) {
  if (h.empty()) return qmsep::RVec();
  if (static_cast<int>(h.size()) != n) {
    throw std::invalid_argument(std::string(who) +
                                ": --h must have exactly " +
                                std::to_string(n) + " entries");
  }
  return Eigen::Map<const qmsep::RVec>(h.data(), h.size());
}

qmsep::RMat parse_gamma(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream row_stream(text);
  std::string row_text;
  while (std::getline(row_stream, row_text, ';')) {
    std::vector<double> row;
    std::stringstream entry_stream(row_text);
    std::string entry;
    while (std::getline(entry_stream, entry, ',')) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(entry, &used);
      } catch (const std::exception&) {
        throw std::invalid_argument("--gamma: cannot parse entry \"" + entry +
                                    "\"");
      }
      if (used != entry.size()) {
        throw std::invalid_argument("--gamma: trailing junk in entry \"" +
                                    entry + "\"");
      }
      row.push_back(value);
    }
    rows.push_back(std::move(row));
  }
  const int n = static_cast<int>(rows.size());
  if (n < 2) {
    throw std::invalid_argument(
        "--gamma: expected at least two semicolon-separated rows");
  }
  qmsep::RMat gamma(n, n);
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(rows[r].size()) != n) {
      throw std::invalid_argument("--gamma: row " + std::to_string(r) +
                                  " has " + std::to_string(rows[r].size()) +
                                  " entries, expected " + std::to_string(n));
    }
    for (int c = 0; c < n; ++c) gamma(r, c) = rows[r][c];
  }
  return gamma;
}

int write_generated(const qmsep::io::ModelFile& file, const std::string& out,
                    double rel_tol) {
  qmsep::io::save_model(file, out);
  json report = report_skeleton("gen", qmsep::io::model_to_json(file), rel_tol);
  report["out"] = out;
  report["dim"] = file.dim;
  report["num_jumps"] = static_cast<int>(file.L.size());
  emit(report);
  return kExitOk;
}

qmsep::io::ModelFile model_file_from(const qmsep::GkslGenerator& gen,
                                     const std::optional<qmsep::Mat>& rho,
                                     std::map<std::string, std::string> meta) {
  qmsep::io::ModelFile file;
  file.dim = gen.dim;
  file.H = gen.H;
  file.L = gen.jumps;
  file.rho = rho;
  file.metadata = std::move(meta);
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Entropy production and detailed-balance analysis of "
      "finite-dimensional quantum Markov semigroups"};
  app.require_subcommand(1);

  std::string model_path;
  std::string rho_path;
  std::vector<double> limit_check;
  std::string csv_path;

  CLI::App* validate =
      app.add_subcommand("validate", "Parse and sanity-check a model file");
  validate->add_option("model", model_path, "model JSON file")->required();

  CLI::App* invariant = app.add_subcommand(
      "invariant", "Invariant states of the semigroup (kernel of the "
                   "pre-adjoint generator)");
  invariant->add_option("model", model_path, "model JSON file")->required();

  CLI::App* ep = app.add_subcommand(
      "ep", "Entropy production rate of the semigroup at its invariant state");
  ep->add_option("model", model_path, "model JSON file")->required();
  ep->add_option("--rho", rho_path, "reference state JSON file");
  ep->add_option("--limit-check", limit_check,
                 "comma-separated times t for difference-quotient samples")
      ->delimiter(',');
  ep->add_option("--csv", csv_path,
                 "write limit-check samples as CSV (t,S,S_over_t)");

  CLI::App* balance = app.add_subcommand(
      "balance", "Standard quantum detailed-balance certificates");
  balance->add_option("model", model_path, "model JSON file")->required();
  balance->add_option("--rho", rho_path, "reference state JSON file");

  CLI::App* support = app.add_subcommand(
      "support", "Support and span conditions behind the finiteness gate");
  support->add_option("model", model_path, "model JSON file")->required();
  support->add_option("--rho", rho_path, "reference state JSON file");

  CLI::App* gen = app.add_subcommand("gen", "Generate a bundled model file");
  gen->require_subcommand(1);
  std::string out_path;
  int cycle_n = 3;
  double cycle_lambda = 1.0;
  double cycle_mu = 1.0;
  std::vector<double> h_diag;
  CLI::App* gen_cycle = gen->add_subcommand(
      "cycle", "Shift-driven cycle model with forward/backward rates");
  // Long-only help: the short -h would shadow the --h option below.
  gen_cycle->set_help_flag("--help", "print this help message and exit");
  gen_cycle->add_option("--n", cycle_n, "dimension (>= 3)");
  gen_cycle->add_option("--lambda", cycle_lambda, "forward rate (> 0)");
  gen_cycle->add_option("--mu", cycle_mu, "backward rate (> 0)");
  gen_cycle->add_option("--h", h_diag, "diagonal Hamiltonian entries")
      ->delimiter(',');
  gen_cycle->add_option("--out", out_path, "output model file")->required();

  std::string gamma_text;
  CLI::App* gen_generic = gen->add_subcommand(
      "generic", "Diagonal-drift model from a classical rate matrix");
  gen_generic->set_help_flag("--help", "print this help message and exit");
  gen_generic
      ->add_option("--gamma", gamma_text,
                   "rate matrix, rows separated by ';', entries by ','")
      ->required();
  gen_generic->add_option("--h", h_diag, "diagonal Hamiltonian entries")
      ->delimiter(',');
  gen_generic->add_option("--out", out_path, "output model file")->required();

  double kappa = 1.0;
  CLI::App* gen_twolevel = gen->add_subcommand(
      "twolevel", "Two-level model with raising/lowering jumps");
  gen_twolevel->add_option("--kappa", kappa, "Hamiltonian coupling (!= 0)");
  gen_twolevel->add_option("--out", out_path, "output model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    const double rel_tol = qmsep::io::env_rel_tol();
    if (*validate) return run_validate(model_path, rel_tol);
    if (*invariant) return run_invariant(model_path, rel_tol);
    if (*ep) return run_ep(model_path, rho_path, limit_check, csv_path,
                           rel_tol);
    if (*balance) return run_balance(model_path, rho_path, rel_tol);
    if (*support) return run_support(model_path, rho_path, rel_tol);
    if (*gen_cycle) {
      qmsep::CycleSpec spec;
      spec.n = cycle_n;
      spec.lambda = cycle_lambda;
      spec.mu = cycle_mu;
      spec.h_diag = parse_h_diag(h_diag, cycle_n, "gen cycle");
      const auto [model, rho] = qmsep::cycle_model(spec, rel_tol);
      return write_generated(
          model_file_from(model, rho.mat,
                          {{"family", "cycle"},
                           {"n", std::to_string(spec.n)},
                           {"lambda", std::to_string(spec.lambda)},
                           {"mu", std::to_string(spec.mu)}}),
          out_path, rel_tol);
    }
    if (*gen_generic) {
      qmsep::GenericSpec spec;
      spec.gamma = parse_gamma(gamma_text);
      spec.n = static_cast<int>(spec.gamma.rows());
      spec.h_diag = parse_h_diag(h_diag, spec.n, "gen generic");
      const qmsep::GkslGenerator model = qmsep::generic_model(spec, rel_tol);
      // Embed the chain's stationary state when it is unique and faithful;
      // otherwise leave the choice to the caller.
      std::optional<qmsep::Mat> rho;
      try {
        const qmsep::RVec pi = qmsep::classical_stationary(spec.gamma, rel_tol);
        if (pi.minCoeff() > qmsep::kDefaultRelTol) {
          rho = qmsep::Mat(pi.cast<qmsep::Cplx>().asDiagonal());
        }
      } catch (const std::invalid_argument&) {
      }
      return write_generated(
          model_file_from(model, rho, {{"family", "generic"}}), out_path,
          rel_tol);
    }
    if (*gen_twolevel) {
      const auto [model, rho] = qmsep::two_level_model(kappa, rel_tol);
      return write_generated(
          model_file_from(model, rho.mat,
                          {{"family", "twolevel"},
                           {"kappa", std::to_string(kappa)}}),
          out_path, rel_tol);
    }
    std::cerr << "qmsep: error: no subcommand executed\n";
    return kExitValidation;
  } catch (const qmsep::NumericalInconsistency& e) {
    std::cerr << "qmsep: numerical inconsistency: " << e.what() << "\n";
    return kExitInconsistency;
  } catch (const std::invalid_argument& e) {
    std::cerr << "qmsep: error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "qmsep: error: " << e.what() << "\n";
    return kExitValidation;
  }
}
