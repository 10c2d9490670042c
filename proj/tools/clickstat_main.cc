// Copyright 2026 The clickstat Authors
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

// clickstat: simulate on/off click data, reconstruct joint photon statistics,
// regenerate figure datasets and run the invariant self-checks.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "clickstat/errors.h"
#include "clickstat/pipeline.h"
#include "clickstat/serialization.h"

namespace {

namespace fs = std::filesystem;
using clickstat::ErrorKind;

enum ExitCode : int {
  kOk = 0,
  kChecksFailed = 1,
  kConfigError = 2,
  kDataError = 3,
  kNumericalError = 4,
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kDomain:
    case ErrorKind::kTruncation:
    case ErrorKind::kResource:
      return kConfigError;
    case ErrorKind::kIo:
    case ErrorKind::kInput:
    case ErrorKind::kDimension:
      return kDataError;
    case ErrorKind::kDegenerateSupport:
    case ErrorKind::kNumerical:
      return kNumericalError;
  }
  return kConfigError;
}

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> runs;
  std::optional<int> truncation;
  std::optional<int> modes;
  std::string out_dir = "out";
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master RNG seed");
  cmd->add_option("--truncation", c.truncation, "Largest photon number per mode (N)");
  cmd->add_option("--modes", c.modes, "Expected number of modes (checked against the data)");
  cmd->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")
      ->capture_default_str();
}

int run_simulate(const std::string& preset, const std::string& config_path, const Common& c) {
  clickstat::SimulateConfig config;
  if (!config_path.empty()) {
    nlohmann::json j = clickstat::read_json_file(config_path);
    if (!preset.empty()) j["preset"] = preset;
    config = clickstat::SimulateConfig::from_json(j);
  } else {
    clickstat::require(!preset.empty(), ErrorKind::kConfig,
                       "simulate needs --preset or --config");
    config = clickstat::SimulateConfig::from_preset(preset);
  }
  if (c.seed) config.seed = *c.seed;
  if (c.runs) config.runs = *c.runs;
  if (c.truncation) config.state.truncation = *c.truncation;
  config.threads = c.threads;
  const clickstat::SimulationResult result = clickstat::simulate(config);
  if (c.modes) {
    clickstat::require(*c.modes == result.record.modes, ErrorKind::kConfig,
                       "--modes does not match the simulated state");
  }
  clickstat::write_simulation(result, c.out_dir);
  std::cout << "wrote " << result.record.grid.size() << " efficiencies x "
            << result.record.runs.front() << " runs to " << c.out_dir << "\n";
  return kOk;
}

struct ReconstructFlags {
  std::string record;
  std::string config;
  std::string reference;
  std::string reference_from;
  std::optional<double> tau;
  std::optional<double> mean_photons;
  std::optional<double> num_modes;
  std::optional<int> bootstrap;
  std::optional<int> max_iterations;
  std::optional<int> patience;
  std::optional<double> epsilon_threshold;
  std::optional<std::string> rows;
};

int run_reconstruct(const ReconstructFlags& f, const Common& c) {
  const clickstat::ClickRecord record = clickstat::read_record_file(f.record);
  if (c.modes) {
    clickstat::require(*c.modes == record.modes, ErrorKind::kConfig,
                       "--modes does not match the record");
  }
  nlohmann::json j = f.config.empty() ? nlohmann::json::object()
                                      : clickstat::read_json_file(f.config);
  if (c.truncation) j["truncation"] = *c.truncation;
  if (f.max_iterations) j["solver"]["max_iterations"] = *f.max_iterations;
  if (f.patience) j["solver"]["patience"] = *f.patience;
  if (f.epsilon_threshold) j["solver"]["epsilon_threshold"] = *f.epsilon_threshold;
  if (f.rows) j["solver"]["rows"] = *f.rows;
  if (f.bootstrap) j["bootstrap"]["reps"] = *f.bootstrap;
  if (c.seed) j["bootstrap"]["seed"] = *c.seed;
  if (!f.reference_from.empty()) {
    const auto sim = clickstat::SimulateConfig::from_json(clickstat::read_json_file(f.reference_from));
    j["reference"] = clickstat::ReferenceSpec::from_state(sim.state).to_json();
    if (!c.truncation && !j.contains("truncation")) j["truncation"] = sim.state.truncation;
  }
  if (!f.reference.empty()) {
    nlohmann::json ref = {{"kind", f.reference}};
    if (f.reference != "none") ref["tau"] = f.tau.value_or(0.5);
    if (f.reference == "multithermal") {
      clickstat::require(f.mean_photons.has_value(), ErrorKind::kConfig,
                         "--reference multithermal needs --mean-photons");
      ref["mean_photons"] = *f.mean_photons;
      ref["num_modes"] = f.num_modes.value_or(1.0);
    }
    j["reference"] = ref;
  }
  clickstat::ReconstructConfig config = clickstat::ReconstructConfig::from_json(j);
  config.threads = c.threads;

  clickstat::ReconstructionResult result;
  try {
    result = clickstat::reconstruct_record(record, config);
  } catch (const clickstat::SolverError& e) {
    if (const auto* partial = e.partial_trace()) {
      fs::create_directories(c.out_dir);
      std::ostringstream csv;
      clickstat::write_trace_csv(*partial, csv);
      clickstat::write_text_file(fs::path(c.out_dir) / "trace_partial.csv", csv.str());
      std::cerr << "partial trace (" << partial->epsilon.size() << " iterates) written to "
                << (fs::path(c.out_dir) / "trace_partial.csv").string() << "\n";
    }
    throw;
  }
  clickstat::write_reconstruction(result, c.out_dir);

  const nlohmann::json& s = result.summary;
  std::cout << "stop: " << s.at("stop_reason").get<std::string>() << " after "
            << s.at("iterations") << " iterations (best epsilon " << s.at("best_epsilon")
            << " at " << s.at("best_iteration") << ")\n";
  std::cerr << "renormalization correction applied to the final iterate: "
            << s.at("renormalization_correction") << "\n";
  if (s.contains("ratio_01_10")) {
    std::cout << "rho01/rho10 = " << s["ratio_01_10"].at("value");
    if (s["ratio_01_10"].contains("sigma")) std::cout << " +- " << s["ratio_01_10"]["sigma"];
    std::cout << "\nmax rho(n+k>=2) = " << s.at("multiphoton_max") << "\n";
  }
  if (s.contains("marginal_fidelity")) {
    for (const auto& fid : s["marginal_fidelity"]) {
      std::cout << "fidelity mode " << fid.at("mode") << " = " << fid.at("fidelity") << "\n";
    }
  }
  return kOk;
}

int run_reproduce(const std::string& figure, std::optional<int> bootstrap, const Common& c) {
  clickstat::ReproduceConfig config;
  config.figure = figure;
  if (c.seed) config.seed = *c.seed;
  config.runs = c.runs;
  if (bootstrap) config.bootstrap_reps = *bootstrap;
  config.threads = c.threads;
  const nlohmann::json summary = clickstat::reproduce(config, c.out_dir);
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int run_validate(std::uint64_t seed) {
  bool all = true;
  for (const auto& check : clickstat::run_validation(seed)) {
    std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << "\n";
    all = all && check.passed;
  }
  return all ? kOk : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint photon-number statistics from on/off detection"};
  app.require_subcommand(1);

  Common sim_common, rec_common, rep_common;
  std::string preset, sim_config;
  auto* sim = app.add_subcommand("simulate", "Simulate a click record");
  sim->add_option("--preset", preset,
                  "heralded-balanced | heralded-unbalanced | multithermal-split");
  sim->add_option("--config", sim_config, "JSON config or simulation manifest");
  sim->add_option("--runs", sim_common.runs, "Runs per efficiency");
  add_common(sim, sim_common);

  ReconstructFlags rf;
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct joint statistics from a record");
  rec->add_option("record", rf.record, "record.json or record.csv")->required();
  rec->add_option("--config", rf.config, "JSON config or reconstruction manifest");
  rec->add_option("--reference", rf.reference, "none | heralded | multithermal")
      ->check(CLI::IsMember({"none", "heralded", "multithermal"}));
  rec->add_option("--reference-from", rf.reference_from,
                  "Use the state of a simulation manifest as reference");
  rec->add_option("--tau", rf.tau, "Reference transmissivity");
  rec->add_option("--mean-photons", rf.mean_photons, "Reference multithermal mean photons");
  rec->add_option("--num-modes", rf.num_modes, "Reference multithermal mode count");
  rec->add_option("--bootstrap", rf.bootstrap, "Bootstrap replicates (0 = off)");
  rec->add_option("--max-iterations", rf.max_iterations, "EM iteration cap");
  rec->add_option("--patience", rf.patience, "Iterations without a new epsilon minimum");
  rec->add_option("--epsilon-threshold", rf.epsilon_threshold, "Stop when epsilon drops below");
  rec->add_option("--rows", rf.rows, "all-patterns | explicit-patterns")
      ->check(CLI::IsMember({"all-patterns", "explicit-patterns"}));
  add_common(rec, rec_common);

  std::string figure;
  std::optional<int> rep_bootstrap;
  auto* rep = app.add_subcommand("reproduce", "Regenerate a figure dataset");
  rep->add_option("figure", figure, "fig2 | fig3")->required()->check(CLI::IsMember({"fig2", "fig3"}));
  rep->add_option("--runs", rep_common.runs, "Override runs per efficiency");
  rep->add_option("--bootstrap", rep_bootstrap, "Bootstrap replicates for fig2 error bars");
  add_common(rep, rep_common);

  std::uint64_t validate_seed = clickstat::kDefaultSeed;
  auto* val = app.add_subcommand("validate", "Run the invariant self-checks");
  val->add_option("--seed", validate_seed, "Seed for the randomized instances")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (sim->parsed()) return run_simulate(preset, sim_config, sim_common);
    if (rec->parsed()) return run_reconstruct(rf, rec_common);
    if (rep->parsed()) return run_reproduce(figure, rep_bootstrap, rep_common);
    if (val->parsed()) return run_validate(validate_seed);
  } catch (const clickstat::Error& e) {
    std::cerr << "error (" << clickstat::error_kind_name(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
