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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickstat/metrics.h"
#include "clickstat/sampler.h"
#include "clickstat/serialization.h"
#include "clickstat/solver.h"

namespace clickstat {

inline constexpr std::uint64_t kDefaultSeed = 2007;
inline constexpr const char* kVersion = "0.1.0";

/// Efficiency grid description. Either explicit values, or `count` values
/// spaced uniformly from eta_min to eta_max.
struct GridSpec {
  double eta_min = 0.0;
  double eta_max = 0.0;
  int count = 0;
  std::vector<double> etas;

  EfficiencyGrid build() const;
  nlohmann::json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

struct Preset {
  std::string name;
  std::string description;
  StateSpec state;
  GridSpec grid;
  std::uint64_t runs = 0;
};

const std::vector<Preset>& presets();
/// Throws kConfig listing the known names if `name` is unknown.
const Preset& find_preset(const std::string& name);

struct SimulateConfig {
  std::string preset;  // informational once resolved
  StateSpec state;
  GridSpec grid;
  std::uint64_t runs = 100000;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;

  /// Accepts {"preset": name, "state": {...}, "grid": {...}, "runs", "seed"};
  /// explicit keys override the preset. Simulation manifests are accepted.
  static SimulateConfig from_json(const nlohmann::json& j);
  static SimulateConfig from_preset(const std::string& name);
  nlohmann::json to_manifest() const;
};

struct SimulationResult {
  ClickRecord record;
  JointDistribution truth;
  nlohmann::json manifest;
};

SimulationResult simulate(const SimulateConfig& config);
/// record.json, record.csv, truth.json, manifest.json.
void write_simulation(const SimulationResult& result, const std::filesystem::path& out_dir);

/// Optional reference state for the reconstruction summary.
struct ReferenceSpec {
  enum class Kind { kNone, kHeralded, kMultithermal };
  Kind kind = Kind::kNone;
  double tau = 0.5;
  ThermalSpec thermal;

  nlohmann::json to_json() const;
  static ReferenceSpec from_json(const nlohmann::json& j);
  /// A simulation manifest's state as a reference (heralded / multithermal).
  static ReferenceSpec from_state(const StateSpec& state);
};

struct ReconstructConfig {
  int truncation = 3;
  SolverOptions solver;
  ReferenceSpec reference;
  int bootstrap_reps = 0;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;

  /// Keys: truncation, solver{rows,max_iterations,patience,epsilon_threshold},
  /// reference{...}, bootstrap{reps,seed}. Reconstruction manifests are
  /// accepted.
  static ReconstructConfig from_json(const nlohmann::json& j);
  nlohmann::json to_manifest() const;
};

struct ReconstructionResult {
  ReconstructionTrace trace;
  std::optional<BootstrapResult> bootstrap;
  nlohmann::json summary;
  nlohmann::json manifest;
};

ReconstructionResult reconstruct_record(const ClickRecord& record, const ReconstructConfig& config);
/// trace.csv, distribution.json, distribution.csv, summary.json,
/// uncertainty.csv (with bootstrap), manifest.json.
void write_reconstruction(const ReconstructionResult& result, const std::filesystem::path& out_dir);

/// Per-mode photon distributions over 0..N of the state a reference
/// describes, with the mass each loses above N.
std::vector<Marginal> reference_marginals(const ReferenceSpec& reference, int truncation);

struct ReproduceConfig {
  std::string figure;  // "fig2" or "fig3"
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::uint64_t> runs;  // overrides the preset run count
  int bootstrap_reps = 20;
  unsigned threads = 1;
};

/// Runs the figure pipeline and writes plot-ready CSVs plus summary.json
/// into out_dir. Returns the summary.
nlohmann::json reproduce(const ReproduceConfig& config, const std::filesystem::path& out_dir);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick self-checks of the library invariants on randomized small instances.
std::vector<ValidationCheck> run_validation(std::uint64_t seed);

}  // namespace clickstat
