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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clickstat/joint_distribution.h"
#include "clickstat/sampler.h"
#include "clickstat/states.h"

namespace clickstat {

enum class StateKind { kHeralded, kMultithermalSplit, kCustom };

/// Declarative description of a test state, serialized as
///   {"kind": "heralded", "tau": t, "truncation": N}
///   {"kind": "multithermal_split", "mean_photons": Nbar, "num_modes": mu,
///    "tau": t, "truncation": N, "renormalize": false}
///   {"kind": "custom", "modes": M, "truncation": N, "values": [...],
///    "leakage": 0}
/// Custom values are given in flattened order (mode 1 slowest).
struct StateSpec {
  StateKind kind = StateKind::kHeralded;
  int truncation = 3;
  double tau = 0.5;
  ThermalSpec thermal;
  bool renormalize = false;
  int modes = 2;
  std::vector<double> values;
  double leakage = 0.0;
};

JointDistribution build_state(const StateSpec& spec);

nlohmann::json state_spec_to_json(const StateSpec& spec);
StateSpec state_spec_from_json(const nlohmann::json& j);

/// {"modes", "truncation", "leakage", "values"} with values flattened.
nlohmann::json distribution_to_json(const JointDistribution& dist);
JointDistribution distribution_from_json(const nlohmann::json& j);
/// "n_1,...,n_M,rho" rows ("n,k,rho" at M = 2).
void write_distribution_csv(const JointDistribution& dist, std::ostream& out);

/// {"modes", "etas", "patterns", "counts", "runs", "rng", "seed"}.
nlohmann::json record_to_json(const ClickRecord& record);
ClickRecord record_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Two-space indented JSON followed by a newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Loads a record from .json or .csv by extension.
ClickRecord read_record_file(const std::filesystem::path& path);

}  // namespace clickstat
