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

#include "clickstat/serialization.h"

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "clickstat/errors.h"
#include "internal.h"

namespace clickstat {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& what) {
  require(j.is_object(), ErrorKind::kConfig, what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    require(allowed.count(key) > 0, ErrorKind::kConfig,
            "unknown key '" + key + "' in " + what);
  }
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& what) {
  require(j.contains(key), ErrorKind::kConfig, what + " is missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::kConfig, "'" + key + "' in " + what + " has the wrong type");
  }
}

template <typename T>
T get_field_or(const json& j, const std::string& key, T fallback, const std::string& what) {
  return j.contains(key) ? get_field<T>(j, key, what) : fallback;
}

}  // namespace

JointDistribution build_state(const StateSpec& spec) {
  switch (spec.kind) {
    case StateKind::kHeralded:
      return heralded_split_state(spec.tau, spec.truncation);
    case StateKind::kMultithermalSplit: {
      const Marginal m = multithermal_marginal(spec.thermal, spec.truncation);
      JointDistribution d = split_on_beamsplitter(m.values, spec.tau, spec.truncation, m.leakage);
      return spec.renormalize ? d.renormalized() : d;
    }
    case StateKind::kCustom: {
      JointDistribution d(spec.modes, spec.truncation, spec.values, spec.leakage);
      return spec.renormalize ? d.renormalized() : d;
    }
  }
  fail(ErrorKind::kConfig, "unknown state kind");
}

json state_spec_to_json(const StateSpec& spec) {
  json j;
  switch (spec.kind) {
    case StateKind::kHeralded:
      j["kind"] = "heralded";
      j["tau"] = spec.tau;
      break;
    case StateKind::kMultithermalSplit:
      j["kind"] = "multithermal_split";
      j["mean_photons"] = spec.thermal.mean_photons;
      j["num_modes"] = spec.thermal.num_modes;
      j["tau"] = spec.tau;
      j["renormalize"] = spec.renormalize;
      break;
    case StateKind::kCustom:
      j["kind"] = "custom";
      j["modes"] = spec.modes;
      j["values"] = spec.values;
      j["leakage"] = spec.leakage;
      j["renormalize"] = spec.renormalize;
      break;
  }
  j["truncation"] = spec.truncation;
  return j;
}

StateSpec state_spec_from_json(const json& j) {
  const std::string what = "state";
  require(j.is_object(), ErrorKind::kConfig, "state must be a JSON object");
  const std::string kind = get_field<std::string>(j, "kind", what);
  StateSpec spec;
  spec.truncation = get_field<int>(j, "truncation", what);
  if (kind == "heralded") {
    reject_unknown_keys(j, {"kind", "tau", "truncation"}, what);
    spec.kind = StateKind::kHeralded;
    spec.tau = get_field<double>(j, "tau", what);
  } else if (kind == "multithermal_split") {
    reject_unknown_keys(j, {"kind", "mean_photons", "num_modes", "tau", "truncation", "renormalize"},
                        what);
    spec.kind = StateKind::kMultithermalSplit;
    spec.thermal.mean_photons = get_field<double>(j, "mean_photons", what);
    spec.thermal.num_modes = get_field<double>(j, "num_modes", what);
    spec.tau = get_field<double>(j, "tau", what);
    spec.renormalize = get_field_or<bool>(j, "renormalize", false, what);
  } else if (kind == "custom") {
    reject_unknown_keys(j, {"kind", "modes", "truncation", "values", "leakage", "renormalize"},
                        what);
    spec.kind = StateKind::kCustom;
    spec.modes = get_field<int>(j, "modes", what);
    spec.values = get_field<std::vector<double>>(j, "values", what);
    spec.leakage = get_field_or<double>(j, "leakage", 0.0, what);
    spec.renormalize = get_field_or<bool>(j, "renormalize", false, what);
  } else {
    fail(ErrorKind::kConfig,
         "state kind must be heralded, multithermal_split or custom, got '" + kind + "'");
  }
  return spec;
}

json distribution_to_json(const JointDistribution& dist) {
  json j;
  j["modes"] = dist.modes();
  j["truncation"] = dist.truncation();
  j["leakage"] = dist.leakage();
  j["values"] = std::vector<double>(dist.values().begin(), dist.values().end());
  return j;
}

JointDistribution distribution_from_json(const json& j) {
  const std::string what = "distribution";
  reject_unknown_keys(j, {"modes", "truncation", "leakage", "values"}, what);
  return JointDistribution(get_field<int>(j, "modes", what), get_field<int>(j, "truncation", what),
                           get_field<std::vector<double>>(j, "values", what),
                           get_field_or<double>(j, "leakage", 0.0, what));
}

void write_distribution_csv(const JointDistribution& dist, std::ostream& out) {
  if (dist.modes() == 2) {
    out << "n,k";
  } else {
    for (int m = 0; m < dist.modes(); ++m) out << (m ? "," : "") << "n_" << (m + 1);
  }
  out << ",rho\n";
  std::vector<int> occ(static_cast<std::size_t>(dist.modes()));
  const auto values = dist.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    dist.indexer().unflatten(i, occ);
    for (int m = 0; m < dist.modes(); ++m) out << (m ? "," : "") << occ[static_cast<std::size_t>(m)];
    out << ',' << internal::format_double(values[i]) << '\n';
  }
}

json record_to_json(const ClickRecord& record) {
  record.validate();
  json j;
  j["modes"] = record.modes;
  j["etas"] = std::vector<double>(record.grid.etas().begin(), record.grid.etas().end());
  std::vector<std::string> labels;
  for (std::size_t p = 0; p < pattern_count(record.modes); ++p) {
    labels.push_back(pattern_label(static_cast<ClickPattern>(p), record.modes));
  }
  j["patterns"] = labels;
  j["counts"] = record.counts;
  j["runs"] = record.runs;
  j["rng"] = record.rng_algorithm;
  j["seed"] = record.seed;
  return j;
}

ClickRecord record_from_json(const json& j) {
  const std::string what = "click record";
  reject_unknown_keys(j, {"modes", "etas", "patterns", "counts", "runs", "rng", "seed"}, what);
  ClickRecord record;
  record.modes = get_field<int>(j, "modes", what);
  record.grid = EfficiencyGrid(get_field<std::vector<double>>(j, "etas", what));
  const auto labels = get_field<std::vector<std::string>>(j, "patterns", what);
  require(labels.size() == pattern_count(record.modes), ErrorKind::kInput,
          "click record must list all 2^M patterns");
  for (std::size_t p = 0; p < labels.size(); ++p) {
    require(labels[p] == pattern_label(static_cast<ClickPattern>(p), record.modes),
            ErrorKind::kInput, "click record patterns must be in binary order");
  }
  record.counts = get_field<std::vector<std::vector<std::uint64_t>>>(j, "counts", what);
  record.runs = get_field<std::vector<std::uint64_t>>(j, "runs", what);
  record.rng_algorithm = get_field_or<std::string>(j, "rng", "", what);
  record.seed = get_field_or<std::uint64_t>(j, "seed", 0, what);
  record.validate();
  return record;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kIo, "cannot parse " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

ClickRecord read_record_file(const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
    return read_record_csv(in);
  }
  const json j = read_json_file(path);
  try {
    return record_from_json(j);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfig) fail(ErrorKind::kIo, path.string() + ": " + e.what());
    throw;
  }
}

}  // namespace clickstat
