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

#include "clickstat/pipeline.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "clickstat/errors.h"
#include "clickstat/states.h"
#include "internal.h"

namespace clickstat {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  require(j.is_object(), ErrorKind::kConfig, what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    require(allowed.count(key) > 0, ErrorKind::kConfig, "unknown key '" + key + "' in " + what);
  }
}

template <typename T>
T read(const json& j, const std::string& key, const std::string& what) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::kConfig, "'" + key + "' in " + what + " is missing or has the wrong type");
  }
}

std::string rows_name(EmRows rows) {
  return rows == EmRows::kAllPatterns ? "all-patterns" : "explicit-patterns";
}

EmRows parse_rows(const std::string& s) {
  if (s == "all-patterns") return EmRows::kAllPatterns;
  if (s == "explicit-patterns") return EmRows::kExplicitPatterns;
  fail(ErrorKind::kConfig, "solver rows must be 'all-patterns' or 'explicit-patterns'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::kIo, "cannot create output directory " + dir.string());
}

template <typename Writer>
std::string to_text(Writer&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

Preset heralded_preset(const std::string& name, double tau, const std::string& description) {
  Preset p;
  p.name = name;
  p.description = description;
  p.state.kind = StateKind::kHeralded;
  p.state.tau = tau;
  p.state.truncation = 3;
  p.grid.eta_min = 0.015;
  p.grid.eta_max = 0.325;
  p.grid.count = 34;
  p.runs = 100000;
  return p;
}

// Largest photon-number cell with n + k >= 2 of a two-mode distribution.
double multiphoton_max(const JointDistribution& d) {
  double worst = 0.0;
  for (int n = 0; n <= d.truncation(); ++n) {
    for (int k = 0; k <= d.truncation(); ++k) {
      if (n + k >= 2) worst = std::max(worst, d(n, k));
    }
  }
  return worst;
}

double ratio_01_10(std::span<const double> values, int truncation) {
  const std::size_t stride = static_cast<std::size_t>(truncation) + 1;
  const double den = values[stride];
  return den > 0.0 ? values[1] / den : std::numeric_limits<double>::quiet_NaN();
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid and presets

EfficiencyGrid GridSpec::build() const {
  if (!etas.empty()) return EfficiencyGrid(etas);
  return EfficiencyGrid::uniform(eta_min, eta_max, count);
}

json GridSpec::to_json() const {
  json j;
  const EfficiencyGrid grid = build();
  if (etas.empty()) {
    j["spacing"] = "uniform";
    j["eta_min"] = eta_min;
    j["eta_max"] = eta_max;
    j["count"] = count;
  } else {
    j["spacing"] = "explicit";
  }
  j["etas"] = std::vector<double>(grid.etas().begin(), grid.etas().end());
  return j;
}

GridSpec GridSpec::from_json(const json& j) {
  const std::string what = "grid";
  reject_unknown(j, {"spacing", "eta_min", "eta_max", "count", "etas"}, what);
  GridSpec g;
  const std::string spacing =
      j.contains("spacing") ? read<std::string>(j, "spacing", what)
                            : (j.contains("etas") ? "explicit" : "uniform");
  if (spacing == "uniform") {
    g.eta_min = read<double>(j, "eta_min", what);
    g.eta_max = read<double>(j, "eta_max", what);
    g.count = read<int>(j, "count", what);
    g.build();
  } else if (spacing == "explicit") {
    g.etas = read<std::vector<double>>(j, "etas", what);
    g.build();
  } else {
    fail(ErrorKind::kConfig, "grid spacing must be 'uniform' or 'explicit'");
  }
  return g;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> kPresets = [] {
    std::vector<Preset> out;
    out.push_back(heralded_preset("heralded-balanced", 0.5,
                                  "heralded single photon on a balanced splitter"));
    out.push_back(heralded_preset("heralded-unbalanced", 0.4,
                                  "heralded single photon on a tau = 0.4 splitter"));
    Preset m;
    m.name = "multithermal-split";
    m.description = "multithermal light (mu = 1000) on a balanced splitter";
    m.state.kind = StateKind::kMultithermalSplit;
    m.state.tau = 0.5;
    m.state.thermal = ThermalSpec{0.5, 1000.0};
    m.state.truncation = 8;
    m.grid.eta_min = 0.05;
    m.grid.eta_max = 0.25;
    m.grid.count = 35;
    m.runs = 1000000;
    out.push_back(m);
    return out;
  }();
  return kPresets;
}

const Preset& find_preset(const std::string& name) {
  std::string known;
  for (const Preset& p : presets()) {
    if (p.name == name) return p;
    known += (known.empty() ? "" : ", ") + p.name;
  }
  fail(ErrorKind::kConfig, "unknown preset '" + name + "' (known: " + known + ")");
}

// ---------------------------------------------------------------------------
// simulate

SimulateConfig SimulateConfig::from_preset(const std::string& name) {
  const Preset& p = find_preset(name);
  SimulateConfig c;
  c.preset = p.name;
  c.state = p.state;
  c.grid = p.grid;
  c.runs = p.runs;
  return c;
}

SimulateConfig SimulateConfig::from_json(const json& j) {
  const std::string what = "simulate config";
  reject_unknown(j, {"command", "version", "preset", "state", "grid", "runs", "seed", "rng"}, what);
  if (j.contains("command")) {
    require(read<std::string>(j, "command", what) == "simulate", ErrorKind::kConfig,
            "manifest is not a simulate manifest");
  }
  if (j.contains("rng")) {
    require(read<std::string>(j, "rng", what) == kRngAlgorithm, ErrorKind::kConfig,
            "manifest was produced with a different RNG algorithm");
  }
  SimulateConfig c;
  const bool has_preset = j.contains("preset") && !j.at("preset").is_null();
  if (has_preset) {
    c = from_preset(read<std::string>(j, "preset", what));
  } else {
    require(j.contains("state") && j.contains("grid"), ErrorKind::kConfig,
            "simulate config needs a 'preset' or both 'state' and 'grid'");
  }
  if (j.contains("state")) c.state = state_spec_from_json(j.at("state"));
  if (j.contains("grid")) c.grid = GridSpec::from_json(j.at("grid"));
  if (j.contains("runs")) c.runs = read<std::uint64_t>(j, "runs", what);
  if (j.contains("seed")) c.seed = read<std::uint64_t>(j, "seed", what);
  return c;
}

json SimulateConfig::to_manifest() const {
  json j;
  j["command"] = "simulate";
  j["version"] = kVersion;
  j["preset"] = preset.empty() ? json(nullptr) : json(preset);
  j["state"] = state_spec_to_json(state);
  j["grid"] = grid.to_json();
  j["runs"] = runs;
  j["seed"] = seed;
  j["rng"] = kRngAlgorithm;
  return j;
}

SimulationResult simulate(const SimulateConfig& config) {
  require(config.runs >= 1, ErrorKind::kConfig, "runs must be >= 1");
  const EfficiencyGrid grid = config.grid.build();
  JointDistribution truth = build_state(config.state);
  const ClickProbabilities probs = forward_click_probabilities(truth, grid);
  ClickRecord record = sample_clicks(probs, config.runs, config.seed, config.threads);
  return SimulationResult{std::move(record), std::move(truth), config.to_manifest()};
}

void write_simulation(const SimulationResult& result, const fs::path& out_dir) {
  ensure_dir(out_dir);
  write_json_file(out_dir / "record.json", record_to_json(result.record));
  write_text_file(out_dir / "record.csv",
                  to_text([&](std::ostream& o) { write_record_csv(result.record, o); }));
  write_json_file(out_dir / "truth.json", distribution_to_json(result.truth));
  write_json_file(out_dir / "manifest.json", result.manifest);
}

// ---------------------------------------------------------------------------
// reconstruct

json ReferenceSpec::to_json() const {
  json j;
  switch (kind) {
    case Kind::kNone:
      j["kind"] = "none";
      break;
    case Kind::kHeralded:
      j["kind"] = "heralded";
      j["tau"] = tau;
      break;
    case Kind::kMultithermal:
      j["kind"] = "multithermal";
      j["tau"] = tau;
      j["mean_photons"] = thermal.mean_photons;
      j["num_modes"] = thermal.num_modes;
      break;
  }
  return j;
}

ReferenceSpec ReferenceSpec::from_json(const json& j) {
  const std::string what = "reference";
  ReferenceSpec r;
  const std::string kind = read<std::string>(j, "kind", what);
  if (kind == "none") {
    reject_unknown(j, {"kind"}, what);
  } else if (kind == "heralded") {
    reject_unknown(j, {"kind", "tau"}, what);
    r.kind = Kind::kHeralded;
    r.tau = read<double>(j, "tau", what);
    require(r.tau > 0.0 && r.tau < 1.0, ErrorKind::kConfig, "reference tau must lie in (0, 1)");
  } else if (kind == "multithermal") {
    reject_unknown(j, {"kind", "tau", "mean_photons", "num_modes"}, what);
    r.kind = Kind::kMultithermal;
    r.tau = read<double>(j, "tau", what);
    r.thermal.mean_photons = read<double>(j, "mean_photons", what);
    r.thermal.num_modes = read<double>(j, "num_modes", what);
    r.thermal.validate();
  } else {
    fail(ErrorKind::kConfig, "reference kind must be none, heralded or multithermal");
  }
  return r;
}

ReferenceSpec ReferenceSpec::from_state(const StateSpec& state) {
  ReferenceSpec r;
  r.tau = state.tau;
  if (state.kind == StateKind::kHeralded) {
    r.kind = Kind::kHeralded;
  } else if (state.kind == StateKind::kMultithermalSplit) {
    r.kind = Kind::kMultithermal;
    r.thermal = state.thermal;
  }
  return r;
}

std::vector<Marginal> reference_marginals(const ReferenceSpec& reference, int truncation) {
  std::vector<Marginal> out;
  const std::size_t levels = static_cast<std::size_t>(truncation) + 1;
  switch (reference.kind) {
    case ReferenceSpec::Kind::kNone:
      break;
    case ReferenceSpec::Kind::kHeralded: {
      require(truncation >= 1, ErrorKind::kTruncation, "heralded reference needs N >= 1");
      // rho_01 = tau: mode 1 is empty with probability tau.
      Marginal m1{std::vector<double>(levels, 0.0), 0.0};
      Marginal m2 = m1;
      m1.values[0] = reference.tau;
      m1.values[1] = 1.0 - reference.tau;
      m2.values[0] = 1.0 - reference.tau;
      m2.values[1] = reference.tau;
      out = {m1, m2};
      break;
    }
    case ReferenceSpec::Kind::kMultithermal: {
      ThermalSpec first = reference.thermal;
      ThermalSpec second = reference.thermal;
      first.mean_photons *= reference.tau;
      second.mean_photons *= 1.0 - reference.tau;
      out.push_back(multithermal_marginal(first, truncation));
      out.push_back(multithermal_marginal(second, truncation));
      break;
    }
  }
  return out;
}

ReconstructConfig ReconstructConfig::from_json(const json& j) {
  const std::string what = "reconstruct config";
  reject_unknown(j, {"command", "version", "truncation", "solver", "reference", "bootstrap"}, what);
  if (j.contains("command")) {
    require(read<std::string>(j, "command", what) == "reconstruct", ErrorKind::kConfig,
            "manifest is not a reconstruct manifest");
  }
  ReconstructConfig c;
  if (j.contains("truncation")) c.truncation = read<int>(j, "truncation", what);
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    reject_unknown(s, {"rows", "max_iterations", "patience", "epsilon_threshold", "initial"},
                   "solver");
    if (s.contains("rows")) c.solver.rows = parse_rows(read<std::string>(s, "rows", "solver"));
    if (s.contains("max_iterations")) {
      c.solver.max_iterations = read<int>(s, "max_iterations", "solver");
    }
    if (s.contains("patience")) c.solver.patience = read<int>(s, "patience", "solver");
    if (s.contains("epsilon_threshold")) {
      c.solver.epsilon_threshold = read<double>(s, "epsilon_threshold", "solver");
    }
    if (s.contains("initial")) {
      require(read<std::string>(s, "initial", "solver") == "uniform", ErrorKind::kConfig,
              "only the uniform initial distribution is configurable from files");
    }
  }
  if (j.contains("reference")) c.reference = ReferenceSpec::from_json(j.at("reference"));
  if (j.contains("bootstrap")) {
    const json& b = j.at("bootstrap");
    reject_unknown(b, {"reps", "seed"}, "bootstrap");
    if (b.contains("reps")) c.bootstrap_reps = read<int>(b, "reps", "bootstrap");
    if (b.contains("seed")) c.seed = read<std::uint64_t>(b, "seed", "bootstrap");
  }
  require(c.truncation >= 0, ErrorKind::kConfig, "truncation must be >= 0");
  require(c.bootstrap_reps == 0 || c.bootstrap_reps >= 2, ErrorKind::kConfig,
          "bootstrap reps must be 0 (off) or >= 2");
  return c;
}

json ReconstructConfig::to_manifest() const {
  json j;
  j["command"] = "reconstruct";
  j["version"] = kVersion;
  j["truncation"] = truncation;
  j["solver"] = {{"rows", rows_name(solver.rows)},
                 {"max_iterations", solver.max_iterations},
                 {"patience", solver.patience},
                 {"epsilon_threshold", solver.epsilon_threshold},
                 {"initial", "uniform"}};
  j["reference"] = reference.to_json();
  j["bootstrap"] = {{"reps", bootstrap_reps}, {"seed", seed}};
  return j;
}

ReconstructionResult reconstruct_record(const ClickRecord& record, const ReconstructConfig& config) {
  ReconstructionResult result{reconstruct(record, config.truncation, config.solver), std::nullopt,
                              json::object(), config.to_manifest()};
  const JointDistribution& rho = result.trace.result();

  if (config.bootstrap_reps > 0) {
    BootstrapOptions b;
    b.reps = config.bootstrap_reps;
    b.seed = config.seed;
    b.solver = config.solver;
    b.threads = config.threads;
    result.bootstrap = bootstrap_uncertainty(record, config.truncation, b);
  }

  json& s = result.summary;
  const auto best = static_cast<std::size_t>(result.trace.best_iteration);
  s["stop_reason"] = stop_reason_name(result.trace.stop_reason);
  s["iterations"] = result.trace.iterations;
  s["best_iteration"] = result.trace.best_iteration;
  s["best_epsilon"] = result.trace.epsilon[best];
  s["loglik_at_best"] = result.trace.loglik[best];
  s["mass_before_renormalization"] = result.trace.mass_before_renormalization;
  s["renormalization_correction"] = 1.0 - result.trace.mass_before_renormalization;

  json marginals = json::array();
  std::vector<std::vector<double>> recon_marginals;
  for (int m = 0; m < rho.modes(); ++m) {
    recon_marginals.push_back(marginal(rho, m));
    marginals.push_back(recon_marginals.back());
  }
  s["marginals"] = marginals;

  if (rho.modes() == 2 && rho.truncation() >= 1) {
    json ratio;
    ratio["value"] = ratio_01_10(rho.values(), rho.truncation());
    if (result.bootstrap) {
      std::vector<double> ratios;
      for (const auto& rep : result.bootstrap->replicates) {
        ratios.push_back(ratio_01_10(rep, rho.truncation()));
      }
      ratio["sigma"] = sample_std(ratios);
    }
    s["ratio_01_10"] = ratio;
    s["multiphoton_max"] = multiphoton_max(rho);
  }

  const std::vector<Marginal> refs = reference_marginals(config.reference, config.truncation);
  if (!refs.empty() && static_cast<int>(refs.size()) == rho.modes()) {
    json fids = json::array();
    for (std::size_t m = 0; m < refs.size(); ++m) {
      const FidelityReport f = normalized_fidelity(recon_marginals[m], refs[m].values);
      fids.push_back({{"mode", m + 1}, {"fidelity", f.fidelity},
                      {"reference_leakage", refs[m].leakage}});
    }
    s["marginal_fidelity"] = fids;
  }

  if (result.bootstrap) {
    json failures = json::array();
    for (const auto& f : result.bootstrap->failures) {
      failures.push_back({{"replicate", f.replicate}, {"message", f.message}});
    }
    s["bootstrap"] = {{"reps", config.bootstrap_reps},
                      {"succeeded", result.bootstrap->succeeded},
                      {"failures", failures}};
  }
  return result;
}

void write_reconstruction(const ReconstructionResult& result, const fs::path& out_dir) {
  ensure_dir(out_dir);
  const JointDistribution& rho = result.trace.result();
  write_text_file(out_dir / "trace.csv",
                  to_text([&](std::ostream& o) { write_trace_csv(result.trace, o); }));
  write_json_file(out_dir / "distribution.json", distribution_to_json(rho));
  write_text_file(out_dir / "distribution.csv",
                  to_text([&](std::ostream& o) { write_distribution_csv(rho, o); }));
  if (result.bootstrap) {
    write_text_file(out_dir / "uncertainty.csv", to_text([&](std::ostream& o) {
                      write_uncertainty_csv(rho, result.bootstrap->sigma, o);
                    }));
  }
  write_json_file(out_dir / "summary.json", result.summary);
  write_json_file(out_dir / "manifest.json", result.manifest);
}

// ---------------------------------------------------------------------------
// reproduce

namespace {

json reproduce_fig2(const ReproduceConfig& config, const fs::path& out_dir) {
  json summary;
  summary["figure"] = "fig2";
  summary["seed"] = config.seed;
  summary["bootstrap_reps"] = config.bootstrap_reps;
  json panels = json::array();
  const std::pair<const char*, double> states[] = {{"heralded-balanced", 0.5},
                                                   {"heralded-unbalanced", 0.4}};
  std::uint64_t panel_index = 0;
  for (const auto& [preset, tau] : states) {
    for (int set = 1; set <= 2; ++set, ++panel_index) {
      SimulateConfig sim = SimulateConfig::from_preset(preset);
      sim.seed = derive_stream_seed(config.seed, panel_index);
      if (config.runs) sim.runs = *config.runs;
      sim.threads = config.threads;
      const SimulationResult data = simulate(sim);

      ReconstructConfig rc;
      rc.truncation = sim.state.truncation;
      rc.reference = ReferenceSpec::from_state(sim.state);
      rc.bootstrap_reps = config.bootstrap_reps;
      rc.seed = derive_stream_seed(sim.seed, 1);
      rc.threads = config.threads;
      const ReconstructionResult r = reconstruct_record(data.record, rc);
      const JointDistribution& rho = r.trace.result();

      std::ostringstream name;
      name << "fig2_tau" << tau << "_set" << set << ".csv";
      std::vector<double> sigma(rho.size(), 0.0);
      if (r.bootstrap) sigma = r.bootstrap->sigma;
      write_text_file(out_dir / name.str(), to_text([&](std::ostream& o) {
                        write_uncertainty_csv(rho, sigma, o);
                      }));

      // Cells outside {(0,1), (1,0)} that exceed one standard deviation.
      json outside = json::array();
      const std::size_t stride = static_cast<std::size_t>(rho.truncation()) + 1;
      for (std::size_t i = 0; i < rho.size(); ++i) {
        if (i == 1 || i == stride) continue;
        if (rho.values()[i] > sigma[i]) {
          outside.push_back({{"n", i / stride}, {"k", i % stride}, {"rho", rho.values()[i]},
                             {"sigma", sigma[i]}});
        }
      }
      json panel;
      panel["file"] = name.str();
      panel["preset"] = preset;
      panel["tau"] = tau;
      panel["filter_set"] = set;
      panel["seed"] = sim.seed;
      panel["runs"] = sim.runs;
      panel["ratio_01_10"] = r.summary.at("ratio_01_10");
      panel["expected_ratio"] = tau / (1.0 - tau);
      panel["multiphoton_max"] = r.summary.at("multiphoton_max");
      panel["cells_above_one_sigma"] = outside;
      panel["confined_within_one_sigma"] = outside.empty();
      panel["stop_reason"] = r.summary.at("stop_reason");
      panel["iterations"] = r.summary.at("iterations");
      panels.push_back(panel);
    }
  }
  summary["panels"] = panels;
  return summary;
}

json reproduce_fig3(const ReproduceConfig& config, const fs::path& out_dir) {
  SimulateConfig sim = SimulateConfig::from_preset("multithermal-split");
  sim.seed = config.seed;
  if (config.runs) sim.runs = *config.runs;
  sim.threads = config.threads;
  const SimulationResult data = simulate(sim);

  const int truncation = sim.state.truncation;
  const ReferenceSpec reference = ReferenceSpec::from_state(sim.state);
  const std::vector<Marginal> refs = reference_marginals(reference, truncation);
  const FockIndexer indexer(2, truncation);

  struct Row {
    double f1, f2, eps;
  };
  std::vector<Row> rows;
  SolverOptions solver;
  solver.observer = [&](int, std::span<const double> q, double eps) {
    std::vector<double> m1(static_cast<std::size_t>(truncation) + 1, 0.0), m2 = m1;
    const std::size_t stride = m1.size();
    for (std::size_t i = 0; i < q.size(); ++i) {
      m1[i / stride] += q[i];
      m2[i % stride] += q[i];
    }
    rows.push_back({normalized_fidelity(m1, refs[0].values).fidelity,
                    normalized_fidelity(m2, refs[1].values).fidelity, eps});
  };
  const ReconstructionTrace trace = reconstruct(data.record, truncation, solver);

  std::size_t argmax = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].f1 + rows[i].f2 > rows[argmax].f1 + rows[argmax].f2) argmax = i;
  }
  write_text_file(out_dir / "fig3_convergence.csv", to_text([&](std::ostream& o) {
                    o << "iteration,fidelity_1,fidelity_2,mean_fidelity,epsilon\n";
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      o << i << ',' << internal::format_double(rows[i].f1) << ','
                        << internal::format_double(rows[i].f2) << ','
                        << internal::format_double(0.5 * (rows[i].f1 + rows[i].f2)) << ','
                        << internal::format_double(rows[i].eps) << '\n';
                    }
                  }));

  double max_abs_z = 0.0;
  write_text_file(out_dir / "fig3_frequencies.csv", to_text([&](std::ostream& o) {
                    o << "eta,f00,f01,f10,p00,p01,p10,z00,z01,z10\n";
                    for (std::size_t e = 0; e < data.record.grid.size(); ++e) {
                      const double eta = data.record.grid[e];
                      const TwoModeClicks p =
                          multithermal_click_reference(sim.state.thermal, sim.state.tau, eta);
                      const double runs = static_cast<double>(data.record.runs[e]);
                      const double ref[3] = {p.p00, p.p01, p.p10};
                      o << internal::format_double(eta);
                      double f[3];
                      for (int b = 0; b < 3; ++b) {
                        f[b] = static_cast<double>(data.record.counts[e][static_cast<std::size_t>(b)]) / runs;
                        o << ',' << internal::format_double(f[b]);
                      }
                      for (int b = 0; b < 3; ++b) o << ',' << internal::format_double(ref[b]);
                      for (int b = 0; b < 3; ++b) {
                        const double sigma = std::sqrt(ref[b] * (1.0 - ref[b]) / runs);
                        const double z = sigma > 0.0 ? (f[b] - ref[b]) / sigma : 0.0;
                        max_abs_z = std::max(max_abs_z, std::abs(z));
                        o << ',' << internal::format_double(z);
                      }
                      o << '\n';
                    }
                  }));

  const JointDistribution& rho = trace.result();
  const std::vector<double> m1 = marginal(rho, 0), m2 = marginal(rho, 1);
  write_text_file(out_dir / "fig3_marginals.csv", to_text([&](std::ostream& o) {
                    o << "n,rho_1,rho_2,reference_1,reference_2\n";
                    for (std::size_t n = 0; n < m1.size(); ++n) {
                      o << n << ',' << internal::format_double(m1[n]) << ','
                        << internal::format_double(m2[n]) << ','
                        << internal::format_double(refs[0].values[n]) << ','
                        << internal::format_double(refs[1].values[n]) << '\n';
                    }
                  }));

  const int best = trace.best_iteration;
  const int gap = std::abs(static_cast<int>(argmax) - best);
  const int allowed = std::max(solver.patience, trace.iterations / 10);
  json s;
  s["figure"] = "fig3";
  s["seed"] = sim.seed;
  s["runs"] = sim.runs;
  s["state"] = state_spec_to_json(sim.state);
  s["iterations"] = trace.iterations;
  s["stop_reason"] = stop_reason_name(trace.stop_reason);
  s["best_epsilon_iteration"] = best;
  s["max_mean_fidelity_iteration"] = argmax;
  s["iteration_gap"] = gap;
  s["allowed_gap"] = allowed;
  s["max_fidelity_within_window"] = gap <= allowed;
  s["fidelity_at_best_epsilon"] = {rows[static_cast<std::size_t>(best)].f1,
                                   rows[static_cast<std::size_t>(best)].f2};
  s["max_mean_fidelity"] = 0.5 * (rows[argmax].f1 + rows[argmax].f2);
  s["frequency_max_abs_z"] = max_abs_z;
  s["frequencies_within_5_sigma"] = max_abs_z <= 5.0;
  return s;
}

}  // namespace

json reproduce(const ReproduceConfig& config, const fs::path& out_dir) {
  ensure_dir(out_dir);
  json summary;
  if (config.figure == "fig2") {
    summary = reproduce_fig2(config, out_dir);
  } else if (config.figure == "fig3") {
    summary = reproduce_fig3(config, out_dir);
  } else {
    fail(ErrorKind::kConfig, "figure must be fig2 or fig3, got '" + config.figure + "'");
  }
  write_json_file(out_dir / "summary.json", summary);
  return summary;
}

// ---------------------------------------------------------------------------
// validate

namespace {

// Pattern probability for one occupation by direct products of (1 - eta).
double pattern_probability_direct(const std::vector<int>& occ, ClickPattern pattern, int modes,
                                  double eta) {
  double p = 1.0;
  for (int m = 0; m < modes; ++m) {
    double silent = 1.0;
    for (int i = 0; i < occ[static_cast<std::size_t>(m)]; ++i) silent *= 1.0 - eta;
    p *= mode_clicked(pattern, m, modes) ? 1.0 - silent : silent;
  }
  return p;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) s += (x = exp1(rng));
  for (double& x : v) x /= s;
  return v;
}

EfficiencyGrid random_grid(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.02, 1.0);
  std::set<double> etas;
  while (static_cast<int>(etas.size()) < k) etas.insert(u(rng));
  return EfficiencyGrid(std::vector<double>(etas.begin(), etas.end()));
}

}  // namespace

std::vector<ValidationCheck> run_validation(std::uint64_t seed) {
  std::vector<ValidationCheck> checks;
  std::mt19937_64 rng(seed);
  const auto add = [&](std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  };

  {
    double worst = 0.0;
    for (const auto& [modes, truncation] : std::vector<std::pair<int, int>>{{2, 3}, {3, 2}}) {
      const EfficiencyGrid grid = random_grid(rng, 4);
      const DetectionMatrix b = build_matrix(grid, modes, truncation);
      FockIndexer ix(modes, truncation);
      for (std::size_t r = 0; r < b.rows(); ++r) {
        const RowLabel l = b.label(r);
        for (std::size_t c = 0; c < b.cols(); ++c) {
          const double direct =
              pattern_probability_direct(ix.unflatten(c), l.pattern, modes, grid[l.efficiency_index]);
          worst = std::max(worst, std::abs(direct - b(r, c)));
        }
      }
    }
    add("detection-matrix-vs-enumeration", worst <= 1e-12,
        "max deviation " + internal::format_double(worst));
  }

  {
    const EfficiencyGrid grid = random_grid(rng, 5);
    MatrixOptions with_complement;
    with_complement.include_all_click = true;
    const DetectionMatrix b = build_matrix(grid, 2, 3, with_complement);
    double worst = 0.0;
    for (std::size_t e = 0; e < grid.size(); ++e) {
      for (std::size_t c = 0; c < b.cols(); ++c) {
        double s = 0.0;
        for (std::size_t p = 0; p < 4; ++p) s += b(b.row_index(static_cast<ClickPattern>(p), e), c);
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
    add("pattern-columns-sum-to-one", worst <= 1e-12, "max deviation " + internal::format_double(worst));
  }

  {
    const EfficiencyGrid grid = random_grid(rng, 5);
    const DetectionMatrix b = build_matrix(grid, 2, 3);
    const std::vector<double> qstar = random_simplex(rng, b.cols());
    const std::vector<double> h = b.apply(qstar);
    const std::vector<double> next = em_step(qstar, b, h);
    double worst = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) worst = std::max(worst, std::abs(next[i] - qstar[i]));
    add("em-fixed-point", worst <= 1e-12, "max change " + internal::format_double(worst));
  }

  {
    bool monotone = true;
    bool nonnegative = true;
    std::string detail = "5 instances, 300 iterations";
    for (int inst = 0; inst < 5; ++inst) {
      const EfficiencyGrid grid = random_grid(rng, 4);
      const JointDistribution truth(2, 2, random_simplex(rng, 9));
      const ClickRecord record =
          sample_clicks(forward_click_probabilities(truth, grid), 2000, rng(), 1);
      SolverOptions opts;
      opts.max_iterations = 300;
      opts.patience = 0;
      opts.observer = [&](int, std::span<const double> q, double) {
        for (double v : q) nonnegative = nonnegative && v >= 0.0;
      };
      const ReconstructionTrace t = reconstruct(record, 2, opts);
      for (std::size_t i = 1; i < t.loglik.size(); ++i) {
        if (t.loglik[i] < t.loglik[i - 1] - 1e-10 * std::max(1.0, std::abs(t.loglik[i - 1]))) {
          monotone = false;
        }
      }
    }
    add("em-loglik-monotone", monotone, detail);
    add("em-positivity", nonnegative, detail);
  }

  {
    const ThermalSpec spec{0.5, 1000.0};
    const Marginal m = multithermal_marginal(spec, 14);
    const JointDistribution state = split_on_beamsplitter(m.values, 0.5, 14, m.leakage);
    const EfficiencyGrid grid = EfficiencyGrid::uniform(0.05, 0.25, 5);
    const ClickProbabilities g = forward_click_probabilities(state, grid);
    double worst = 0.0;
    for (std::size_t e = 0; e < grid.size(); ++e) {
      const TwoModeClicks ref = multithermal_click_reference(spec, 0.5, grid[e]);
      const double want[4] = {ref.p00, ref.p01, ref.p10, ref.p11};
      for (std::size_t p = 0; p < 4; ++p) worst = std::max(worst, std::abs(g(e, static_cast<ClickPattern>(p)) - want[p]));
    }
    add("multithermal-reference-consistency", worst <= 1e-6,
        "max deviation " + internal::format_double(worst));
  }

  {
    const ClickProbabilities probs =
        forward_click_probabilities(heralded_split_state(0.5, 2), EfficiencyGrid::uniform(0.1, 0.3, 3));
    const bool same = sample_clicks(probs, 5000, seed, 1) == sample_clicks(probs, 5000, seed, 2);
    add("sampler-determinism", same, "identical records for identical seeds and any thread count");
  }
  return checks;
}

}  // namespace clickstat
