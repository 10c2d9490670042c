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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. INFO lines carry supporting numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "clickstat/detection.h"
#include "clickstat/metrics.h"
#include "clickstat/pipeline.h"
#include "clickstat/solver.h"
#include "clickstat/states.h"
#include "oracles.h"

namespace {

using namespace clickstat;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void info(const std::string& text) {
  std::printf("INFO %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double multiphoton_max(const JointDistribution& rho) {
  double worst = 0.0;
  for (int n = 0; n <= rho.truncation(); ++n)
    for (int k = 0; k <= rho.truncation(); ++k)
      if (n + k >= 2) worst = std::max(worst, rho(n, k));
  return worst;
}

struct HeraldedRun {
  double ratio = 0.0;
  double multi = 0.0;
  int iterations = 0;
  std::string stop;
};

HeraldedRun heralded_run(const std::string& preset, std::uint64_t runs, std::uint64_t seed) {
  auto config = SimulateConfig::from_preset(preset);
  config.runs = runs;
  config.seed = seed;
  const auto sim = simulate(config);
  const auto trace = reconstruct(sim.record, 3);
  const auto& rho = trace.result();
  return {rho(0, 1) / rho(1, 0), multiphoton_max(rho), trace.iterations,
          std::string(stop_reason_name(trace.stop_reason))};
}

void criteria_1_2() {
  {
    const auto t0 = Clock::now();
    const auto r = heralded_run("heralded-unbalanced", 100000, kDefaultSeed);
    const double elapsed = seconds_since(t0);
    const bool ratio_ok = r.ratio >= 0.6 && r.ratio <= 0.75;
    const bool multi_ok = r.multi < 0.01;
    report(1, "heralded ratio, tau=0.4",
           {ratio_ok && multi_ok && elapsed < 60.0,
            "rho01/rho10=" + fmt(r.ratio) + " (need [0.6,0.75]) max rho(n+k>=2)=" + fmt(r.multi) +
                " (need <0.01) stop=" + r.stop + "@" + std::to_string(r.iterations) +
                " time=" + fmt(elapsed, 3) + "s (need <60s)"});
    for (std::uint64_t runs : {100000ull, 1000000ull}) {
      int ratio_pass = 0, full_pass = 0;
      const int seeds = 10;
      for (int s = 1; s <= seeds; ++s) {
        const auto x = heralded_run("heralded-unbalanced", runs, static_cast<std::uint64_t>(s));
        const bool ok_ratio = x.ratio >= 0.6 && x.ratio <= 0.75;
        ratio_pass += ok_ratio;
        full_pass += ok_ratio && x.multi < 0.01;
      }
      info("criterion 1 sensitivity at runs=" + std::to_string(runs) + ", seeds 1.." +
           std::to_string(seeds) + ": ratio in range " + std::to_string(ratio_pass) + "/" +
           std::to_string(seeds) + ", ratio and multi-photon bound " + std::to_string(full_pass) +
           "/" + std::to_string(seeds));
    }
  }
  {
    const auto t0 = Clock::now();
    const auto r = heralded_run("heralded-balanced", 100000, kDefaultSeed);
    const double elapsed = seconds_since(t0);
    report(2, "balanced ratio, tau=0.5",
           {r.ratio >= 0.9 && r.ratio <= 1.1 && elapsed < 60.0,
            "rho01/rho10=" + fmt(r.ratio) + " (need [0.9,1.1]) stop=" + r.stop + "@" +
                std::to_string(r.iterations) + " time=" + fmt(elapsed, 3) + "s"});
    info("criterion 2 max rho(n+k>=2)=" + fmt(r.multi));
  }
}

void criteria_3_4() {
  const auto t0 = Clock::now();
  const auto config = SimulateConfig::from_preset("multithermal-split");
  const auto sim = simulate(config);
  const int n_max = config.state.truncation;
  const auto refs = reference_marginals(ReferenceSpec::from_state(config.state), n_max);

  std::vector<double> mean_fidelity;
  const std::size_t side = static_cast<std::size_t>(n_max) + 1;
  SolverOptions opts;
  opts.observer = [&](int, std::span<const double> q, double) {
    std::vector<double> m1(side, 0.0), m2(side, 0.0);
    for (std::size_t n = 0; n < side; ++n)
      for (std::size_t k = 0; k < side; ++k) {
        m1[n] += q[n * side + k];
        m2[k] += q[n * side + k];
      }
    mean_fidelity.push_back(0.5 * (normalized_fidelity(m1, refs[0].values).fidelity +
                                   normalized_fidelity(m2, refs[1].values).fidelity));
  };
  const auto trace = reconstruct(sim.record, n_max, opts);
  const double elapsed = seconds_since(t0);
  const auto& rho = trace.result();
  const double f1 = normalized_fidelity(marginal(rho, 0), refs[0].values).fidelity;
  const double f2 = normalized_fidelity(marginal(rho, 1), refs[1].values).fidelity;
  info("multithermal truncation leakage=" + fmt(sim.truth.leakage()));
  report(3, "multithermal marginal fidelity",
         {f1 >= 0.99 && f2 >= 0.99 && elapsed < 300.0,
          "F1=" + fmt(f1) + " F2=" + fmt(f2) + " (need >=0.99) stop=" +
              std::string(stop_reason_name(trace.stop_reason)) + "@" +
              std::to_string(trace.iterations) + " time=" + fmt(elapsed, 3) + "s (need <300s)"});

  const auto argmax = static_cast<int>(
      std::max_element(mean_fidelity.begin(), mean_fidelity.end()) - mean_fidelity.begin());
  const int best = trace.best_iteration;
  const int gap = std::abs(argmax - best);
  const int allowed = std::max(opts.patience, trace.iterations / 10);
  report(4, "stopping rule vs fidelity maximum",
         {gap <= allowed, "argmax mean F at " + std::to_string(argmax) + " (F=" +
                              fmt(mean_fidelity[argmax], 8) + "), min epsilon at " +
                              std::to_string(best) + ", gap " + std::to_string(gap) +
                              " (allowed " + std::to_string(allowed) + " of " +
                              std::to_string(trace.iterations) + " iterations)"});
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) s += (x = ex(rng));
  for (double& x : v) x /= s;
  return v;
}

std::vector<double> random_etas(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<double> etas;
  while (static_cast<int>(etas.size()) < k) {
    etas.push_back(u(rng));
    std::sort(etas.begin(), etas.end());
    etas.erase(std::unique(etas.begin(), etas.end()), etas.end());
  }
  return etas;
}

void criterion_5() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(kDefaultSeed);
  double worst_matrix = 0.0, worst_forward = 0.0;
  int cases = 0;
  for (const auto& [modes, n_top] : std::vector<std::pair<int, int>>{{2, 3}, {3, 2}}) {
    for (int n_max = 0; n_max <= n_top; ++n_max) {
      for (int k = 1; k <= 5; ++k) {
        for (int rep = 0; rep < 4; ++rep, ++cases) {
          const auto etas = random_etas(rng, k);
          const EfficiencyGrid grid(etas);
          const auto b = build_matrix(grid, modes, n_max, {.include_all_click = true});
          const auto dense = oracle::full_matrix(etas, modes, n_max);
          for (std::size_t r = 0; r < b.rows(); ++r)
            for (std::size_t c = 0; c < b.cols(); ++c)
              worst_matrix = std::max(worst_matrix, std::abs(b(r, c) - dense[r][c]));
          const auto q = random_simplex(rng, b.cols());
          const auto probs = forward_click_probabilities(JointDistribution(modes, n_max, q), grid);
          const auto g = oracle::mul(dense, q);
          for (std::size_t p = 0; p < pattern_count(modes); ++p)
            for (std::size_t e = 0; e < etas.size(); ++e)
              worst_forward = std::max(
                  worst_forward,
                  std::abs(probs(e, static_cast<ClickPattern>(p)) - g[p * etas.size() + e]));
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  report(5, "oracle equivalence",
         {worst_matrix <= 1e-12 && worst_forward <= 1e-12 && elapsed < 10.0,
          std::to_string(cases) + " cases, max |B - brute force|=" + fmt(worst_matrix) +
              ", max |g - brute force|=" + fmt(worst_forward) + " (need <=1e-12) time=" +
              fmt(elapsed, 3) + "s (need <10s)"});
}

void criterion_6() {
  std::mt19937_64 rng(kDefaultSeed + 6);
  bool monotone = true, nonnegative = true;
  double worst_drop = 0.0, worst_fixed = 0.0;
  for (int instance = 0; instance < 20; ++instance) {
    const int n_max = 1 + instance % 3;
    const std::size_t cols = static_cast<std::size_t>((n_max + 1) * (n_max + 1));
    const EfficiencyGrid grid(random_etas(rng, 2 + instance % 4));
    const JointDistribution truth(2, n_max, random_simplex(rng, cols));
    const auto probs = forward_click_probabilities(truth, grid);
    const auto rec = sample_clicks(probs, 5000, rng());
    SolverOptions opts;
    opts.max_iterations = 2000;
    opts.patience = 0;
    opts.observer = [&](int, std::span<const double> q, double) {
      for (double v : q) nonnegative = nonnegative && v >= 0.0;
    };
    const auto trace = reconstruct(rec, n_max, opts);
    for (std::size_t i = 1; i < trace.loglik.size(); ++i) {
      const double drop = trace.loglik[i - 1] - trace.loglik[i];
      worst_drop = std::max(worst_drop, drop);
      if (drop > 1e-10) monotone = false;
    }
    for (bool full : {true, false}) {
      const auto b = build_matrix(grid, 2, n_max, {.include_all_click = full});
      const std::vector<double> qstar(truth.values().begin(), truth.values().end());
      const auto next = em_step(qstar, b, b.apply(qstar));
      for (std::size_t i = 0; i < cols; ++i)
        worst_fixed = std::max(worst_fixed, std::abs(next[i] - qstar[i]));
    }
  }
  report(6, "EM properties",
         {monotone && nonnegative && worst_fixed <= 1e-12,
          "20 instances x 2000 iterations: loglik nondecreasing=" + std::string(monotone ? "yes" : "no") +
              " (largest drop " + fmt(worst_drop) + "), q>=0=" + (nonnegative ? "yes" : "no") +
              ", fixed-point deviation " + fmt(worst_fixed) + " (need <=1e-12)"});
}

void criterion_7() {
  const auto t0 = Clock::now();
  const auto grid = EfficiencyGrid::uniform(0.015, 0.325, 34);
  const int budget = 5'000'000;
  double worst = 0.0;
  std::string detail;
  for (double tau : {0.5, 0.4}) {
    const auto truth = heralded_split_state(tau, 3);
    const auto exact = forward_click_probabilities(truth, grid);
    double at_default = -1.0;
    SolverOptions opts;
    opts.max_iterations = budget;
    opts.observer = [&](int it, std::span<const double> q, double) {
      if (it != 100000) return;
      at_default = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i)
        at_default = std::max(at_default, std::abs(q[i] - truth.values()[i]));
    };
    const auto trace = reconstruct(exact, 3, opts);
    double err = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      err = std::max(err, std::abs(trace.result().values()[i] - truth.values()[i]));
    worst = std::max(worst, err);
    detail += "tau=" + fmt(tau, 2) + ": error " + fmt(err) + " after " +
              std::to_string(trace.iterations) + " iterations (" +
              std::string(stop_reason_name(trace.stop_reason)) + "); ";
    info("criterion 7 tau=" + fmt(tau, 2) + ": max-entry error at iteration 100000 = " +
         fmt(at_default));
  }
  report(7, "noise-free recovery",
         {worst < 1e-3, detail + "need <1e-3, time=" + fmt(seconds_since(t0), 3) + "s"});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion_8() {
  const fs::path root = fs::temp_directory_path() / "clickstat_acceptance_determinism";
  fs::remove_all(root);
  const auto pipeline = [&](const fs::path& dir, const SimulateConfig& sim_cfg,
                            const ReconstructConfig& rec_cfg) {
    write_simulation(simulate(sim_cfg), dir / "sim");
    const auto record = read_record_file(dir / "sim" / "record.json");
    write_reconstruction(reconstruct_record(record, rec_cfg), dir / "rec");
  };

  auto sim_cfg = SimulateConfig::from_preset("heralded-unbalanced");
  ReconstructConfig rec_cfg;
  rec_cfg.reference = ReferenceSpec::from_state(sim_cfg.state);
  rec_cfg.bootstrap_reps = 4;
  rec_cfg.solver.max_iterations = 20000;
  pipeline(root / "a", sim_cfg, rec_cfg);

  auto sim_replay = SimulateConfig::from_json(read_json_file(root / "a" / "sim" / "manifest.json"));
  auto rec_replay = ReconstructConfig::from_json(read_json_file(root / "a" / "rec" / "manifest.json"));
  sim_replay.threads = 3;
  rec_replay.threads = 3;
  pipeline(root / "b", sim_replay, rec_replay);

  ReproduceConfig fig;
  fig.figure = "fig3";
  fig.runs = 200000;
  reproduce(fig, root / "a" / "fig3");
  reproduce(fig, root / "b" / "fig3");

  int compared = 0, differing = 0;
  std::string first_diff;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), root / "a");
    ++compared;
    if (slurp(entry.path()) != slurp(root / "b" / rel)) {
      ++differing;
      if (first_diff.empty()) first_diff = rel.string();
    }
  }
  fs::remove_all(root);
  report(8, "determinism",
         {compared > 0 && differing == 0,
          std::to_string(compared) + " files compared, " + std::to_string(differing) +
              " differ" + (first_diff.empty() ? "" : " (first: " + first_diff + ")")});
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> steps{criteria_1_2, criteria_3_4, criterion_5,
                                                 criterion_6, criterion_7, criterion_8};
  for (const auto& step : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      std::printf("FAIL error: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criterion failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
