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
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "clickstat/joint_distribution.h"
#include "clickstat/sampler.h"
#include "clickstat/solver.h"

namespace clickstat {

/// Photon-number distribution of one mode (0-based), summing out the rest.
std::vector<double> marginal(const JointDistribution& dist, int mode);

/// Bhattacharyya overlap sum_n sqrt(p_n q_n). Inputs are used as given.
double fidelity(std::span<const double> p, std::span<const double> q);

struct FidelityReport {
  double fidelity = 0.0;
  /// 1 - sum of each input before renormalization.
  double leakage_p = 0.0;
  double leakage_q = 0.0;
};

/// Fidelity of the two inputs after rescaling each to unit mass.
FidelityReport normalized_fidelity(std::span<const double> p, std::span<const double> q);

/// rho[a] / rho[b]; NaN when rho[b] == 0.
double element_ratio(const JointDistribution& dist, std::span<const int> a,
                     std::span<const int> b);

struct BootstrapOptions {
  int reps = 100;
  std::uint64_t seed = 0;
  SolverOptions solver;
  unsigned threads = 1;
  /// Seed of replicate r. Defaults to derive_stream_seed(seed, r).
  std::function<std::uint64_t(std::uint64_t seed, int replicate)> replicate_seed;
};

struct BootstrapFailure {
  int replicate = 0;
  std::string message;
};

struct BootstrapResult {
  std::vector<double> mean;
  /// Entrywise sample standard deviation over successful replicates.
  std::vector<double> sigma;
  int succeeded = 0;
  std::vector<BootstrapFailure> failures;
  /// Reconstructed values per successful replicate, in replicate order.
  std::vector<std::vector<double>> replicates;
};

/// Parametric bootstrap: every replicate redraws the counts at each
/// efficiency from the record's empirical pattern frequencies (same run
/// totals), reconstructs, and the spread across replicates is reported.
/// Replicates are independent of the thread count. Throws if fewer than two
/// replicates succeed; other failures are listed in the result.
BootstrapResult bootstrap_uncertainty(const ClickRecord& record, int truncation,
                                      const BootstrapOptions& options);

/// CSV "n_1,...,n_M,rho,sigma" (at M = 2 the header is "n,k,rho,sigma").
void write_uncertainty_csv(const JointDistribution& rho, std::span<const double> sigma,
                           std::ostream& out);

}  // namespace clickstat
