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

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "clickstat/detection.h"
#include "clickstat/errors.h"
#include "clickstat/joint_distribution.h"
#include "clickstat/sampler.h"

namespace clickstat {

/// Which click patterns enter the multiplicative update.
enum class EmRows {
  /// Every pattern including all-click. The matrix is column-stochastic per
  /// efficiency, the update preserves the total mass, and it is the EM
  /// iteration of the multinomial likelihood (monotone log_likelihood).
  kAllPatterns,
  /// Only the 2^M - 1 explicit patterns, i.e. the h/g vectors exactly as laid
  /// out for the total error. Does not preserve mass and is not monotone in
  /// the multinomial likelihood.
  kExplicitPatterns,
};

enum class StopReason { kMinEpsilon, kThreshold, kMaxIterations };

std::string_view stop_reason_name(StopReason reason);

/// One multiplicative update
///   q'_p = q_p (sum_mu B_mu p)^-1 sum_mu B_mu p h_mu / g_mu[q],   g = B q.
/// Rows with h_mu = 0 contribute nothing. A column with zero sum keeps its
/// value. Throws kDegenerateSupport if g_mu = 0 where h_mu > 0; restarting
/// from a strictly positive q (e.g. uniform) avoids this.
std::vector<double> em_step(std::span<const double> q, const DetectionMatrix& b,
                            std::span<const double> h);

/// Mean absolute deviation R^-1 sum_mu |h_mu - g_mu[q]| over the explicit
/// (non all-click) rows of `b`; `h` holds the explicit rows only.
double total_error(std::span<const double> q, const DetectionMatrix& b,
                   std::span<const double> h);

/// Multinomial log-likelihood sum_{e,b} n_{b,e} log g_{b,e}[q] with the
/// all-click probability taken as the complement of the explicit ones.
/// Returns -infinity if an observed pattern has zero (or negative) model
/// probability.
double log_likelihood(std::span<const double> q, const DetectionMatrix& b,
                      const ClickRecord& record);

struct SolverOptions {
  int max_iterations = 100000;
  /// Stop as soon as epsilon drops below this value; 0 disables the rule.
  double epsilon_threshold = 0.0;
  /// Stop once this many iterations pass without a new epsilon minimum.
  /// 0 disables the rule.
  int patience = 200;
  EmRows rows = EmRows::kAllPatterns;
  /// Starting point q^(0); empty means uniform over all (1 + N)^M entries.
  std::vector<double> initial;
  /// Iterate entries below this are set to exactly zero after each update.
  /// Entries that small carry no information and would otherwise decay into
  /// subnormal numbers, which are very slow on common hardware.
  double underflow_floor = 1e-250;
  /// Keep a copy of q every this many iterations (0 keeps none).
  int store_every = 0;
  /// Called for every iterate (iteration 0 is the start), with its epsilon.
  std::function<void(int iteration, std::span<const double> q, double epsilon)> observer;
  MatrixOptions matrix;
};

struct StoredIterate {
  int iteration = 0;
  std::vector<double> q;
};

/// Everything a reconstruction produced. Index i of `epsilon`/`loglik` is
/// the iterate after i updates (0 is the starting point).
struct ReconstructionTrace {
  std::vector<double> epsilon;
  std::vector<double> loglik;
  std::vector<StoredIterate> iterates;
  StopReason stop_reason = StopReason::kMaxIterations;
  /// Iteration of the smallest epsilon; its iterate is the one returned.
  int best_iteration = 0;
  /// Number of updates performed.
  int iterations = 0;
  /// Total mass of the returned iterate before the final renormalization.
  double mass_before_renormalization = 1.0;
  /// Unset only in traces attached to a SolverError.
  std::optional<JointDistribution> final_distribution;

  const JointDistribution& result() const;
};

/// Error raised mid-iteration; carries the trace up to the failure.
class SolverError : public Error {
 public:
  SolverError(ErrorKind kind, const std::string& message,
              std::shared_ptr<const ReconstructionTrace> partial)
      : Error(kind, message), partial_(std::move(partial)) {}

  const ReconstructionTrace* partial_trace() const { return partial_.get(); }

 private:
  std::shared_ptr<const ReconstructionTrace> partial_;
};

/// Runs the EM iteration on `record` with truncation N until epsilon falls
/// below the threshold, epsilon stalls for `patience` iterations, or
/// `max_iterations` is reached. Returns the best-epsilon iterate,
/// renormalized to unit mass (the correction is recorded in the trace).
ReconstructionTrace reconstruct(const ClickRecord& record, int truncation,
                                const SolverOptions& options = {});

/// Noise-free variant: h is taken from exact pattern probabilities, and the
/// trace's loglik is the expected log-likelihood of a single run.
ReconstructionTrace reconstruct(const ClickProbabilities& exact, int truncation,
                                const SolverOptions& options = {});

/// "iteration,epsilon,loglik" rows.
void write_trace_csv(const ReconstructionTrace& trace, std::ostream& out);

}  // namespace clickstat
