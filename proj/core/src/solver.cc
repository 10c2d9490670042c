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

#include "clickstat/solver.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "internal.h"

namespace clickstat {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t explicit_rows(const DetectionMatrix& b) {
  return (pattern_count(b.modes()) - 1) * b.grid().size();
}

// w_mu = h_mu / g_mu with empty rows skipped; returns false on degenerate rows.
bool ratio_weights(std::span<const double> h, std::span<const double> g, std::span<double> w) {
  for (std::size_t r = 0; r < h.size(); ++r) {
    if (h[r] > 0.0) {
      if (!(g[r] > 0.0)) return false;
      w[r] = h[r] / g[r];
    } else {
      w[r] = 0.0;
    }
  }
  return true;
}

void multiplicative_update(std::span<const double> q, std::span<const double> t,
                           std::span<const double> column_sums, std::span<double> out) {
  for (std::size_t p = 0; p < q.size(); ++p) {
    out[p] = column_sums[p] > 0.0 ? q[p] * t[p] / column_sums[p] : q[p];
  }
}

double mean_abs_deviation(std::span<const double> h, std::span<const double> g, std::size_t rows) {
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) acc += std::abs(h[r] - g[r]);
  return acc / static_cast<double>(rows);
}

// Per-efficiency pattern weights: counts of a record, or exact probabilities.
using PatternWeights = std::vector<std::vector<double>>;

PatternWeights count_weights(const ClickRecord& record) {
  PatternWeights w(record.counts.size());
  for (std::size_t e = 0; e < w.size(); ++e) {
    w[e].assign(record.counts[e].begin(), record.counts[e].end());
  }
  return w;
}

// Log-likelihood from the explicit-row probabilities g (pattern-block-major).
double loglik_from_probabilities(std::span<const double> g, const PatternWeights& weights) {
  const std::size_t k = weights.size();
  const std::size_t count = weights.empty() ? 0 : weights.front().size();
  double ll = 0.0;
  for (std::size_t e = 0; e < k; ++e) {
    double explicit_sum = 0.0;
    for (std::size_t p = 0; p + 1 < count; ++p) {
      const double prob = g[p * k + e];
      explicit_sum += prob;
      const double n = weights[e][p];
      if (n == 0.0) continue;
      if (!(prob > 0.0)) return kNegInf;
      ll += n * std::log(prob);
    }
    const double n_all = weights[e][count - 1];
    if (n_all > 0.0) {
      const double complement = 1.0 - explicit_sum;
      if (!(complement > 0.0)) return kNegInf;
      ll += n_all * std::log(complement);
    }
  }
  return ll;
}

// Pattern-block-major h over the explicit patterns, plus the all-click block
// when requested.
std::vector<double> normalized_rows(const PatternWeights& weights, bool include_all_click) {
  const std::size_t k = weights.size();
  const std::size_t count = weights.front().size();
  const std::size_t blocks = count - (include_all_click ? 0 : 1);
  std::vector<double> h(blocks * k);
  for (std::size_t e = 0; e < k; ++e) {
    const double total = std::accumulate(weights[e].begin(), weights[e].end(), 0.0);
    for (std::size_t p = 0; p < blocks; ++p) h[p * k + e] = weights[e][p] / total;
  }
  return h;
}

void check_record_against(const ClickRecord& record, const DetectionMatrix& b) {
  record.validate();
  require(record.modes == b.modes(), ErrorKind::kDimension,
          "record and detection matrix have different mode counts");
  require(record.grid.matches(b.grid(), 1e-12), ErrorKind::kDimension,
          "record efficiency grid does not match the detection matrix grid");
}

}  // namespace

std::string_view stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::kMinEpsilon: return "min-epsilon";
    case StopReason::kThreshold: return "threshold";
    case StopReason::kMaxIterations: return "max-iters";
  }
  return "unknown";
}

const JointDistribution& ReconstructionTrace::result() const {
  require(final_distribution.has_value(), ErrorKind::kNumerical,
          "reconstruction trace has no final distribution");
  return *final_distribution;
}

std::vector<double> em_step(std::span<const double> q, const DetectionMatrix& b,
                            std::span<const double> h) {
  require(q.size() == b.cols(), ErrorKind::kDimension, "q does not match the matrix columns");
  require(h.size() == b.rows(), ErrorKind::kDimension, "h does not match the matrix rows");
  for (double v : q) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::kDomain, "q must be finite and nonnegative");
  }
  std::vector<double> g = b.apply(q);
  std::vector<double> w(b.rows());
  require(ratio_weights(h, g, w), ErrorKind::kDegenerateSupport,
          "model assigns zero probability to an observed click pattern; restart from a "
          "strictly positive q (e.g. uniform)");
  std::vector<double> t(b.cols());
  b.apply_transpose(w, t);
  std::vector<double> out(q.size());
  multiplicative_update(q, t, b.column_sums(), out);
  return out;
}

double total_error(std::span<const double> q, const DetectionMatrix& b,
                   std::span<const double> h) {
  const std::size_t rows = explicit_rows(b);
  require(h.size() == rows, ErrorKind::kDimension,
          "h must hold the explicit (non all-click) rows");
  const std::vector<double> g = b.apply(q);
  return mean_abs_deviation(h, g, rows);
}

double log_likelihood(std::span<const double> q, const DetectionMatrix& b,
                      const ClickRecord& record) {
  check_record_against(record, b);
  const std::vector<double> g = b.apply(q);
  return loglik_from_probabilities(g, count_weights(record));
}

namespace {

ReconstructionTrace run_em(int modes, const EfficiencyGrid& grid, const PatternWeights& weights,
                           int truncation, const SolverOptions& options) {
  require(options.max_iterations >= 0, ErrorKind::kConfig, "max_iterations must be >= 0");
  require(options.patience >= 0, ErrorKind::kConfig, "patience must be >= 0");
  require(options.epsilon_threshold >= 0.0, ErrorKind::kConfig,
          "epsilon threshold must be >= 0");
  require(options.store_every >= 0, ErrorKind::kConfig, "store_every must be >= 0");
  require(options.underflow_floor >= 0.0 && options.underflow_floor < 1e-100, ErrorKind::kConfig,
          "underflow floor must lie in [0, 1e-100)");

  MatrixOptions matrix_options = options.matrix;
  matrix_options.include_all_click = options.rows == EmRows::kAllPatterns;
  const DetectionMatrix b = build_matrix(grid, modes, truncation, matrix_options);
  const std::size_t rows_explicit = explicit_rows(b);
  const std::vector<double> h = normalized_rows(weights, matrix_options.include_all_click);
  const std::vector<double> column_sums = b.column_sums();

  std::vector<double> q;
  if (options.initial.empty()) {
    q.assign(b.cols(), 1.0 / static_cast<double>(b.cols()));
  } else {
    require(options.initial.size() == b.cols(), ErrorKind::kDimension,
            "initial q has the wrong number of entries");
    for (double v : options.initial) {
      require(std::isfinite(v) && v >= 0.0, ErrorKind::kDomain,
              "initial q must be finite and nonnegative");
    }
    q = options.initial;
  }

  auto trace = std::make_shared<ReconstructionTrace>();
  trace->epsilon.reserve(static_cast<std::size_t>(options.max_iterations) + 1);
  trace->loglik.reserve(static_cast<std::size_t>(options.max_iterations) + 1);

  std::vector<double> g(b.rows()), w(b.rows()), t(b.cols()), next(b.cols());
  std::vector<double> best_q = q;
  double best_epsilon = std::numeric_limits<double>::infinity();

  const auto abort = [&](ErrorKind kind, const std::string& message) {
    throw SolverError(kind, message, trace);
  };

  for (int it = 0;; ++it) {
    b.apply(q, g);
    const double epsilon = mean_abs_deviation(h, g, rows_explicit);
    const double ll = loglik_from_probabilities(g, weights);
    if (!std::isfinite(epsilon)) {
      abort(ErrorKind::kNumerical, "non-finite total error at iteration " + std::to_string(it));
    }
    trace->epsilon.push_back(epsilon);
    trace->loglik.push_back(ll);
    trace->iterations = it;
    if (options.store_every > 0 && it % options.store_every == 0) {
      trace->iterates.push_back({it, q});
    }
    if (options.observer) options.observer(it, q, epsilon);

    if (epsilon < best_epsilon) {
      best_epsilon = epsilon;
      best_q = q;
      trace->best_iteration = it;
    }
    if (options.epsilon_threshold > 0.0 && epsilon < options.epsilon_threshold) {
      trace->stop_reason = StopReason::kThreshold;
      break;
    }
    if (options.patience > 0 && it - trace->best_iteration >= options.patience) {
      trace->stop_reason = StopReason::kMinEpsilon;
      break;
    }
    if (it >= options.max_iterations) {
      trace->stop_reason = StopReason::kMaxIterations;
      break;
    }

    if (!ratio_weights(h, g, w)) {
      abort(ErrorKind::kDegenerateSupport,
            "model assigns zero probability to an observed click pattern at iteration " +
                std::to_string(it) + "; restart from a strictly positive q (e.g. uniform)");
    }
    b.apply_transpose(w, t);
    multiplicative_update(q, t, column_sums, next);
    for (double& v : next) {
      if (!std::isfinite(v)) {
        abort(ErrorKind::kNumerical,
              "non-finite iterate after update " + std::to_string(it + 1));
      }
      if (v < options.underflow_floor) v = 0.0;
    }
    q.swap(next);
  }

  const double mass = std::accumulate(best_q.begin(), best_q.end(), 0.0);
  if (!(mass > 0.0)) abort(ErrorKind::kNumerical, "reconstructed distribution has zero mass");
  trace->mass_before_renormalization = mass;
  for (double& v : best_q) v /= mass;
  trace->final_distribution.emplace(modes, truncation, std::move(best_q), 0.0);
  return std::move(*trace);
}

}  // namespace

ReconstructionTrace reconstruct(const ClickRecord& record, int truncation,
                                const SolverOptions& options) {
  record.validate();
  return run_em(record.modes, record.grid, count_weights(record), truncation, options);
}

ReconstructionTrace reconstruct(const ClickProbabilities& exact, int truncation,
                                const SolverOptions& options) {
  exact.validate(1e-9);
  return run_em(exact.modes, exact.grid, exact.patterns, truncation, options);
}

void write_trace_csv(const ReconstructionTrace& trace, std::ostream& out) {
  out << "iteration,epsilon,loglik\n";
  for (std::size_t i = 0; i < trace.epsilon.size(); ++i) {
    out << i << ',' << internal::format_double(trace.epsilon[i]) << ','
        << internal::format_double(trace.loglik[i]) << '\n';
  }
}

}  // namespace clickstat
