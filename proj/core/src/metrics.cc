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

#include "clickstat/metrics.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "clickstat/errors.h"
#include "internal.h"

namespace clickstat {

std::vector<double> marginal(const JointDistribution& dist, int mode) {
  require(mode >= 0 && mode < dist.modes(), ErrorKind::kDomain,
          "mode index " + std::to_string(mode) + " out of range");
  std::vector<double> out(static_cast<std::size_t>(dist.truncation()) + 1, 0.0);
  std::vector<int> occ(static_cast<std::size_t>(dist.modes()));
  const auto values = dist.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    dist.indexer().unflatten(i, occ);
    out[static_cast<std::size_t>(occ[static_cast<std::size_t>(mode)])] += values[i];
  }
  return out;
}

double fidelity(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), ErrorKind::kDimension, "fidelity inputs differ in length");
  double f = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i] >= 0.0 && q[i] >= 0.0, ErrorKind::kDomain,
            "fidelity inputs must be nonnegative");
    f += std::sqrt(p[i] * q[i]);
  }
  return f;
}

FidelityReport normalized_fidelity(std::span<const double> p, std::span<const double> q) {
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  require(sp > 0.0 && sq > 0.0, ErrorKind::kDomain, "cannot normalize a zero distribution");
  FidelityReport report;
  report.fidelity = fidelity(p, q) / std::sqrt(sp * sq);
  report.leakage_p = 1.0 - sp;
  report.leakage_q = 1.0 - sq;
  return report;
}

double element_ratio(const JointDistribution& dist, std::span<const int> a,
                     std::span<const int> b) {
  const double den = dist.at(b);
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return dist.at(a) / den;
}

BootstrapResult bootstrap_uncertainty(const ClickRecord& record, int truncation,
                                      const BootstrapOptions& options) {
  require(options.reps >= 2, ErrorKind::kConfig, "bootstrap needs at least two replicates");
  record.validate();
  const ClickProbabilities empirical = empirical_probabilities(record);
  const std::size_t k = record.grid.size();
  const std::size_t entries = tensor_size(record.modes, truncation);

  std::vector<std::vector<double>> results(static_cast<std::size_t>(options.reps));
  std::vector<std::string> errors(static_cast<std::size_t>(options.reps));
  std::vector<char> ok(static_cast<std::size_t>(options.reps), 0);

  SolverOptions solver = options.solver;
  solver.observer = nullptr;
  solver.store_every = 0;

  internal::parallel_for(static_cast<std::size_t>(options.reps), options.threads,
                         [&](std::size_t r) {
    const int rep = static_cast<int>(r);
    const std::uint64_t seed = options.replicate_seed ? options.replicate_seed(options.seed, rep)
                                                      : derive_stream_seed(options.seed, r);
    ClickRecord resampled = record;
    resampled.seed = seed;
    for (std::size_t e = 0; e < k; ++e) {
      resampled.counts[e] = sample_multinomial(empirical.patterns[e], record.runs[e], seed, e);
    }
    try {
      const ReconstructionTrace trace = reconstruct(resampled, truncation, solver);
      const auto v = trace.result().values();
      results[r].assign(v.begin(), v.end());
      ok[r] = 1;
    } catch (const Error& err) {
      errors[r] = err.what();
    }
  });

  BootstrapResult out;
  out.mean.assign(entries, 0.0);
  out.sigma.assign(entries, 0.0);
  for (std::size_t r = 0; r < results.size(); ++r) {
    if (!ok[r]) {
      out.failures.push_back({static_cast<int>(r), errors[r]});
      continue;
    }
    ++out.succeeded;
    for (std::size_t i = 0; i < entries; ++i) out.mean[i] += results[r][i];
    out.replicates.push_back(results[r]);
  }
  require(out.succeeded >= 2, ErrorKind::kNumerical,
          "fewer than two bootstrap replicates succeeded");
  for (double& m : out.mean) m /= out.succeeded;
  // Spread about the first replicate, so identical replicates give exactly 0.
  const std::vector<double>& pivot = out.replicates.front();
  std::vector<double> shift(entries, 0.0);
  for (const auto& rep : out.replicates) {
    for (std::size_t i = 0; i < entries; ++i) shift[i] += rep[i] - pivot[i];
  }
  for (double& d : shift) d /= out.succeeded;
  for (const auto& rep : out.replicates) {
    for (std::size_t i = 0; i < entries; ++i) {
      const double d = (rep[i] - pivot[i]) - shift[i];
      out.sigma[i] += d * d;
    }
  }
  for (double& s : out.sigma) s = std::sqrt(s / (out.succeeded - 1));
  return out;
}

void write_uncertainty_csv(const JointDistribution& rho, std::span<const double> sigma,
                           std::ostream& out) {
  require(sigma.size() == rho.size(), ErrorKind::kDimension,
          "sigma does not match the distribution size");
  if (rho.modes() == 2) {
    out << "n,k";
  } else {
    for (int m = 0; m < rho.modes(); ++m) out << (m ? "," : "") << "n_" << (m + 1);
  }
  out << ",rho,sigma\n";
  const auto values = rho.values();
  std::vector<int> occ(static_cast<std::size_t>(rho.modes()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    rho.indexer().unflatten(i, occ);
    for (int m = 0; m < rho.modes(); ++m) out << (m ? "," : "") << occ[static_cast<std::size_t>(m)];
    out << ',' << internal::format_double(values[i]) << ',' << internal::format_double(sigma[i])
        << '\n';
  }
}

}  // namespace clickstat
