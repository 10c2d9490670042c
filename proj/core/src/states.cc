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

#include "clickstat/states.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "clickstat/errors.h"

namespace clickstat {
namespace {

void check_tau_open(double tau) {
  require(std::isfinite(tau) && tau > 0.0 && tau < 1.0, ErrorKind::kDomain,
          "transmissivity must lie in (0, 1), got " + std::to_string(tau));
}

void check_tau_closed(double tau) {
  require(std::isfinite(tau) && tau >= 0.0 && tau <= 1.0, ErrorKind::kDomain,
          "transmissivity must lie in [0, 1], got " + std::to_string(tau));
}

// log C(n, k) for 0 <= k <= n.
double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// tau^n (1-tau)^k C(n+k, n), exact at the endpoints tau = 0 and tau = 1.
double routing_weight(int n, int k, double tau) {
  if (tau == 0.0) return n == 0 ? 1.0 : 0.0;
  if (tau == 1.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(log_binomial(n + k, n) + n * std::log(tau) + k * std::log1p(-tau));
}

// (1 + t)^-mu computed as exp(-mu log1p(t)), accurate for mu ~ 1e3 and small t.
double inverse_power(double t, double mu) { return std::exp(-mu * std::log1p(t)); }

}  // namespace

void ThermalSpec::validate() const {
  require(std::isfinite(mean_photons) && mean_photons > 0.0, ErrorKind::kDomain,
          "mean photon number must be positive");
  require(std::isfinite(num_modes) && num_modes >= 1.0, ErrorKind::kDomain,
          "number of thermal modes must be >= 1");
}

JointDistribution heralded_split_state(double tau, int truncation) {
  check_tau_open(tau);
  require(truncation >= 1, ErrorKind::kTruncation,
          "heralded single-photon state needs truncation >= 1");
  std::vector<double> values(tensor_size(2, truncation), 0.0);
  const std::size_t stride = static_cast<std::size_t>(truncation) + 1;
  values[0 * stride + 1] = tau;
  values[1 * stride + 0] = 1.0 - tau;
  return JointDistribution(2, truncation, std::move(values));
}

Marginal multithermal_marginal(const ThermalSpec& spec, int truncation) {
  spec.validate();
  require(truncation >= 0, ErrorKind::kTruncation, "truncation must be >= 0");
  const double mu = spec.num_modes;
  const double x = spec.mean_photons / mu;
  const double log_x = std::log(x);
  const double log_1px = std::log1p(x);
  const double lgamma_mu = std::lgamma(mu);
  Marginal out;
  out.values.resize(static_cast<std::size_t>(truncation) + 1);
  double mass = 0.0;
  for (int n = 0; n <= truncation; ++n) {
    const double log_rho = std::lgamma(n + mu) - std::lgamma(n + 1.0) - lgamma_mu + n * log_x -
                           (n + mu) * log_1px;
    out.values[static_cast<std::size_t>(n)] = std::exp(log_rho);
    mass += out.values[static_cast<std::size_t>(n)];
  }
  out.leakage = std::clamp(1.0 - mass, 0.0, 1.0);
  return out;
}

JointDistribution split_on_beamsplitter(std::span<const double> marginal, double tau,
                                        int truncation, double input_leakage) {
  check_tau_closed(tau);
  require(truncation >= 0, ErrorKind::kTruncation, "truncation must be >= 0");
  require(!marginal.empty(), ErrorKind::kInput, "marginal is empty");
  for (double v : marginal) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::kDomain,
            "marginal entries must be finite and nonnegative");
  }
  require(marginal.size() <= static_cast<std::size_t>(truncation) + 1, ErrorKind::kTruncation,
          "input marginal extends beyond the output truncation");
  const std::size_t stride = static_cast<std::size_t>(truncation) + 1;
  std::vector<double> values(stride * stride, 0.0);
  for (std::size_t s = 0; s < marginal.size(); ++s) {
    const int total = static_cast<int>(s);
    for (int n = 0; n <= total; ++n) {
      const int k = total - n;
      values[static_cast<std::size_t>(n) * stride + static_cast<std::size_t>(k)] =
          marginal[s] * routing_weight(n, k, tau);
    }
  }
  return JointDistribution(2, truncation, std::move(values), std::clamp(input_leakage, 0.0, 1.0));
}

TwoModeClicks multithermal_click_reference(const ThermalSpec& spec, double tau, double eta) {
  spec.validate();
  check_tau_closed(tau);
  require(std::isfinite(eta) && eta >= 0.0 && eta <= 1.0, ErrorKind::kDomain,
          "efficiency must lie in [0, 1]");
  const double mu = spec.num_modes;
  const double x = spec.mean_photons / mu;
  TwoModeClicks p;
  p.p00 = inverse_power(eta * x, mu);
  // Both differences are nonnegative since tau, 1 - tau <= 1.
  p.p01 = std::max(0.0, inverse_power(eta * tau * x, mu) - p.p00);
  p.p10 = std::max(0.0, inverse_power(eta * (1.0 - tau) * x, mu) - p.p00);
  p.p11 = std::max(0.0, 1.0 - p.p00 - p.p01 - p.p10);
  return p;
}

JointDistribution product_state(std::span<const std::vector<double>> factors, int truncation) {
  require(!factors.empty(), ErrorKind::kInput, "product state needs at least one factor");
  const int modes = static_cast<int>(factors.size());
  for (const auto& f : factors) {
    require(f.size() == static_cast<std::size_t>(truncation) + 1, ErrorKind::kDimension,
            "every factor must have truncation + 1 entries");
  }
  FockIndexer indexer(modes, truncation);
  std::vector<double> values(indexer.size());
  std::vector<int> occ(static_cast<std::size_t>(modes));
  for (std::size_t i = 0; i < values.size(); ++i) {
    indexer.unflatten(i, occ);
    double v = 1.0;
    for (int m = 0; m < modes; ++m) {
      v *= factors[static_cast<std::size_t>(m)][static_cast<std::size_t>(occ[static_cast<std::size_t>(m)])];
    }
    values[i] = v;
  }
  double kept = 1.0;
  for (const auto& f : factors) {
    double t = 0.0;
    for (double v : f) t += v;
    kept *= t;
  }
  return JointDistribution(modes, truncation, std::move(values), std::clamp(1.0 - kept, 0.0, 1.0));
}

}  // namespace clickstat
