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

#include <span>
#include <vector>

#include "clickstat/joint_distribution.h"

namespace clickstat {

/// Multithermal light: `num_modes` independent thermal modes carrying a total
/// of `mean_photons` photons on average.
struct ThermalSpec {
  double mean_photons = 1.0;
  double num_modes = 1.0;

  /// Throws a domain error unless mean_photons > 0 and num_modes >= 1.
  void validate() const;
};

/// A single-mode photon-number distribution over n = 0..N together with the
/// mass the full distribution places above N.
struct Marginal {
  std::vector<double> values;
  double leakage = 0.0;
};

/// Heralded single photon split by a beam splitter of transmissivity `tau`:
/// rho_{01} = tau, rho_{10} = 1 - tau. Only the diagonal is kept, so the
/// relative phase of the two branches plays no role.
JointDistribution heralded_split_state(double tau, int truncation);

/// Negative-binomial photon distribution
///   rho_n = C(n + mu - 1, n) x^n / (1 + x)^(n + mu),  x = Nbar / mu,
/// evaluated in log-space for n = 0..truncation.
Marginal multithermal_marginal(const ThermalSpec& spec, int truncation);

/// Routes each photon of a single-mode diagonal state independently to mode 1
/// with probability `tau` (and to mode 2 otherwise):
///   rho_{n k} = marginal_{n+k} C(n+k, n) tau^n (1 - tau)^k.
/// The input must fit in 0..truncation; its `input_leakage` is carried over.
JointDistribution split_on_beamsplitter(std::span<const double> marginal, double tau,
                                        int truncation, double input_leakage = 0.0);

/// Ideal on/off statistics of a two-mode state at one efficiency.
struct TwoModeClicks {
  double p00 = 1.0;
  double p01 = 0.0;
  double p10 = 0.0;
  double p11 = 0.0;
};

/// Closed-form on/off probabilities for multithermal light split with
/// transmissivity `tau` into mode 1 and detected at efficiency `eta`:
///   p00 = mu^mu (mu + eta Nbar)^-mu
///   p01 = mu^mu [(mu + eta tau Nbar)^-mu - (mu + eta Nbar)^-mu]
///   p10 = mu^mu [(mu + eta (1 - tau) Nbar)^-mu - (mu + eta Nbar)^-mu]
/// with p11 the complement.
TwoModeClicks multithermal_click_reference(const ThermalSpec& spec, double tau, double eta);

/// Product of single-mode distributions; leakage is 1 - (product of totals).
JointDistribution product_state(std::span<const std::vector<double>> factors, int truncation);

}  // namespace clickstat
