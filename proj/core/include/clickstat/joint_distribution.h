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

#include <cstddef>
#include <span>
#include <vector>

namespace clickstat {

/// Number of entries (1 + truncation)^modes of an M-mode photon-number
/// tensor. Throws a resource error if the count overflows size_t.
std::size_t tensor_size(int modes, int truncation);

/// Fixed-size row-major indexer over {0..N}^M with mode 0 slowest. At M = 2
/// this is flat = k + n (1 + N) for occupation (n, k).
class FockIndexer {
 public:
  FockIndexer(int modes, int truncation);

  int modes() const { return modes_; }
  int truncation() const { return truncation_; }
  std::size_t size() const { return size_; }

  std::size_t flatten(std::span<const int> occupation) const;
  std::vector<int> unflatten(std::size_t flat) const;
  /// Writes the occupation of `flat` into `out` (size == modes).
  void unflatten(std::size_t flat, std::span<int> out) const;

 private:
  int modes_;
  int truncation_;
  std::size_t size_;
};

/// Diagonal of an M-mode density matrix in the truncated photon-number basis.
///
/// Entries are nonnegative. `leakage()` is the probability mass that the
/// underlying state places beyond the truncation; the stored entries sum to
/// 1 - leakage (up to rounding). Values are never renormalized implicitly.
class JointDistribution {
 public:
  /// Validates shape, nonnegativity and total mass against `leakage`.
  JointDistribution(int modes, int truncation, std::vector<double> values,
                    double leakage = 0.0);

  static JointDistribution vacuum(int modes, int truncation);

  int modes() const { return indexer_.modes(); }
  int truncation() const { return indexer_.truncation(); }
  std::size_t size() const { return values_.size(); }
  const FockIndexer& indexer() const { return indexer_; }

  std::span<const double> values() const { return values_; }
  double leakage() const { return leakage_; }
  double total() const;

  double at(std::span<const int> occupation) const;
  /// Two-mode convenience accessor, rho_{n k}.
  double operator()(int n, int k) const;

  /// Copy rescaled to unit total; the returned leakage is zero.
  JointDistribution renormalized() const;

  /// Mass tolerance used when validating totals against the declared leakage.
  static constexpr double kMassTolerance = 1e-9;

 private:
  FockIndexer indexer_;
  std::vector<double> values_;
  double leakage_;
};

}  // namespace clickstat
