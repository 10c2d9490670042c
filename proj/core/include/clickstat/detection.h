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
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clickstat/joint_distribution.h"

namespace clickstat {

/// On/off outcome of every mode in one run. Mode j occupies bit (M - 1 - j),
/// so reading the label left to right lists modes 1..M and the numeric order
/// is the binary order 00..0, 00..1, ..., 11..1.
using ClickPattern = std::uint32_t;

inline constexpr int kMaxModes = 16;

std::size_t pattern_count(int modes);  // 2^M
ClickPattern all_click_pattern(int modes);
bool mode_clicked(ClickPattern pattern, int mode, int modes);
std::string pattern_label(ClickPattern pattern, int modes);
/// Parses a label such as "01"; the mode count is the label length.
ClickPattern parse_pattern(std::string_view label);

/// Quantum efficiencies at which click statistics were recorded.
class EfficiencyGrid {
 public:
  /// Requires a nonempty, strictly increasing list inside (0, 1].
  explicit EfficiencyGrid(std::vector<double> etas);

  /// `count` values equally spaced from eta_min to eta_max inclusive.
  static EfficiencyGrid uniform(double eta_min, double eta_max, int count);

  std::size_t size() const { return etas_.size(); }
  double operator[](std::size_t i) const { return etas_[i]; }
  std::span<const double> etas() const { return etas_; }
  double nominal() const { return etas_.back(); }

  /// Same length and every value within `tolerance`.
  bool matches(const EfficiencyGrid& other, double tolerance = 1e-12) const;
  bool operator==(const EfficiencyGrid&) const = default;

 private:
  std::vector<double> etas_;
};

/// Probability (1 - eta)^n that n photons leave an on/off detector of
/// efficiency eta silent. Evaluated as exp(n log1p(-eta)).
double no_click_coefficient(double eta, int n);

struct MatrixOptions {
  /// Append the all-click block (normally implied as the complement).
  bool include_all_click = false;
  /// Hard cap on (1 + N)^M.
  std::size_t max_columns = 1'000'000;
  /// Optional per-mode scale factors on eta (heterogeneous detectors). Empty
  /// means every mode sees the shared grid value.
  std::vector<double> mode_efficiency_scale;
};

struct RowLabel {
  ClickPattern pattern = 0;
  std::size_t efficiency_index = 0;
};

/// Dense linear model g = B q from photon-number statistics to click-pattern
/// probabilities. Row r belongs to pattern r / K at efficiency r % K, so at
/// M = 2 the blocks are 00, 01, 10 stacked over the K efficiencies.
class DetectionMatrix {
 public:
  DetectionMatrix(EfficiencyGrid grid, int modes, int truncation, bool includes_all_click,
                  std::vector<double> entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int modes() const { return modes_; }
  int truncation() const { return truncation_; }
  const EfficiencyGrid& grid() const { return grid_; }
  bool includes_all_click() const { return includes_all_click_; }
  std::size_t pattern_blocks() const { return rows_ / grid_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(entries_).subspan(r * cols_, cols_);
  }
  RowLabel label(std::size_t r) const;
  std::size_t row_index(ClickPattern pattern, std::size_t efficiency_index) const;

  /// out = B q.
  void apply(std::span<const double> q, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> q) const;
  /// out = B^T w.
  void apply_transpose(std::span<const double> w, std::span<double> out) const;
  std::vector<double> column_sums() const;

 private:
  EfficiencyGrid grid_;
  int modes_;
  int truncation_;
  bool includes_all_click_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

/// Builds B: the entry for pattern b, efficiency eta and occupation
/// (n_1..n_M) is prod_j [b_j = 0 ? A(eta, n_j) : 1 - A(eta, n_j)].
DetectionMatrix build_matrix(const EfficiencyGrid& grid, int modes, int truncation,
                             const MatrixOptions& options = {});

/// Per-efficiency probabilities of all 2^M click patterns, indexed
/// [efficiency][pattern]. The all-click entry is the complement of the rest.
struct ClickProbabilities {
  int modes = 1;
  EfficiencyGrid grid{std::vector<double>{1.0}};
  std::vector<std::vector<double>> patterns;

  double operator()(std::size_t efficiency_index, ClickPattern pattern) const {
    return patterns[efficiency_index][pattern];
  }
  /// Throws an input error if any row is negative or misses unit sum by > tol.
  void validate(double tolerance = 1e-9) const;
};

/// g = B q for `state` with the complement filling the all-click pattern.
ClickProbabilities forward_click_probabilities(const JointDistribution& state,
                                               const EfficiencyGrid& grid,
                                               const MatrixOptions& options = {});

/// Row-major CSV: "pattern,eta_index,eta,<one column per occupation>".
void write_matrix_csv(const DetectionMatrix& matrix, std::ostream& out);

}  // namespace clickstat
