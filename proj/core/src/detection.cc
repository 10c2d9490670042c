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

#include "clickstat/detection.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "clickstat/errors.h"
#include "internal.h"

namespace clickstat {
namespace {

void check_modes(int modes) {
  require(modes >= 1 && modes <= kMaxModes, ErrorKind::kDomain,
          "mode count must lie in [1, " + std::to_string(kMaxModes) + "]");
}

// 1 - (1 - eta)^n without cancellation for small n * eta.
double click_coefficient(double eta, int n) {
  if (n == 0) return 0.0;
  if (eta >= 1.0) return 1.0;
  return -std::expm1(n * std::log1p(-eta));
}

}  // namespace

std::size_t pattern_count(int modes) {
  check_modes(modes);
  return std::size_t{1} << modes;
}

ClickPattern all_click_pattern(int modes) {
  return static_cast<ClickPattern>(pattern_count(modes) - 1);
}

bool mode_clicked(ClickPattern pattern, int mode, int modes) {
  return ((pattern >> (modes - 1 - mode)) & 1u) != 0;
}

std::string pattern_label(ClickPattern pattern, int modes) {
  std::string label(static_cast<std::size_t>(modes), '0');
  for (int m = 0; m < modes; ++m) {
    if (mode_clicked(pattern, m, modes)) label[static_cast<std::size_t>(m)] = '1';
  }
  return label;
}

ClickPattern parse_pattern(std::string_view label) {
  require(!label.empty() && label.size() <= static_cast<std::size_t>(kMaxModes),
          ErrorKind::kInput, "click pattern label has invalid length");
  ClickPattern p = 0;
  for (char c : label) {
    require(c == '0' || c == '1', ErrorKind::kInput,
            "click pattern label must contain only 0 and 1: '" + std::string(label) + "'");
    p = (p << 1) | static_cast<ClickPattern>(c == '1');
  }
  return p;
}

EfficiencyGrid::EfficiencyGrid(std::vector<double> etas) : etas_(std::move(etas)) {
  require(!etas_.empty(), ErrorKind::kInput, "efficiency grid is empty");
  for (std::size_t i = 0; i < etas_.size(); ++i) {
    const double e = etas_[i];
    require(std::isfinite(e) && e > 0.0 && e <= 1.0, ErrorKind::kDomain,
            "efficiencies must lie in (0, 1], got " + std::to_string(e));
    if (i > 0) {
      require(e > etas_[i - 1], ErrorKind::kInput, "efficiency grid must be strictly increasing");
    }
  }
}

EfficiencyGrid EfficiencyGrid::uniform(double eta_min, double eta_max, int count) {
  require(count >= 1, ErrorKind::kConfig, "grid needs at least one efficiency");
  if (count == 1) {
    require(eta_min == eta_max, ErrorKind::kConfig,
            "a one-point grid needs eta_min == eta_max");
    return EfficiencyGrid({eta_min});
  }
  require(eta_min < eta_max, ErrorKind::kConfig, "eta_min must be below eta_max");
  std::vector<double> etas(static_cast<std::size_t>(count));
  const double step = (eta_max - eta_min) / (count - 1);
  for (int i = 0; i < count; ++i) etas[static_cast<std::size_t>(i)] = eta_min + step * i;
  etas.back() = eta_max;
  return EfficiencyGrid(std::move(etas));
}

bool EfficiencyGrid::matches(const EfficiencyGrid& other, double tolerance) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < size(); ++i) {
    if (std::abs(etas_[i] - other.etas_[i]) > tolerance) return false;
  }
  return true;
}

double no_click_coefficient(double eta, int n) {
  require(std::isfinite(eta) && eta >= 0.0 && eta <= 1.0, ErrorKind::kDomain,
          "efficiency must lie in [0, 1]");
  require(n >= 0, ErrorKind::kDomain, "photon number must be >= 0");
  if (n == 0) return 1.0;
  if (eta >= 1.0) return 0.0;
  return std::exp(n * std::log1p(-eta));
}

DetectionMatrix::DetectionMatrix(EfficiencyGrid grid, int modes, int truncation,
                                 bool includes_all_click, std::vector<double> entries)
    : grid_(std::move(grid)),
      modes_(modes),
      truncation_(truncation),
      includes_all_click_(includes_all_click),
      rows_((pattern_count(modes) - (includes_all_click ? 0 : 1)) * grid_.size()),
      cols_(tensor_size(modes, truncation)),
      entries_(std::move(entries)) {
  require(entries_.size() == rows_ * cols_, ErrorKind::kDimension,
          "detection matrix entry count does not match its shape");
}

RowLabel DetectionMatrix::label(std::size_t r) const {
  return RowLabel{static_cast<ClickPattern>(r / grid_.size()), r % grid_.size()};
}

std::size_t DetectionMatrix::row_index(ClickPattern pattern, std::size_t efficiency_index) const {
  require(pattern < pattern_blocks() && efficiency_index < grid_.size(), ErrorKind::kDimension,
          "pattern/efficiency not represented in this matrix");
  return static_cast<std::size_t>(pattern) * grid_.size() + efficiency_index;
}

void DetectionMatrix::apply(std::span<const double> q, std::span<double> out) const {
  require(q.size() == cols_ && out.size() == rows_, ErrorKind::kDimension,
          "B q: dimension mismatch");
  const double* b = entries_.data();
  const double* x = q.data();
  const std::size_t blocked = cols_ - cols_ % 4;
  for (std::size_t r = 0; r < rows_; ++r, b += cols_) {
    // Fixed summation order: four interleaved partial sums, then the tail.
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t c = 0;
    for (; c < blocked; c += 4) {
      a0 += b[c] * x[c];
      a1 += b[c + 1] * x[c + 1];
      a2 += b[c + 2] * x[c + 2];
      a3 += b[c + 3] * x[c + 3];
    }
    double acc = (a0 + a1) + (a2 + a3);
    for (; c < cols_; ++c) acc += b[c] * x[c];
    out[r] = acc;
  }
}

std::vector<double> DetectionMatrix::apply(std::span<const double> q) const {
  std::vector<double> out(rows_);
  apply(q, out);
  return out;
}

void DetectionMatrix::apply_transpose(std::span<const double> w, std::span<double> out) const {
  require(w.size() == rows_ && out.size() == cols_, ErrorKind::kDimension,
          "B^T w: dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const double* b = entries_.data();
  for (std::size_t r = 0; r < rows_; ++r, b += cols_) {
    const double wr = w[r];
    if (wr == 0.0) continue;
    for (std::size_t c = 0; c < cols_; ++c) out[c] += b[c] * wr;
  }
}

std::vector<double> DetectionMatrix::column_sums() const {
  std::vector<double> ones(rows_, 1.0);
  std::vector<double> sums(cols_);
  apply_transpose(ones, sums);
  return sums;
}

DetectionMatrix build_matrix(const EfficiencyGrid& grid, int modes, int truncation,
                             const MatrixOptions& options) {
  check_modes(modes);
  require(truncation >= 0, ErrorKind::kTruncation, "truncation must be >= 0");
  FockIndexer indexer(modes, truncation);
  const std::size_t cols = indexer.size();
  require(cols <= options.max_columns, ErrorKind::kResource,
          "(1 + N)^M = " + std::to_string(cols) + " exceeds the column cap of " +
              std::to_string(options.max_columns));
  std::vector<double> scale = options.mode_efficiency_scale;
  if (scale.empty()) scale.assign(static_cast<std::size_t>(modes), 1.0);
  require(scale.size() == static_cast<std::size_t>(modes), ErrorKind::kDimension,
          "mode efficiency scale needs one factor per mode");
  for (double s : scale) {
    require(std::isfinite(s) && s > 0.0, ErrorKind::kDomain,
            "mode efficiency scale factors must be positive");
  }

  const std::size_t k = grid.size();
  const std::size_t blocks = pattern_count(modes) - (options.include_all_click ? 0 : 1);
  const std::size_t rows = blocks * k;
  require(rows <= std::numeric_limits<std::size_t>::max() / cols, ErrorKind::kResource,
          "detection matrix is too large");

  // off[m][e][n] = A(eta_e s_m, n), on[m][e][n] = 1 - A(eta_e s_m, n).
  const std::size_t levels = static_cast<std::size_t>(truncation) + 1;
  std::vector<double> off(static_cast<std::size_t>(modes) * k * levels);
  std::vector<double> on(off.size());
  for (int m = 0; m < modes; ++m) {
    for (std::size_t e = 0; e < k; ++e) {
      const double eta = grid[e] * scale[static_cast<std::size_t>(m)];
      require(eta <= 1.0, ErrorKind::kDomain, "scaled efficiency exceeds 1");
      for (std::size_t n = 0; n < levels; ++n) {
        const std::size_t at = (static_cast<std::size_t>(m) * k + e) * levels + n;
        off[at] = no_click_coefficient(eta, static_cast<int>(n));
        on[at] = click_coefficient(eta, static_cast<int>(n));
      }
    }
  }

  std::vector<int> occupation(indexer.size() * static_cast<std::size_t>(modes));
  for (std::size_t c = 0; c < cols; ++c) {
    indexer.unflatten(c, std::span<int>(occupation).subspan(c * static_cast<std::size_t>(modes),
                                                             static_cast<std::size_t>(modes)));
  }

  std::vector<double> entries(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto pattern = static_cast<ClickPattern>(r / k);
    const std::size_t e = r % k;
    double* out = entries.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      const int* occ = occupation.data() + c * static_cast<std::size_t>(modes);
      double v = 1.0;
      for (int m = 0; m < modes; ++m) {
        const std::size_t at =
            (static_cast<std::size_t>(m) * k + e) * levels + static_cast<std::size_t>(occ[m]);
        v *= mode_clicked(pattern, m, modes) ? on[at] : off[at];
      }
      out[c] = v;
    }
  }
  return DetectionMatrix(grid, modes, truncation, options.include_all_click, std::move(entries));
}

void ClickProbabilities::validate(double tolerance) const {
  require(patterns.size() == grid.size(), ErrorKind::kDimension,
          "click probabilities need one pattern set per efficiency");
  const std::size_t count = pattern_count(modes);
  for (const auto& row : patterns) {
    require(row.size() == count, ErrorKind::kDimension,
            "click probabilities need 2^M patterns per efficiency");
    double sum = 0.0;
    for (double p : row) {
      require(std::isfinite(p) && p >= 0.0, ErrorKind::kInput,
              "click probabilities must be finite and nonnegative");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= tolerance, ErrorKind::kInput,
            "click probabilities at one efficiency sum to " + internal::format_double(sum));
  }
}

ClickProbabilities forward_click_probabilities(const JointDistribution& state,
                                               const EfficiencyGrid& grid,
                                               const MatrixOptions& options) {
  MatrixOptions explicit_rows = options;
  explicit_rows.include_all_click = false;
  const DetectionMatrix b = build_matrix(grid, state.modes(), state.truncation(), explicit_rows);
  const std::vector<double> g = b.apply(state.values());
  const std::size_t k = grid.size();
  const std::size_t count = pattern_count(state.modes());
  ClickProbabilities out{state.modes(), grid, {}};
  out.patterns.assign(k, std::vector<double>(count, 0.0));
  for (std::size_t e = 0; e < k; ++e) {
    double explicit_sum = 0.0;
    for (std::size_t p = 0; p + 1 < count; ++p) {
      out.patterns[e][p] = g[p * k + e];
      explicit_sum += g[p * k + e];
    }
    out.patterns[e][count - 1] = std::max(0.0, 1.0 - explicit_sum);
  }
  return out;
}

void write_matrix_csv(const DetectionMatrix& matrix, std::ostream& out) {
  FockIndexer indexer(matrix.modes(), matrix.truncation());
  out << "pattern,eta_index,eta";
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    out << ",rho";
    for (int n : indexer.unflatten(c)) out << '_' << n;
  }
  out << '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const RowLabel l = matrix.label(r);
    out << pattern_label(l.pattern, matrix.modes()) << ',' << l.efficiency_index << ','
        << internal::format_double(matrix.grid()[l.efficiency_index]);
    for (double v : matrix.row(r)) out << ',' << internal::format_double(v);
    out << '\n';
  }
}

}  // namespace clickstat
