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

#include "clickstat/joint_distribution.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "clickstat/errors.h"

namespace clickstat {

std::size_t tensor_size(int modes, int truncation) {
  require(modes >= 1, ErrorKind::kDomain, "mode count must be >= 1");
  require(truncation >= 0, ErrorKind::kDomain, "truncation must be >= 0");
  const std::size_t base = static_cast<std::size_t>(truncation) + 1;
  std::size_t size = 1;
  for (int m = 0; m < modes; ++m) {
    require(size <= std::numeric_limits<std::size_t>::max() / base,
            ErrorKind::kResource, "photon-number tensor size overflows");
    size *= base;
  }
  return size;
}

FockIndexer::FockIndexer(int modes, int truncation)
    : modes_(modes), truncation_(truncation), size_(tensor_size(modes, truncation)) {}

std::size_t FockIndexer::flatten(std::span<const int> occupation) const {
  require(occupation.size() == static_cast<std::size_t>(modes_), ErrorKind::kDimension,
          "occupation has " + std::to_string(occupation.size()) + " entries, expected " +
              std::to_string(modes_));
  std::size_t flat = 0;
  const std::size_t base = static_cast<std::size_t>(truncation_) + 1;
  for (int n : occupation) {
    require(n >= 0 && n <= truncation_, ErrorKind::kDomain,
            "photon number " + std::to_string(n) + " outside [0, " +
                std::to_string(truncation_) + "]");
    flat = flat * base + static_cast<std::size_t>(n);
  }
  return flat;
}

void FockIndexer::unflatten(std::size_t flat, std::span<int> out) const {
  require(flat < size_, ErrorKind::kDomain, "flat index out of range");
  const std::size_t base = static_cast<std::size_t>(truncation_) + 1;
  for (int m = modes_ - 1; m >= 0; --m) {
    out[static_cast<std::size_t>(m)] = static_cast<int>(flat % base);
    flat /= base;
  }
}

std::vector<int> FockIndexer::unflatten(std::size_t flat) const {
  std::vector<int> out(static_cast<std::size_t>(modes_));
  unflatten(flat, out);
  return out;
}

JointDistribution::JointDistribution(int modes, int truncation, std::vector<double> values,
                                     double leakage)
    : indexer_(modes, truncation), values_(std::move(values)), leakage_(leakage) {
  require(values_.size() == indexer_.size(), ErrorKind::kDimension,
          "distribution has " + std::to_string(values_.size()) + " entries, expected " +
              std::to_string(indexer_.size()));
  require(std::isfinite(leakage_) && leakage_ >= 0.0 && leakage_ <= 1.0, ErrorKind::kDomain,
          "leakage must lie in [0, 1]");
  for (double v : values_) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::kDomain,
            "distribution entries must be finite and nonnegative");
  }
  const double mass = total();
  require(mass <= 1.0 + kMassTolerance && mass >= 1.0 - leakage_ - kMassTolerance,
          ErrorKind::kInput,
          "total mass " + std::to_string(mass) + " inconsistent with declared leakage " +
              std::to_string(leakage_));
}

JointDistribution JointDistribution::vacuum(int modes, int truncation) {
  std::vector<double> values(tensor_size(modes, truncation), 0.0);
  values[0] = 1.0;
  return JointDistribution(modes, truncation, std::move(values));
}

double JointDistribution::total() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double JointDistribution::at(std::span<const int> occupation) const {
  return values_[indexer_.flatten(occupation)];
}

double JointDistribution::operator()(int n, int k) const {
  require(modes() == 2, ErrorKind::kDimension, "(n, k) access requires a two-mode distribution");
  const int occ[2] = {n, k};
  return at(occ);
}

JointDistribution JointDistribution::renormalized() const {
  const double mass = total();
  require(mass > 0.0, ErrorKind::kInput, "cannot renormalize a zero distribution");
  std::vector<double> scaled(values_);
  for (double& v : scaled) v /= mass;
  return JointDistribution(modes(), truncation(), std::move(scaled), 0.0);
}

}  // namespace clickstat
