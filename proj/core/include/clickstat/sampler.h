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
#include <iosfwd>
#include <string>
#include <vector>

#include "clickstat/detection.h"

namespace clickstat {

/// Name of the pinned generator; written into every record and manifest.
inline constexpr const char* kRngAlgorithm =
    "mt19937_64/seed_seq(seed_lo,seed_hi,stream)/u53-inverse-cdf";

/// Click counts per efficiency and per pattern, as collected by an
/// experiment that takes runs[e] shots at efficiency grid[e].
struct ClickRecord {
  int modes = 1;
  EfficiencyGrid grid{std::vector<double>{1.0}};
  /// counts[e][pattern], all 2^M patterns.
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::uint64_t> runs;
  /// Provenance. Informational only; not used by the reconstruction.
  std::string rng_algorithm;
  std::uint64_t seed = 0;

  /// Shape checks plus sum(counts[e]) == runs[e] > 0.
  void validate() const;

  bool operator==(const ClickRecord&) const = default;
};

/// Seed of the generator for efficiency `stream` under `master_seed`. Streams
/// depend only on (master_seed, stream), so appending efficiencies leaves the
/// earlier streams untouched.
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream);

/// One multinomial draw of `runs_per_eta` shots over the 2^M patterns at every
/// efficiency. Each efficiency uses its own substream; output is identical for
/// any `threads`.
ClickRecord sample_clicks(const ClickProbabilities& probs, std::uint64_t runs_per_eta,
                          std::uint64_t seed, unsigned threads = 1);

/// Multinomial draw of `runs` shots with category probabilities `p`, drawn
/// from the substream (seed, stream).
std::vector<std::uint64_t> sample_multinomial(const std::vector<double>& p, std::uint64_t runs,
                                              std::uint64_t seed, std::uint64_t stream);

/// Frequencies counts/runs laid out pattern-block-major (all K efficiencies of
/// pattern 0, then pattern 1, ...) matching DetectionMatrix rows. The
/// all-click block is appended only when `include_all_click` is set.
std::vector<double> frequencies(const ClickRecord& record, bool include_all_click = false);

/// Empirical probabilities of the record in ClickProbabilities form.
ClickProbabilities empirical_probabilities(const ClickRecord& record);

/// CSV with header "eta,pattern,count,runs", one row per (efficiency, pattern).
void write_record_csv(const ClickRecord& record, std::ostream& out);
ClickRecord read_record_csv(std::istream& in);

}  // namespace clickstat
