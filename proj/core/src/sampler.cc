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

#include "clickstat/sampler.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "clickstat/errors.h"
#include "internal.h"

namespace clickstat {
namespace {

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void ClickRecord::validate() const {
  const std::size_t k = grid.size();
  const std::size_t count = pattern_count(modes);
  require(counts.size() == k && runs.size() == k, ErrorKind::kDimension,
          "click record needs one count set and one run total per efficiency");
  for (std::size_t e = 0; e < k; ++e) {
    require(counts[e].size() == count, ErrorKind::kDimension,
            "click record needs 2^M pattern counts per efficiency");
    require(runs[e] > 0, ErrorKind::kInput, "click record has zero runs at an efficiency");
    std::uint64_t total = 0;
    for (auto c : counts[e]) total += c;
    require(total == runs[e], ErrorKind::kInput,
            "pattern counts do not sum to the run total at efficiency index " +
                std::to_string(e));
  }
}

std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t stream) {
  return make_stream(master_seed, stream)();
}

std::vector<std::uint64_t> sample_multinomial(const std::vector<double>& p, std::uint64_t runs,
                                              std::uint64_t seed, std::uint64_t stream) {
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[i] = acc;
  }
  // Normalize away rounding so the last category closes the interval.
  for (double& c : cdf) c /= acc;
  cdf.back() = 1.0;
  std::vector<std::uint64_t> counts(p.size(), 0);
  auto rng = make_stream(seed, stream);
  for (std::uint64_t r = 0; r < runs; ++r) {
    const double u = next_unit(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    ++counts[static_cast<std::size_t>(it - cdf.begin())];
  }
  return counts;
}

ClickRecord sample_clicks(const ClickProbabilities& probs, std::uint64_t runs_per_eta,
                          std::uint64_t seed, unsigned threads) {
  require(runs_per_eta >= 1, ErrorKind::kInput, "runs per efficiency must be >= 1");
  probs.validate(1e-9);
  const std::size_t k = probs.grid.size();
  ClickRecord record{probs.modes, probs.grid, {}, std::vector<std::uint64_t>(k, runs_per_eta),
                     kRngAlgorithm, seed};
  record.counts.resize(k);
  internal::parallel_for(k, threads, [&](std::size_t e) {
    record.counts[e] = sample_multinomial(probs.patterns[e], runs_per_eta, seed, e);
  });
  return record;
}

std::vector<double> frequencies(const ClickRecord& record, bool include_all_click) {
  record.validate();
  const std::size_t k = record.grid.size();
  const std::size_t blocks = pattern_count(record.modes) - (include_all_click ? 0 : 1);
  std::vector<double> h(blocks * k);
  for (std::size_t p = 0; p < blocks; ++p) {
    for (std::size_t e = 0; e < k; ++e) {
      h[p * k + e] = static_cast<double>(record.counts[e][p]) / static_cast<double>(record.runs[e]);
    }
  }
  return h;
}

ClickProbabilities empirical_probabilities(const ClickRecord& record) {
  record.validate();
  ClickProbabilities out{record.modes, record.grid, {}};
  out.patterns.resize(record.grid.size());
  for (std::size_t e = 0; e < record.grid.size(); ++e) {
    out.patterns[e].resize(record.counts[e].size());
    for (std::size_t p = 0; p < record.counts[e].size(); ++p) {
      out.patterns[e][p] =
          static_cast<double>(record.counts[e][p]) / static_cast<double>(record.runs[e]);
    }
  }
  return out;
}

void write_record_csv(const ClickRecord& record, std::ostream& out) {
  record.validate();
  out << "eta,pattern,count,runs\n";
  for (std::size_t e = 0; e < record.grid.size(); ++e) {
    for (std::size_t p = 0; p < record.counts[e].size(); ++p) {
      out << internal::format_double(record.grid[e]) << ','
          << pattern_label(static_cast<ClickPattern>(p), record.modes) << ','
          << record.counts[e][p] << ',' << record.runs[e] << '\n';
    }
  }
}

ClickRecord read_record_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kIo, "record CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "eta,pattern,count,runs", ErrorKind::kIo,
          "record CSV header must be 'eta,pattern,count,runs'");

  struct Row {
    std::map<ClickPattern, std::uint64_t> counts;
    std::uint64_t runs = 0;
  };
  std::vector<double> etas;
  std::vector<Row> rows;
  int modes = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string eta_s, pattern_s, count_s, runs_s;
    const bool ok = std::getline(ss, eta_s, ',') && std::getline(ss, pattern_s, ',') &&
                    std::getline(ss, count_s, ',') && std::getline(ss, runs_s);
    require(ok, ErrorKind::kIo, "record CSV line " + std::to_string(line_no) + " is malformed");
    double eta = 0.0;
    std::uint64_t count = 0, runs = 0;
    try {
      std::size_t used = 0;
      eta = std::stod(eta_s, &used);
      require(used == eta_s.size(), ErrorKind::kIo, "bad eta");
      count = std::stoull(count_s, &used);
      require(used == count_s.size(), ErrorKind::kIo, "bad count");
      runs = std::stoull(runs_s, &used);
      require(used == runs_s.size(), ErrorKind::kIo, "bad runs");
    } catch (const std::logic_error&) {
      fail(ErrorKind::kIo, "record CSV line " + std::to_string(line_no) + " has a bad number");
    }
    const ClickPattern pattern = parse_pattern(pattern_s);
    const int m = static_cast<int>(pattern_s.size());
    require(modes < 0 || modes == m, ErrorKind::kIo, "record CSV mixes pattern lengths");
    modes = m;
    if (etas.empty() || etas.back() != eta) {
      etas.push_back(eta);
      rows.emplace_back();
      rows.back().runs = runs;
    }
    Row& row = rows.back();
    require(row.runs == runs, ErrorKind::kIo, "record CSV has inconsistent runs at one eta");
    require(row.counts.emplace(pattern, count).second, ErrorKind::kIo,
            "record CSV repeats a pattern at one eta");
  }
  require(!etas.empty(), ErrorKind::kIo, "record CSV has no data rows");

  ClickRecord record{modes, EfficiencyGrid(etas), {}, {}, "", 0};
  const std::size_t count = pattern_count(modes);
  for (const Row& row : rows) {
    std::vector<std::uint64_t> c(count, 0);
    require(row.counts.size() == count, ErrorKind::kIo,
            "record CSV must list every pattern at every eta");
    for (const auto& [p, n] : row.counts) c[p] = n;
    record.counts.push_back(std::move(c));
    record.runs.push_back(row.runs);
  }
  record.validate();
  return record;
}

}  // namespace clickstat
