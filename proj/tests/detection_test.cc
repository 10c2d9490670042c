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
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "clickstat/states.h"
#include "oracles.h"
#include "test_util.h"

namespace clickstat {
namespace {

std::vector<double> random_grid(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<double> etas;
  while (static_cast<int>(etas.size()) < k) {
    etas.push_back(u(rng));
    std::sort(etas.begin(), etas.end());
    etas.erase(std::unique(etas.begin(), etas.end()), etas.end());
  }
  return etas;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) s += (x = ex(rng));
  for (double& x : v) x /= s;
  return v;
}

TEST(Patterns, LabelsAndBits) {
  EXPECT_EQ(pattern_count(3), 8u);
  EXPECT_EQ(all_click_pattern(2), 0b11u);
  EXPECT_EQ(pattern_label(0b01, 2), "01");
  EXPECT_EQ(parse_pattern("10"), 0b10u);
  EXPECT_TRUE(mode_clicked(0b10, 0, 2));
  EXPECT_FALSE(mode_clicked(0b10, 1, 2));
  EXPECT_CLICKSTAT_ERROR(parse_pattern("0x"), ErrorKind::kInput);
}

TEST(EfficiencyGrid, Validation) {
  EXPECT_CLICKSTAT_ERROR(EfficiencyGrid(std::vector<double>{}), ErrorKind::kInput);
  EXPECT_CLICKSTAT_ERROR(EfficiencyGrid({0.2, 0.1}), ErrorKind::kInput);
  EXPECT_CLICKSTAT_ERROR(EfficiencyGrid({0.2, 0.2}), ErrorKind::kInput);
  EXPECT_CLICKSTAT_ERROR(EfficiencyGrid({0.0, 0.5}), ErrorKind::kDomain);
  EXPECT_CLICKSTAT_ERROR(EfficiencyGrid({0.5, 1.5}), ErrorKind::kDomain);
  const auto g = EfficiencyGrid::uniform(0.015, 0.325, 34);
  EXPECT_EQ(g.size(), 34u);
  EXPECT_DOUBLE_EQ(g[0], 0.015);
  EXPECT_DOUBLE_EQ(g.nominal(), 0.325);
  EXPECT_NEAR(g[1] - g[0], (0.325 - 0.015) / 33, 1e-15);
}

TEST(NoClickCoefficient, Values) {
  EXPECT_EQ(no_click_coefficient(0.37, 0), 1.0);
  EXPECT_EQ(no_click_coefficient(0.0, 7), 1.0);
  EXPECT_NEAR(no_click_coefficient(0.5, 2), 0.25, 1e-16);
  EXPECT_EQ(no_click_coefficient(1.0, 3), 0.0);
  // Log-space evaluation stays finite and tiny for huge photon numbers.
  const double tiny = no_click_coefficient(0.9, 300);
  EXPECT_GT(tiny, 0.0);
  EXPECT_NEAR(std::log(tiny), 300 * std::log(0.1), 1e-9);
  EXPECT_CLICKSTAT_ERROR(no_click_coefficient(1.2, 1), ErrorKind::kDomain);
}

TEST(BuildMatrix, SingleEfficiencyHandValues) {
  const auto b = build_matrix(EfficiencyGrid({0.5}), 2, 1);
  ASSERT_EQ(b.rows(), 3u);
  ASSERT_EQ(b.cols(), 4u);
  const double expected[4] = {1.0, 0.5, 0.5, 0.25};
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(b(0, c), expected[c], 1e-16);
}

TEST(BuildMatrix, VacuumColumnNeverClicks) {
  const auto b = build_matrix(EfficiencyGrid::uniform(0.1, 0.9, 7), 2, 3);
  for (std::size_t r = 0; r < b.rows(); ++r)
    EXPECT_EQ(b(r, 0), b.label(r).pattern == 0 ? 1.0 : 0.0);
}

TEST(BuildMatrix, LiteralTwoModeTranscription) {
  const int n_max = 3;
  const auto grid = EfficiencyGrid::uniform(0.015, 0.325, 34);
  const auto b = build_matrix(grid, 2, n_max);
  const std::size_t k_count = grid.size();
  ASSERT_EQ(b.rows(), 3 * k_count);
  for (std::size_t mu = 0; mu < b.rows(); ++mu) {
    const double eta = grid[mu % k_count];
    for (int n = 0; n <= n_max; ++n) {
      for (int k = 0; k <= n_max; ++k) {
        const double an = std::pow(1.0 - eta, n);
        const double ak = std::pow(1.0 - eta, k);
        double expect;
        if (mu < k_count) expect = an * ak;
        else if (mu < 2 * k_count) expect = an * (1.0 - ak);
        else expect = (1.0 - an) * ak;
        EXPECT_NEAR(b(mu, k + n * (1 + n_max)), expect, 1e-15);
      }
    }
  }
}

TEST(BuildMatrix, MatchesEnumerationTwoModes) {
  std::mt19937_64 rng(11);
  const auto etas = random_grid(rng, 5);
  const auto b = build_matrix(EfficiencyGrid(etas), 2, 3);
  const auto ref = oracle::full_matrix(etas, 2, 3);
  ASSERT_EQ(b.rows(), 3u * 5u);
  for (std::size_t r = 0; r < b.rows(); ++r)
    for (std::size_t c = 0; c < b.cols(); ++c) EXPECT_NEAR(b(r, c), ref[r][c], 1e-15);
}

TEST(BuildMatrix, ThreeModeLayoutAndAllClickBlock) {
  std::mt19937_64 rng(5);
  const auto etas = random_grid(rng, 4);
  const auto b = build_matrix(EfficiencyGrid(etas), 3, 2, {.include_all_click = true});
  const auto ref = oracle::full_matrix(etas, 3, 2);
  ASSERT_EQ(b.rows(), 8u * 4u);
  ASSERT_EQ(b.cols(), 27u);
  for (std::size_t r = 0; r < b.rows(); ++r) {
    EXPECT_EQ(b.label(r).pattern, r / 4);
    EXPECT_EQ(b.label(r).efficiency_index, r % 4);
    EXPECT_EQ(b.row_index(b.label(r).pattern, b.label(r).efficiency_index), r);
    for (std::size_t c = 0; c < b.cols(); ++c) EXPECT_NEAR(b(r, c), ref[r][c], 1e-15);
  }
}

TEST(BuildMatrix, ColumnStochasticPerEfficiency) {
  const auto grid = EfficiencyGrid::uniform(0.05, 1.0, 6);
  const auto b = build_matrix(grid, 3, 3);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t e = 0; e < grid.size(); ++e) {
      double sum = 0.0;
      for (std::size_t p = 0; p + 1 < pattern_count(3); ++p)
        sum += b(b.row_index(static_cast<ClickPattern>(p), e), c);
      double all = 1.0;
      const auto occ = oracle::occupation(static_cast<int>(c), 3, 3);
      for (int n : occ) all *= 1.0 - std::pow(1.0 - grid[e], n);
      EXPECT_NEAR(sum + all, 1.0, 1e-14);
    }
  }
  const auto full = build_matrix(grid, 3, 3, {.include_all_click = true});
  for (double s : full.column_sums()) EXPECT_NEAR(s, static_cast<double>(grid.size()), 1e-13);
}

TEST(BuildMatrix, ColumnCapAndHeterogeneousEfficiencies) {
  MatrixOptions small;
  small.max_columns = 100;
  EXPECT_CLICKSTAT_ERROR(build_matrix(EfficiencyGrid({0.5}), 2, 10, small), ErrorKind::kResource);
  MatrixOptions scaled;
  scaled.mode_efficiency_scale = {1.0, 0.5};
  const auto b = build_matrix(EfficiencyGrid({0.4}), 2, 1, scaled);
  // Column (n,k) = (0,1): only mode 2 holds a photon, seen with eta 0.2.
  EXPECT_NEAR(b(b.row_index(0b00, 0), 1), 0.8, 1e-15);
  EXPECT_NEAR(b(b.row_index(0b01, 0), 1), 0.2, 1e-15);
  scaled.mode_efficiency_scale = {1.0};
  EXPECT_CLICKSTAT_ERROR(build_matrix(EfficiencyGrid({0.4}), 2, 1, scaled), ErrorKind::kDimension);
}

TEST(BuildMatrix, ApplyAndTransposeAgreeWithDense) {
  std::mt19937_64 rng(3);
  const auto b = build_matrix(EfficiencyGrid(random_grid(rng, 5)), 2, 4);
  const auto q = random_simplex(rng, b.cols());
  const auto w = random_simplex(rng, b.rows());
  const auto g = b.apply(q);
  std::vector<double> bt(b.cols());
  b.apply_transpose(w, bt);
  for (std::size_t r = 0; r < b.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < b.cols(); ++c) s += b(r, c) * q[c];
    EXPECT_NEAR(g[r], s, 1e-15);
  }
  for (std::size_t c = 0; c < b.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < b.rows(); ++r) s += b(r, c) * w[r];
    EXPECT_NEAR(bt[c], s, 1e-15);
  }
  std::vector<double> wrong(3);
  EXPECT_CLICKSTAT_ERROR(b.apply(wrong), ErrorKind::kDimension);
}

TEST(ForwardModel, IsLinear) {
  std::mt19937_64 rng(8);
  const auto grid = EfficiencyGrid(random_grid(rng, 5));
  for (int trial = 0; trial < 10; ++trial) {
    const auto q1 = random_simplex(rng, 16);
    const auto q2 = random_simplex(rng, 16);
    const double alpha = std::uniform_real_distribution<double>(0, 1)(rng);
    std::vector<double> mix(16);
    for (int i = 0; i < 16; ++i) mix[i] = alpha * q1[i] + (1 - alpha) * q2[i];
    const auto p1 = forward_click_probabilities(JointDistribution(2, 3, q1), grid);
    const auto p2 = forward_click_probabilities(JointDistribution(2, 3, q2), grid);
    const auto pm = forward_click_probabilities(JointDistribution(2, 3, mix), grid);
    for (std::size_t e = 0; e < grid.size(); ++e)
      for (ClickPattern p = 0; p < 4; ++p)
        EXPECT_NEAR(pm(e, p), alpha * p1(e, p) + (1 - alpha) * p2(e, p), 1e-12);
  }
}

TEST(ForwardModel, NoClickStrictlyDecreasesWithEfficiency) {
  std::mt19937_64 rng(21);
  const auto grid = EfficiencyGrid::uniform(0.01, 1.0, 50);
  for (int trial = 0; trial < 10; ++trial) {
    auto q = random_simplex(rng, 9);
    q[0] *= 0.5;
    double s = 0.0;
    for (double v : q) s += v;
    for (double& v : q) v /= s;
    const auto probs = forward_click_probabilities(JointDistribution(2, 2, q), grid);
    for (std::size_t e = 1; e < grid.size(); ++e) EXPECT_LT(probs(e, 0), probs(e - 1, 0));
  }
}

TEST(ForwardModel, VacuumAndHeraldedHandValues) {
  const auto grid = EfficiencyGrid::uniform(0.1, 0.9, 5);
  const auto vac = forward_click_probabilities(JointDistribution::vacuum(2, 3), grid);
  for (std::size_t e = 0; e < grid.size(); ++e) EXPECT_EQ(vac(e, 0b00), 1.0);
  const auto h = forward_click_probabilities(heralded_split_state(0.5, 3), EfficiencyGrid({0.2}));
  EXPECT_NEAR(h(0, 0b00), 0.8, 1e-15);
  EXPECT_NEAR(h(0, 0b01), 0.1, 1e-15);
  EXPECT_NEAR(h(0, 0b10), 0.1, 1e-15);
  EXPECT_NEAR(h(0, 0b11), 0.0, 1e-15);
  h.validate(1e-12);
}

TEST(ForwardModel, MatchesPhotonEnumeration) {
  std::mt19937_64 rng(77);
  for (int modes : {2, 3}) {
    const int n_max = modes == 2 ? 3 : 2;
    const auto etas = random_grid(rng, 4);
    const std::size_t cols = static_cast<std::size_t>(oracle::ipow(n_max + 1, modes));
    const auto q = random_simplex(rng, cols);
    const auto probs =
        forward_click_probabilities(JointDistribution(modes, n_max, q), EfficiencyGrid(etas));
    for (std::size_t e = 0; e < etas.size(); ++e) {
      for (std::uint32_t p = 0; p < (1u << modes); ++p) {
        double expect = 0.0;
        for (std::size_t c = 0; c < cols; ++c)
          expect += q[c] * oracle::pattern_given_photons(
                               p, oracle::occupation(static_cast<int>(c), modes, n_max), etas[e]);
        EXPECT_NEAR(probs(e, p), expect, 1e-12);
      }
    }
  }
}

TEST(MatrixCsv, HeaderAndShape) {
  const auto b = build_matrix(EfficiencyGrid({0.25, 0.5}), 2, 1);
  std::ostringstream out;
  write_matrix_csv(b, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "pattern,eta_index,eta,rho_0_0,rho_0_1,rho_1_0,rho_1_1");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
  EXPECT_NE(out.str().find("01,1,0.5,"), std::string::npos);
}

}  // namespace
}  // namespace clickstat
