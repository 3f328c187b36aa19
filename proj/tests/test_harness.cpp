/* Copyright 2026 The SACC Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sacc/error.hpp"
#include "sacc/fusion_ops.hpp"
#include "sacc/harness.hpp"

namespace sacc {
namespace {

namespace fs = std::filesystem;

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.width = 16;
  c.height = 16;
  c.count_min = 3;
  c.count_max = 6;
  c.num_scenes = 4;
  c.iterations = 80;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sacc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Config, ParsesKeysAndComments) {
  std::istringstream in(
      "# experiment\n"
      "seed = 42\n"
      "alpha = 4.5   # trailing\n"
      "beta1 = 6\n"
      "loss = l2\n"
      "sweep_alphas = 1, 2, 3\n"
      "scale_adjusted_alpha = false\n");
  const auto c = parse_config(in);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_DOUBLE_EQ(c.alpha, 4.5);
  ASSERT_TRUE(c.beta1.has_value());
  EXPECT_DOUBLE_EQ(*c.beta1, 6.0);
  EXPECT_EQ(c.loss, LossKind::kL2);
  EXPECT_EQ(c.sweep_alphas, (std::vector<double>{1, 2, 3}));
  EXPECT_FALSE(c.scale_adjusted_alpha);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  std::istringstream unknown("alpah = 3\n");
  EXPECT_THROW(parse_config(unknown), Error);
  std::istringstream bad("alpha = three\n");
  EXPECT_THROW(parse_config(bad), Error);
  std::istringstream nokey("just words\n");
  EXPECT_THROW(parse_config(nokey), Error);
}

TEST(Config, WriteRoundTrips) {
  auto c = small_config();
  c.beta1 = 7.25;
  c.margin = 2.0;
  c.sweep_betas = {4.0, 8.0};
  std::stringstream buf;
  write_config(buf, c);
  const auto back = parse_config(buf);
  std::stringstream again;
  write_config(again, back);
  std::stringstream first;
  write_config(first, c);
  EXPECT_EQ(first.str(), again.str());
}

TEST(Config, Validation) {
  auto c = small_config();
  c.count_min = 7;
  c.count_max = 3;
  EXPECT_THROW(c.validate(), Error);
  c = small_config();
  c.num_scales = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Synth, DeterministicAndWithinCountRange) {
  auto c = small_config();
  c.count_min = 50;
  c.count_max = 50;
  c.width = 40;
  c.height = 40;
  const auto a = generate_scenes(c);
  const auto b = generate_scenes(c);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(a[k] == b[k]);
    EXPECT_EQ(a[k].size(), 50u);
  }
  c.seed += 1;
  EXPECT_FALSE(generate_scenes(c)[0] == a[0]);
}

TEST(Synth, HeadSizesSkewRight) {
  auto c = small_config();
  c.num_scenes = 100;
  c.count_min = 5;
  c.count_max = 20;
  std::vector<double> sizes;
  for (const auto& s : generate_scenes(c)) {
    EXPECT_GE(static_cast<int>(s.size()), 5);
    EXPECT_LE(static_cast<int>(s.size()), 20);
    for (const auto& a : s.annotations()) sizes.push_back(a.head_size);
  }
  double m = 0.0;
  for (double v : sizes) m += v;
  m /= static_cast<double>(sizes.size());
  double m2 = 0.0, m3 = 0.0;
  for (double v : sizes) {
    m2 += (v - m) * (v - m);
    m3 += (v - m) * (v - m) * (v - m);
  }
  m2 /= static_cast<double>(sizes.size());
  m3 /= static_cast<double>(sizes.size());
  EXPECT_GT(m3 / std::pow(m2, 1.5), 0.0);
}

TEST(Synth, WritesFilesThatLoadBack) {
  const auto dir = scratch_dir("synth");
  const auto c = small_config();
  const auto files = cmd_synth(c, dir.string());
  EXPECT_EQ(files.size(), 4u);
  const auto loaded = load_scene_dir(dir.string());
  const auto expect = generate_scenes(c);
  ASSERT_EQ(loaded.size(), expect.size());
  for (std::size_t k = 0; k < loaded.size(); ++k) EXPECT_TRUE(loaded[k] == expect[k]);
  EXPECT_EQ(slurp(dir / "manifest.csv").rfind("scene,file,", 0), 0u);
  fs::remove_all(dir);
}

TEST(Fit, TraceNeverIncreasesPerScale) {
  const auto c = small_config();
  const auto scenes = generate_scenes(c);
  for (const LossKind kind : {LossKind::kScaleAware, LossKind::kL2}) {
    auto cc = c;
    cc.loss = kind;
    const auto fit = fit_scene(scenes[0], cc);
    std::map<int, double> last;
    for (const auto& r : fit.trace) {
      EXPECT_NEAR(r.total, r.nll + r.reg, 1e-9 * std::max(1.0, r.total));
      if (last.count(r.scale)) EXPECT_LE(r.total, last[r.scale]) << "step " << r.step;
      last[r.scale] = r.total;
    }
    EXPECT_EQ(fit.preds.size(), 3u);
    EXPECT_DOUBLE_EQ(fit.predicted_count, predicted_count(fit.preds));
  }
}

TEST(Fit, LowRankSummaryOnlyForScaleAware) {
  auto c = small_config();
  const auto scene = generate_scenes(c)[0];
  const auto fit = fit_scene(scene, c);
  ASSERT_EQ(fit.lowrank.size(), 3u);
  for (const auto& l : fit.lowrank) {
    EXPECT_GT(l.selected, 0);
    EXPECT_LE(l.selected, l.grid_pixels);
    EXPECT_EQ(l.rank, l.selected);
    EXPECT_EQ(static_cast<int>(l.singular_values.size()), l.rank);
  }
  c.loss = LossKind::kL2;
  EXPECT_TRUE(fit_scene(scene, c).lowrank.empty());
}

TEST(Fit, ReportIsConsistent) {
  const auto c = small_config();
  const auto out = cmd_fit(c, generate_scenes(c));
  ASSERT_EQ(out.report.rows.size(), 4u);
  double mae = 0.0, mse = 0.0;
  for (const auto& r : out.report.rows) {
    EXPECT_DOUBLE_EQ(r.abs_error, std::abs(r.predicted - r.true_count));
    mae += r.abs_error;
    mse += r.abs_error * r.abs_error;
  }
  EXPECT_NEAR(out.report.mae, mae / 4.0, 1e-12);
  EXPECT_NEAR(out.report.mse, mse / 4.0, 1e-12);
  EXPECT_LE(out.report.mae, std::sqrt(out.report.mse) + 1e-12);

  std::ostringstream csv;
  write_counts_csv(csv, out.report);
  EXPECT_EQ(csv.str().rfind("scene,true_count,predicted_count,abs_error\n", 0), 0u);
  std::ostringstream trace;
  write_trace_csv(trace, out.traces[0]);
  EXPECT_EQ(trace.str().rfind("step,scale,nll,reg,total\n", 0), 0u);
  std::ostringstream lr;
  write_lowrank_csv(lr, out.lowrank);
  EXPECT_EQ(lr.str().rfind("scene,scale,grid_pixels,selected,rank,jitter,truncation_error,singular_values\n", 0), 0u);
}

TEST(Fit, ThreadCountDoesNotChangeResults) {
  auto c = small_config();
  const auto scenes = generate_scenes(c);
  const auto one = cmd_fit(c, scenes);
  c.threads = 3;
  const auto three = cmd_fit(c, scenes);
  for (std::size_t k = 0; k < one.report.rows.size(); ++k) {
    EXPECT_EQ(one.report.rows[k].predicted, three.report.rows[k].predicted);
  }
}

TEST(Fit, NoiseFreeCountsAreAccurate) {
  ExperimentConfig c;  // 16 heads on 32x32, 500 iterations
  c.num_scenes = 5;
  c.data_alpha = 0.0;
  c.margin = 12.0;
  const auto scenes = generate_scenes(c);
  for (const LossKind kind : {LossKind::kScaleAware, LossKind::kL2}) {
    c.loss = kind;
    EXPECT_LE(cmd_fit(c, scenes).report.mae, 0.5) << to_string(kind);
  }
}

TEST(Sweep, OneRowPerGridPoint) {
  auto c = small_config();
  c.num_scenes = 2;
  c.iterations = 20;
  c.sweep_alphas = {2.0, 8.0, 32.0};
  c.sweep_betas = {4.0, 8.0};
  const auto rows = cmd_sweep(c, generate_scenes(c));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_DOUBLE_EQ(rows[0].alpha, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].beta1, 4.0);
  EXPECT_DOUBLE_EQ(rows[1].beta1, 8.0);
  EXPECT_DOUBLE_EQ(rows[5].alpha, 32.0);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  EXPECT_EQ(csv.str().rfind("alpha,beta1,mae,mse\n", 0), 0u);
}

TEST(Sweep, SinglePointMatchesFit) {
  auto c = small_config();
  c.num_scenes = 2;
  c.iterations = 30;
  c.sweep_alphas = {4.0};
  c.sweep_betas = {6.0};
  const auto scenes = generate_scenes(c);
  const auto rows = cmd_sweep(c, scenes);
  ASSERT_EQ(rows.size(), 1u);
  c.alpha = 4.0;
  c.beta1 = 6.0;
  const auto fit = cmd_fit(c, scenes);
  EXPECT_EQ(rows[0].mae, fit.report.mae);
  EXPECT_EQ(rows[0].mse, fit.report.mse);
}

TEST(ShippedConfigs, DefaultConfigMatchesBuiltInDefaults) {
  const auto c = load_config(std::string(SACC_SOURCE_DIR) + "/configs/default.cfg");
  std::ostringstream a, b;
  write_config(a, c);
  write_config(b, ExperimentConfig{});
  EXPECT_EQ(a.str(), b.str());
}

TEST(ShippedConfigs, GraphCounts) {
  const auto g = load_graph(std::string(SACC_SOURCE_DIR) + "/configs/sacc_net.graph");
  ASSERT_TRUE(g.input.has_value());
  const auto c = count_params_macs(g.layers, *g.input);
  EXPECT_EQ(c.layers.back().out.channels, 1);
  EXPECT_GT(c.params, 0);
}

TEST(FormatDouble, RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

}  // namespace
}  // namespace sacc
