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
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sacc/annotation_model.hpp"
#include "sacc/density_moments.hpp"
#include "sacc/loss.hpp"
#include "sacc/optimizer.hpp"

namespace sacc {

enum class LossKind { kScaleAware, kL2 };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);

/// Everything an experiment needs, loadable from a `key = value` text file.
struct ExperimentConfig {
  std::uint64_t seed = 7;

  // Scenes.
  int width = 32;
  int height = 32;
  int count_min = 16;
  int count_max = 16;
  int num_scenes = 10;
  double size_location = 2.0794415416798357;  // ln 8
  double size_scale = 0.5;
  int size_max = 64;
  /// Annotation-noise variance used to generate scenes.
  double data_alpha = 8.0;
  /// Keeps true positions this many pixels away from every border.
  double margin = 0.0;

  // Mixture.
  double alpha = 8.0;
  /// Empty: beta_1 is the head-size mean.
  std::optional<double> beta1;
  int num_scales = 3;
  bool scale_adjusted_alpha = true;

  // Low rank.
  double mass_threshold = 0.8;
  int rank = 0;
  /// Relative to the largest singular value. Tighter values leave 500
  /// descent steps far from converged.
  double jitter = 1e-2;
  bool jitter_relative = true;

  // Optimizer.
  double step = 1.0;
  int iterations = 500;
  double backtrack = 0.5;
  bool barzilai_borwein = true;

  LossKind loss = LossKind::kScaleAware;
  double reg_weight = 1.0;

  std::vector<double> sweep_alphas{2.0, 4.0, 8.0, 16.0, 32.0};
  std::vector<double> sweep_betas{8.0};

  int threads = 1;

  /// Throws sacc::Error naming the offending key.
  void validate() const;

  HeadSizeDistribution head_sizes() const;
  ScaleParams scale_params() const;
  LowRankOptions lowrank_options() const;
  DescentOptions descent_options() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
void write_config(std::ostream& out, const ExperimentConfig& config);

/// Worker count: SACC_THREADS when set, else the config value.
int resolve_threads(const ExperimentConfig& config);

/// Scenes generated from the config, scene k seeded by (seed, k).
std::vector<AnnotatedScene> generate_scenes(const ExperimentConfig& config);

/// Writes scene_NNNN.txt files plus manifest.csv into `out_dir`.
std::vector<std::string> cmd_synth(const ExperimentConfig& config, const std::string& out_dir);

/// Scenes listed in `dir`/manifest.csv, in manifest order.
std::vector<AnnotatedScene> load_scene_dir(const std::string& dir);

struct TraceRow {
  int step = 0;
  int scale = 0;
  double nll = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

/// Per-scale summary of the low-rank model used by a scale-aware fit.
struct LowRankSummary {
  int scale = 0;
  int grid_pixels = 0;
  int selected = 0;
  int rank = 0;
  double jitter = 0.0;
  double truncation_error = 0.0;
  std::vector<double> singular_values;
};

struct SceneFit {
  std::vector<DensityField> preds;
  std::vector<LowRankSummary> lowrank;
  std::vector<TraceRow> trace;
  double predicted_count = 0.0;
  int iterations = 0;
};

/// Fits free per-pixel predictions for one scene under `config.loss`.
SceneFit fit_scene(const AnnotatedScene& scene, const ExperimentConfig& config);

/// Count extraction: negative pixels clipped to zero, components summed across scales.
double predicted_count(const std::vector<DensityField>& preds);

struct CountRow {
  int scene = 0;
  double true_count = 0.0;
  double predicted = 0.0;
  double abs_error = 0.0;
};

struct CountReport {
  std::vector<CountRow> rows;
  double mae = 0.0;
  double mse = 0.0;

  static CountReport from_rows(std::vector<CountRow> rows);
};

struct FitOutput {
  CountReport report;
  std::vector<std::vector<TraceRow>> traces;
  std::vector<std::vector<LowRankSummary>> lowrank;
};

FitOutput cmd_fit(const ExperimentConfig& config, const std::vector<AnnotatedScene>& scenes);

struct SweepRow {
  double alpha = 0.0;
  double beta1 = 0.0;
  double mae = 0.0;
  double mse = 0.0;
};

/// cmd_fit at every (alpha, beta_1) in the config grids on a shared scene set,
/// rows ordered alpha-major.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config,
                                const std::vector<AnnotatedScene>& scenes);

void write_counts_csv(std::ostream& out, const CountReport& report);
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);
/// One row per (scene, scale); the spectrum is a space-separated list.
void write_lowrank_csv(std::ostream& out, const std::vector<std::vector<LowRankSummary>>& rows);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Formats with 17 significant digits.
std::string format_double(double v);

}  // namespace sacc
