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
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace sacc {

/// Continuous image coordinate. Pixel centers sit on integers, origin top-left.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Annotation {
  Vec2 true_pos;
  Vec2 noisy_pos;
  double head_size = 1.0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// An image extent plus its annotated heads.
///
/// True positions must lie in [0,width) x [0,height); noisy positions may
/// fall anywhere since annotation noise is unbounded.
class AnnotatedScene {
 public:
  AnnotatedScene(int width, int height, std::vector<Annotation> annotations = {});

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return annotations_.size(); }
  bool empty() const { return annotations_.empty(); }
  const std::vector<Annotation>& annotations() const { return annotations_; }

  friend bool operator==(const AnnotatedScene&, const AnnotatedScene&) = default;

 private:
  int width_;
  int height_;
  std::vector<Annotation> annotations_;
};

/// Which of the two stored positions an operation should read.
enum class PositionSource { kTrue, kNoisy };

/// Discrete head-size distribution P_head(h) on equal-width bins, optionally
/// remembering the log-normal it was discretized from.
class HeadSizeDistribution {
 public:
  struct LogNormal {
    double location = 0.0;  // mean of ln h
    double scale = 1.0;     // std-dev of ln h
  };

  /// Bins are given by their centers; probabilities are renormalized to sum 1.
  HeadSizeDistribution(std::vector<double> bin_centers, std::vector<double> probabilities);

  /// Discretizes a log-normal onto unit-width bins centered at 1, 2, ..., max_size.
  static HeadSizeDistribution log_normal(double location, double scale, int max_size = 64);

  /// All mass on a single head size.
  static HeadSizeDistribution point_mass(double size);

  /// Empirical histogram of sampled head sizes, unit-width bins.
  static HeadSizeDistribution from_samples(std::span<const double> sizes);

  const std::vector<double>& bin_centers() const { return centers_; }
  const std::vector<double>& probabilities() const { return probs_; }
  const std::optional<LogNormal>& parametric() const { return parametric_; }

  double mean() const;
  double median() const;

  /// P_head at the bin whose center is nearest to `size` (ties go to the lower bin).
  double probability_at(double size) const;

  /// Draws one head size: continuous when a parametric form is attached,
  /// otherwise a bin center chosen by its probability.
  double sample(std::mt19937_64& rng) const;

 private:
  std::vector<double> centers_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
  std::optional<LogNormal> parametric_;
};

/// Mixture configuration: annotation-noise variance, per-scale kernel
/// variances and weights.
struct ScaleParams {
  double alpha = 8.0;
  std::vector<double> betas;
  std::vector<double> weights;
  double downsample_factor = 2.0;
  /// Scale the noise variance by factor^-2 per scale step (see density_moments).
  bool scale_adjusted_alpha = true;

  int num_scales() const { return static_cast<int>(betas.size()); }
  double beta(int scale_index) const;
  double weight(int scale_index) const;
  /// Noise variance expressed in the coordinates of `scale_index`.
  double alpha_at(int scale_index) const;
  /// Coordinate divisor factor^(scale_index-1).
  double coordinate_divisor(int scale_index) const;

  /// Throws unless alpha >= 0, betas > 0, weights >= 0 and summing to 1.
  void validate() const;
};

/// beta_1 = mean head size, beta_{s+1} = beta_s / 2, w_s = P_head(beta_{S+1-s}) normalized.
ScaleParams build_scale_params(const HeadSizeDistribution& dist, int num_scales, double alpha);

/// Same schedule but with an explicit beta_1 instead of the distribution mean.
ScaleParams build_scale_params(const HeadSizeDistribution& dist, int num_scales, double alpha,
                               double beta1);

/// True positions uniform over the image (or over the image shrunk by
/// `margin` on every side), head sizes i.i.d. from `dist`, noisy position =
/// true + N(0, alpha I). Deterministic in `seed`.
AnnotatedScene sample_scene(int width, int height, int count, const HeadSizeDistribution& dist,
                            double alpha, std::uint64_t seed, double margin = 0.0);

/// Noisy positions divided by factor^(scale_index-1).
std::vector<Vec2> rescale_annotations(const AnnotatedScene& scene, int scale_index, double factor,
                                      PositionSource source = PositionSource::kNoisy);

void write_scene(std::ostream& out, const AnnotatedScene& scene);
AnnotatedScene read_scene(std::istream& in);
void save_scene(const std::string& path, const AnnotatedScene& scene);
AnnotatedScene load_scene(const std::string& path);

}  // namespace sacc
