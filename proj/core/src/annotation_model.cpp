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
#include "sacc/annotation_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sacc/error.hpp"

namespace sacc {

AnnotatedScene::AnnotatedScene(int width, int height, std::vector<Annotation> annotations)
    : width_(width), height_(height), annotations_(std::move(annotations)) {
  if (width_ < 1 || height_ < 1) {
    throw Error("scene dimensions must be positive");
  }
  for (const auto& a : annotations_) {
    if (!(a.head_size > 0.0)) {
      throw Error("head_size must be positive");
    }
    if (!(a.true_pos.x >= 0.0 && a.true_pos.x < width_ && a.true_pos.y >= 0.0 &&
          a.true_pos.y < height_)) {
      throw Error("true head position outside the image");
    }
  }
}

// ---------------------------------------------------------------------------
// HeadSizeDistribution

HeadSizeDistribution::HeadSizeDistribution(std::vector<double> bin_centers,
                                           std::vector<double> probabilities)
    : centers_(std::move(bin_centers)), probs_(std::move(probabilities)) {
  if (centers_.empty() || centers_.size() != probs_.size()) {
    throw Error("head-size histogram needs matching, nonempty bins and probabilities");
  }
  if (!std::is_sorted(centers_.begin(), centers_.end()) ||
      std::adjacent_find(centers_.begin(), centers_.end()) != centers_.end()) {
    throw Error("head-size bin centers must be strictly increasing");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error("head-size probabilities must be >= 0");
    total += p;
  }
  if (!(total > 0.0)) throw Error("degenerate head-size distribution");
  cdf_.resize(probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    probs_[i] /= total;
    acc += probs_[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

HeadSizeDistribution HeadSizeDistribution::log_normal(double location, double scale,
                                                      int max_size) {
  if (!(scale > 0.0) || max_size < 1) throw Error("log-normal needs scale > 0 and max_size >= 1");
  std::vector<double> centers(static_cast<std::size_t>(max_size));
  std::vector<double> probs(centers.size());
  auto cdf = [&](double h) {
    if (h <= 0.0) return 0.0;
    return 0.5 * std::erfc(-(std::log(h) - location) / (scale * std::sqrt(2.0)));
  };
  for (int i = 0; i < max_size; ++i) {
    const double c = i + 1.0;
    centers[static_cast<std::size_t>(i)] = c;
    probs[static_cast<std::size_t>(i)] = cdf(c + 0.5) - cdf(c - 0.5);
  }
  HeadSizeDistribution dist(std::move(centers), std::move(probs));
  dist.parametric_ = LogNormal{location, scale};
  return dist;
}

HeadSizeDistribution HeadSizeDistribution::point_mass(double size) {
  if (!(size > 0.0)) throw Error("head size must be positive");
  return HeadSizeDistribution({size}, {1.0});
}

HeadSizeDistribution HeadSizeDistribution::from_samples(std::span<const double> sizes) {
  if (sizes.empty()) throw Error("degenerate head-size distribution");
  const double top = *std::max_element(sizes.begin(), sizes.end());
  const int bins = std::max(1, static_cast<int>(std::lround(top)));
  std::vector<double> centers(static_cast<std::size_t>(bins));
  std::vector<double> counts(centers.size(), 0.0);
  std::iota(centers.begin(), centers.end(), 1.0);
  for (double h : sizes) {
    const long b = std::clamp(std::lround(h), 1L, static_cast<long>(bins));
    counts[static_cast<std::size_t>(b - 1)] += 1.0;
  }
  return HeadSizeDistribution(std::move(centers), std::move(counts));
}

double HeadSizeDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) m += centers_[i] * probs_[i];
  return m;
}

double HeadSizeDistribution::median() const {
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), 0.5);
  return centers_[static_cast<std::size_t>(it - cdf_.begin())];
}

double HeadSizeDistribution::probability_at(double size) const {
  const auto it = std::lower_bound(centers_.begin(), centers_.end(), size);
  if (it == centers_.begin()) return probs_.front();
  if (it == centers_.end()) return probs_.back();
  const auto hi = static_cast<std::size_t>(it - centers_.begin());
  const auto lo = hi - 1;
  return (size - centers_[lo] <= centers_[hi] - size) ? probs_[lo] : probs_[hi];
}

double HeadSizeDistribution::sample(std::mt19937_64& rng) const {
  if (parametric_) {
    std::lognormal_distribution<double> d(parametric_->location, parametric_->scale);
    return d(rng);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), r);
  const auto idx = std::min(static_cast<std::size_t>(it - cdf_.begin()), centers_.size() - 1);
  return centers_[idx];
}

// ---------------------------------------------------------------------------
// ScaleParams

double ScaleParams::beta(int scale_index) const {
  if (scale_index < 1 || scale_index > num_scales()) throw Error("scale_index out of range");
  return betas[static_cast<std::size_t>(scale_index - 1)];
}

double ScaleParams::weight(int scale_index) const {
  if (scale_index < 1 || scale_index > num_scales()) throw Error("scale_index out of range");
  return weights[static_cast<std::size_t>(scale_index - 1)];
}

double ScaleParams::coordinate_divisor(int scale_index) const {
  if (scale_index < 1 || scale_index > num_scales()) throw Error("scale_index out of range");
  return std::pow(downsample_factor, scale_index - 1);
}

double ScaleParams::alpha_at(int scale_index) const {
  if (!scale_adjusted_alpha) return alpha;
  const double d = coordinate_divisor(scale_index);
  return alpha / (d * d);
}

void ScaleParams::validate() const {
  if (betas.empty() || betas.size() != weights.size()) {
    throw Error("ScaleParams needs one beta and one weight per scale");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error("alpha must be >= 0");
  if (!(downsample_factor > 0.0)) throw Error("downsample_factor must be positive");
  double total = 0.0;
  for (std::size_t s = 0; s < betas.size(); ++s) {
    if (!(betas[s] > 0.0)) throw Error("every beta must be positive");
    if (!(weights[s] >= 0.0)) throw Error("weights must be nonnegative");
    total += weights[s];
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("weights must sum to 1");
}

ScaleParams build_scale_params(const HeadSizeDistribution& dist, int num_scales, double alpha) {
  return build_scale_params(dist, num_scales, alpha, dist.mean());
}

ScaleParams build_scale_params(const HeadSizeDistribution& dist, int num_scales, double alpha,
                               double beta1) {
  if (num_scales < 1) throw Error("num_scales must be >= 1");
  if (!(alpha > 0.0)) throw Error("alpha must be > 0");
  if (!(beta1 > 0.0)) throw Error("beta_1 must be > 0");

  ScaleParams p;
  p.alpha = alpha;
  p.betas.resize(static_cast<std::size_t>(num_scales));
  p.betas[0] = beta1;
  for (std::size_t s = 1; s < p.betas.size(); ++s) p.betas[s] = p.betas[s - 1] / 2.0;

  // w_s looks up the kernel variance of the mirrored scale S+1-s.
  p.weights.resize(p.betas.size());
  double total = 0.0;
  for (std::size_t s = 0; s < p.betas.size(); ++s) {
    p.weights[s] = dist.probability_at(p.betas[p.betas.size() - 1 - s]);
    total += p.weights[s];
  }
  if (!(total > 0.0)) throw Error("degenerate head-size distribution");
  for (double& w : p.weights) w /= total;
  return p;
}

// ---------------------------------------------------------------------------
// Scenes

AnnotatedScene sample_scene(int width, int height, int count, const HeadSizeDistribution& dist,
                            double alpha, std::uint64_t seed, double margin) {
  if (count < 0) throw Error("count must be >= 0");
  if (!(alpha >= 0.0)) throw Error("alpha must be >= 0");
  if (!(margin >= 0.0) || 2.0 * margin >= std::min(width, height)) {
    throw Error("margin must be >= 0 and leave a nonempty interior");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(margin, width - margin);
  std::uniform_real_distribution<double> uy(margin, height - margin);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sd = std::sqrt(alpha);

  std::vector<Annotation> heads;
  heads.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Annotation a;
    a.true_pos = {ux(rng), uy(rng)};
    a.head_size = dist.sample(rng);
    const double ex = noise(rng);
    const double ey = noise(rng);
    a.noisy_pos = {a.true_pos.x + sd * ex, a.true_pos.y + sd * ey};
    heads.push_back(a);
  }
  return AnnotatedScene(width, height, std::move(heads));
}

std::vector<Vec2> rescale_annotations(const AnnotatedScene& scene, int scale_index, double factor,
                                      PositionSource source) {
  if (scale_index < 1) throw Error("scale_index must be >= 1");
  if (!(factor > 0.0)) throw Error("factor must be positive");
  const double d = std::pow(factor, scale_index - 1);
  std::vector<Vec2> out;
  out.reserve(scene.size());
  for (const auto& a : scene.annotations()) {
    const Vec2& p = source == PositionSource::kNoisy ? a.noisy_pos : a.true_pos;
    out.push_back({p.x / d, p.y / d});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_scene(std::ostream& out, const AnnotatedScene& scene) {
  out << scene.width() << ' ' << scene.height() << ' ' << scene.size() << '\n';
  for (const auto& a : scene.annotations()) {
    out << fmt17(a.true_pos.x) << ' ' << fmt17(a.true_pos.y) << ' ' << fmt17(a.noisy_pos.x) << ' '
        << fmt17(a.noisy_pos.y) << ' ' << fmt17(a.head_size) << '\n';
  }
}

AnnotatedScene read_scene(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("scene file: missing header");
  std::istringstream header(line);
  long width = 0, height = 0, count = -1;
  if (!(header >> width >> height >> count) || count < 0) {
    throw Error("scene file: header must be `width height count`");
  }
  std::vector<Annotation> heads;
  heads.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw Error("scene file: fewer annotation lines than count");
    std::istringstream row(line);
    Annotation a;
    // strtod via operator>> keeps 17-digit values bit-exact.
    if (!(row >> a.true_pos.x >> a.true_pos.y >> a.noisy_pos.x >> a.noisy_pos.y >> a.head_size)) {
      throw Error("scene file: malformed annotation on line " + std::to_string(i + 2));
    }
    heads.push_back(a);
  }
  return AnnotatedScene(static_cast<int>(width), static_cast<int>(height), std::move(heads));
}

void save_scene(const std::string& path, const AnnotatedScene& scene) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  write_scene(out, scene);
  if (!out) throw Error("write failed: " + path);
}

AnnotatedScene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open for reading: " + path);
  return read_scene(in);
}

}  // namespace sacc
