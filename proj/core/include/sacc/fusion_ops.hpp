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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sacc {

/// Positive rational kept in lowest terms.
struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  static Rational parse(const std::string& text);

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return a.num * b.den < b.num * a.den;
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num * b.num, a.den * b.den);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    return Rational(a.num * b.den, a.den * b.num);
  }
};

/// C x H x W values, channel-major then row-major.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(int channels, int width, int height, Rational scale_tag = {});
  FeatureTensor(int channels, int width, int height, std::vector<double> data,
                Rational scale_tag = {});

  int channels() const { return channels_; }
  int width() const { return width_; }
  int height() const { return height_; }
  Rational scale_tag() const { return scale_; }
  void set_scale_tag(Rational tag) { scale_ = tag; }

  std::size_t size() const { return data_.size(); }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  static FeatureTensor random(int channels, int width, int height, std::uint64_t seed,
                              Rational scale_tag = {});

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height_) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int channels_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
  Rational scale_;
};

/// Dense 2D convolution, cross-correlation orientation:
/// out[o][y][x] = bias[o] + sum_{i,dy,dx} w[o][i][dy][dx] * in[i][y*stride+dy-pad][x*stride+dx-pad].
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  std::vector<double> weights;  // [out][in][ky][kx]
  std::vector<double> bias;     // [out]

  double& w(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }
  double w(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * kernel + ky) * kernel + kx];
  }

  /// Zero weights and bias.
  static Conv2d zeros(int in_channels, int out_channels, int kernel, int padding = -1);
  /// Weights uniform in [-0.1, 0.1], bias zero. padding -1 means kernel/2.
  static Conv2d random(int in_channels, int out_channels, int kernel, std::uint64_t seed,
                       int padding = -1);
  /// 1x1 identity (in == out).
  static Conv2d identity(int channels);

  long long param_count() const;
};

FeatureTensor conv2d(const FeatureTensor& t, const Conv2d& conv);

/// One 2x2 kernel plus bias per channel; the interpolation convolutions act
/// on each channel separately.
struct Depthwise2x2 {
  std::vector<std::array<double, 4>> kernels;  // row-major [[k0,k1],[k2,k3]]
  std::vector<double> bias;

  int channels() const { return static_cast<int>(kernels.size()); }
  static Depthwise2x2 uniform(int channels, std::array<double, 4> kernel);
  static Depthwise2x2 random(int channels, std::uint64_t seed);
};

/// Every 4x4 patch to 3x3 via a stride-1 2x2 convolution: C x W x H to C x 3W/4 x 3H/4.
FeatureTensor interpolation_down(const FeatureTensor& t, const Depthwise2x2& weights);

/// Every 2x2 patch nearest-neighbour upsampled to 4x4, then the same
/// convolution to 3x3: C x W x H to C x 3W/2 x 3H/2.
FeatureTensor interpolation_up(const FeatureTensor& t, const Depthwise2x2& weights);

enum class ScaleTransform { kIdentity, kInterpDown, kInterpUp };

/// Spatial size of a tagged layer relative to the input image. Ladder tags
/// 1/2^k are literal; synthesized tags 1/(3*2^(k-1)) sit at 3/2^(k+2), the
/// grid both neighbours 1/2^k and 1/2^(k+1) interpolate onto.
std::optional<Rational> grid_ratio(Rational tag);

/// How a layer tagged `from` reaches `to`, if it can in one step.
std::optional<ScaleTransform> scale_transform(Rational from, Rational to);

struct SfmWeights {
  /// One entry per input; ignored for inputs already at the target scale.
  std::vector<Depthwise2x2> interp;
  Conv2d merge;   // 1x1 over the concatenated inputs
  Conv2d refine;  // 3x3, padding 1

  static SfmWeights random(std::span<const int> input_channels, int merge_channels,
                           int out_channels, std::uint64_t seed);
};

FeatureTensor sfm_fuse(std::span<const FeatureTensor> inputs, Rational target_scale,
                       const SfmWeights& weights);

/// Channel concatenation in the given order.
FeatureTensor concat_channels(std::span<const FeatureTensor> layers);

/// Concatenates the block's layers and applies one 1x1 convolution.
FeatureTensor ifm_block(std::span<const FeatureTensor> layers, const Conv2d& fuse);

struct ScbWeights {
  Conv2d heavy1;  // 3x3
  Conv2d heavy2;  // 3x3
  Conv2d light1;  // 1x1
  Conv2d light2;  // 3x3

  static ScbWeights random(int channels, int heavy_out, int light_out, std::uint64_t seed);
};

/// First half of the channels through the heavy 3x3 pair, second half through
/// the simple block; outputs concatenated heavy first.
FeatureTensor scb_split_block(const FeatureTensor& t, const ScbWeights& weights);

// ---------------------------------------------------------------------------
// Static graph analysis.

enum class LayerKind { kConv, kPool, kUpsample, kConcat, kSplit, kInterpDown, kInterpUp };

LayerKind parse_layer_kind(const std::string& name);
std::string to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int kernel = 1;
  int stride = 1;
  int in_channels = 1;
  int out_channels = 1;
  /// Conv only; default kernel/2.
  std::optional<int> padding;
};

struct TensorDims {
  int channels = 0;
  int width = 0;
  int height = 0;
};

struct LayerCount {
  LayerSpec spec;
  TensorDims out;
  long long params = 0;
  long long macs = 0;
};

struct GraphCount {
  std::vector<LayerCount> layers;
  long long params = 0;
  long long macs = 0;
};

/// Walks the layers in order, checking shapes. Throws sacc::Error naming the
/// offending layer.
GraphCount count_params_macs(std::span<const LayerSpec> graph, TensorDims input);

struct GraphSpec {
  std::vector<LayerSpec> layers;
  std::optional<TensorDims> input;
};

/// One layer per line: `kind kernel stride in out [padding]`; an optional
/// `input C W H` line; `#` starts a comment.
GraphSpec parse_graph(std::istream& in);
GraphSpec load_graph(const std::string& path);

/// Per-layer rows then a `total` row.
void write_count_csv(std::ostream& out, const GraphCount& count);

/// Pooling ladder 1, 1/2, ..., 1/2^levels plus every scale one SFM step can
/// synthesize from two adjacent ladder layers, each with its spatial size for
/// an input of `input_size`. Throws if the two neighbours disagree on a size.
std::map<Rational, int> enumerate_sfm_scales(int levels, int input_size);

}  // namespace sacc
