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
#include "sacc/fusion_ops.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "sacc/error.hpp"

namespace sacc {

// ---------------------------------------------------------------------------
// Rational

Rational::Rational(std::int64_t n, std::int64_t d) {
  if (n <= 0 || d <= 0) throw Error("scale tags must be positive rationals");
  const std::int64_t g = std::gcd(n, d);
  num = n / g;
  den = d / g;
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational Rational::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const long long n = std::stoll(text, &used);
      if (used != text.size()) throw Error("");
      return Rational(n, 1);
    }
    const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
    const long long n = std::stoll(a, &used);
    if (used != a.size()) throw Error("");
    const long long d = std::stoll(b, &used);
    if (used != b.size()) throw Error("");
    return Rational(n, d);
  } catch (const std::exception&) {
    throw Error("bad scale tag '" + text + "'");
  }
}

// ---------------------------------------------------------------------------
// FeatureTensor

FeatureTensor::FeatureTensor(int channels, int width, int height, Rational scale_tag)
    : FeatureTensor(channels, width, height,
                    std::vector<double>(static_cast<std::size_t>(std::max(channels, 0)) *
                                        static_cast<std::size_t>(std::max(width, 0)) *
                                        static_cast<std::size_t>(std::max(height, 0))),
                    scale_tag) {}

FeatureTensor::FeatureTensor(int channels, int width, int height, std::vector<double> data,
                             Rational scale_tag)
    : channels_(channels), width_(width), height_(height), data_(std::move(data)),
      scale_(scale_tag) {
  if (channels < 1 || width < 1 || height < 1) throw Error("tensor dimensions must be >= 1");
  if (data_.size() != static_cast<std::size_t>(channels) * static_cast<std::size_t>(width) *
                          static_cast<std::size_t>(height)) {
    throw Error("tensor data length must equal C*W*H");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw Error("tensor values must be finite");
  }
}

FeatureTensor FeatureTensor::random(int channels, int width, int height, std::uint64_t seed,
                                    Rational scale_tag) {
  FeatureTensor t(channels, width, height, scale_tag);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.data_) v = u(rng);
  return t;
}

// ---------------------------------------------------------------------------
// Convolution

Conv2d Conv2d::zeros(int in_channels, int out_channels, int kernel, int padding) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1) throw Error("bad convolution shape");
  Conv2d c;
  c.in_channels = in_channels;
  c.out_channels = out_channels;
  c.kernel = kernel;
  c.padding = padding < 0 ? kernel / 2 : padding;
  c.weights.assign(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel, 0.0);
  c.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
  return c;
}

Conv2d Conv2d::random(int in_channels, int out_channels, int kernel, std::uint64_t seed,
                      int padding) {
  Conv2d c = zeros(in_channels, out_channels, kernel, padding);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (double& v : c.weights) v = u(rng);
  return c;
}

Conv2d Conv2d::identity(int channels) {
  Conv2d c = zeros(channels, channels, 1, 0);
  for (int i = 0; i < channels; ++i) c.w(i, i, 0, 0) = 1.0;
  return c;
}

long long Conv2d::param_count() const {
  return static_cast<long long>(kernel) * kernel * in_channels * out_channels + out_channels;
}

FeatureTensor conv2d(const FeatureTensor& t, const Conv2d& conv) {
  if (t.channels() != conv.in_channels) {
    throw Error("convolution expects " + std::to_string(conv.in_channels) +
                " input channels, got " + std::to_string(t.channels()));
  }
  const int k = conv.kernel, s = conv.stride, p = conv.padding;
  const int wo = (t.width() + 2 * p - k) / s + 1;
  const int ho = (t.height() + 2 * p - k) / s + 1;
  if (wo < 1 || ho < 1) throw Error("convolution output would be empty");
  FeatureTensor out(conv.out_channels, wo, ho, t.scale_tag());
  const int W = t.width(), H = t.height();
  if (k == 1 && s == 1 && p == 0) {
    // Pointwise: one matrix product over all pixels.
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Index px = static_cast<Eigen::Index>(W) * H;
    const Eigen::Map<const RowMat> wm(conv.weights.data(), conv.out_channels, conv.in_channels);
    const Eigen::Map<const RowMat> x(t.data().data(), conv.in_channels, px);
    Eigen::Map<RowMat> y(out.data().data(), conv.out_channels, px);
    y.noalias() = wm * x;
    y.colwise() += Eigen::Map<const Eigen::VectorXd>(conv.bias.data(), conv.out_channels);
    return out;
  }
  for (int o = 0; o < conv.out_channels; ++o) {
    for (int y = 0; y < ho; ++y) {
      for (int x = 0; x < wo; ++x) out.at(o, y, x) = conv.bias[static_cast<std::size_t>(o)];
    }
    for (int i = 0; i < conv.in_channels; ++i) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = conv.w(o, i, ky, kx);
          if (wv == 0.0) continue;
          for (int y = 0; y < ho; ++y) {
            const int iy = y * s + ky - p;
            if (iy < 0 || iy >= H) continue;
            for (int x = 0; x < wo; ++x) {
              const int ix = x * s + kx - p;
              if (ix < 0 || ix >= W) continue;
              out.at(o, y, x) += wv * t.at(i, iy, ix);
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interpolation

Depthwise2x2 Depthwise2x2::uniform(int channels, std::array<double, 4> kernel) {
  if (channels < 1) throw Error("channels must be >= 1");
  Depthwise2x2 d;
  d.kernels.assign(static_cast<std::size_t>(channels), kernel);
  d.bias.assign(static_cast<std::size_t>(channels), 0.0);
  return d;
}

Depthwise2x2 Depthwise2x2::random(int channels, std::uint64_t seed) {
  Depthwise2x2 d = uniform(channels, {0, 0, 0, 0});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& k : d.kernels) {
    for (double& v : k) v = u(rng);
  }
  return d;
}

namespace {

void check_depthwise(const FeatureTensor& t, const Depthwise2x2& w) {
  if (w.channels() != t.channels() || w.bias.size() != w.kernels.size()) {
    throw Error("interpolation needs one 2x2 kernel and bias per channel");
  }
}

// 2x2 valid convolution of a 4x4 patch read through `src(py, px)` into a 3x3
// patch written at (oy, ox).
template <typename Src>
void patch_conv(const std::array<double, 4>& k, double b, Src src, FeatureTensor& out, int c,
                int oy, int ox) {
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      out.at(c, oy + y, ox + x) = b + k[0] * src(y, x) + k[1] * src(y, x + 1) +
                                  k[2] * src(y + 1, x) + k[3] * src(y + 1, x + 1);
    }
  }
}

}  // namespace

FeatureTensor interpolation_down(const FeatureTensor& t, const Depthwise2x2& weights) {
  if (t.width() % 4 != 0 || t.height() % 4 != 0) {
    throw Error("interpolation_down needs width and height divisible by 4, got " +
                std::to_string(t.width()) + "x" + std::to_string(t.height()));
  }
  check_depthwise(t, weights);
  FeatureTensor out(t.channels(), t.width() / 4 * 3, t.height() / 4 * 3, t.scale_tag());
  for (int c = 0; c < t.channels(); ++c) {
    const auto& k = weights.kernels[static_cast<std::size_t>(c)];
    const double b = weights.bias[static_cast<std::size_t>(c)];
    for (int py = 0; py < t.height() / 4; ++py) {
      for (int px = 0; px < t.width() / 4; ++px) {
        auto src = [&](int y, int x) { return t.at(c, 4 * py + y, 4 * px + x); };
        patch_conv(k, b, src, out, c, 3 * py, 3 * px);
      }
    }
  }
  return out;
}

FeatureTensor interpolation_up(const FeatureTensor& t, const Depthwise2x2& weights) {
  if (t.width() % 2 != 0 || t.height() % 2 != 0) {
    throw Error("interpolation_up needs width and height divisible by 2, got " +
                std::to_string(t.width()) + "x" + std::to_string(t.height()));
  }
  check_depthwise(t, weights);
  FeatureTensor out(t.channels(), t.width() / 2 * 3, t.height() / 2 * 3, t.scale_tag());
  for (int c = 0; c < t.channels(); ++c) {
    const auto& k = weights.kernels[static_cast<std::size_t>(c)];
    const double b = weights.bias[static_cast<std::size_t>(c)];
    for (int py = 0; py < t.height() / 2; ++py) {
      for (int px = 0; px < t.width() / 2; ++px) {
        // Nearest neighbour: 4x4 position (y, x) reads source (y/2, x/2).
        auto src = [&](int y, int x) { return t.at(c, 2 * py + y / 2, 2 * px + x / 2); };
        patch_conv(k, b, src, out, c, 3 * py, 3 * px);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scale tags

namespace {

bool is_power_of_two(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

std::optional<Rational> tag_for_ratio(Rational g) {
  if (g.num == 1 && is_power_of_two(g.den)) return g;
  // 3/2^m with m >= 3 is the synthesized tag 1/(3*2^(m-3)).
  if (g.num == 3 && is_power_of_two(g.den) && g.den >= 8) return Rational(1, 3 * (g.den / 8));
  return std::nullopt;
}

}  // namespace

std::optional<Rational> grid_ratio(Rational tag) {
  if (tag.num != 1) return std::nullopt;
  if (is_power_of_two(tag.den)) return tag;
  if (tag.den % 3 == 0 && is_power_of_two(tag.den / 3)) return Rational(3, 8 * (tag.den / 3));
  return std::nullopt;
}

std::optional<ScaleTransform> scale_transform(Rational from, Rational to) {
  const auto gf = grid_ratio(from), gt = grid_ratio(to);
  if (!gf || !gt) return std::nullopt;
  const Rational r = *gt / *gf;
  if (r == Rational(1, 1)) return ScaleTransform::kIdentity;
  if (r == Rational(3, 4)) return ScaleTransform::kInterpDown;
  if (r == Rational(3, 2)) return ScaleTransform::kInterpUp;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SFM / IFM / SCB

SfmWeights SfmWeights::random(std::span<const int> input_channels, int merge_channels,
                              int out_channels, std::uint64_t seed) {
  SfmWeights w;
  int total = 0;
  std::uint64_t s = seed;
  for (int c : input_channels) {
    w.interp.push_back(Depthwise2x2::random(c, s++));
    total += c;
  }
  w.merge = Conv2d::random(total, merge_channels, 1, s++, 0);
  w.refine = Conv2d::random(merge_channels, out_channels, 3, s++, 1);
  return w;
}

FeatureTensor concat_channels(std::span<const FeatureTensor> layers) {
  if (layers.empty()) throw Error("nothing to concatenate");
  const int W = layers.front().width(), H = layers.front().height();
  int C = 0;
  std::vector<double> data;
  for (const auto& l : layers) {
    if (l.width() != W || l.height() != H) {
      throw Error("spatial mismatch: " + std::to_string(l.width()) + "x" +
                  std::to_string(l.height()) + " vs " + std::to_string(W) + "x" +
                  std::to_string(H));
    }
    C += l.channels();
    data.insert(data.end(), l.data().begin(), l.data().end());
  }
  return FeatureTensor(C, W, H, std::move(data), layers.front().scale_tag());
}

FeatureTensor sfm_fuse(std::span<const FeatureTensor> inputs, Rational target_scale,
                       const SfmWeights& weights) {
  if (inputs.empty() || inputs.size() > 3) throw Error("sfm_fuse takes 1 to 3 inputs");
  if (weights.interp.size() != inputs.size()) {
    throw Error("sfm_fuse needs one interpolation kernel set per input");
  }
  std::vector<FeatureTensor> aligned;
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    const auto& in = inputs[n];
    const auto tr = scale_transform(in.scale_tag(), target_scale);
    if (!tr) {
      std::string legal;
      for (const Rational cand :
           {Rational(1, 2), Rational(1, 3), Rational(1, 4), Rational(1, 6), Rational(1, 8),
            Rational(1, 12), Rational(1, 16)}) {
        if (scale_transform(in.scale_tag(), cand)) legal += (legal.empty() ? "" : ", ") + cand.str();
      }
      throw Error("scale " + target_scale.str() + " is unreachable from " + in.scale_tag().str() +
                  "; legal targets: " + (legal.empty() ? "none" : legal));
    }
    switch (*tr) {
      case ScaleTransform::kIdentity: aligned.push_back(in); break;
      case ScaleTransform::kInterpDown:
        aligned.push_back(interpolation_down(in, weights.interp[n]));
        break;
      case ScaleTransform::kInterpUp:
        aligned.push_back(interpolation_up(in, weights.interp[n]));
        break;
    }
  }
  FeatureTensor merged = conv2d(concat_channels(aligned), weights.merge);
  FeatureTensor out = conv2d(merged, weights.refine);
  if (out.width() != merged.width() || out.height() != merged.height()) {
    throw Error("sfm refinement must preserve spatial size (3x3, padding 1)");
  }
  out.set_scale_tag(target_scale);
  return out;
}

FeatureTensor ifm_block(std::span<const FeatureTensor> layers, const Conv2d& fuse) {
  if (fuse.kernel != 1) throw Error("ifm fusion is a 1x1 convolution");
  return conv2d(concat_channels(layers), fuse);
}

ScbWeights ScbWeights::random(int channels, int heavy_out, int light_out, std::uint64_t seed) {
  if (channels % 2 != 0) throw Error("channel split needs an even channel count");
  const int half = channels / 2;
  ScbWeights w;
  w.heavy1 = Conv2d::random(half, heavy_out, 3, seed, 1);
  w.heavy2 = Conv2d::random(heavy_out, heavy_out, 3, seed + 1, 1);
  w.light1 = Conv2d::random(half, light_out, 1, seed + 2, 0);
  w.light2 = Conv2d::random(light_out, light_out, 3, seed + 3, 1);
  return w;
}

FeatureTensor scb_split_block(const FeatureTensor& t, const ScbWeights& weights) {
  if (t.channels() % 2 != 0) {
    throw Error("channel split needs an even channel count, got " + std::to_string(t.channels()));
  }
  const int half = t.channels() / 2;
  const std::size_t plane = static_cast<std::size_t>(t.width()) * t.height();
  const auto mid = t.data().begin() + static_cast<std::ptrdiff_t>(plane * half);
  FeatureTensor a(half, t.width(), t.height(), std::vector<double>(t.data().begin(), mid),
                  t.scale_tag());
  FeatureTensor b(half, t.width(), t.height(), std::vector<double>(mid, t.data().end()),
                  t.scale_tag());
  const FeatureTensor parts[2] = {conv2d(conv2d(a, weights.heavy1), weights.heavy2),
                                  conv2d(conv2d(b, weights.light1), weights.light2)};
  return concat_channels(parts);
}

// ---------------------------------------------------------------------------
// Graph analysis

LayerKind parse_layer_kind(const std::string& name) {
  if (name == "conv") return LayerKind::kConv;
  if (name == "pool") return LayerKind::kPool;
  if (name == "upsample") return LayerKind::kUpsample;
  if (name == "concat") return LayerKind::kConcat;
  if (name == "split") return LayerKind::kSplit;
  if (name == "interp_down") return LayerKind::kInterpDown;
  if (name == "interp_up") return LayerKind::kInterpUp;
  throw Error("unknown layer kind '" + name + "'");
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kPool: return "pool";
    case LayerKind::kUpsample: return "upsample";
    case LayerKind::kConcat: return "concat";
    case LayerKind::kSplit: return "split";
    case LayerKind::kInterpDown: return "interp_down";
    case LayerKind::kInterpUp: return "interp_up";
  }
  return "?";
}

GraphCount count_params_macs(std::span<const LayerSpec> graph, TensorDims input) {
  if (input.channels < 1 || input.width < 1 || input.height < 1) {
    throw Error("input dimensions must be >= 1");
  }
  GraphCount g;
  TensorDims cur = input;
  for (std::size_t n = 0; n < graph.size(); ++n) {
    const LayerSpec& l = graph[n];
    auto fail = [&](const std::string& what) {
      throw Error("layer " + std::to_string(n) + " (" + to_string(l.kind) + "): " + what);
    };
    if (l.kernel < 1 || l.stride < 1 || l.in_channels < 1 || l.out_channels < 1) {
      fail("kernel, stride and channel counts must be >= 1");
    }
    if (l.in_channels != cur.channels) {
      fail("expects " + std::to_string(l.in_channels) + " input channels, receives " +
           std::to_string(cur.channels));
    }
    LayerCount lc;
    lc.spec = l;
    TensorDims out = cur;
    const auto ww = static_cast<long long>(cur.width), hh = static_cast<long long>(cur.height);
    const auto cin = static_cast<long long>(l.in_channels);
    const auto cout = static_cast<long long>(l.out_channels);
    switch (l.kind) {
      case LayerKind::kConv: {
        const int p = l.padding.value_or(l.kernel / 2);
        if (p < 0) fail("padding must be >= 0");
        out.channels = l.out_channels;
        out.width = (cur.width + 2 * p - l.kernel) / l.stride + 1;
        out.height = (cur.height + 2 * p - l.kernel) / l.stride + 1;
        if (cur.width + 2 * p < l.kernel || cur.height + 2 * p < l.kernel) fail("kernel larger than input");
        const long long kk = static_cast<long long>(l.kernel) * l.kernel;
        lc.params = kk * cin * cout + cout;
        lc.macs = kk * cin * cout * out.width * out.height;
        break;
      }
      case LayerKind::kPool:
        if (l.out_channels != l.in_channels) fail("pooling keeps the channel count");
        if (cur.width < l.kernel || cur.height < l.kernel) fail("kernel larger than input");
        out.width = (cur.width - l.kernel) / l.stride + 1;
        out.height = (cur.height - l.kernel) / l.stride + 1;
        break;
      case LayerKind::kUpsample:
        if (l.out_channels != l.in_channels) fail("upsampling keeps the channel count");
        out.width = static_cast<int>(ww * l.stride);
        out.height = static_cast<int>(hh * l.stride);
        break;
      case LayerKind::kConcat:
        if (l.out_channels < l.in_channels) fail("concat cannot drop channels");
        out.channels = l.out_channels;
        break;
      case LayerKind::kSplit:
        if (l.out_channels > l.in_channels) fail("split cannot add channels");
        out.channels = l.out_channels;
        break;
      case LayerKind::kInterpDown:
      case LayerKind::kInterpUp: {
        const bool down = l.kind == LayerKind::kInterpDown;
        const int m = down ? 4 : 2;
        if (l.out_channels != l.in_channels) fail("interpolation keeps the channel count");
        if (cur.width % m != 0 || cur.height % m != 0) {
          fail("width and height must be divisible by " + std::to_string(m));
        }
        out.width = cur.width / m * 3;
        out.height = cur.height / m * 3;
        lc.params = 4 * cin + cin;
        lc.macs = 4 * cin * out.width * out.height;
        break;
      }
    }
    if (out.width < 1 || out.height < 1) fail("output would be empty");
    lc.out = out;
    g.params += lc.params;
    g.macs += lc.macs;
    g.layers.push_back(lc);
    cur = out;
  }
  return g;
}

GraphSpec parse_graph(std::istream& in) {
  GraphSpec g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string kind;
    if (!(ss >> kind)) continue;
    auto bad = [&](const std::string& what) {
      throw Error("graph line " + std::to_string(lineno) + ": " + what);
    };
    if (kind == "input") {
      TensorDims d;
      if (!(ss >> d.channels >> d.width >> d.height)) bad("expected `input C W H`");
      if (d.channels < 1 || d.width < 1 || d.height < 1) bad("input dims must be >= 1");
      g.input = d;
    } else {
      LayerSpec l;
      try {
        l.kind = parse_layer_kind(kind);
      } catch (const Error& e) {
        bad(e.what());
      }
      if (!(ss >> l.kernel >> l.stride >> l.in_channels >> l.out_channels)) {
        bad("expected `kind kernel stride in out [padding]`");
      }
      if (l.kernel < 1 || l.stride < 1) bad("kernel and stride must be >= 1");
      if (l.in_channels < 1 || l.out_channels < 1) bad("channel counts must be >= 1");
      int p = 0;
      if (ss >> p) l.padding = p;
      std::string extra;
      if (ss >> extra) bad("trailing field '" + extra + "'");
      g.layers.push_back(l);
    }
  }
  return g;
}

GraphSpec load_graph(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open graph file " + path);
  return parse_graph(f);
}

void write_count_csv(std::ostream& out, const GraphCount& count) {
  out << "index,kind,kernel,stride,in_channels,out_channels,out_width,out_height,params,macs\n";
  for (std::size_t n = 0; n < count.layers.size(); ++n) {
    const auto& l = count.layers[n];
    out << n << ',' << to_string(l.spec.kind) << ',' << l.spec.kernel << ',' << l.spec.stride
        << ',' << l.spec.in_channels << ',' << l.spec.out_channels << ',' << l.out.width << ','
        << l.out.height << ',' << l.params << ',' << l.macs << '\n';
  }
  out << "total,,,,,,,," << count.params << ',' << count.macs << '\n';
}

std::map<Rational, int> enumerate_sfm_scales(int levels, int input_size) {
  if (levels < 0 || input_size < 1) throw Error("bad pooling ladder");
  std::map<Rational, int> ladder;
  int size = input_size;
  for (int k = 0; k <= levels; ++k) {
    ladder[Rational(1, std::int64_t{1} << k)] = size;
    if (k < levels) {
      if (size % 2 != 0) throw Error("pooling ladder needs even sizes");
      size /= 2;
    }
  }
  // Every ladder layer tried with every one-step transform; a synthesized
  // scale counts once it is fed by a downward and an upward neighbour.
  std::map<Rational, std::pair<std::optional<int>, std::optional<int>>> feeds;
  for (const auto& [tag, sz] : ladder) {
    const Rational g = *grid_ratio(tag);
    for (const bool down : {true, false}) {
      const auto target = tag_for_ratio(g * (down ? Rational(3, 4) : Rational(3, 2)));
      if (!target || ladder.count(*target)) continue;
      const int m = down ? 4 : 2;
      if (sz % m != 0) continue;
      auto& slot = down ? feeds[*target].first : feeds[*target].second;
      slot = sz / m * 3;
    }
  }
  std::map<Rational, int> all = ladder;
  for (const auto& [tag, f] : feeds) {
    if (!f.first || !f.second) continue;
    if (*f.first != *f.second) {
      throw Error("neighbours of scale " + tag.str() + " disagree on its size");
    }
    all[tag] = *f.first;
  }
  return all;
}

}  // namespace sacc
