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
#include <benchmark/benchmark.h>

#include <cmath>
#include <numeric>
#include <random>

#include "sacc/density_moments.hpp"
#include "sacc/fusion_ops.hpp"
#include "sacc/loss.hpp"
#include "sacc/lowrank.hpp"

namespace {

using namespace sacc;

AnnotatedScene bench_scene(int side, int heads) {
  return sample_scene(side, side, heads, HeadSizeDistribution::log_normal(std::log(8.0), 0.5), 8.0, 17);
}

ScaleParams bench_params() {
  ScaleParams p;
  p.alpha = 8.0;
  p.betas = {8.0, 4.0, 2.0};
  p.weights = {0.3, 0.4, 0.3};
  return p;
}

void BM_ApproxCov(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto s = bench_scene(side, 10);
  const auto p = bench_params();
  for (auto _ : state) benchmark::DoNotOptimize(approx_cov(s, p, 1, {side, side}));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(side) * side);
}
BENCHMARK(BM_ApproxCov)->Arg(8)->Arg(16)->Arg(24)->Arg(32)->Complexity();

void BM_TruncateCov(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = nd(rng);
  const Eigen::MatrixXd a = g * g.transpose();
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(truncate_cov(a, all, n));
  state.SetComplexityN(n);
}
BENCHMARK(BM_TruncateCov)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oNCubed);

void BM_NegLogLikelihood(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = nd(rng);
  std::vector<int> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), 0);
  const auto approx = truncate_cov(g * g.transpose(), all, m);
  DensityField pred(1, {m, 1});
  for (double& v : pred.values) v = nd(rng);
  const Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (auto _ : state) benchmark::DoNotOptimize(neg_log_likelihood(pred, mean, approx));
  state.SetComplexityN(m);
}
BENCHMARK(BM_NegLogLikelihood)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oNSquared);

void BM_LossGradient(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto s = bench_scene(side, 12);
  const auto p = bench_params();
  std::vector<ScaleModel> models;
  std::vector<DensityField> preds;
  for (int k = 1; k <= 3; ++k) {
    const auto g = grid_for_scale(s, p, k);
    models.push_back(build_scale_model(s, p, k, g));
    preds.emplace_back(k, g);
  }
  const ScaleAwareLoss loss(s, p, models);
  for (auto _ : state) benchmark::DoNotOptimize(loss.gradient(preds));
}
BENCHMARK(BM_LossGradient)->Arg(16)->Arg(32);

template <int Which>
void BM_Fusion(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int C = 8;
  const auto t = FeatureTensor::random(C, n, n, 3, Rational(1, 2));
  const std::vector<FeatureTensor> in{t, t};
  const auto dw = Depthwise2x2::random(C, 4);
  const std::vector<int> ch{C};
  const auto sw = SfmWeights::random(ch, 8, 8, 5);
  const auto fuse = Conv2d::random(2 * C, 8, 1, 6);
  for (auto _ : state) {
    if constexpr (Which == 0) benchmark::DoNotOptimize(interpolation_down(t, dw));
    if constexpr (Which == 1) benchmark::DoNotOptimize(interpolation_up(t, dw));
    if constexpr (Which == 2) benchmark::DoNotOptimize(sfm_fuse(std::span(in.data(), 1), Rational(1, 2), sw));
    if constexpr (Which == 3) benchmark::DoNotOptimize(ifm_block(in, fuse));
  }
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n) * n * C);
}
BENCHMARK(BM_Fusion<0>)->Name("BM_InterpolationDown")->RangeMultiplier(2)->Range(16, 128)->Complexity(benchmark::oN);
BENCHMARK(BM_Fusion<1>)->Name("BM_InterpolationUp")->RangeMultiplier(2)->Range(16, 128)->Complexity(benchmark::oN);
BENCHMARK(BM_Fusion<2>)->Name("BM_SfmFuse")->RangeMultiplier(2)->Range(16, 128)->Complexity(benchmark::oN);
BENCHMARK(BM_Fusion<3>)->Name("BM_IfmBlock")->RangeMultiplier(2)->Range(16, 128)->Complexity(benchmark::oN);

}  // namespace
