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

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "sacc/density_moments.hpp"

namespace sacc {

/// Tikhonov jitter added to the truncated covariance before inversion.
struct JitterSpec {
  double value = 1e-6;
  /// When set, the jitter is `value` times the largest retained singular value.
  bool relative = true;
};

/// Rank-M SVD truncation of a covariance restricted to a pixel subset, with
/// the regularized inverse (Sigma_hat_L + jitter I)^-1 cached for O(M^2)
/// quadratic-form evaluation.
struct RankMApprox {
  int grid_pixels = 0;
  std::vector<int> selected;
  Eigen::VectorXd singular_values;  // nonincreasing
  Eigen::MatrixXd left_vectors;     // |L| x M
  Eigen::MatrixXd right_vectors;    // |L| x M
  double jitter = 0.0;
  /// sqrt of the sum of squared discarded singular values.
  double truncation_error = 0.0;
  Eigen::MatrixXd precision;  // |L| x |L|, symmetric
  std::vector<double> packed_precision;  // lower triangle of precision, row by row

  int rank() const { return static_cast<int>(singular_values.size()); }
  /// sum_{i<=M} c_i u_i v_i^T on the selected pixels.
  Eigen::MatrixXd reconstruct() const;
};

/// Smallest set of highest-variance pixels whose variance sum strictly exceeds
/// `mass_threshold` of the total. Ties favour the lower pixel index; the result
/// is sorted by pixel index.
std::vector<int> select_pixels(std::span<const double> diag_var, double mass_threshold = 0.8);

/// Restricts `cov` to `selected` x `selected`, decomposes it, keeps the top
/// `rank` singular triples and factors the jittered inverse.
RankMApprox truncate_cov(const Eigen::MatrixXd& cov, std::span<const int> selected, int rank,
                         JitterSpec jitter = {});

/// d_L^T (Sigma_hat_L + jitter I)^-1 d_L with d = pred - mean restricted to the selected pixels.
double neg_log_likelihood(const DensityField& pred, const Eigen::VectorXd& mean,
                          const RankMApprox& approx);

/// Gradient of neg_log_likelihood with respect to every pixel of `pred`
/// (zero off the selected set).
std::vector<double> neg_log_likelihood_gradient(const DensityField& pred,
                                                const Eigen::VectorXd& mean,
                                                const RankMApprox& approx);

/// Mean plus rank-M covariance for one scale; the input `total_loss` consumes.
struct ScaleModel {
  GridGeometry grid;
  Eigen::VectorXd mean;
  RankMApprox approx;
};

struct LowRankOptions {
  double mass_threshold = 0.8;
  /// 0 keeps every selected pixel's triple (rank = |L|).
  int rank = 0;
  JitterSpec jitter;
  int max_pixels = kDefaultMaxCovPixels;
};

/// approx_cov -> select_pixels -> truncate_cov for one scale.
ScaleModel build_scale_model(const AnnotatedScene& scene, const ScaleParams& params,
                             int scale_index, GridGeometry grid, const LowRankOptions& options = {},
                             PositionSource source = PositionSource::kNoisy);

}  // namespace sacc
