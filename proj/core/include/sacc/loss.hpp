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

#include "sacc/annotation_model.hpp"
#include "sacc/density_moments.hpp"
#include "sacc/lowrank.hpp"

namespace sacc {

struct LossBreakdown {
  std::vector<double> per_scale_nll;
  std::vector<double> per_scale_reg;
  double total = 0.0;
};

struct LossOptions {
  /// Guard added to the soft-assignment denominator sum_k phi_k(x_j).
  double eps_den = 1e-12;
  /// Multiplier on the count regularizer.
  double reg_weight = 1.0;
  /// Regularize D_s / w_s rather than D_s. Each mixture component carries
  /// w_s of a head's unit mass, so only the normalized component can meet
  /// the sum-to-one target.
  bool normalize_by_weight = true;
};

/// Soft assignment a_ij = phi_i(x_j) / (sum_k phi_k(x_j) + eps_den), phi built
/// from the noisy positions with variance beta_s. Rows are heads.
Eigen::MatrixXd soft_assignment(const AnnotatedScene& scene, const ScaleParams& params,
                                int scale_index, GridGeometry grid, double eps_den = 1e-12);

/// sum_i | sum_j pred(x_j) a_ij - 1 |.
double regularizer(const DensityField& pred, const AnnotatedScene& scene,
                   const ScaleParams& params, int scale_index, double eps_den = 1e-12);

/// Sum of squared differences.
double baseline_l2_loss(const DensityField& pred, const DensityField& target);

/// Multi-scale objective: per scale, the rank-M Mahalanobis term plus the
/// count regularizer. Assignment matrices are built once at construction.
class ScaleAwareLoss {
 public:
  ScaleAwareLoss(const AnnotatedScene& scene, const ScaleParams& params,
                 std::vector<ScaleModel> models, LossOptions options = {});

  int num_scales() const { return static_cast<int>(models_.size()); }
  const std::vector<ScaleModel>& models() const { return models_; }
  const std::vector<GridGeometry>& grids() const { return grids_; }

  LossBreakdown evaluate(std::span<const DensityField> preds) const;
  std::vector<DensityField> gradient(std::span<const DensityField> preds) const;

  /// Per-head soft-assigned masses at one scale (after weight normalization if enabled).
  Eigen::VectorXd head_masses(const DensityField& pred, int scale_index) const;

 private:
  void check(std::span<const DensityField> preds) const;

  std::vector<ScaleModel> models_;
  std::vector<GridGeometry> grids_;
  std::vector<Eigen::MatrixXd> assign_;
  std::vector<double> weights_;
  LossOptions options_;
};

LossBreakdown total_loss(std::span<const DensityField> preds, const AnnotatedScene& scene,
                         const ScaleParams& params, std::span<const ScaleModel> models,
                         const LossOptions& options = {});

std::vector<DensityField> loss_gradient(std::span<const DensityField> preds,
                                        const AnnotatedScene& scene, const ScaleParams& params,
                                        std::span<const ScaleModel> models,
                                        const LossOptions& options = {});

/// sum_s ||pred_s - target_s||^2 and its gradient; the comparison baseline.
class L2Loss {
 public:
  explicit L2Loss(std::vector<DensityField> targets);

  int num_scales() const { return static_cast<int>(targets_.size()); }
  const std::vector<DensityField>& targets() const { return targets_; }

  LossBreakdown evaluate(std::span<const DensityField> preds) const;
  std::vector<DensityField> gradient(std::span<const DensityField> preds) const;

 private:
  std::vector<DensityField> targets_;
};

}  // namespace sacc
