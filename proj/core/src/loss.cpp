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
#include "sacc/loss.hpp"

#include <cmath>

#include "sacc/error.hpp"

namespace sacc {

namespace {

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Eigen::Map<const Eigen::VectorXd> as_vector(const DensityField& f) {
  return {f.values.data(), static_cast<Eigen::Index>(f.values.size())};
}

}  // namespace

Eigen::MatrixXd soft_assignment(const AnnotatedScene& scene, const ScaleParams& params,
                                int scale_index, GridGeometry grid, double eps_den) {
  if (!(eps_den >= 0.0)) throw Error("eps_den must be >= 0");
  const auto centers =
      rescale_annotations(scene, scale_index, params.downsample_factor, PositionSource::kNoisy);
  const double beta = params.beta(scale_index);
  const auto n = static_cast<Eigen::Index>(centers.size());
  Eigen::MatrixXd a(n, grid.pixels());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 c = centers[static_cast<std::size_t>(i)];
    for (int y = 0; y < grid.height; ++y) {
      for (int x = 0; x < grid.width; ++x) {
        a(i, grid.index(x, y)) = gaussian_kernel_2d({x - c.x, y - c.y}, beta);
      }
    }
  }
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double denom = a.col(j).sum() + eps_den;
    if (denom > 0.0) a.col(j) /= denom;
  }
  return a;
}

double regularizer(const DensityField& pred, const AnnotatedScene& scene,
                   const ScaleParams& params, int scale_index, double eps_den) {
  const GridGeometry grid = pred.grid;
  const Eigen::MatrixXd a = soft_assignment(scene, params, scale_index, grid, eps_den);
  const Eigen::VectorXd m = a * as_vector(pred);
  return (m.array() - 1.0).abs().sum();
}

double baseline_l2_loss(const DensityField& pred, const DensityField& target) {
  if (!(pred.grid == target.grid)) throw Error("baseline_l2_loss: grid mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < pred.values.size(); ++j) {
    const double d = pred.values[j] - target.values[j];
    s += d * d;
  }
  return s;
}

// ---------------------------------------------------------------------------

ScaleAwareLoss::ScaleAwareLoss(const AnnotatedScene& scene, const ScaleParams& params,
                               std::vector<ScaleModel> models, LossOptions options)
    : models_(std::move(models)), options_(options) {
  if (static_cast<int>(models_.size()) != params.num_scales()) {
    throw Error("scale count mismatch: one precomputed model per scale required");
  }
  for (int s = 1; s <= params.num_scales(); ++s) {
    const ScaleModel& m = models_[static_cast<std::size_t>(s - 1)];
    const GridGeometry g = m.grid;
    if (g.pixels() != m.approx.grid_pixels || m.mean.size() != g.pixels()) {
      throw Error("precomputed model for scale " + std::to_string(s) +
                  " is inconsistent with its grid");
    }
    grids_.push_back(g);
    assign_.push_back(soft_assignment(scene, params, s, g, options_.eps_den));
    weights_.push_back(params.weight(s));
    if (options_.normalize_by_weight && !(weights_.back() > 0.0)) {
      throw Error("weight normalization needs every w_s > 0");
    }
  }
}

void ScaleAwareLoss::check(std::span<const DensityField> preds) const {
  if (preds.size() != models_.size()) throw Error("scale count mismatch");
  for (std::size_t s = 0; s < preds.size(); ++s) {
    if (!(preds[s].grid == grids_[s])) {
      throw Error("prediction grid mismatch at scale " + std::to_string(s + 1));
    }
  }
}

Eigen::VectorXd ScaleAwareLoss::head_masses(const DensityField& pred, int scale_index) const {
  const auto s = static_cast<std::size_t>(scale_index - 1);
  Eigen::VectorXd m = assign_[s] * as_vector(pred);
  if (options_.normalize_by_weight) m /= weights_[s];
  return m;
}

LossBreakdown ScaleAwareLoss::evaluate(std::span<const DensityField> preds) const {
  check(preds);
  LossBreakdown out;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    const double nll = neg_log_likelihood(preds[s], models_[s].mean, models_[s].approx);
    const Eigen::VectorXd m = head_masses(preds[s], static_cast<int>(s + 1));
    const double reg = options_.reg_weight * (m.array() - 1.0).abs().sum();
    out.per_scale_nll.push_back(nll);
    out.per_scale_reg.push_back(reg);
  }
  for (double v : out.per_scale_nll) out.total += v;
  for (double v : out.per_scale_reg) out.total += v;
  return out;
}

std::vector<DensityField> ScaleAwareLoss::gradient(std::span<const DensityField> preds) const {
  check(preds);
  std::vector<DensityField> out;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    DensityField g(static_cast<int>(s + 1), grids_[s]);
    g.values = neg_log_likelihood_gradient(preds[s], models_[s].mean, models_[s].approx);

    const Eigen::VectorXd m = head_masses(preds[s], static_cast<int>(s + 1));
    Eigen::VectorXd sgn(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) sgn[i] = sign_or_zero(m[i] - 1.0);
    double scale = options_.reg_weight;
    if (options_.normalize_by_weight) scale /= weights_[s];
    const Eigen::VectorXd reg = scale * (assign_[s].transpose() * sgn);
    for (std::size_t j = 0; j < g.values.size(); ++j) g.values[j] += reg[static_cast<Eigen::Index>(j)];
    out.push_back(std::move(g));
  }
  return out;
}

LossBreakdown total_loss(std::span<const DensityField> preds, const AnnotatedScene& scene,
                         const ScaleParams& params, std::span<const ScaleModel> models,
                         const LossOptions& options) {
  const ScaleAwareLoss loss(scene, params, {models.begin(), models.end()}, options);
  return loss.evaluate(preds);
}

std::vector<DensityField> loss_gradient(std::span<const DensityField> preds,
                                        const AnnotatedScene& scene, const ScaleParams& params,
                                        std::span<const ScaleModel> models,
                                        const LossOptions& options) {
  const ScaleAwareLoss loss(scene, params, {models.begin(), models.end()}, options);
  return loss.gradient(preds);
}

// ---------------------------------------------------------------------------

L2Loss::L2Loss(std::vector<DensityField> targets) : targets_(std::move(targets)) {}

LossBreakdown L2Loss::evaluate(std::span<const DensityField> preds) const {
  if (preds.size() != targets_.size()) throw Error("scale count mismatch");
  LossBreakdown out;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    out.per_scale_nll.push_back(baseline_l2_loss(preds[s], targets_[s]));
    out.per_scale_reg.push_back(0.0);
    out.total += out.per_scale_nll.back();
  }
  return out;
}

std::vector<DensityField> L2Loss::gradient(std::span<const DensityField> preds) const {
  if (preds.size() != targets_.size()) throw Error("scale count mismatch");
  std::vector<DensityField> out;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    if (!(preds[s].grid == targets_[s].grid)) throw Error("baseline_l2_loss: grid mismatch");
    DensityField g(preds[s].scale_index, preds[s].grid);
    for (std::size_t j = 0; j < g.values.size(); ++j) {
      g.values[j] = 2.0 * (preds[s].values[j] - targets_[s].values[j]);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace sacc
