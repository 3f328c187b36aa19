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
#include "sacc/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sacc/error.hpp"

namespace sacc {

std::vector<int> select_pixels(std::span<const double> diag_var, double mass_threshold) {
  if (!(mass_threshold > 0.0 && mass_threshold < 1.0)) {
    throw Error("mass_threshold must lie in (0, 1)");
  }
  double peak = 0.0;
  for (double v : diag_var) {
    if (!std::isfinite(v)) throw Error("variance vector has non-finite entries");
    peak = std::max(peak, std::abs(v));
  }
  std::vector<double> var(diag_var.begin(), diag_var.end());
  for (double& v : var) {
    if (v < 0.0) {
      // Closed-form variances can round to tiny negatives.
      if (v < -1e-12 * peak) throw Error("variance vector has negative entries");
      v = 0.0;
    }
  }
  const double total = std::accumulate(var.begin(), var.end(), 0.0);
  if (!(total > 0.0)) throw Error("no variance mass");

  std::vector<int> order(var.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return var[static_cast<std::size_t>(a)] > var[static_cast<std::size_t>(b)];
  });

  const double target = mass_threshold * total;
  double cum = 0.0;
  std::size_t m = 0;
  while (m < order.size()) {
    cum += var[static_cast<std::size_t>(order[m])];
    ++m;
    if (cum > target) break;
  }
  std::vector<int> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(picked.begin(), picked.end());
  return picked;
}

Eigen::MatrixXd RankMApprox::reconstruct() const {
  return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
}

RankMApprox truncate_cov(const Eigen::MatrixXd& cov, std::span<const int> selected, int rank,
                         JitterSpec jitter) {
  if (cov.rows() != cov.cols()) throw Error("covariance must be square");
  const int L = static_cast<int>(selected.size());
  if (L < 1) throw Error("at least one pixel must be selected");
  if (rank < 1 || rank > L) throw Error("rank must lie in [1, |selected|]");
  for (int i = 0; i < L; ++i) {
    const int p = selected[static_cast<std::size_t>(i)];
    if (p < 0 || p >= cov.rows()) throw Error("selected pixel index out of range");
    if (i > 0 && p <= selected[static_cast<std::size_t>(i - 1)]) {
      throw Error("selected pixel indices must be strictly increasing");
    }
  }
  if (!(jitter.value >= 0.0)) throw Error("jitter must be >= 0");

  Eigen::MatrixXd sub(L, L);
  for (int a = 0; a < L; ++a) {
    for (int b = 0; b < L; ++b) {
      sub(a, b) = cov(selected[static_cast<std::size_t>(a)], selected[static_cast<std::size_t>(b)]);
    }
  }
  const Eigen::MatrixXd sym = 0.5 * (sub + sub.transpose());

  // For a symmetric matrix the SVD follows from the eigendecomposition:
  // c_i = |lambda_i|, u_i = e_i, v_i = sign(lambda_i) e_i.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "SVD of the " << L << "x" << L << " covariance block did not converge (frobenius norm "
        << sym.norm() << ", max |entry| " << sym.cwiseAbs().maxCoeff() << ", finite "
        << (sym.allFinite() ? "yes" : "no") << ")";
    throw Error(msg.str());
  }
  const Eigen::VectorXd& lam = eig.eigenvalues();
  std::vector<int> order(static_cast<std::size_t>(L));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(lam[a]) > std::abs(lam[b]); });

  RankMApprox r;
  r.grid_pixels = static_cast<int>(cov.rows());
  r.selected.assign(selected.begin(), selected.end());
  r.singular_values.resize(rank);
  r.left_vectors.resize(L, rank);
  r.right_vectors.resize(L, rank);
  Eigen::VectorXd signed_vals(rank);
  for (int i = 0; i < rank; ++i) {
    const int k = order[static_cast<std::size_t>(i)];
    const double sign = lam[k] < 0.0 ? -1.0 : 1.0;
    r.singular_values[i] = std::abs(lam[k]);
    r.left_vectors.col(i) = eig.eigenvectors().col(k);
    r.right_vectors.col(i) = sign * eig.eigenvectors().col(k);
    signed_vals[i] = lam[k];
  }
  double discarded = 0.0;
  for (int i = rank; i < L; ++i) {
    const double c = lam[order[static_cast<std::size_t>(i)]];
    discarded += c * c;
  }
  r.truncation_error = std::sqrt(discarded);

  const double c_max = r.singular_values[0];
  r.jitter = jitter.relative ? jitter.value * c_max : jitter.value;

  const Eigen::MatrixXd& E = r.left_vectors;
  if (r.jitter > 0.0) {
    // (E diag(lam) E^T + j I)^-1 = E diag(1/(lam + j)) E^T + (I - E E^T) / j
    Eigen::VectorXd inv(rank);
    for (int i = 0; i < rank; ++i) {
      const double d = signed_vals[i] + r.jitter;
      if (!(d > 0.0)) throw Error("singular quadratic form: jittered covariance is not positive");
      inv[i] = 1.0 / d - 1.0 / r.jitter;
    }
    r.precision = E * inv.asDiagonal() * E.transpose();
    r.precision.diagonal().array() += 1.0 / r.jitter;
  } else {
    const double floor = 1e-14 * std::max(c_max, 1e-300);
    if (rank < L || !(signed_vals.minCoeff() > floor)) {
      throw Error("singular quadratic form: zero jitter needs a full-rank positive covariance");
    }
    r.precision = E * signed_vals.cwiseInverse().asDiagonal() * E.transpose();
  }
  r.precision = 0.5 * (r.precision + r.precision.transpose()).eval();
  r.packed_precision.reserve(static_cast<std::size_t>(L) * static_cast<std::size_t>(L + 1) / 2);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j <= i; ++j) r.packed_precision.push_back(r.precision(i, j));
  }
  return r;
}

namespace {

Eigen::VectorXd selected_residual(const DensityField& pred, const Eigen::VectorXd& mean,
                                  const RankMApprox& approx) {
  if (pred.grid.pixels() != approx.grid_pixels || mean.size() != approx.grid_pixels) {
    throw Error("neg_log_likelihood: prediction, mean and covariance grids differ");
  }
  const auto L = static_cast<Eigen::Index>(approx.selected.size());
  Eigen::VectorXd d(L);
  for (Eigen::Index a = 0; a < L; ++a) {
    const int p = approx.selected[static_cast<std::size_t>(a)];
    d[a] = pred.values[static_cast<std::size_t>(p)] - mean[p];
  }
  return d;
}

}  // namespace

double neg_log_likelihood(const DensityField& pred, const Eigen::VectorXd& mean,
                          const RankMApprox& approx) {
  const Eigen::VectorXd d = selected_residual(pred, mean, approx);
  const auto L = d.size();
  if (approx.packed_precision.size() != static_cast<std::size_t>(L * (L + 1) / 2)) {
    throw Error("neg_log_likelihood: packed precision missing; build the approximation with truncate_cov");
  }
  // Half the memory traffic of a dense product.
  double q = 0.0;
  const double* row = approx.packed_precision.data();
  const double* dv = d.data();
  for (Eigen::Index i = 0; i < L; ++i) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    Eigen::Index j = 0;
    for (; j + 4 <= i; j += 4) {
      a0 += row[j] * dv[j];
      a1 += row[j + 1] * dv[j + 1];
      a2 += row[j + 2] * dv[j + 2];
      a3 += row[j + 3] * dv[j + 3];
    }
    for (; j < i; ++j) a0 += row[j] * dv[j];
    q += dv[i] * (2.0 * ((a0 + a1) + (a2 + a3)) + row[i] * dv[i]);
    row += i + 1;
  }
  return q;
}

std::vector<double> neg_log_likelihood_gradient(const DensityField& pred,
                                                const Eigen::VectorXd& mean,
                                                const RankMApprox& approx) {
  const Eigen::VectorXd d = selected_residual(pred, mean, approx);
  const Eigen::VectorXd g = 2.0 * (approx.precision * d);
  std::vector<double> out(static_cast<std::size_t>(approx.grid_pixels), 0.0);
  for (std::size_t a = 0; a < approx.selected.size(); ++a) {
    out[static_cast<std::size_t>(approx.selected[a])] = g[static_cast<Eigen::Index>(a)];
  }
  return out;
}

ScaleModel build_scale_model(const AnnotatedScene& scene, const ScaleParams& params,
                             int scale_index, GridGeometry grid, const LowRankOptions& options,
                             PositionSource source) {
  GaussianApprox g = approx_cov(scene, params, scale_index, grid, source, options.max_pixels);
  const std::vector<int> picked =
      select_pixels(std::span<const double>(g.diag_var.data(), static_cast<std::size_t>(g.diag_var.size())),
                    options.mass_threshold);
  const int rank = options.rank > 0 ? std::min<int>(options.rank, static_cast<int>(picked.size()))
                                    : static_cast<int>(picked.size());
  return {grid, std::move(g.mean), truncate_cov(g.cov, picked, rank, options.jitter)};
}

}  // namespace sacc
