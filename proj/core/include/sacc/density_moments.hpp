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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sacc/annotation_model.hpp"

namespace sacc {

/// Pixel grid at one scale. Pixel (x, y) has its center at integer coordinates.
struct GridGeometry {
  int width = 0;
  int height = 0;

  int pixels() const { return width * height; }
  int index(int x, int y) const { return y * width + x; }
  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Grid of the image at `scale_index`: each side divided by factor^(s-1), rounded up.
GridGeometry grid_for_scale(const AnnotatedScene& scene, const ScaleParams& params,
                            int scale_index);

/// Row-major density values on a scale grid.
struct DensityField {
  int scale_index = 1;
  GridGeometry grid;
  std::vector<double> values;
  /// True when the field came from a render and is known to be >= 0.
  bool nonnegative = false;

  DensityField() = default;
  DensityField(int scale, GridGeometry g, bool nonneg = false)
      : scale_index(scale),
        grid(g),
        values(static_cast<std::size_t>(g.pixels()), 0.0),
        nonnegative(nonneg) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(grid.index(x, y))]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(grid.index(x, y))]; }
  double sum() const;
};

/// Closed-form moments of the noisy-annotation density at one scale.
struct GaussianApprox {
  int scale_index = 1;
  GridGeometry grid;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::VectorXd diag_var;
};

/// Isotropic bivariate normal density N(q | 0, variance * I).
double gaussian_kernel_2d(Vec2 q, double variance);

/// Unweighted sum of beta_s kernels centered on the rescaled annotations.
DensityField render_density(const AnnotatedScene& scene, const ScaleParams& params,
                            int scale_index, PositionSource source, GridGeometry grid);
DensityField render_density(const AnnotatedScene& scene, const ScaleParams& params,
                            int scale_index, PositionSource source);

/// Per-scale components D_s = w_s * render_s of the kernel mixture.
std::vector<DensityField> mixture_density(const AnnotatedScene& scene, const ScaleParams& params,
                                          std::span<const GridGeometry> grids,
                                          PositionSource source);

/// mu_s(x_j) = w_s * sum_i N(x_j - H_i | 0, (alpha_s + beta_s) I).
///
/// `source` picks the kernel centers. The moments are taken over annotation
/// noise around those centers, so kTrue gives the exact expectation of a
/// noisy render and kNoisy is what a trainer (who only has annotations) uses.
Eigen::VectorXd approx_mean(const AnnotatedScene& scene, const ScaleParams& params,
                            int scale_index, GridGeometry grid,
                            PositionSource source = PositionSource::kNoisy);

/// Variance diagonal evaluated term by term:
/// sum_i [w_s^2/(4 pi beta_s) N(q_i | 0, (beta_s/2 + alpha_s) I) - mu_i(x_j)^2].
Eigen::VectorXd variance_diagonal(const AnnotatedScene& scene, const ScaleParams& params,
                                  int scale_index, GridGeometry grid,
                                  PositionSource source = PositionSource::kNoisy);

inline constexpr int kDefaultMaxCovPixels = 4096;

/// Full J_s x J_s covariance using the Gaussian product rule
///   Omega_i(x_j, x_k) = N(x_j - x_k | 0, 2 beta I) N((x_j + x_k)/2 - H_i | 0, (beta/2 + alpha) I).
/// Throws when the grid exceeds `max_pixels`.
GaussianApprox approx_cov(const AnnotatedScene& scene, const ScaleParams& params, int scale_index,
                          GridGeometry grid, PositionSource source = PositionSource::kNoisy,
                          int max_pixels = kDefaultMaxCovPixels);

/// Header `scale width height`, then one row of `width` values per line.
void write_density(std::ostream& out, const DensityField& field);
DensityField read_density(std::istream& in);

}  // namespace sacc
