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
#include "sacc/density_moments.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sacc/error.hpp"

namespace sacc {

namespace {

// 1-D normal density; the 2-D isotropic kernel factors into two of these.
double normal_1d(double d, double variance) {
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

void check_scale(const ScaleParams& params, int scale_index) {
  if (scale_index < 1 || scale_index > params.num_scales()) {
    throw Error("scale_index must be in [1, S]");
  }
}

void check_grid(GridGeometry grid) {
  if (grid.width < 1 || grid.height < 1) throw Error("grid dimensions must be positive");
}

// Per-axis kernel tables for one center: row[x] and col[y].
struct AxisTables {
  std::vector<double> gx;
  std::vector<double> gy;
};

AxisTables axis_tables(Vec2 c, double variance, GridGeometry grid) {
  AxisTables t{std::vector<double>(static_cast<std::size_t>(grid.width)),
               std::vector<double>(static_cast<std::size_t>(grid.height))};
  for (int x = 0; x < grid.width; ++x) t.gx[static_cast<std::size_t>(x)] = normal_1d(x - c.x, variance);
  for (int y = 0; y < grid.height; ++y) t.gy[static_cast<std::size_t>(y)] = normal_1d(y - c.y, variance);
  return t;
}

// Annotation-major accumulation of isotropic kernels.
std::vector<double> sum_kernels(std::span<const Vec2> centers, double variance, GridGeometry grid) {
  std::vector<double> out(static_cast<std::size_t>(grid.pixels()), 0.0);
  for (const Vec2& c : centers) {
    const AxisTables t = axis_tables(c, variance, grid);
    for (int y = 0; y < grid.height; ++y) {
      const double gy = t.gy[static_cast<std::size_t>(y)];
      double* row = out.data() + static_cast<std::size_t>(grid.index(0, y));
      for (int x = 0; x < grid.width; ++x) row[x] += t.gx[static_cast<std::size_t>(x)] * gy;
    }
  }
  return out;
}

}  // namespace

double DensityField::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

GridGeometry grid_for_scale(const AnnotatedScene& scene, const ScaleParams& params,
                            int scale_index) {
  const double d = params.coordinate_divisor(scale_index);
  return {static_cast<int>(std::ceil(scene.width() / d - 1e-12)),
          static_cast<int>(std::ceil(scene.height() / d - 1e-12))};
}

double gaussian_kernel_2d(Vec2 q, double variance) {
  if (!(variance > 0.0)) throw Error("kernel variance must be positive");
  return std::exp(-(q.x * q.x + q.y * q.y) / (2.0 * variance)) /
         (2.0 * std::numbers::pi * variance);
}

DensityField render_density(const AnnotatedScene& scene, const ScaleParams& params,
                            int scale_index, PositionSource source, GridGeometry grid) {
  check_scale(params, scale_index);
  check_grid(grid);
  const auto centers =
      rescale_annotations(scene, scale_index, params.downsample_factor, source);
  DensityField f(scale_index, grid, true);
  f.values = sum_kernels(centers, params.beta(scale_index), grid);
  return f;
}

DensityField render_density(const AnnotatedScene& scene, const ScaleParams& params,
                            int scale_index, PositionSource source) {
  return render_density(scene, params, scale_index, source,
                        grid_for_scale(scene, params, scale_index));
}

std::vector<DensityField> mixture_density(const AnnotatedScene& scene, const ScaleParams& params,
                                          std::span<const GridGeometry> grids,
                                          PositionSource source) {
  if (static_cast<int>(grids.size()) != params.num_scales()) {
    throw Error("mixture_density needs one grid per scale");
  }
  std::vector<DensityField> out;
  out.reserve(grids.size());
  for (int s = 1; s <= params.num_scales(); ++s) {
    DensityField f = render_density(scene, params, s, source, grids[static_cast<std::size_t>(s - 1)]);
    const double w = params.weight(s);
    for (double& v : f.values) v *= w;
    out.push_back(std::move(f));
  }
  return out;
}

Eigen::VectorXd approx_mean(const AnnotatedScene& scene, const ScaleParams& params,
                            int scale_index, GridGeometry grid, PositionSource source) {
  check_scale(params, scale_index);
  check_grid(grid);
  const auto centers =
      rescale_annotations(scene, scale_index, params.downsample_factor, source);
  const double var = params.alpha_at(scale_index) + params.beta(scale_index);
  const std::vector<double> k = sum_kernels(centers, var, grid);
  const double w = params.weight(scale_index);
  Eigen::VectorXd mu(grid.pixels());
  for (int j = 0; j < grid.pixels(); ++j) mu[j] = w * k[static_cast<std::size_t>(j)];
  return mu;
}

Eigen::VectorXd variance_diagonal(const AnnotatedScene& scene, const ScaleParams& params,
                                  int scale_index, GridGeometry grid, PositionSource source) {
  check_scale(params, scale_index);
  check_grid(grid);
  const auto centers =
      rescale_annotations(scene, scale_index, params.downsample_factor, source);
  const double beta = params.beta(scale_index);
  const double alpha = params.alpha_at(scale_index);
  const double w = params.weight(scale_index);
  const double lead = w * w / (4.0 * std::numbers::pi * beta);

  Eigen::VectorXd var = Eigen::VectorXd::Zero(grid.pixels());
  for (const Vec2& c : centers) {
    for (int y = 0; y < grid.height; ++y) {
      for (int x = 0; x < grid.width; ++x) {
        const Vec2 q{x - c.x, y - c.y};
        const double mu_i = w * gaussian_kernel_2d(q, alpha + beta);
        var[grid.index(x, y)] += lead * gaussian_kernel_2d(q, beta / 2.0 + alpha) - mu_i * mu_i;
      }
    }
  }
  return var;
}

GaussianApprox approx_cov(const AnnotatedScene& scene, const ScaleParams& params, int scale_index,
                          GridGeometry grid, PositionSource source, int max_pixels) {
  check_scale(params, scale_index);
  check_grid(grid);
  const int J = grid.pixels();
  if (J > max_pixels) {
    throw Error("approx_cov: grid has " + std::to_string(J) +
                " pixels, above the dense-covariance guard max_pixels=" +
                std::to_string(max_pixels));
  }
  const auto centers =
      rescale_annotations(scene, scale_index, params.downsample_factor, source);
  const double beta = params.beta(scale_index);
  const double alpha = params.alpha_at(scale_index);
  const double w = params.weight(scale_index);
  const std::size_t W = static_cast<std::size_t>(grid.width);
  const std::size_t H = static_cast<std::size_t>(grid.height);

  GaussianApprox g;
  g.scale_index = scale_index;
  g.grid = grid;
  g.mean = Eigen::VectorXd::Zero(J);
  g.cov = Eigen::MatrixXd::Zero(J, J);

  // Omega separates per axis: T[a][b] = N(a - b | 0, 2 beta) N((a + b)/2 - c | 0, beta/2 + alpha).
  std::vector<double> tx(W * W), ty(H * H);
  Eigen::VectorXd mu_i(J);
  for (const Vec2& c : centers) {
    for (std::size_t a = 0; a < W; ++a) {
      for (std::size_t b = 0; b < W; ++b) {
        const double xa = static_cast<double>(a), xb = static_cast<double>(b);
        tx[a * W + b] =
            normal_1d(xa - xb, 2.0 * beta) * normal_1d(0.5 * (xa + xb) - c.x, beta / 2.0 + alpha);
      }
    }
    for (std::size_t a = 0; a < H; ++a) {
      for (std::size_t b = 0; b < H; ++b) {
        const double ya = static_cast<double>(a), yb = static_cast<double>(b);
        ty[a * H + b] =
            normal_1d(ya - yb, 2.0 * beta) * normal_1d(0.5 * (ya + yb) - c.y, beta / 2.0 + alpha);
      }
    }
    const AxisTables m = axis_tables(c, alpha + beta, grid);
    for (int y = 0; y < grid.height; ++y) {
      for (int x = 0; x < grid.width; ++x) {
        mu_i[grid.index(x, y)] = w * m.gx[static_cast<std::size_t>(x)] * m.gy[static_cast<std::size_t>(y)];
      }
    }
    g.mean += mu_i;

    const double w2 = w * w;
    for (int k = 0; k < J; ++k) {
      const std::size_t xk = static_cast<std::size_t>(k % grid.width);
      const std::size_t yk = static_cast<std::size_t>(k / grid.width);
      double* col = g.cov.col(k).data();
      for (int j = 0; j <= k; ++j) {
        const std::size_t xj = static_cast<std::size_t>(j % grid.width);
        const std::size_t yj = static_cast<std::size_t>(j / grid.width);
        col[j] += w2 * tx[xj * W + xk] * ty[yj * H + yk] - mu_i[j] * mu_i[k];
      }
    }
  }
  // Mirror the upper triangle.
  for (int k = 0; k < J; ++k) {
    for (int j = 0; j < k; ++j) g.cov(k, j) = g.cov(j, k);
  }
  g.diag_var = g.cov.diagonal();
  return g;
}

void write_density(std::ostream& out, const DensityField& field) {
  out << field.scale_index << ' ' << field.grid.width << ' ' << field.grid.height << '\n';
  char buf[40];
  for (int y = 0; y < field.grid.height; ++y) {
    for (int x = 0; x < field.grid.width; ++x) {
      std::snprintf(buf, sizeof(buf), "%.17g", field.at(x, y));
      if (x > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

DensityField read_density(std::istream& in) {
  int scale = 0;
  GridGeometry grid;
  if (!(in >> scale >> grid.width >> grid.height) || grid.width < 1 || grid.height < 1) {
    throw Error("density file: header must be `scale width height`");
  }
  DensityField f(scale, grid);
  for (double& v : f.values) {
    if (!(in >> v)) throw Error("density file: truncated values");
  }
  return f;
}

}  // namespace sacc
