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
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sacc/annotation_model.hpp"
#include "sacc/density_moments.hpp"

namespace sacc {

/// Covariance provider under test; approx_cov on true positions by default.
using CovFn = std::function<Eigen::MatrixXd(const AnnotatedScene&, const ScaleParams&, int,
                                            GridGeometry)>;

CovFn default_cov_fn();

/// z-scores of a closed form against a Monte Carlo estimate.
struct ZSummary {
  long long tests = 0;
  double max_abs_z = 0.0;
  /// Entries with |z| above the threshold passed to the check.
  long long exceed = 0;
  /// tests * P(|Z| > threshold) for a standard normal Z.
  double expected_exceed = 0.0;
};

/// Monte Carlo moments of w_s * render(noisy) over fresh noise draws around the
/// true positions. `mean` uses `mean_draws`, `cov` uses `cov_draws` (skipped when 0).
struct MonteCarloMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_se;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd cov_se;
};

MonteCarloMoments monte_carlo_moments(const AnnotatedScene& scene, const ScaleParams& params,
                                      int scale_index, GridGeometry grid, long long mean_draws,
                                      long long cov_draws, std::uint64_t seed);

/// Compares `estimate` to `reference` entrywise in units of `se`. Entries with
/// zero standard error must match to 1e-12 absolute or count as infinite z.
ZSummary z_summary(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference,
                   const Eigen::MatrixXd& se, double threshold, bool upper_triangle_only);

/// Two-sided upper normal quantile: P(|Z| > z) = p.
double normal_two_sided_quantile(double p);

/// Finite-difference comparison of the scale-aware loss gradient.
struct GradientCheck {
  long long checked = 0;
  long long agree = 0;
  long long excluded = 0;
  double worst_rel_error = 0.0;
};

/// Central differences with step 1e-5 relative on every selected pixel of every
/// scale. Pixels whose perturbation could cross a |m_i - 1| kink are excluded.
GradientCheck check_loss_gradient(const AnnotatedScene& scene, const ScaleParams& params,
                                  std::uint64_t seed, double rel_tolerance = 1e-5);

struct VerifyRow {
  std::string name;
  std::string tolerance;
  std::string measured;
  bool passed = false;
};

struct VerifyOptions {
  CovFn cov = default_cov_fn();
  std::uint64_t seed = 20240601;
  /// Multiplies every Monte Carlo draw count.
  double draw_scale = 1.0;
};

/// The full oracle suite, one row per check.
std::vector<VerifyRow> run_verify(const VerifyOptions& options = {});

void write_verify_table(std::ostream& out, const std::vector<VerifyRow>& rows);

}  // namespace sacc
