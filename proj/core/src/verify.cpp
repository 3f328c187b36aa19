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
#include "sacc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

#include "sacc/error.hpp"
#include "sacc/fusion_ops.hpp"
#include "sacc/loss.hpp"
#include "sacc/lowrank.hpp"

namespace sacc {

CovFn default_cov_fn() {
  return [](const AnnotatedScene& scene, const ScaleParams& params, int s, GridGeometry grid) {
    return approx_cov(scene, params, s, grid, PositionSource::kTrue).cov;
  };
}

double normal_two_sided_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("quantile probability must be in (0, 1)");
  // Bisection on erfc, monotone and plenty accurate for reporting thresholds.
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::erfc(mid / std::numbers::sqrt2) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

// 1D normal density values at integer pixel centers 0..n-1.
void normal_1d(double center, double variance, int n, double* out) {
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * variance);
  for (int x = 0; x < n; ++x) {
    const double d = x - center;
    out[x] = c * std::exp(-d * d / (2.0 * variance));
  }
}

}  // namespace

MonteCarloMoments monte_carlo_moments(const AnnotatedScene& scene, const ScaleParams& params,
                                      int s, GridGeometry grid, long long mean_draws,
                                      long long cov_draws, std::uint64_t seed) {
  if (mean_draws < 2) throw Error("Monte Carlo needs at least two draws");
  const int J = grid.pixels();
  const double beta = params.beta(s), w = params.weight(s), a = params.alpha_at(s);
  const double d = params.coordinate_divisor(s);
  const double sd = std::sqrt(a);

  std::vector<double> gx(static_cast<std::size_t>(grid.width));
  std::vector<double> gy(static_cast<std::size_t>(grid.height));
  auto draw = [&](std::mt19937_64& rng, std::normal_distribution<double>& nd, double* field) {
    std::fill(field, field + J, 0.0);
    for (const auto& ann : scene.annotations()) {
      const double cx = ann.true_pos.x / d + sd * nd(rng);
      const double cy = ann.true_pos.y / d + sd * nd(rng);
      normal_1d(cx, beta, grid.width, gx.data());
      normal_1d(cy, beta, grid.height, gy.data());
      for (int y = 0; y < grid.height; ++y) {
        const double wy = w * gy[static_cast<std::size_t>(y)];
        double* row = field + static_cast<std::ptrdiff_t>(y) * grid.width;
        for (int x = 0; x < grid.width; ++x) row[x] += wy * gx[static_cast<std::size_t>(x)];
      }
    }
  };

  MonteCarloMoments m;
  {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd f(J), sum = Eigen::VectorXd::Zero(J), sq = Eigen::VectorXd::Zero(J);
    // Shift by the first draw to keep the variance sum well conditioned.
    Eigen::VectorXd shift;
    for (long long t = 0; t < mean_draws; ++t) {
      draw(rng, nd, f.data());
      if (t == 0) shift = f;
      const Eigen::VectorXd c = f - shift;
      sum += c;
      sq += c.cwiseProduct(c);
    }
    const double n = static_cast<double>(mean_draws);
    const Eigen::VectorXd mc = sum / n;
    m.mean = shift + mc;
    const Eigen::VectorXd var = ((sq / n) - mc.cwiseProduct(mc)) * (n / (n - 1.0));
    m.mean_se = (var.cwiseMax(0.0) / n).cwiseSqrt();
  }
  if (cov_draws > 1) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> nd(0.0, 1.0);
    const long long batch = 1024;
    Eigen::MatrixXd Y(batch, J);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(J, J), s4 = Eigen::MatrixXd::Zero(J, J);
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(J);
    // Products are taken around the Monte Carlo mean from the first stage and
    // corrected for the residual offset afterwards.
    const Eigen::RowVectorXd center = m.mean.transpose();
    Eigen::VectorXd f(J);
    long long done = 0;
    while (done < cov_draws) {
      const long long b = std::min(batch, cov_draws - done);
      for (long long r = 0; r < b; ++r) {
        draw(rng, nd, f.data());
        Y.row(r) = f.transpose() - center;
      }
      const auto Yb = Y.topRows(b);
      s1 += Yb.colwise().sum().transpose();
      s2.selfadjointView<Eigen::Lower>().rankUpdate(Yb.transpose());
      const Eigen::MatrixXd Y2 = Yb.cwiseProduct(Yb);
      s4.selfadjointView<Eigen::Lower>().rankUpdate(Y2.transpose());
      done += b;
    }
    s2 = s2.selfadjointView<Eigen::Lower>();
    s4 = s4.selfadjointView<Eigen::Lower>();
    const double n = static_cast<double>(cov_draws);
    const Eigen::VectorXd off = s1 / n;
    m.cov = (s2 / n - off * off.transpose()) * (n / (n - 1.0));
    // Var of a product of centered variables: E[y_j^2 y_k^2] - c_jk^2.
    const Eigen::MatrixXd fourth = s4 / n;
    m.cov_se = ((fourth - m.cov.cwiseProduct(m.cov)).cwiseMax(0.0) / n).cwiseSqrt();
  }
  return m;
}

ZSummary z_summary(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference,
                   const Eigen::MatrixXd& se, double threshold, bool upper_triangle_only) {
  if (estimate.rows() != reference.rows() || estimate.cols() != reference.cols() ||
      se.rows() != estimate.rows() || se.cols() != estimate.cols()) {
    throw Error("z_summary shape mismatch");
  }
  ZSummary z;
  for (Eigen::Index c = 0; c < estimate.cols(); ++c) {
    for (Eigen::Index r = 0; r < estimate.rows(); ++r) {
      if (upper_triangle_only && r > c) continue;
      const double diff = std::abs(estimate(r, c) - reference(r, c));
      double v;
      if (se(r, c) > 0.0) {
        v = diff / se(r, c);
      } else {
        v = diff <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
      }
      ++z.tests;
      z.max_abs_z = std::max(z.max_abs_z, v);
      if (v > threshold) ++z.exceed;
    }
  }
  z.expected_exceed = static_cast<double>(z.tests) * std::erfc(threshold / std::numbers::sqrt2);
  return z;
}

GradientCheck check_loss_gradient(const AnnotatedScene& scene, const ScaleParams& params,
                                  std::uint64_t seed, double rel_tolerance) {
  std::vector<ScaleModel> models;
  for (int s = 1; s <= params.num_scales(); ++s) {
    models.push_back(build_scale_model(scene, params, s, grid_for_scale(scene, params, s)));
  }
  const ScaleAwareLoss loss(scene, params, models);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<DensityField> preds;
  for (const auto& m : models) {
    DensityField f(static_cast<int>(preds.size()) + 1, m.grid);
    const double scale = m.mean.maxCoeff();
    for (int j = 0; j < m.grid.pixels(); ++j) {
      f.values[static_cast<std::size_t>(j)] = m.mean(j) + 0.3 * scale * nd(rng);
    }
    preds.push_back(std::move(f));
  }
  const auto grad = loss.gradient(preds);

  GradientCheck out;
  for (int s = 1; s <= params.num_scales(); ++s) {
    auto& field = preds[static_cast<std::size_t>(s - 1)];
    const auto& g = grad[static_cast<std::size_t>(s - 1)].values;
    const Eigen::MatrixXd assign =
        soft_assignment(scene, params, s, field.grid, LossOptions{}.eps_den);
    const Eigen::VectorXd masses = loss.head_masses(field, s);
    const double w = params.weight(s);
    double field_max = 0.0, grad_max = 0.0;
    for (double v : field.values) field_max = std::max(field_max, std::abs(v));
    for (double v : g) grad_max = std::max(grad_max, std::abs(v));
    for (int j : models[static_cast<std::size_t>(s - 1)].approx.selected) {
      double& x = field.values[static_cast<std::size_t>(j)];
      const double h = 1e-5 * std::max(std::abs(x), field_max);
      bool near_kink = false;
      for (Eigen::Index i = 0; i < assign.rows(); ++i) {
        const double dm = h * assign(i, j) / w;
        if (std::abs(masses(i) - 1.0) <= std::max(1e-6, 1.01 * dm)) near_kink = true;
      }
      if (near_kink) {
        ++out.excluded;
        continue;
      }
      const double x0 = x;
      x = x0 + h;
      const double fp = loss.evaluate(preds).total;
      x = x0 - h;
      const double fm = loss.evaluate(preds).total;
      x = x0;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = g[static_cast<std::size_t>(j)];
      const double denom = std::max({std::abs(an), std::abs(fd), 1e-8 * grad_max});
      const double rel = denom > 0.0 ? std::abs(fd - an) / denom : 0.0;
      ++out.checked;
      if (rel <= rel_tolerance) ++out.agree;
      out.worst_rel_error = std::max(out.worst_rel_error, rel);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Suite

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

ScaleParams single_scale(double alpha, double beta) {
  ScaleParams p;
  p.alpha = alpha;
  p.betas = {beta};
  p.weights = {1.0};
  return p;
}

AnnotatedScene random_scene(int w, int h, int n, double alpha, std::mt19937_64& rng,
                            double margin = 0.0) {
  std::uniform_real_distribution<double> ux(margin, w - margin), uy(margin, h - margin);
  std::normal_distribution<double> nd(0.0, std::sqrt(alpha));
  std::vector<Annotation> anns;
  for (int i = 0; i < n; ++i) {
    Annotation a;
    a.true_pos = {ux(rng), uy(rng)};
    a.noisy_pos = {a.true_pos.x + nd(rng), a.true_pos.y + nd(rng)};
    a.head_size = 8.0;
    anns.push_back(a);
  }
  return AnnotatedScene(w, h, std::move(anns));
}

double rel_diff(double a, double b) {
  const double d = std::max(std::abs(a), std::abs(b));
  return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

}  // namespace

std::vector<VerifyRow> run_verify(const VerifyOptions& options) {
  std::vector<VerifyRow> rows;
  std::mt19937_64 rng(options.seed);
  auto draws = [&](double n) {
    return std::max<long long>(100, std::llround(n * options.draw_scale));
  };

  // Kernel quadrature on a 200x200 grid.
  {
    double sum = 0.0;
    for (int y = 0; y < 200; ++y) {
      for (int x = 0; x < 200; ++x) sum += gaussian_kernel_2d({x - 100.0, y - 100.0}, 8.0);
    }
    const double err = std::abs(sum - 1.0);
    rows.push_back({"kernel_quadrature", "|sum-1| <= 1e-6", fmt(err), err <= 1e-6});
  }

  // Render normalization with a 6 sqrt(beta) margin.
  {
    const double beta = 8.0, margin = std::ceil(6.0 * std::sqrt(beta));
    const auto p = single_scale(1.0, beta);
    AnnotatedScene one(64, 64, {{{32.0, 32.0}, {32.0, 32.0}, 8.0}});
    const double e1 = std::abs(render_density(one, p, 1, PositionSource::kTrue).sum() - 1.0);
    const auto many = random_scene(64, 64, 7, 0.0, rng, margin);
    const double eN = std::abs(render_density(many, p, 1, PositionSource::kTrue).sum() - 7.0) / 7.0;
    const double worst = std::max(e1, eN);
    rows.push_back({"render_normalization", "|mass-N|/N <= 1e-3", fmt(worst), worst <= 1e-3});
  }

  // Mixture components carry w_s of the mass.
  {
    ScaleParams p;
    p.alpha = 1.0;
    p.betas = {8.0, 4.0, 2.0};
    p.weights = {0.5, 0.3, 0.2};
    AnnotatedScene one(64, 64, {{{32.0, 32.0}, {32.0, 32.0}, 8.0}});
    std::vector<GridGeometry> grids;
    for (int s = 1; s <= 3; ++s) grids.push_back(grid_for_scale(one, p, s));
    const auto comps = mixture_density(one, p, grids, PositionSource::kTrue);
    double worst = 0.0;
    for (int s = 0; s < 3; ++s) {
      worst = std::max(worst, std::abs(comps[static_cast<std::size_t>(s)].sum() - p.weights[static_cast<std::size_t>(s)]));
    }
    rows.push_back({"mixture_component_mass", "|mass-w_s| <= 1e-2", fmt(worst), worst <= 1e-2});
  }

  // Monte Carlo mean: 5 heads, alpha = beta = 8.
  {
    const auto p = single_scale(8.0, 8.0);
    const auto scene = random_scene(12, 12, 5, 8.0, rng);
    const GridGeometry g{12, 12};
    const auto mc = monte_carlo_moments(scene, p, 1, g, draws(1e5), 0, rng());
    const Eigen::VectorXd mu = approx_mean(scene, p, 1, g, PositionSource::kTrue);
    const double thr = normal_two_sided_quantile(1e-3 / g.pixels());
    const auto z = z_summary(mc.mean, mu, mc.mean_se, thr, false);
    rows.push_back({"monte_carlo_mean", "max|z| <= " + fmt(thr) + " (familywise 1e-3)",
                    "max|z| = " + fmt(z.max_abs_z), z.max_abs_z <= thr});
  }

  // Monte Carlo covariance: 3 heads on 8x8, against the provider under test.
  {
    const auto p = single_scale(8.0, 8.0);
    const auto scene = random_scene(8, 8, 3, 8.0, rng);
    const GridGeometry g{8, 8};
    const auto mc = monte_carlo_moments(scene, p, 1, g, draws(1e5), draws(2e5), rng());
    const Eigen::MatrixXd cov = options.cov(scene, p, 1, g);
    const double tests = g.pixels() * (g.pixels() + 1) / 2.0;
    const double thr = normal_two_sided_quantile(1e-3 / tests);
    const auto z = z_summary(mc.cov, cov, mc.cov_se, thr, true);
    rows.push_back({"monte_carlo_covariance", "max|z| <= " + fmt(thr) + " (familywise 1e-3)",
                    "max|z| = " + fmt(z.max_abs_z), z.max_abs_z <= thr});
  }

  // Diagonal formula against the general covariance, and PSD up to tolerance.
  {
    double worst = 0.0, worst_psd = 0.0;
    for (int t = 0; t < 5; ++t) {
      ScaleParams p;
      p.alpha = 8.0;
      p.betas = {8.0, 4.0, 2.0};
      p.weights = {0.2, 0.5, 0.3};
      const auto scene = random_scene(16, 16, 1 + static_cast<int>(rng() % 8), 8.0, rng);
      for (int s = 1; s <= 3; ++s) {
        const auto g = grid_for_scale(scene, p, s);
        const auto ga = approx_cov(scene, p, s, g);
        const Eigen::VectorXd diag = variance_diagonal(scene, p, s, g);
        for (int j = 0; j < g.pixels(); ++j) worst = std::max(worst, rel_diff(ga.cov(j, j), diag(j)));
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                       ga.cov, Eigen::EigenvaluesOnly).eigenvalues();
        if (ev.maxCoeff() > 0.0) worst_psd = std::max(worst_psd, -ev.minCoeff() / ev.maxCoeff());
      }
    }
    rows.push_back({"variance_diagonal_consistency", "rel <= 1e-10", fmt(worst), worst <= 1e-10});
    rows.push_back({"covariance_psd", "-min_eig/max_eig <= 1e-8", fmt(worst_psd), worst_psd <= 1e-8});
  }

  // No annotation noise, no covariance.
  {
    const auto p = single_scale(0.0, 8.0);
    const auto scene = random_scene(10, 10, 4, 0.0, rng);
    const double m = approx_cov(scene, p, 1, {10, 10}).cov.cwiseAbs().maxCoeff();
    rows.push_back({"zero_noise_covariance", "max|cov| <= 1e-12", fmt(m), m <= 1e-12});
  }

  // Eckart-Young on random PSD matrices, singular values from an independent SVD.
  {
    double worst = 0.0, worst_full = 0.0;
    for (int t = 0; t < 10; ++t) {
      const int n = 8 + static_cast<int>(rng() % 57);
      const int rank = 1 + static_cast<int>(rng() % static_cast<unsigned>(n - 1));
      std::normal_distribution<double> nd(0.0, 1.0);
      Eigen::MatrixXd G(n, n);
      for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) G(r, c) = nd(rng);
      }
      const Eigen::MatrixXd A = G * G.transpose();
      std::vector<int> all(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
      const auto ra = truncate_cov(A, all, rank);
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
      const double tail = std::sqrt(sv.tail(n - rank).squaredNorm());
      const double resid = (A - ra.reconstruct()).norm();
      worst = std::max({worst, std::abs(resid - tail) / tail,
                        std::abs(ra.truncation_error - tail) / tail});
      // Keeping every triple reproduces the matrix.
      const auto full = truncate_cov(A, all, n);
      worst_full = std::max(worst_full, (A - full.reconstruct()).norm() / A.norm());
    }
    rows.push_back({"eckart_young", "rel <= 1e-8", fmt(worst), worst <= 1e-8});
    rows.push_back({"full_rank_reconstruction", "rel <= 1e-10", fmt(worst_full),
                    worst_full <= 1e-10});
  }

  // Quadratic form against a dense solve on 15 pixels.
  {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd G(15, 15);
    for (int c = 0; c < 15; ++c) {
      for (int r = 0; r < 15; ++r) G(r, c) = nd(rng);
    }
    const Eigen::MatrixXd A = G * G.transpose();
    std::vector<int> all(15);
    for (int i = 0; i < 15; ++i) all[static_cast<std::size_t>(i)] = i;
    const auto ra = truncate_cov(A, all, 15, {1e-3, true});
    DensityField pred(1, {5, 3});
    Eigen::VectorXd mean(15);
    for (int j = 0; j < 15; ++j) {
      pred.values[static_cast<std::size_t>(j)] = nd(rng);
      mean(j) = nd(rng);
    }
    const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(pred.values.data(), 15) - mean;
    const Eigen::MatrixXd K = ra.reconstruct() + ra.jitter * Eigen::MatrixXd::Identity(15, 15);
    const double dense = d.dot(K.partialPivLu().solve(d));
    const double err = rel_diff(neg_log_likelihood(pred, mean, ra), dense);
    rows.push_back({"nll_dense_solve", "rel <= 1e-9", fmt(err), err <= 1e-9});
  }

  // Finite-difference gradients.
  {
    ScaleParams p = build_scale_params(HeadSizeDistribution::log_normal(std::log(8.0), 0.5), 3,
                                       8.0, 8.0);
    long long checked = 0, agree = 0;
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
      const auto scene = random_scene(16, 16, 2 + static_cast<int>(rng() % 5), 8.0, rng);
      const auto gc = check_loss_gradient(scene, p, rng());
      checked += gc.checked;
      agree += gc.agree;
      worst = std::max(worst, gc.worst_rel_error);
    }
    const double frac = checked ? static_cast<double>(agree) / static_cast<double>(checked) : 0.0;
    rows.push_back({"loss_gradient_fd", "share within 1e-5 rel >= 0.99",
                    fmt(frac) + " of " + std::to_string(checked), frac >= 0.99});
  }

  // Shape algebra.
  {
    bool ok = true;
    for (int c : {1, 3, 8}) {
      for (int w : {4, 8, 12}) {
        for (int h : {4, 16}) {
          const auto t = FeatureTensor::random(c, w, h, rng());
          const auto dw = Depthwise2x2::random(c, rng());
          const auto down = interpolation_down(t, dw);
          const auto up = interpolation_up(t, dw);
          ok = ok && down.channels() == c && down.width() == 3 * w / 4 && down.height() == 3 * h / 4;
          ok = ok && up.channels() == c && up.width() == 3 * w / 2 && up.height() == 3 * h / 2;
          if (down.width() % 2 == 0 && down.height() % 2 == 0) {
            const auto both = interpolation_up(down, dw);
            ok = ok && both.width() * 8 == w * 9 && both.height() * 8 == h * 9;
          }
        }
      }
    }
    rows.push_back({"interpolation_shapes", "exact", ok ? "ok" : "mismatch", ok});

    const auto scales = enumerate_sfm_scales(3, 224);
    bool reach = true;
    for (const Rational r : {Rational(1, 2), Rational(1, 3), Rational(1, 4), Rational(1, 6),
                             Rational(1, 8)}) {
      reach = reach && scales.count(r) == 1;
    }
    rows.push_back({"sfm_scale_reachability", "{1/2,1/3,1/4,1/6,1/8} reachable",
                    std::to_string(scales.size()) + " scales", reach});
  }

  // Superposition for every fusion op.
  {
    const auto a = FeatureTensor::random(4, 8, 8, rng(), Rational(1, 2));
    const auto b = FeatureTensor::random(4, 8, 8, rng(), Rational(1, 2));
    const double ca = 0.7, cb = -1.3;
    std::vector<double> mix(a.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = ca * a.data()[i] + cb * b.data()[i];
    const FeatureTensor m(4, 8, 8, mix, Rational(1, 2));
    const auto dw = Depthwise2x2::random(4, rng());
    const int in_ch[2] = {4, 4};
    const auto sfm = SfmWeights::random(in_ch, 6, 5, rng());
    const auto scb = ScbWeights::random(4, 3, 2, rng());
    const auto ifm = Conv2d::random(8, 3, 1, rng(), 0);
    double worst = 0.0;
    auto check = [&](auto&& op) {
      const auto fa = op(a), fb = op(b), fm = op(m);
      double scale = 0.0;
      for (std::size_t i = 0; i < fm.size(); ++i) {
        scale = std::max({scale, std::abs(fa.data()[i]), std::abs(fb.data()[i])});
      }
      for (std::size_t i = 0; i < fm.size(); ++i) {
        const double lin = ca * fa.data()[i] + cb * fb.data()[i];
        worst = std::max(worst, std::abs(fm.data()[i] - lin) / std::max(scale, 1e-300));
      }
    };
    check([&](const FeatureTensor& t) { return interpolation_down(t, dw); });
    check([&](const FeatureTensor& t) { return interpolation_up(t, dw); });
    check([&](const FeatureTensor& t) {
      // Linear in the 1/2-scale input with the 1/4-scale input held at zero.
      FeatureTensor zero(4, 4, 4, Rational(1, 4));
      const FeatureTensor ins[2] = {t, zero};
      return sfm_fuse(ins, Rational(1, 3), sfm);
    });
    check([&](const FeatureTensor& t) {
      const FeatureTensor ins[2] = {t, t};
      return ifm_block(ins, ifm);
    });
    check([&](const FeatureTensor& t) { return scb_split_block(t, scb); });
    rows.push_back({"fusion_linearity", "rel <= 1e-10", fmt(worst), worst <= 1e-10});
  }

  // Parameter and MAC arithmetic.
  {
    LayerSpec conv;
    conv.kind = LayerKind::kConv;
    conv.kernel = 3;
    conv.in_channels = 3;
    conv.out_channels = 64;
    const LayerSpec g[1] = {conv};
    const auto c = count_params_macs(g, {3, 224, 224});
    const bool ok = c.params == 1792 && c.macs == 86704128LL;
    rows.push_back({"conv_param_mac_count", "exact",
                    std::to_string(c.params) + " params, " + std::to_string(c.macs) + " MACs", ok});
  }
  return rows;
}

void write_verify_table(std::ostream& out, const std::vector<VerifyRow>& rows) {
  std::size_t wn = 5, wt = 9, wm = 8;
  for (const auto& r : rows) {
    wn = std::max(wn, r.name.size());
    wt = std::max(wt, r.tolerance.size());
    wm = std::max(wm, r.measured.size());
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  out << pad("check", wn) << "  " << pad("tolerance", wt) << "  " << pad("measured", wm)
      << "  result\n";
  for (const auto& r : rows) {
    out << pad(r.name, wn) << "  " << pad(r.tolerance, wt) << "  " << pad(r.measured, wm) << "  "
        << (r.passed ? "PASS" : "FAIL") << '\n';
  }
}

}  // namespace sacc
