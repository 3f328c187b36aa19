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
#include "sacc/optimizer.hpp"

#include <cmath>

#include "sacc/error.hpp"

namespace sacc {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

DescentResult gradient_descent(const Objective& f, std::vector<double> x0,
                               const DescentOptions& options) {
  if (options.max_iterations < 0 || !(options.initial_step > 0.0) ||
      !(options.backtrack > 0.0 && options.backtrack < 1.0)) {
    throw Error("invalid descent options");
  }
  DescentResult r;
  r.x = std::move(x0);
  std::vector<double> g(r.x.size()), g_new(r.x.size()), trial(r.x.size());
  double fx = f(r.x, &g);
  if (!std::isfinite(fx)) throw Error("objective is not finite at the starting point");
  r.trace.push_back(fx);

  double step = options.initial_step;
  std::vector<double> s_prev, y_prev;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double gg = dot(g, g);
    if (gg <= options.gradient_tolerance * options.gradient_tolerance) break;

    double t = step;
    if (options.barzilai_borwein && !s_prev.empty()) {
      const double sy = dot(s_prev, y_prev);
      if (sy > 0.0) t = dot(s_prev, s_prev) / sy;
    }

    bool accepted = false;
    double f_trial = fx;
    for (int b = 0; b <= options.max_backtracks; ++b) {
      for (std::size_t i = 0; i < r.x.size(); ++i) trial[i] = r.x[i] - t * g[i];
      f_trial = f(trial, nullptr);
      if (std::isfinite(f_trial) && f_trial <= fx - options.armijo * t * gg && f_trial < fx) {
        accepted = true;
        break;
      }
      t *= options.backtrack;
    }
    if (!accepted) {
      r.stalled = true;
      break;
    }
    const double f_new = f(trial, &g_new);
    if (!std::isfinite(f_new)) throw Error("objective diverged to a non-finite value");
    s_prev.resize(r.x.size());
    y_prev.resize(r.x.size());
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      s_prev[i] = trial[i] - r.x[i];
      y_prev[i] = g_new[i] - g[i];
    }
    r.x.swap(trial);
    g.swap(g_new);
    fx = f_new;
    r.trace.push_back(fx);
    r.iterations = it + 1;
    step = t * options.growth;
  }
  return r;
}

}  // namespace sacc
