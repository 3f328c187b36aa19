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

#include <functional>
#include <string>
#include <vector>

namespace sacc {

struct DescentOptions {
  int max_iterations = 500;
  double initial_step = 1.0;
  /// Step multiplier on each rejected trial.
  double backtrack = 0.5;
  /// Step multiplier carried into the next iteration after an accepted trial.
  double growth = 2.0;
  int max_backtracks = 200;
  /// Armijo sufficient-decrease constant.
  double armijo = 1e-4;
  /// Start each line search from the Barzilai-Borwein step instead of the grown step.
  bool barzilai_borwein = true;
  double gradient_tolerance = 0.0;
};

struct DescentResult {
  std::vector<double> x;
  /// Objective after every accepted step; entry 0 is the starting value.
  std::vector<double> trace;
  int iterations = 0;
  bool stalled = false;
};

/// Objective value; the gradient is written into `grad` when it is non-null.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>* grad)>;

/// Steepest descent with backtracking line search. Every accepted step
/// strictly lowers the objective, so the trace is nonincreasing. Throws
/// sacc::Error when the objective turns non-finite.
DescentResult gradient_descent(const Objective& f, std::vector<double> x0,
                               const DescentOptions& options = {});

}  // namespace sacc
