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
#include "sacc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "sacc/error.hpp"
#include "sacc/lowrank.hpp"

namespace sacc {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw Error("config: `" + key + "` expects a number, got `" + v + "`");
  return d;
}

long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long d = 0;
  try {
    d = std::stol(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw Error("config: `" + key + "` expects an integer, got `" + v + "`");
  return d;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: `" + key + "` expects true/false, got `" + v + "`");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

// Runs body(i) for i in [0, n) on `threads` workers. Each index is written by
// exactly one worker, so results land in canonical order.
void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "scale_aware") return LossKind::kScaleAware;
  if (name == "l2") return LossKind::kL2;
  throw Error("unknown loss `" + name + "` (expected scale_aware or l2)");
}

std::string to_string(LossKind kind) { return kind == LossKind::kL2 ? "l2" : "scale_aware"; }

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw Error(std::string("config: ") + what);
  };
  need(width >= 1 && height >= 1, "width and height must be >= 1");
  need(count_min >= 0 && count_max >= count_min, "count range must satisfy 0 <= count_min <= count_max");
  need(num_scenes >= 1, "num_scenes must be >= 1");
  need(size_scale > 0.0 && size_max >= 1, "size_scale must be > 0 and size_max >= 1");
  need(data_alpha >= 0.0, "data_alpha must be >= 0");
  need(margin >= 0.0 && 2.0 * margin < std::min(width, height), "margin must be >= 0 and leave a nonempty interior");
  need(alpha > 0.0, "alpha must be > 0");
  need(!beta1 || *beta1 > 0.0, "beta1 must be > 0");
  need(num_scales >= 1, "num_scales must be >= 1");
  need(mass_threshold > 0.0 && mass_threshold < 1.0, "mass_threshold must lie in (0, 1)");
  need(rank >= 0, "rank must be >= 0 (0 keeps all selected pixels)");
  need(jitter >= 0.0, "jitter must be >= 0");
  need(step > 0.0, "step must be > 0");
  need(iterations >= 1, "iterations must be >= 1");
  need(backtrack > 0.0 && backtrack < 1.0, "backtrack must lie in (0, 1)");
  need(reg_weight >= 0.0, "reg_weight must be >= 0");
  need(!sweep_alphas.empty() && !sweep_betas.empty(), "sweep grids must be nonempty");
  for (double a : sweep_alphas) need(a > 0.0, "sweep_alphas must be > 0");
  for (double b : sweep_betas) need(b > 0.0, "sweep_betas must be > 0");
  need(threads >= 1, "threads must be >= 1");
}

HeadSizeDistribution ExperimentConfig::head_sizes() const {
  return HeadSizeDistribution::log_normal(size_location, size_scale, size_max);
}

ScaleParams ExperimentConfig::scale_params() const {
  const HeadSizeDistribution dist = head_sizes();
  ScaleParams p = beta1 ? build_scale_params(dist, num_scales, alpha, *beta1)
                        : build_scale_params(dist, num_scales, alpha);
  p.scale_adjusted_alpha = scale_adjusted_alpha;
  return p;
}

LowRankOptions ExperimentConfig::lowrank_options() const {
  LowRankOptions o;
  o.mass_threshold = mass_threshold;
  o.rank = rank;
  o.jitter = {jitter, jitter_relative};
  return o;
}

DescentOptions ExperimentConfig::descent_options() const {
  DescentOptions o;
  o.max_iterations = iterations;
  o.initial_step = step;
  o.backtrack = backtrack;
  o.barzilai_borwein = barzilai_borwein;
  return o;
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig c) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(lineno) + ": expected `key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "width") c.width = static_cast<int>(parse_int(key, v));
    else if (key == "height") c.height = static_cast<int>(parse_int(key, v));
    else if (key == "count_min") c.count_min = static_cast<int>(parse_int(key, v));
    else if (key == "count_max") c.count_max = static_cast<int>(parse_int(key, v));
    else if (key == "num_scenes") c.num_scenes = static_cast<int>(parse_int(key, v));
    else if (key == "size_location") c.size_location = parse_double(key, v);
    else if (key == "size_scale") c.size_scale = parse_double(key, v);
    else if (key == "size_max") c.size_max = static_cast<int>(parse_int(key, v));
    else if (key == "data_alpha") c.data_alpha = parse_double(key, v);
    else if (key == "margin") c.margin = parse_double(key, v);
    else if (key == "alpha") c.alpha = parse_double(key, v);
    else if (key == "beta1") c.beta1 = (v == "auto") ? std::nullopt : std::optional(parse_double(key, v));
    else if (key == "num_scales") c.num_scales = static_cast<int>(parse_int(key, v));
    else if (key == "scale_adjusted_alpha") c.scale_adjusted_alpha = parse_bool(key, v);
    else if (key == "mass_threshold") c.mass_threshold = parse_double(key, v);
    else if (key == "rank") c.rank = static_cast<int>(parse_int(key, v));
    else if (key == "jitter") c.jitter = parse_double(key, v);
    else if (key == "jitter_relative") c.jitter_relative = parse_bool(key, v);
    else if (key == "step") c.step = parse_double(key, v);
    else if (key == "iterations") c.iterations = static_cast<int>(parse_int(key, v));
    else if (key == "backtrack") c.backtrack = parse_double(key, v);
    else if (key == "barzilai_borwein") c.barzilai_borwein = parse_bool(key, v);
    else if (key == "loss") c.loss = parse_loss_kind(v);
    else if (key == "reg_weight") c.reg_weight = parse_double(key, v);
    else if (key == "sweep_alphas") c.sweep_alphas = parse_list(key, v);
    else if (key == "sweep_betas") c.sweep_betas = parse_list(key, v);
    else if (key == "threads") c.threads = static_cast<int>(parse_int(key, v));
    else throw Error("config line " + std::to_string(lineno) + ": unknown key `" + key + "`");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  return parse_config(in, std::move(base));
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << "seed = " << c.seed << '\n'
      << "width = " << c.width << '\n'
      << "height = " << c.height << '\n'
      << "count_min = " << c.count_min << '\n'
      << "count_max = " << c.count_max << '\n'
      << "num_scenes = " << c.num_scenes << '\n'
      << "size_location = " << format_double(c.size_location) << '\n'
      << "size_scale = " << format_double(c.size_scale) << '\n'
      << "size_max = " << c.size_max << '\n'
      << "data_alpha = " << format_double(c.data_alpha) << '\n'
      << "margin = " << format_double(c.margin) << '\n'
      << "alpha = " << format_double(c.alpha) << '\n'
      << "beta1 = " << (c.beta1 ? format_double(*c.beta1) : std::string("auto")) << '\n'
      << "num_scales = " << c.num_scales << '\n'
      << "scale_adjusted_alpha = " << (c.scale_adjusted_alpha ? "true" : "false") << '\n'
      << "mass_threshold = " << format_double(c.mass_threshold) << '\n'
      << "rank = " << c.rank << '\n'
      << "jitter = " << format_double(c.jitter) << '\n'
      << "jitter_relative = " << (c.jitter_relative ? "true" : "false") << '\n'
      << "step = " << format_double(c.step) << '\n'
      << "iterations = " << c.iterations << '\n'
      << "backtrack = " << format_double(c.backtrack) << '\n'
      << "barzilai_borwein = " << (c.barzilai_borwein ? "true" : "false") << '\n'
      << "loss = " << to_string(c.loss) << '\n'
      << "reg_weight = " << format_double(c.reg_weight) << '\n'
      << "sweep_alphas = " << join(c.sweep_alphas) << '\n'
      << "sweep_betas = " << join(c.sweep_betas) << '\n'
      << "threads = " << c.threads << '\n';
}

int resolve_threads(const ExperimentConfig& config) {
  if (const char* env = std::getenv("SACC_THREADS"); env && *env) {
    const long n = parse_int("SACC_THREADS", env);
    if (n < 1) throw Error("SACC_THREADS must be >= 1");
    return static_cast<int>(n);
  }
  return config.threads;
}

// ---------------------------------------------------------------------------
// Scenes

std::vector<AnnotatedScene> generate_scenes(const ExperimentConfig& config) {
  config.validate();
  const HeadSizeDistribution dist = config.head_sizes();
  std::vector<AnnotatedScene> scenes;
  scenes.reserve(static_cast<std::size_t>(config.num_scenes));
  for (int k = 0; k < config.num_scenes; ++k) {
    const std::uint64_t seed = splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(k)));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(config.count_min, config.count_max);
    const int n = count(rng);
    scenes.push_back(sample_scene(config.width, config.height, n, dist, config.data_alpha,
                                  splitmix64(seed), config.margin));
  }
  return scenes;
}

std::vector<std::string> cmd_synth(const ExperimentConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory " + out_dir + ": " + ec.message());

  const auto scenes = generate_scenes(config);
  std::vector<std::string> files;
  std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
  if (!manifest) throw Error("cannot write manifest in " + out_dir);
  manifest << "scene,file,width,height,count\n";
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04zu.txt", k);
    save_scene((fs::path(out_dir) / name).string(), scenes[k]);
    manifest << k << ',' << name << ',' << scenes[k].width() << ',' << scenes[k].height() << ','
             << scenes[k].size() << '\n';
    files.emplace_back(name);
  }
  if (!manifest) throw Error("write failed: manifest in " + out_dir);
  return files;
}

std::vector<AnnotatedScene> load_scene_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.csv");
  if (!manifest) throw Error("cannot open " + (fs::path(dir) / "manifest.csv").string());
  std::string line;
  std::getline(manifest, line);
  std::vector<AnnotatedScene> scenes;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string index, file;
    if (!std::getline(ss, index, ',') || !std::getline(ss, file, ',')) {
      throw Error("malformed manifest line: " + line);
    }
    scenes.push_back(load_scene((fs::path(dir) / file).string()));
  }
  return scenes;
}

// ---------------------------------------------------------------------------
// Fitting

double predicted_count(const std::vector<DensityField>& preds) {
  double c = 0.0;
  for (const auto& f : preds) {
    for (double v : f.values) c += std::max(v, 0.0);
  }
  return c;
}

SceneFit fit_scene(const AnnotatedScene& scene, const ExperimentConfig& config) {
  const ScaleParams params = config.scale_params();
  std::vector<GridGeometry> grids;
  std::vector<DensityField> preds;
  for (int s = 1; s <= params.num_scales(); ++s) {
    grids.push_back(grid_for_scale(scene, params, s));
    preds.emplace_back(s, grids.back());
  }

  SceneFit fit;
  if (scene.empty()) {
    fit.preds = preds;
    return fit;
  }

  // Scales share no variables, so each gets its own descent and step size.
  std::vector<std::vector<LossBreakdown>> per_scale(preds.size());
  auto run = [&](const auto& loss) {
    for (std::size_t s = 0; s < preds.size(); ++s) {
      std::vector<DensityField> work = preds;
      Objective f = [&](const std::vector<double>& x, std::vector<double>* grad) {
        work[s].values = x;
        const LossBreakdown b = loss.evaluate(work);
        if (grad) {
          *grad = std::move(loss.gradient(work)[s].values);
          per_scale[s].push_back(b);
        }
        return b.per_scale_nll[s] + b.per_scale_reg[s];
      };
      DescentResult r = gradient_descent(f, preds[s].values, config.descent_options());
      preds[s].values = std::move(r.x);
      fit.iterations = std::max(fit.iterations, r.iterations);
    }
  };

  if (config.loss == LossKind::kScaleAware) {
    std::vector<ScaleModel> models;
    for (int s = 1; s <= params.num_scales(); ++s) {
      models.push_back(build_scale_model(scene, params, s, grids[static_cast<std::size_t>(s - 1)],
                                         config.lowrank_options()));
      const RankMApprox& a = models.back().approx;
      fit.lowrank.push_back({s, a.grid_pixels, static_cast<int>(a.selected.size()), a.rank(),
                             a.jitter, a.truncation_error,
                             std::vector<double>(a.singular_values.data(),
                                                 a.singular_values.data() + a.singular_values.size())});
    }
    LossOptions lo;
    lo.reg_weight = config.reg_weight;
    run(ScaleAwareLoss(scene, params, std::move(models), lo));
  } else {
    run(L2Loss(mixture_density(scene, params, grids, PositionSource::kNoisy)));
  }

  // A scale that converged early keeps reporting its final value.
  for (int step = 0; step <= fit.iterations; ++step) {
    for (std::size_t s = 0; s < preds.size(); ++s) {
      const auto& hist = per_scale[s];
      const LossBreakdown& b = hist[std::min<std::size_t>(static_cast<std::size_t>(step), hist.size() - 1)];
      fit.trace.push_back({step, static_cast<int>(s + 1), b.per_scale_nll[s], b.per_scale_reg[s],
                           b.per_scale_nll[s] + b.per_scale_reg[s]});
    }
  }
  fit.preds = preds;
  fit.predicted_count = predicted_count(preds);
  return fit;
}

CountReport CountReport::from_rows(std::vector<CountRow> rows) {
  CountReport r;
  r.rows = std::move(rows);
  for (const auto& row : r.rows) {
    r.mae += row.abs_error;
    r.mse += row.abs_error * row.abs_error;
  }
  if (!r.rows.empty()) {
    r.mae /= static_cast<double>(r.rows.size());
    r.mse /= static_cast<double>(r.rows.size());
  }
  return r;
}

FitOutput cmd_fit(const ExperimentConfig& config, const std::vector<AnnotatedScene>& scenes) {
  config.validate();
  const int n = static_cast<int>(scenes.size());
  std::vector<CountRow> rows(scenes.size());
  FitOutput out;
  out.traces.resize(scenes.size());
  out.lowrank.resize(scenes.size());
  parallel_for(n, resolve_threads(config), [&](int k) {
    const auto idx = static_cast<std::size_t>(k);
    SceneFit fit = fit_scene(scenes[idx], config);
    const double truth = static_cast<double>(scenes[idx].size());
    rows[idx] = {k, truth, fit.predicted_count, std::abs(fit.predicted_count - truth)};
    out.traces[idx] = std::move(fit.trace);
    out.lowrank[idx] = std::move(fit.lowrank);
  });
  out.report = CountReport::from_rows(std::move(rows));
  return out;
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config,
                                const std::vector<AnnotatedScene>& scenes) {
  config.validate();
  std::vector<SweepRow> rows;
  for (double a : config.sweep_alphas) {
    for (double b : config.sweep_betas) {
      ExperimentConfig point = config;
      point.alpha = a;
      point.beta1 = b;
      const FitOutput fit = cmd_fit(point, scenes);
      rows.push_back({a, b, fit.report.mae, fit.report.mse});
    }
  }
  return rows;
}

void write_counts_csv(std::ostream& out, const CountReport& report) {
  out << "scene,true_count,predicted_count,abs_error\n";
  for (const auto& r : report.rows) {
    out << r.scene << ',' << format_double(r.true_count) << ',' << format_double(r.predicted) << ','
        << format_double(r.abs_error) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "step,scale,nll,reg,total\n";
  for (const auto& r : trace) {
    out << r.step << ',' << r.scale << ',' << format_double(r.nll) << ',' << format_double(r.reg)
        << ',' << format_double(r.total) << '\n';
  }
}

void write_lowrank_csv(std::ostream& out,
                       const std::vector<std::vector<LowRankSummary>>& rows) {
  out << "scene,scale,grid_pixels,selected,rank,jitter,truncation_error,singular_values\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (const auto& r : rows[k]) {
      out << k << ',' << r.scale << ',' << r.grid_pixels << ',' << r.selected << ',' << r.rank
          << ',' << format_double(r.jitter) << ',' << format_double(r.truncation_error) << ',';
      for (std::size_t i = 0; i < r.singular_values.size(); ++i) {
        out << (i ? " " : "") << format_double(r.singular_values[i]);
      }
      out << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "alpha,beta1,mae,mse\n";
  for (const auto& r : rows) {
    out << format_double(r.alpha) << ',' << format_double(r.beta1) << ',' << format_double(r.mae)
        << ',' << format_double(r.mse) << '\n';
  }
}

}  // namespace sacc
