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
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sacc/error.hpp"
#include "sacc/fusion_ops.hpp"
#include "sacc/harness.hpp"
#include "sacc/verify.hpp"

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::string> loss;
};

void add_common(CLI::App* cmd, Common& c, bool with_loss) {
  cmd->add_option("--config", c.config_path, "key = value experiment config");
  cmd->add_option("--seed", c.seed, "overrides the config seed");
  cmd->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
  if (with_loss) {
    cmd->add_option("--loss", c.loss, "scale_aware or l2")
        ->check(CLI::IsMember({"scale_aware", "l2"}));
  }
}

sacc::ExperimentConfig resolve(const Common& c) {
  sacc::ExperimentConfig cfg;
  if (!c.config_path.empty()) cfg = sacc::load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.loss) cfg.loss = sacc::parse_loss_kind(*c.loss);
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw sacc::Error("cannot create output directory " + dir + ": " + ec.message());
  std::ofstream f(fs::path(dir) / name);
  if (!f) throw sacc::Error("cannot write " + (fs::path(dir) / name).string());
  return f;
}

std::vector<sacc::AnnotatedScene> scenes_for(const sacc::ExperimentConfig& cfg,
                                             const std::string& scene_dir) {
  return scene_dir.empty() ? sacc::generate_scenes(cfg) : sacc::load_scene_dir(scene_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scale-aware crowd density toolkit"};
  app.require_subcommand(1);

  Common synth_opts, fit_opts, sweep_opts, verify_opts;
  std::string fit_scenes, sweep_scenes;

  auto* synth = app.add_subcommand("synth", "write seeded synthetic scenes and a manifest");
  add_common(synth, synth_opts, false);

  auto* fit = app.add_subcommand("fit", "fit density maps and report counts");
  add_common(fit, fit_opts, true);
  fit->add_option("--scenes", fit_scenes, "directory written by synth (default: generate)");

  auto* sweep = app.add_subcommand("sweep", "fit over the alpha x beta_1 grid");
  add_common(sweep, sweep_opts, true);
  sweep->add_option("--scenes", sweep_scenes, "directory written by synth (default: generate)");

  auto* verify = app.add_subcommand("verify", "run the oracle suite");
  std::optional<std::uint64_t> verify_seed;
  std::string verify_out;
  verify->add_option("--seed", verify_seed, "oracle seed");
  verify->add_option("--out-dir", verify_out, "also write verify.csv here");

  auto* ops = app.add_subcommand("count-ops", "parameter and MAC count of a layer graph");
  std::string graph_path, ops_out;
  std::vector<int> input_dims;
  ops->add_option("--config", graph_path, "graph file, one layer per line")->required();
  ops->add_option("--input", input_dims, "input C W H (overrides the graph file)")
      ->expected(3);
  ops->add_option("--out-dir", ops_out, "write counts.csv here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const auto cfg = resolve(synth_opts);
      const auto files = sacc::cmd_synth(cfg, synth_opts.out_dir);
      std::cout << "wrote " << files.size() << " scenes to " << synth_opts.out_dir << '\n';
    } else if (*fit) {
      const auto cfg = resolve(fit_opts);
      const auto scenes = scenes_for(cfg, fit_scenes);
      const auto out = sacc::cmd_fit(cfg, scenes);
      {
        auto f = open_out(fit_opts.out_dir, "counts.csv");
        sacc::write_counts_csv(f, out.report);
      }
      for (std::size_t k = 0; k < out.traces.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "trace_%04zu.csv", k);
        auto f = open_out(fit_opts.out_dir, name);
        sacc::write_trace_csv(f, out.traces[k]);
      }
      if (cfg.loss == sacc::LossKind::kScaleAware) {
        auto f = open_out(fit_opts.out_dir, "lowrank.csv");
        sacc::write_lowrank_csv(f, out.lowrank);
      }
      std::cout << "loss=" << sacc::to_string(cfg.loss) << " scenes=" << scenes.size()
                << " mae=" << sacc::format_double(out.report.mae)
                << " mse=" << sacc::format_double(out.report.mse) << '\n';
    } else if (*sweep) {
      const auto cfg = resolve(sweep_opts);
      const auto scenes = scenes_for(cfg, sweep_scenes);
      const auto rows = sacc::cmd_sweep(cfg, scenes);
      auto f = open_out(sweep_opts.out_dir, "sweep.csv");
      sacc::write_sweep_csv(f, rows);
      std::cout << "wrote " << rows.size() << " sweep rows to " << sweep_opts.out_dir << '\n';
    } else if (*verify) {
      sacc::VerifyOptions vo;
      if (verify_seed) vo.seed = *verify_seed;
      const auto rows = sacc::run_verify(vo);
      sacc::write_verify_table(std::cout, rows);
      if (!verify_out.empty()) {
        auto f = open_out(verify_out, "verify.csv");
        f << "check,tolerance,measured,result\n";
        for (const auto& r : rows) {
          f << r.name << ",\"" << r.tolerance << "\",\"" << r.measured << "\","
            << (r.passed ? "pass" : "fail") << '\n';
        }
      }
      for (const auto& r : rows) {
        if (!r.passed) return 1;
      }
    } else if (*ops) {
      const auto graph = sacc::load_graph(graph_path);
      sacc::TensorDims dims;
      if (!input_dims.empty()) {
        dims = {input_dims[0], input_dims[1], input_dims[2]};
      } else if (graph.input) {
        dims = *graph.input;
      } else {
        throw sacc::Error("no input dimensions: pass --input C W H or add an `input` line");
      }
      const auto count = sacc::count_params_macs(graph.layers, dims);
      if (ops_out.empty()) {
        sacc::write_count_csv(std::cout, count);
      } else {
        auto f = open_out(ops_out, "counts.csv");
        sacc::write_count_csv(f, count);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
