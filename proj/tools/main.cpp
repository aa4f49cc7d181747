#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scl/config.hpp"
#include "scl/error.hpp"
#include "scl/harness.hpp"
#include "scl/mlp.hpp"

namespace {

int exit_code_for(const scl::Error& e) {
  return e.code() == scl::errc::config ? 2 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained PDE surrogate trainer"};
  app.require_subcommand(1);

  std::string config_arg;
  std::vector<std::string> overrides;
  std::string out_override;

  auto* train_cmd = app.add_subcommand("train", "run a training experiment from a config/preset");
  train_cmd->add_option("config", config_arg, "config file path or preset name")->required();
  train_cmd->add_option("--set", overrides, "override config values (key.path=value)");
  train_cmd->add_option("--out", out_override, "output root directory (overrides config)");

  std::string ckpt_arg;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "evaluate a checkpoint against the oracle of a config");
  eval_cmd->add_option("checkpoint", ckpt_arg, "model checkpoint path")->required();
  eval_cmd->add_option("config", config_arg, "config file path or preset name")->required();
  eval_cmd->add_option("--set", overrides, "override config values (key.path=value)");

  auto* diag_cmd = app.add_subcommand("sample-diagnostics",
                                      "dump MH samples/histograms for a config's constraint");
  diag_cmd->add_option("config", config_arg, "config file path or preset name")->required();
  diag_cmd->add_option("--set", overrides, "override config values (key.path=value)");
  diag_cmd->add_option("--out", out_override, "output root directory (overrides config)");

  std::string report_a, report_b;
  auto* cmp_cmd = app.add_subcommand("compare-complexity",
                                     "relative complexity of two training runs (metrics JSONs)");
  cmp_cmd->add_option("reportA", report_a, "metrics.json of the run of interest")->required();
  cmp_cmd->add_option("reportB", report_b, "metrics.json of the baseline run")->required();

  auto* list_cmd = app.add_subcommand("list-presets", "list shipped experiment presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_cmd->parsed()) {
      for (const auto& [name, j] : scl::harness::presets()) std::cout << name << "\n";
      return 0;
    }
    if (cmp_cmd->parsed()) {
      auto load = [](const std::string& path) {
        std::ifstream in(path);
        scl::require(in.good(), scl::errc::io, "cannot open " + path);
        nlohmann::json j;
        in >> j;
        return std::pair<long, long>(j.at("operator_evaluations").get<long>(),
                                     j.at("epochs").get<long>());
      };
      const auto [ca, ea] = load(report_a);
      const auto [cb, eb] = load(report_b);
      const double pct = scl::harness::complexity_percent(ca, ea, cb, eb);
      std::printf("relative complexity: %.6g%%\n", pct);
      return 0;
    }

    scl::harness::ExperimentConfig cfg =
        scl::harness::load_config_with_overrides(config_arg, overrides);
    if (!out_override.empty()) cfg.output_dir = out_override;

    if (train_cmd->parsed()) {
      scl::harness::run_experiment(cfg, std::cout);
      return 0;
    }
    if (eval_cmd->parsed()) {
      const scl::Mlp model = scl::load_checkpoint(ckpt_arg);
      const auto rep = scl::harness::evaluate(model, cfg);
      std::printf("relative_l2: %.17g\nmax_abs_error: %.17g\n", rep.relative_l2,
                  rep.max_abs_error);
      for (const auto& [pi, e] : rep.per_coefficient) {
        std::printf("pi:");
        for (double v : pi) std::printf(" %.17g", v);
        std::printf(" relative_l2: %.17g\n", e);
      }
      return 0;
    }
    if (diag_cmd->parsed()) {
      scl::harness::sample_diagnostics(cfg, std::cout);
      return 0;
    }
  } catch (const scl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
