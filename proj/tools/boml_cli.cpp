#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "boml/errors.hpp"
#include "boml/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian online meta-learning experiment runner"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, stream_cfg_path, out_dir, sweep_param = "lambda";
  std::vector<double> sweep_values;

  auto* run = app.add_subcommand("run", "Run the sequential experiment from a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "override output directory");

  auto* evalc = app.add_subcommand("eval", "Evaluate a posterior checkpoint on a stream");
  evalc->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  evalc->add_option("stream-config", stream_cfg_path, "stream config file")->required();

  auto* inspect = app.add_subcommand("inspect", "Print checkpoint contents");
  inspect->add_option("checkpoint", ckpt_path, "checkpoint file")->required();

  auto* sweep = app.add_subcommand("sweep", "Run the experiment once per parameter value");
  sweep->add_option("config", config_path, "config file")->required();
  sweep->add_option("--param", sweep_param, "parameter to sweep (bare 'lambda' = bomla.lambda)");
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required()
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto summary = boml::run_experiment(boml::Config::parse_file(config_path), out_dir);
      std::cout << "run complete: " << summary.out_dir << "\n";
      std::cout << summary.records.size() << " eval events, " << summary.forgetting.size()
                << " forgetting cells\n";
    } else if (evalc->parsed()) {
      std::cout << boml::eval_checkpoint(ckpt_path, boml::Config::parse_file(stream_cfg_path));
    } else if (inspect->parsed()) {
      std::cout << boml::inspect_checkpoint(ckpt_path);
    } else if (sweep->parsed()) {
      const auto runs =
          boml::run_sweep(boml::Config::parse_file(config_path), sweep_param, sweep_values);
      for (std::size_t i = 0; i < runs.size(); ++i)
        std::cout << "sweep value " << sweep_values[i] << " -> " << runs[i].out_dir << "\n";
    }
  } catch (const boml::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
