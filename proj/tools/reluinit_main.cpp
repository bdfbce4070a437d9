// reluinit: closed-form moments of ReLU networks at initialization, and a
// Monte Carlo check of them.
//
// Exit codes: 0 all tests pass, 1 some test failed, 2 configuration error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "reluinit/error.hpp"
#include "reluinit/experiment.hpp"
#include "reluinit/report_io.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

// Flag name -> config key. Every flag mirrors one config-file key.
const std::map<std::string, std::string> kExperimentFlags = {
    {"shape", "shape"},     {"schedule", "schedule"}, {"input", "input"},
    {"x-norm", "x_norm"},   {"trials", "trials"},     {"seed", "seed"},
    {"eps", "eps"},         {"width-c", "width_c"},   {"zmax", "zmax"},
    {"layers", "layers"},   {"neurons", "neurons"},   {"workers", "workers"},
    {"tests", "tests"},     {"perturb", "perturb"},   {"max-width", "max_width"},
    {"out", "out"},         {"format", "format"},
};

struct ExperimentArgs {
  std::string config_path;
  std::map<std::string, std::string> values;
};

void add_experiment_options(CLI::App& cmd, ExperimentArgs& args) {
  cmd.add_option("--config", args.config_path, "flat key = value config file");
  for (const auto& [flag, key] : kExperimentFlags) {
    cmd.add_option("--" + flag, args.values[flag], "overrides config key '" + key + "'");
  }
}

reluinit::ExperimentConfig build_config(CLI::App& cmd, const ExperimentArgs& args) {
  reluinit::ExperimentConfig config;
  if (!args.config_path.empty()) {
    config = reluinit::load_config_file(args.config_path);
  }
  for (const auto& [flag, key] : kExperimentFlags) {
    if (cmd.count("--" + flag) > 0) {
      reluinit::set_config_value(config, key, args.values.at(flag));
    }
  }
  return config;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) {
    throw reluinit::config_error("cannot write '" + path + "'");
  }
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form and Monte Carlo moments of ReLU networks at initialization"};
  app.require_subcommand(1);

  ExperimentArgs predict_args;
  auto* predict = app.add_subcommand("predict", "closed-form predictions per hidden layer");
  add_experiment_options(*predict, predict_args);

  ExperimentArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Monte Carlo verification of the predictions");
  add_experiment_options(*verify, verify_args);

  reluinit::BoundsConfig bounds_config;
  std::string bounds_format = "json";
  auto* bounds = app.add_subcommand("bounds", "sweep the binomial-sum and Gamma-ratio bounds");
  bounds->add_option("--n-max", bounds_config.n_max, "largest n for A_n, B_n");
  bounds->add_option("--i-max", bounds_config.i_max, "largest i for the Gamma ratio");
  bounds->add_option("--t-samples", bounds_config.t_samples,
                     "samples of t in [0,10] for sqrt(t) >= (3t - t^2)/2");
  bounds->add_option("--seed", bounds_config.seed, "seed for the t samples");
  bounds->add_option("--overflow-threshold", bounds_config.overflow_threshold,
                     "n above which A_n, B_n are kept in log2 scale");
  bounds->add_option("--out", bounds_config.out, "output path (default stdout)");
  bounds->add_option("--format", bounds_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*bounds) {
      bounds_config.format =
          bounds_format == "csv" ? reluinit::OutputFormat::csv : reluinit::OutputFormat::json;
      const auto report = reluinit::run_bounds(bounds_config);
      emit(reluinit::render(report, bounds_config.format), bounds_config.out);
      return report.violations() == 0 ? kExitPass : kExitFail;
    }
    const bool is_verify = static_cast<bool>(*verify);
    auto& cmd = is_verify ? *verify : *predict;
    const auto config = build_config(cmd, is_verify ? verify_args : predict_args);
    const auto report = is_verify ? reluinit::run_verify(config) : reluinit::run_predict(config);
    emit(reluinit::render(report, config.format), config.out);
    return report.all_pass() ? kExitPass : kExitFail;
  } catch (const reluinit::config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const reluinit::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kExitFail;
  }
}
