#include "ttpdf/errors.hpp"
#include "ttpdf_cli/config.hpp"
#include "ttpdf_cli/study.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace ttpdf::cli;
  CLI::App app{"Tensor-train surrogate sampling experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the study described by a config file");
  std::string config_path, output_override;
  run->add_option("config", config_path, "INI config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output_override, "Output directory (overrides study.output)");

  auto* pre = app.add_subcommand("preset", "Run a named study");
  std::string preset_name, scale_name = "desk", preset_output;
  bool dry_run = false;
  pre->add_option("name", preset_name, "Preset name")->required()->check(CLI::IsMember(preset_names()));
  pre->add_option("--scale", scale_name, "desk (minutes) or paper (full size)")
      ->check(CLI::IsMember({"desk", "paper"}));
  pre->add_option("-o,--output", preset_output, "Output directory (default: the preset name)");
  pre->add_flag("--dry-run", dry_run, "Print the generated config files instead of running");

  auto* plot = app.add_subcommand("plot-data", "Write error-vs-N and error-vs-time series of a study");
  std::string study_dir;
  plot->add_option("study", study_dir, "Study output directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = load_config(config_path);
      if (!output_override.empty()) config.output = output_override;
      return run_study(config, std::cerr);
    }
    if (*pre) {
      auto scale = scale_name == "paper" ? Scale::paper : Scale::desk;
      auto configs = preset(preset_name, scale, preset_output.empty() ? preset_name : preset_output);
      int status = 0;
      for (const auto& c : configs) {
        if (dry_run) {
          std::cout << to_ini(c) << '\n';
          continue;
        }
        status = run_study(c, std::cerr);
        if (status) break;
      }
      return status;
    }
    if (*plot) {
      write_plot_data(study_dir, std::cerr);
      return 0;
    }
  } catch (const ttpdf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
