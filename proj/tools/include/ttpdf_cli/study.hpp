#pragma once

#include "ttpdf_cli/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>

namespace ttpdf::cli {

/// Runs a study and writes into config.output:
///   runs.jsonl     one record per case, repetition, method and N
///   summary.csv    aggregates over repetitions (E_q, E_TT, means)
///   cross.jsonl    TT-cross diagnostics per case and repetition
///   timings.jsonl  wall-clock per phase and per method
///   study.json     configuration and completion status
/// All files except timings.jsonl depend only on the configuration.
/// Returns 0, or 130 when interrupted (completed repetitions are still written).
int run_study(const ExperimentConfig& config, std::ostream& log);

/// Mean relative deviation from the mean over repetitions; NaN for fewer than two values.
double relative_spread(std::span<const double> values);

/// Reads runs.jsonl and timings.jsonl of a study directory and writes
/// plot/error_vs_N.csv and plot/error_vs_time.csv (columns series,x,y).
void write_plot_data(const std::filesystem::path& study_dir, std::ostream& log);

}  // namespace ttpdf::cli
