#pragma once

#include "ttpdf/diffusion.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ttpdf::cli {

enum class Method { tt_mh, tt_riw, tt_qiw, tt_mh_2l, tt_qiw_2l, am };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct TargetSettings {
  std::string kind = "shock";  // shock | rosenbrock | diffusion | custom
  std::size_t covariates = 2;
  std::uint64_t covariate_seed = 38;
  std::size_t dimension = 2;  // rosenbrock and diffusion
  DiffusionParameters diffusion;
  std::size_t coarse_cells_per_side = 0;  // two-level control; 0 means half the mesh
  std::filesystem::path library;
};

/// One TT surrogate configuration of a study.
struct StudyCase {
  std::vector<std::size_t> grid;  // one entry: same size in every dimension; empty: target default
  double delta = 0.05;
};

struct TTSettings {
  std::vector<std::size_t> grid;
  std::vector<std::size_t> grid_sweep;
  std::vector<double> delta{0.05};
  std::vector<StudyCase> cases;
  double truncation = 0.0;  // SVD truncation tolerance; 0: the case's delta
  std::size_t rho = 2;
  std::size_t initial_rank = 2;
  std::size_t iter_max = 20;
  std::size_t max_rank = 0;
  std::size_t max_evaluations = 0;
  bool fixed_rank = false;
  std::size_t reference_points = 64;
};

struct AMSettings {
  std::size_t adapt_start = 100;
  std::size_t adapt_interval = 1;
  double scale = 0.0;
  double dr_shrink = 0.2;
  double burn_in_fraction = 0.25;
  bool delayed_rejection = true;
};

struct ExperimentConfig {
  std::string name = "study";
  std::vector<Method> methods{Method::tt_mh};
  std::vector<std::size_t> samples{1024};
  std::size_t coarse_samples = 0;
  std::size_t repetitions = 1;
  std::uint64_t seed = 1;
  std::size_t qmc_shifts = 1;
  std::filesystem::path output = "study";
  std::filesystem::path lattice_cache;  // empty: <output>/lattice
  TargetSettings target;
  TTSettings tt;
  AMSettings am;

  /// Cases in run order: explicit cases, else grid_sweep (or grid) x delta.
  std::vector<StudyCase> resolved_cases() const;
};

/// Parses an INI file with sections [study], [target], [tt] and [am]. Unknown keys,
/// malformed values and inconsistent settings raise ConfigError naming the field.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);
/// INI text that parse_config reads back to the same configuration.
std::string to_ini(const ExperimentConfig& config);

enum class Scale { desk, paper };

/// Named studies; rosen-table3 expands to one configuration per dimension.
std::vector<std::string> preset_names();
std::vector<ExperimentConfig> preset(const std::string& name, Scale scale,
                                     const std::filesystem::path& output);

}  // namespace ttpdf::cli
