#include "ttpdf/errors.hpp"
#include "ttpdf_cli/config.hpp"

namespace ttpdf::cli {

namespace {

std::vector<std::size_t> powers_of_two(int from, int to, int step) {
  std::vector<std::size_t> out;
  for (int e = from; e <= to; e += step) out.push_back(std::size_t{1} << e);
  return out;
}

ExperimentConfig shock_fig1(Scale scale) {
  ExperimentConfig c;
  c.name = "shock-fig1";
  c.target.kind = "shock";
  c.target.covariates = 2;
  c.methods = {Method::tt_mh};
  c.tt.rho = 2;
  if (scale == Scale::paper) {
    for (std::size_t n : {16, 32, 64, 128, 256, 512}) c.tt.cases.push_back({{n}, 1e-5});
    for (double d : {1e-1, 1e-2, 1e-3, 1e-4}) c.tt.cases.push_back({{512}, d});
    c.samples = {std::size_t{1} << 20};
    c.repetitions = 32;
  } else {
    for (std::size_t n : {16, 32, 64, 128}) c.tt.cases.push_back({{n}, 1e-5});
    for (double d : {1e-1, 1e-2, 1e-3}) c.tt.cases.push_back({{128}, d});
    c.samples = {std::size_t{1} << 14};
    c.repetitions = 4;
  }
  return c;
}

ExperimentConfig shock_table2(Scale scale) {
  ExperimentConfig c;
  c.name = "shock-table2";
  c.target.kind = "shock";
  c.target.covariates = 6;
  c.methods = {Method::tt_mh, Method::am};
  c.tt.cases = {{{12}, 0.5}, {{16}, 0.5}, {{16}, 0.05}, {{32}, 0.05}};
  if (scale == Scale::paper) {
    c.samples = {std::size_t{1} << 18};
    c.repetitions = 32;
  } else {
    c.samples = {std::size_t{1} << 14};
    c.repetitions = 2;
  }
  return c;
}

std::vector<ExperimentConfig> rosen_table3(Scale scale) {
  std::vector<std::size_t> dims = scale == Scale::paper ? std::vector<std::size_t>{2, 4, 8, 16, 32}
                                                        : std::vector<std::size_t>{2, 4, 8};
  std::vector<ExperimentConfig> out;
  for (auto d : dims) {
    ExperimentConfig c;
    c.name = "rosen-table3-d" + std::to_string(d);
    c.target.kind = "rosenbrock";
    c.target.dimension = d;
    c.methods = {Method::tt_mh, Method::am};
    c.tt.delta = {3e-3};
    c.tt.truncation = 1e-4;
    c.tt.rho = 16;
    c.tt.iter_max = 40;
    c.samples = {scale == Scale::paper ? std::size_t{1} << 20 : std::size_t{1} << 14};
    c.repetitions = scale == Scale::paper ? 8 : 2;
    out.push_back(c);
  }
  return out;
}

// Quick end-to-end check; both scales run the same study.
ExperimentConfig rosen_smoke() {
  ExperimentConfig c;
  c.name = "rosen-smoke";
  c.target.kind = "rosenbrock";
  c.target.dimension = 2;
  c.methods = {Method::tt_mh};
  c.tt.delta = {3e-3};
  c.tt.truncation = 1e-4;
  c.tt.rho = 16;
  c.tt.iter_max = 40;
  c.samples = {std::size_t{1} << 15};
  c.repetitions = 1;
  return c;
}

ExperimentConfig diffusion_fig6(Scale scale) {
  ExperimentConfig c;
  c.name = "diffusion-fig6";
  c.target.kind = "diffusion";
  c.methods = {Method::tt_mh, Method::tt_qiw, Method::tt_mh_2l, Method::tt_qiw_2l, Method::am};
  c.tt.grid = {32};
  c.tt.delta = {0.1};
  if (scale == Scale::paper) {
    c.target.dimension = 11;
    c.target.diffusion.cells_per_side = 64;
    c.target.coarse_cells_per_side = 32;
    c.samples = powers_of_two(10, 18, 2);
    c.coarse_samples = std::size_t{1} << 18;
    c.repetitions = 16;
  } else {
    c.target.dimension = 5;
    c.target.diffusion.cells_per_side = 32;
    c.target.coarse_cells_per_side = 16;
    c.samples = powers_of_two(8, 12, 2);
    c.coarse_samples = std::size_t{1} << 12;
    c.repetitions = 4;
  }
  c.target.diffusion.dimension = c.target.dimension;
  return c;
}

}  // namespace

std::vector<std::string> preset_names() { return {"shock-fig1", "shock-table2", "rosen-table3", "diffusion-fig6", "rosen-smoke"}; }

std::vector<ExperimentConfig> preset(const std::string& name, Scale scale, const std::filesystem::path& output) {
  std::vector<ExperimentConfig> out;
  if (name == "shock-fig1")
    out = {shock_fig1(scale)};
  else if (name == "shock-table2")
    out = {shock_table2(scale)};
  else if (name == "rosen-table3")
    out = rosen_table3(scale);
  else if (name == "diffusion-fig6")
    out = {diffusion_fig6(scale)};
  else if (name == "rosen-smoke")
    out = {rosen_smoke()};
  else
    throw ConfigError("unknown preset '" + name + "'");
  for (auto& c : out) {
    c.output = out.size() == 1 ? output : output / c.name;
    validate(c);
  }
  return out;
}

}  // namespace ttpdf::cli
