#include "ttpdf_cli/config.hpp"

#include "ttpdf/errors.hpp"
#include "ttpdf/qmc.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace ttpdf::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, Method>& method_table() {
  static const std::map<std::string, Method> table{
      {"TT-MH", Method::tt_mh},       {"TT-rIW", Method::tt_riw},       {"TT-qIW", Method::tt_qiw},
      {"TT-MH-2L", Method::tt_mh_2l}, {"TT-qIW-2L", Method::tt_qiw_2l}, {"AM", Method::am}};
  return table;
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"study",
       {"name", "methods", "samples", "coarse_samples", "repetitions", "seed", "qmc_shifts", "output",
        "lattice_cache"}},
      {"target",
       {"kind", "covariates", "covariate_seed", "dimension", "nu", "noise_variance", "theta0", "observations",
        "cells_per_side", "coarse_cells_per_side", "noise_seed", "add_noise", "library"}},
      {"tt",
       {"grid", "grid_sweep", "delta", "cases", "truncation", "rho", "initial_rank", "iter_max", "max_rank", "max_evaluations",
        "rank_mode", "reference_points"}},
      {"am", {"adapt_start", "adapt_interval", "scale", "dr_shrink", "burn_in_fraction", "delayed_rejection"}}};
  return s;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& field, const std::string& expected, const std::string& got) {
  throw ConfigError(field + ": expected " + expected + ", got '" + got + "'");
}

std::uint64_t to_unsigned(const std::string& field, const std::string& text) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) bad_value(field, "a non-negative integer", text);
  return v;
}

double to_double(const std::string& field, const std::string& text) {
  try {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos == text.size()) return v;
  } catch (const std::exception&) {
  }
  bad_value(field, "a number", text);
}

bool to_bool(const std::string& field, const std::string& text) {
  std::string t = boost::to_lower_copy(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  bad_value(field, "true or false", text);
}

std::vector<std::size_t> to_sizes(const std::string& field, const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& p : split_list(text)) out.push_back(static_cast<std::size_t>(to_unsigned(field, p)));
  return out;
}

std::vector<double> to_doubles(const std::string& field, const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split_list(text)) out.push_back(to_double(field, p));
  return out;
}

bool power_of_two(std::size_t n) { return n >= 2 && std::has_single_bit(n); }

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  return s.str();
}

std::string number(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

std::string method_name(Method m) {
  for (const auto& [name, value] : method_table())
    if (value == m) return name;
  return "?";
}

Method parse_method(const std::string& name) {
  auto it = method_table().find(name);
  if (it == method_table().end())
    bad_value("study.methods", "one of TT-MH, TT-rIW, TT-qIW, TT-MH-2L, TT-qIW-2L, AM", name);
  return it->second;
}

std::vector<StudyCase> ExperimentConfig::resolved_cases() const {
  if (!tt.cases.empty()) return tt.cases;
  std::vector<std::vector<std::size_t>> grids;
  if (!tt.grid_sweep.empty())
    for (auto n : tt.grid_sweep) grids.push_back({n});
  else
    grids.push_back(tt.grid);
  std::vector<StudyCase> out;
  for (const auto& g : grids)
    for (double d : tt.delta) out.push_back({g, d});
  return out;
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key " + section + "." + key);
  }
  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "." + key, '.'));
    if (!v) return std::nullopt;
    return boost::trim_copy(*v);
  };

  ExperimentConfig c;
  const std::string s = "study", t = "target", tt = "tt", am = "am";
  auto field = [](const std::string& a, const std::string& b) { return a + "." + b; };

  if (auto v = get(s, "name")) c.name = *v;
  if (auto v = get(s, "methods")) {
    c.methods.clear();
    for (const auto& m : split_list(*v)) c.methods.push_back(parse_method(m));
  }
  if (auto v = get(s, "samples")) c.samples = to_sizes(field(s, "samples"), *v);
  if (auto v = get(s, "coarse_samples")) c.coarse_samples = to_unsigned(field(s, "coarse_samples"), *v);
  if (auto v = get(s, "repetitions")) c.repetitions = to_unsigned(field(s, "repetitions"), *v);
  if (auto v = get(s, "seed")) c.seed = to_unsigned(field(s, "seed"), *v);
  if (auto v = get(s, "qmc_shifts")) c.qmc_shifts = to_unsigned(field(s, "qmc_shifts"), *v);
  c.output = c.name;
  if (auto v = get(s, "output")) c.output = *v;
  if (auto v = get(s, "lattice_cache")) c.lattice_cache = *v;

  if (auto v = get(t, "kind")) c.target.kind = *v;
  if (auto v = get(t, "covariates")) c.target.covariates = to_unsigned(field(t, "covariates"), *v);
  if (auto v = get(t, "covariate_seed")) c.target.covariate_seed = to_unsigned(field(t, "covariate_seed"), *v);
  if (c.target.kind == "diffusion") c.target.dimension = c.target.diffusion.dimension;
  if (auto v = get(t, "dimension")) c.target.dimension = to_unsigned(field(t, "dimension"), *v);
  auto& dp = c.target.diffusion;
  if (auto v = get(t, "nu")) dp.nu = to_double(field(t, "nu"), *v);
  if (auto v = get(t, "noise_variance")) dp.noise_variance = to_double(field(t, "noise_variance"), *v);
  if (auto v = get(t, "theta0")) dp.theta0 = to_double(field(t, "theta0"), *v);
  if (auto v = get(t, "observations")) dp.observations = to_unsigned(field(t, "observations"), *v);
  if (auto v = get(t, "cells_per_side")) dp.cells_per_side = to_unsigned(field(t, "cells_per_side"), *v);
  if (auto v = get(t, "coarse_cells_per_side"))
    c.target.coarse_cells_per_side = to_unsigned(field(t, "coarse_cells_per_side"), *v);
  if (auto v = get(t, "noise_seed")) dp.noise_seed = to_unsigned(field(t, "noise_seed"), *v);
  if (auto v = get(t, "add_noise")) dp.add_noise = to_bool(field(t, "add_noise"), *v);
  if (auto v = get(t, "library")) c.target.library = *v;
  dp.dimension = c.target.dimension;

  if (auto v = get(tt, "grid")) {
    if (boost::to_lower_copy(*v) != "default") c.tt.grid = to_sizes(field(tt, "grid"), *v);
  }
  if (auto v = get(tt, "grid_sweep")) c.tt.grid_sweep = to_sizes(field(tt, "grid_sweep"), *v);
  if (auto v = get(tt, "delta")) c.tt.delta = to_doubles(field(tt, "delta"), *v);
  if (auto v = get(tt, "cases")) {
    for (const auto& item : split_list(*v)) {
      auto at = item.find('@');
      if (at == std::string::npos) bad_value(field(tt, "cases"), "entries of the form n@delta", item);
      StudyCase sc;
      sc.grid = {static_cast<std::size_t>(to_unsigned(field(tt, "cases"), boost::trim_copy(item.substr(0, at))))};
      sc.delta = to_double(field(tt, "cases"), boost::trim_copy(item.substr(at + 1)));
      c.tt.cases.push_back(sc);
    }
  }
  if (auto v = get(tt, "truncation")) c.tt.truncation = to_double(field(tt, "truncation"), *v);
  if (auto v = get(tt, "rho")) c.tt.rho = to_unsigned(field(tt, "rho"), *v);
  if (auto v = get(tt, "initial_rank")) c.tt.initial_rank = to_unsigned(field(tt, "initial_rank"), *v);
  if (auto v = get(tt, "iter_max")) c.tt.iter_max = to_unsigned(field(tt, "iter_max"), *v);
  if (auto v = get(tt, "max_rank")) c.tt.max_rank = to_unsigned(field(tt, "max_rank"), *v);
  if (auto v = get(tt, "max_evaluations")) c.tt.max_evaluations = to_unsigned(field(tt, "max_evaluations"), *v);
  if (auto v = get(tt, "rank_mode")) {
    if (*v != "grow" && *v != "fixed") bad_value(field(tt, "rank_mode"), "grow or fixed", *v);
    c.tt.fixed_rank = *v == "fixed";
  }
  if (auto v = get(tt, "reference_points")) c.tt.reference_points = to_unsigned(field(tt, "reference_points"), *v);

  if (auto v = get(am, "adapt_start")) c.am.adapt_start = to_unsigned(field(am, "adapt_start"), *v);
  if (auto v = get(am, "adapt_interval")) c.am.adapt_interval = to_unsigned(field(am, "adapt_interval"), *v);
  if (auto v = get(am, "scale")) c.am.scale = to_double(field(am, "scale"), *v);
  if (auto v = get(am, "dr_shrink")) c.am.dr_shrink = to_double(field(am, "dr_shrink"), *v);
  if (auto v = get(am, "burn_in_fraction")) c.am.burn_in_fraction = to_double(field(am, "burn_in_fraction"), *v);
  if (auto v = get(am, "delayed_rejection")) c.am.delayed_rejection = to_bool(field(am, "delayed_rejection"), *v);

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

void validate(const ExperimentConfig& c) {
  const auto& t = c.target;
  std::size_t d = 0;
  if (t.kind == "shock") {
    if (t.covariates > 30) throw ConfigError("target.covariates: at most 30 supported");
    d = t.covariates + 2;
  } else if (t.kind == "rosenbrock") {
    if (t.dimension < 2) throw ConfigError("target.dimension: rosenbrock needs at least 2");
    d = t.dimension;
  } else if (t.kind == "diffusion") {
    if (t.dimension < 1) throw ConfigError("target.dimension: must be positive");
    const auto& p = t.diffusion;
    if (!(p.noise_variance > 0.0)) throw ConfigError("target.noise_variance: must be positive");
    if (p.cells_per_side < 2) throw ConfigError("target.cells_per_side: must be at least 2");
    std::size_t root = 1;
    while (root * root < p.observations) ++root;
    if (root * root != p.observations || p.observations == 0)
      throw ConfigError("target.observations: must be a positive perfect square");
    if (t.coarse_cells_per_side == 1) throw ConfigError("target.coarse_cells_per_side: must be at least 2");
    d = t.dimension;
  } else if (t.kind == "custom") {
    if (t.library.empty()) throw ConfigError("target.library: required for custom targets");
  } else {
    bad_value("target.kind", "shock, rosenbrock, diffusion or custom", t.kind);
  }

  if (c.name.empty()) throw ConfigError("study.name: must not be empty");
  if (c.methods.empty()) throw ConfigError("study.methods: at least one method required");
  if (c.samples.empty()) throw ConfigError("study.samples: at least one sample size required");
  if (c.repetitions < 1) throw ConfigError("study.repetitions: must be at least 1");
  if (c.qmc_shifts < 1) throw ConfigError("study.qmc_shifts: must be at least 1");
  bool qmc = false, two_level = false;
  for (auto m : c.methods) {
    qmc = qmc || m == Method::tt_qiw || m == Method::tt_qiw_2l;
    two_level = two_level || m == Method::tt_mh_2l || m == Method::tt_qiw_2l;
  }
  for (auto n : c.samples) {
    if (n < 2) throw ConfigError("study.samples: each sample size must be at least 2");
    if (qmc) {
      if (n % c.qmc_shifts != 0 || !power_of_two(n / c.qmc_shifts) || n / c.qmc_shifts > kMaxLatticePoints)
        throw ConfigError("study.samples: lattice methods need N / qmc_shifts to be a power of two up to 2^20, got " +
                          std::to_string(n));
    }
  }
  if (two_level) {
    if (c.coarse_samples < 2) throw ConfigError("study.coarse_samples: required by two-level methods");
    if (qmc && (c.coarse_samples % c.qmc_shifts != 0 || !power_of_two(c.coarse_samples / c.qmc_shifts)))
      throw ConfigError("study.coarse_samples: must be qmc_shifts times a power of two");
  }
  if (qmc && d > kMaxLatticeDimension) throw ConfigError("target: lattice methods support at most 64 dimensions");

  if (!c.tt.cases.empty() && (!c.tt.grid_sweep.empty() || c.tt.delta.size() > 1))
    throw ConfigError("tt.cases: cannot be combined with tt.grid_sweep or a delta list");
  if (c.tt.delta.empty()) throw ConfigError("tt.delta: at least one value required");
  for (const auto& sc : c.resolved_cases()) {
    if (!(sc.delta > 0.0)) throw ConfigError("tt.delta: must be positive");
    if (!sc.grid.empty() && sc.grid.size() != 1 && d != 0 && sc.grid.size() != d)
      throw ConfigError("tt.grid: expected 1 or " + std::to_string(d) + " sizes, got " +
                        std::to_string(sc.grid.size()));
    for (auto n : sc.grid)
      if (n < 2) throw ConfigError("tt.grid: every dimension needs at least 2 nodes");
  }
  if (!(c.tt.truncation >= 0.0)) throw ConfigError("tt.truncation: must be non-negative");
  if (c.tt.initial_rank < 1) throw ConfigError("tt.initial_rank: must be at least 1");
  if (c.tt.iter_max < 1) throw ConfigError("tt.iter_max: must be at least 1");
  if (c.tt.reference_points < 1) throw ConfigError("tt.reference_points: must be at least 1");

  if (!(c.am.dr_shrink > 0.0 && c.am.dr_shrink < 1.0)) throw ConfigError("am.dr_shrink: must lie in (0, 1)");
  if (!(c.am.burn_in_fraction >= 0.0 && c.am.burn_in_fraction < 1.0))
    throw ConfigError("am.burn_in_fraction: must lie in [0, 1)");
  if (c.am.adapt_interval < 1) throw ConfigError("am.adapt_interval: must be at least 1");
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream o;
  std::vector<std::string> methods;
  for (auto m : c.methods) methods.push_back(method_name(m));
  o << "[study]\n"
    << "name = " << c.name << "\n"
    << "methods = " << join(methods) << "\n"
    << "samples = " << join(c.samples) << "\n";
  if (c.coarse_samples) o << "coarse_samples = " << c.coarse_samples << "\n";
  o << "repetitions = " << c.repetitions << "\n"
    << "seed = " << c.seed << "\n"
    << "qmc_shifts = " << c.qmc_shifts << "\n"
    << "output = " << c.output.string() << "\n";
  if (!c.lattice_cache.empty()) o << "lattice_cache = " << c.lattice_cache.string() << "\n";

  const auto& t = c.target;
  o << "\n[target]\nkind = " << t.kind << "\n";
  if (t.kind == "shock") o << "covariates = " << t.covariates << "\ncovariate_seed = " << t.covariate_seed << "\n";
  if (t.kind == "rosenbrock" || t.kind == "diffusion") o << "dimension = " << t.dimension << "\n";
  if (t.kind == "diffusion") {
    const auto& p = t.diffusion;
    o << "nu = " << number(p.nu) << "\nnoise_variance = " << number(p.noise_variance)
      << "\ntheta0 = " << number(p.theta0) << "\nobservations = " << p.observations
      << "\ncells_per_side = " << p.cells_per_side << "\nnoise_seed = " << p.noise_seed
      << "\nadd_noise = " << (p.add_noise ? "true" : "false") << "\n";
    if (t.coarse_cells_per_side) o << "coarse_cells_per_side = " << t.coarse_cells_per_side << "\n";
  }
  if (t.kind == "custom") o << "library = " << t.library.string() << "\n";

  o << "\n[tt]\n";
  if (!c.tt.cases.empty()) {
    std::vector<std::string> items;
    for (const auto& sc : c.tt.cases) items.push_back(std::to_string(sc.grid.at(0)) + "@" + number(sc.delta));
    o << "cases = " << join(items) << "\n";
  } else {
    o << "grid = " << (c.tt.grid.empty() ? std::string("default") : join(c.tt.grid)) << "\n";
    if (!c.tt.grid_sweep.empty()) o << "grid_sweep = " << join(c.tt.grid_sweep) << "\n";
    std::vector<std::string> deltas;
    for (double v : c.tt.delta) deltas.push_back(number(v));
    o << "delta = " << join(deltas) << "\n";
  }
  o << "truncation = " << number(c.tt.truncation) << "\nrho = " << c.tt.rho << "\ninitial_rank = " << c.tt.initial_rank << "\niter_max = " << c.tt.iter_max
    << "\nmax_rank = " << c.tt.max_rank << "\nmax_evaluations = " << c.tt.max_evaluations
    << "\nrank_mode = " << (c.tt.fixed_rank ? "fixed" : "grow") << "\nreference_points = " << c.tt.reference_points
    << "\n";

  o << "\n[am]\nadapt_start = " << c.am.adapt_start << "\nadapt_interval = " << c.am.adapt_interval
    << "\nscale = " << number(c.am.scale) << "\ndr_shrink = " << number(c.am.dr_shrink)
    << "\nburn_in_fraction = " << number(c.am.burn_in_fraction)
    << "\ndelayed_rejection = " << (c.am.delayed_rejection ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace ttpdf::cli
