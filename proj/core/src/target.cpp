#include "ttpdf/target.hpp"

#include "ttpdf/errors.hpp"
#include "ttpdf/parallel.hpp"

#include <dlfcn.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ttpdf {

Grid TargetDensity::make_grid(std::span<const std::size_t> sizes) const {
  auto lo = lower(), hi = upper();
  if (sizes.size() != lo.size()) throw DomainError("grid sizes do not match the target dimension");
  return Grid::uniform(lo, hi, sizes);
}

Matrix TargetDensity::reference_points(std::size_t count, std::mt19937_64& rng) const {
  auto lo = lower(), hi = upper();
  Matrix x(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(lo.size()));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      auto kk = static_cast<std::size_t>(k);
      x(i, k) = lo[kk] + (hi[kk] - lo[kk]) * u(rng);
    }
  return x;
}

Vector evaluate_batch(const TargetDensity& target, const Matrix& points, Matrix* qoi) {
  const auto n = points.rows();
  const auto d = static_cast<Eigen::Index>(target.dimension());
  if (points.cols() != d) throw DomainError("point matrix has wrong number of columns");
  const auto m = static_cast<Eigen::Index>(target.qoi_names().size());
  Vector out(n);
  if (qoi) qoi->resize(n, m);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(static_cast<std::size_t>(d)), q(static_cast<std::size_t>(m));
    for (auto i = static_cast<Eigen::Index>(begin); i < static_cast<Eigen::Index>(end); ++i) {
      for (Eigen::Index k = 0; k < d; ++k) x[static_cast<std::size_t>(k)] = points(i, k);
      if (qoi) {
        out(i) = target.evaluate(x, q);
        for (Eigen::Index j = 0; j < m; ++j) (*qoi)(i, j) = q[static_cast<std::size_t>(j)];
      } else {
        out(i) = target.log_density(x);
      }
    }
  });
  return out;
}

double max_log_density(const TargetDensity& target, const Matrix& points) {
  Vector v = evaluate_batch(target, points);
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::isfinite(v(i))) best = std::max(best, v(i));
  if (!std::isfinite(best)) throw NumericError("target density vanishes at every probe point");
  return best;
}

namespace {

class PluginTarget final : public TargetDensity {
 public:
  explicit PluginTarget(const std::filesystem::path& path) : path_(path) {
    handle_ = dlopen(path.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (!handle_) throw ConfigError(std::string("cannot load plugin: ") + dlerror());
    auto dim = reinterpret_cast<int (*)()>(symbol("ttpdf_plugin_dimension"));
    auto bounds = reinterpret_cast<void (*)(double*, double*)>(symbol("ttpdf_plugin_bounds"));
    log_density_ = reinterpret_cast<double (*)(const double*)>(symbol("ttpdf_plugin_log_density"));
    int d = dim();
    if (d <= 0) throw ConfigError("plugin reports non-positive dimension");
    lower_.resize(static_cast<std::size_t>(d));
    upper_.resize(static_cast<std::size_t>(d));
    bounds(lower_.data(), upper_.data());
  }
  ~PluginTarget() override {
    if (handle_) dlclose(handle_);
  }
  PluginTarget(const PluginTarget&) = delete;
  PluginTarget& operator=(const PluginTarget&) = delete;

  std::string name() const override { return "custom:" + path_.filename().string(); }
  std::size_t dimension() const override { return lower_.size(); }
  std::vector<double> lower() const override { return lower_; }
  std::vector<double> upper() const override { return upper_; }
  double log_density(std::span<const double> x) const override { return log_density_(x.data()); }

 private:
  void* symbol(const char* name) {
    void* s = dlsym(handle_, name);
    if (!s) throw ConfigError(std::string("plugin is missing symbol ") + name);
    return s;
  }

  std::filesystem::path path_;
  void* handle_ = nullptr;
  double (*log_density_)(const double*) = nullptr;
  std::vector<double> lower_, upper_;
};

}  // namespace

std::unique_ptr<TargetDensity> load_plugin_target(const std::filesystem::path& library) {
  return std::make_unique<PluginTarget>(library);
}

}  // namespace ttpdf
