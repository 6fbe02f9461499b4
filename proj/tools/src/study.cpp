#include "ttpdf_cli/study.hpp"

#include "ttpdf/baseline.hpp"
#include "ttpdf/errors.hpp"
#include "ttpdf/estimators.hpp"
#include "ttpdf/iact.hpp"
#include "ttpdf/parallel.hpp"
#include "ttpdf/qmc.hpp"
#include "ttpdf/rosenbrock.hpp"
#include "ttpdf/shock_absorber.hpp"
#include "ttpdf/tt_cd.hpp"
#include "ttpdf/tt_cross.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

namespace ttpdf::cli {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted = true; }

struct Interrupted {};

void check_interrupt() {
  if (g_interrupted) throw Interrupted{};
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const double kNaN = std::numeric_limits<double>::quiet_NaN();

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::unique_ptr<TargetDensity> make_target(const TargetSettings& s) {
  if (s.kind == "shock") return std::make_unique<ShockAbsorber>(s.covariates, s.covariate_seed);
  if (s.kind == "rosenbrock") return std::make_unique<Rosenbrock>(s.dimension);
  if (s.kind == "diffusion") {
    DiffusionParameters p = s.diffusion;
    p.dimension = s.dimension;
    return std::make_unique<Diffusion>(p);
  }
  return load_plugin_target(s.library);
}

/// Cheaper model g~ for the two-level control; null when g~ = g.
std::unique_ptr<TargetDensity> make_coarse_target(const TargetSettings& s) {
  if (s.kind != "diffusion") return nullptr;
  DiffusionParameters p = s.diffusion;
  p.dimension = s.dimension;
  p.cells_per_side = s.coarse_cells_per_side ? s.coarse_cells_per_side : std::max<std::size_t>(2, p.cells_per_side / 2);
  return std::make_unique<Diffusion>(p);
}

struct Phases {
  double setup = 0.0, cross = 0.0, sampling = 0.0, evaluation = 0.0, estimation = 0.0, baseline = 0.0;
  double total() const { return setup + cross + sampling + evaluation + estimation + baseline; }
};

struct MethodRecord {
  Method method = Method::tt_mh;
  std::size_t n = 0;
  std::vector<double> estimate, standard_error;
  std::optional<double> tau, rejection_rate, el1, max_weight;
  std::size_t target_evaluations = 0, coarse_evaluations = 0;
  double seconds = 0.0;
};

struct RepetitionResult {
  bool complete = false;
  std::vector<MethodRecord> records;
  std::optional<TTTensor> tt;
  double integral = 0.0;
  double log_shift = 0.0;
  std::size_t cross_evaluations = 0;
  std::size_t max_rank = 0;
  std::vector<std::size_t> ranks;
  bool converged = false;
  std::vector<CrossSweep> sweeps;
  Phases phases;
  double wall = 0.0;
};

/// QoI columns reported for a target: its own QoIs (or the coordinates when it has
/// none), plus the quantile of the mean distribution for the shock absorber.
struct QoiLayout {
  std::vector<std::string> names;
  bool coordinates = false;
  bool shock = false;
  std::size_t base = 0;

  explicit QoiLayout(const TargetDensity& t, const std::string& kind) {
    names = t.qoi_names();
    if (names.empty()) {
      coordinates = true;
      for (std::size_t k = 1; k <= t.dimension(); ++k) names.push_back("x_" + std::to_string(k));
    }
    base = names.size();
    if (kind == "shock") {
      shock = true;
      names.push_back("quantile_of_mean");
    }
  }

  Matrix values(const SampleBatch& b) const { return coordinates ? b.points : b.qoi; }
};

Matrix coarse_values(const TargetDensity* coarse, const QoiLayout& layout, const Matrix& points, const Matrix& fine,
                     std::size_t& evaluations) {
  if (layout.coordinates) return points;
  if (!coarse) return fine;
  Matrix q;
  evaluate_batch(*coarse, points, &q);
  evaluations += static_cast<std::size_t>(points.rows());
  return q;
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return kNaN;
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double mean_of(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m += v;
  return m / static_cast<double>(x.size());
}

double safe_iact(std::span<const double> x) { return x.size() >= 100 ? iact(x) : kNaN; }

std::vector<double> column(const Matrix& m, Eigen::Index j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
  return out;
}

SampleBatch head(const SampleBatch& b, std::size_t n) {
  SampleBatch out;
  auto r = static_cast<Eigen::Index>(n);
  out.seeds = b.seeds.topRows(r);
  out.points = b.points.topRows(r);
  out.log_pistar = b.log_pistar.head(r);
  out.log_pi = b.log_pi.head(r);
  if (b.qoi.rows()) out.qoi = b.qoi.topRows(r);
  out.qoi_names = b.qoi_names;
  out.kind = b.kind;
  return out;
}

SampleBatch concatenate(const std::vector<SampleBatch>& parts) {
  SampleBatch out = parts.front();
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.points.rows();
  auto stack = [&](auto member, Eigen::Index cols) {
    Matrix m(rows, cols);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      const Matrix& src = p.*member;
      m.middleRows(at, src.rows()) = src;
      at += src.rows();
    }
    return m;
  };
  out.seeds = stack(&SampleBatch::seeds, out.seeds.cols());
  out.points = stack(&SampleBatch::points, out.points.cols());
  if (out.qoi.cols()) out.qoi = stack(&SampleBatch::qoi, out.qoi.cols());
  auto vstack = [&](auto member) {
    Vector v(rows);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      const Vector& src = p.*member;
      v.segment(at, src.size()) = src;
      at += src.size();
    }
    return v;
  };
  out.log_pistar = vstack(&SampleBatch::log_pistar);
  out.log_pi = vstack(&SampleBatch::log_pi);
  return out;
}

double shock_quantile(const Matrix& states, std::span<const double> weights) {
  const auto n = static_cast<std::size_t>(states.rows());
  const Eigen::Index last = states.cols() - 1;
  std::vector<double> t1(n), t2(n);
  for (std::size_t i = 0; i < n; ++i) {
    t1[i] = std::exp(states(static_cast<Eigen::Index>(i), 0));
    t2[i] = states(static_cast<Eigen::Index>(i), last);
  }
  try {
    return quantile_of_mean(t1, t2, weights);
  } catch (const NumericError&) {
    return kNaN;
  }
}

void weight_diagnostics(const SampleBatch& b, MethodRecord& r) {
  Vector w = normalized_weights(b);
  r.el1 = (w.array() - 1.0).abs().mean();
  r.max_weight = w.maxCoeff();
}

std::mt19937_64 stream(const ExperimentConfig& c, std::size_t case_index, std::size_t rep, std::size_t tag,
                       std::size_t n = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                    static_cast<std::uint32_t>(case_index), static_cast<std::uint32_t>(rep),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(n)};
  return std::mt19937_64(seq);
}

std::vector<std::size_t> grid_sizes(const StudyCase& sc, const TargetDensity& t, const std::string& kind) {
  const std::size_t d = t.dimension();
  if (sc.grid.empty()) return kind == "rosenbrock" ? rosenbrock_grid_sizes(d) : std::vector<std::size_t>(d, 32);
  if (sc.grid.size() == 1) return std::vector<std::size_t>(d, sc.grid[0]);
  return sc.grid;
}

std::string grid_label(const std::vector<std::size_t>& sizes) {
  bool uniform = std::all_of(sizes.begin(), sizes.end(), [&](std::size_t n) { return n == sizes[0]; });
  if (uniform) return std::to_string(sizes[0]);
  std::string s;
  for (std::size_t k = 0; k < sizes.size(); ++k) s += (k ? "x" : "") + std::to_string(sizes[k]);
  return s;
}

struct StudyContext {
  const ExperimentConfig& config;
  const TargetDensity& target;
  const TargetDensity* coarse;
  QoiLayout layout;
  std::map<std::size_t, GeneratingVector> lattices;
};

/// Lattice-seeded surrogate samples in `shifts` randomly shifted groups.
std::vector<SampleBatch> lattice_batches(const StudyContext& ctx, const CDSampler& sampler, std::size_t n,
                                         std::mt19937_64& rng) {
  const std::size_t s = ctx.config.qmc_shifts;
  const auto& g = ctx.lattices.at(n / s);
  std::vector<SampleBatch> out;
  for (std::size_t i = 0; i < s; ++i) out.push_back(sampler.transform(lattice_points(randomize(g, rng)), SeedKind::lattice));
  return out;
}

RepetitionResult run_repetition(const StudyContext& ctx, std::size_t case_index, const StudyCase& sc,
                                std::size_t rep) {
  const auto t_start = Clock::now();
  const auto& c = ctx.config;
  const auto& target = ctx.target;
  const auto& layout = ctx.layout;
  const auto m = static_cast<Eigen::Index>(layout.base);
  RepetitionResult out;
  Phases& ph = out.phases;

  auto t0 = Clock::now();
  auto rng = stream(c, case_index, rep, 0);
  Matrix ref = target.reference_points(c.tt.reference_points, rng);
  Grid grid = target.make_grid(grid_sizes(sc, target, c.target.kind));
  CrossConfig cc;
  cc.delta = sc.delta;
  cc.truncation = c.tt.truncation;
  cc.rho = c.tt.rho;
  cc.iter_max = c.tt.iter_max;
  cc.initial_rank = c.tt.initial_rank;
  cc.max_rank = c.tt.max_rank;
  cc.max_evaluations = c.tt.max_evaluations;
  cc.mode = c.tt.fixed_rank ? RankMode::fixed : RankMode::grow;
  cc.seed = rng();
  cc.initial_points = seed_points(target, grid, ref, out.log_shift);
  ph.setup += since(t0);

  t0 = Clock::now();
  auto cross = cross_approximate_density(target, grid, cc, out.log_shift);
  ph.cross += since(t0);
  out.cross_evaluations = cross.evaluations;
  out.ranks = cross.tt.ranks();
  out.max_rank = cross.tt.max_rank();
  out.converged = cross.converged;
  out.sweeps = cross.sweeps;
  out.integral = integrate(cross.tt);
  out.tt = cross.tt;
  CDSampler sampler(cross.tt);
  check_interrupt();

  // Shared i.i.d. pool for the chain and i.i.d. importance methods.
  std::size_t pool_size = 0;
  for (auto meth : c.methods)
    if (meth == Method::tt_mh || meth == Method::tt_riw || meth == Method::tt_mh_2l)
      pool_size = *std::max_element(c.samples.begin(), c.samples.end());
  SampleBatch pool;
  double pool_sampling = 0.0, pool_evaluation = 0.0;
  if (pool_size) {
    auto prng = stream(c, case_index, rep, 1);
    t0 = Clock::now();
    pool = sampler.sample(pool_size, prng);
    pool_sampling = since(t0);
    t0 = Clock::now();
    attach_target(pool, target);
    pool_evaluation = since(t0);
    ph.sampling += pool_sampling;
    ph.evaluation += pool_evaluation;
  }
  auto pool_share = [&](std::size_t n) {
    return (pool_sampling + pool_evaluation) * static_cast<double>(n) / static_cast<double>(pool_size);
  };

  for (std::size_t mi = 0; mi < c.methods.size(); ++mi) {
    const Method meth = c.methods[mi];
    for (std::size_t n : c.samples) {
      check_interrupt();
      MethodRecord r;
      r.method = meth;
      r.n = n;
      r.estimate.assign(layout.names.size(), kNaN);
      r.standard_error.assign(layout.names.size(), kNaN);
      auto mrng = stream(c, case_index, rep, 10 + mi, n);
      const auto method_start = Clock::now();
      double extra = 0.0;

      if (meth == Method::tt_mh || meth == Method::tt_riw || meth == Method::tt_mh_2l) {
        extra = pool_share(n);
        r.target_evaluations = n;
      }

      if (meth == Method::tt_mh) {
        t0 = Clock::now();
        SampleBatch sub = head(pool, n);
        auto chain = mh_correct(sub, mrng);
        Matrix g = layout.values(sub);
        for (Eigen::Index j = 0; j < m; ++j) {
          std::vector<double> s(n);
          for (std::size_t l = 0; l < n; ++l) s[l] = g(static_cast<Eigen::Index>(chain.state_index[l]), j);
          r.estimate[j] = mean_of(s);
          double tau = safe_iact(s);
          r.standard_error[j] = std::sqrt(sample_variance(s) * tau / static_cast<double>(n));
        }
        if (layout.shock) r.estimate[m] = shock_quantile(chain.states, {});
        if (!chain.tau.empty()) r.tau = chain.max_tau();
        r.rejection_rate = chain.rejection_rate;
        weight_diagnostics(sub, r);
        ph.estimation += since(t0);
      } else if (meth == Method::tt_riw) {
        t0 = Clock::now();
        SampleBatch sub = head(pool, n);
        Matrix g = layout.values(sub);
        auto e = importance_estimate(sub, g);
        Vector w = normalized_weights(sub);
        for (Eigen::Index j = 0; j < m; ++j) {
          r.estimate[j] = e.estimate(j);
          double s = ((w.array() * (g.col(j).array() - e.estimate(j))).square()).sum();
          r.standard_error[j] = std::sqrt(s) / static_cast<double>(n);
        }
        if (layout.shock) r.estimate[m] = shock_quantile(sub.points, {w.data(), static_cast<std::size_t>(w.size())});
        r.el1 = e.el1;
        r.max_weight = e.max_weight;
        ph.estimation += since(t0);
      } else if (meth == Method::tt_qiw) {
        t0 = Clock::now();
        auto parts = lattice_batches(ctx, sampler, n, mrng);
        ph.sampling += since(t0);
        t0 = Clock::now();
        for (auto& p : parts) attach_target(p, target);
        ph.evaluation += since(t0);
        t0 = Clock::now();
        SampleBatch all = concatenate(parts);
        Matrix g = layout.values(all);
        auto e = importance_estimate(all, g);
        Vector w = normalized_weights(all);
        for (Eigen::Index j = 0; j < m; ++j) r.estimate[j] = e.estimate(j);
        if (parts.size() > 1) {
          std::vector<std::vector<double>> per(layout.base);
          for (const auto& p : parts) {
            auto ep = importance_estimate(p, layout.values(p));
            for (Eigen::Index j = 0; j < m; ++j) per[j].push_back(ep.estimate(j));
          }
          for (Eigen::Index j = 0; j < m; ++j)
            r.standard_error[j] = std::sqrt(sample_variance(per[j]) / static_cast<double>(parts.size()));
        }
        if (layout.shock) r.estimate[m] = shock_quantile(all.points, {w.data(), static_cast<std::size_t>(w.size())});
        r.el1 = e.el1;
        r.max_weight = e.max_weight;
        r.target_evaluations = n;
        ph.estimation += since(t0);
      } else if (meth == Method::tt_mh_2l) {
        t0 = Clock::now();
        auto coarse_batch = sampler.sample(c.coarse_samples, mrng);
        ph.sampling += since(t0);
        t0 = Clock::now();
        Matrix gc = coarse_values(ctx.coarse, layout, coarse_batch.points, Matrix(), r.coarse_evaluations);
        if (!layout.coordinates && !ctx.coarse) {
          evaluate_batch(target, coarse_batch.points, &gc);
          r.coarse_evaluations += c.coarse_samples;
        }
        SampleBatch sub = head(pool, n);
        Matrix g = layout.values(sub);
        Matrix gt = coarse_values(ctx.coarse, layout, sub.points, g, r.coarse_evaluations);
        ph.evaluation += since(t0);
        t0 = Clock::now();
        auto chain = mh_correct(sub, mrng);
        for (Eigen::Index j = 0; j < m; ++j) {
          auto cj = column(gc, j), fj = column(g, j), tj = column(gt, j);
          auto e = two_level_mh(cj, fj, tj, chain);
          std::vector<double> diff(n);
          for (std::size_t l = 0; l < n; ++l) diff[l] = fj[chain.state_index[l]] - tj[l];
          double tau = safe_iact(diff);
          if (!std::isfinite(tau)) tau = 1.0;
          r.estimate[j] = e.estimate;
          r.standard_error[j] = std::sqrt(sample_variance(cj) / static_cast<double>(cj.size()) +
                                          e.correction_variance * tau / static_cast<double>(n));
        }
        if (!chain.tau.empty()) r.tau = chain.max_tau();
        r.rejection_rate = chain.rejection_rate;
        weight_diagnostics(sub, r);
        ph.estimation += since(t0);
      } else if (meth == Method::tt_qiw_2l) {
        t0 = Clock::now();
        auto coarse_parts = lattice_batches(ctx, sampler, c.coarse_samples, mrng);
        auto fine_parts = lattice_batches(ctx, sampler, n, mrng);
        ph.sampling += since(t0);
        t0 = Clock::now();
        std::vector<Matrix> gc(coarse_parts.size());
        for (std::size_t s = 0; s < coarse_parts.size(); ++s) {
          gc[s] = coarse_values(ctx.coarse, layout, coarse_parts[s].points, Matrix(), r.coarse_evaluations);
          if (!layout.coordinates && !ctx.coarse) {
            evaluate_batch(target, coarse_parts[s].points, &gc[s]);
            r.coarse_evaluations += static_cast<std::size_t>(coarse_parts[s].points.rows());
          }
        }
        std::vector<Matrix> gf(fine_parts.size()), gt(fine_parts.size());
        for (std::size_t s = 0; s < fine_parts.size(); ++s) {
          attach_target(fine_parts[s], target);
          gf[s] = layout.values(fine_parts[s]);
          gt[s] = coarse_values(ctx.coarse, layout, fine_parts[s].points, gf[s], r.coarse_evaluations);
        }
        ph.evaluation += since(t0);
        t0 = Clock::now();
        auto stack = [](const std::vector<Matrix>& parts) {
          Eigen::Index rows = 0;
          for (const auto& p : parts) rows += p.rows();
          Matrix out(rows, parts.front().cols());
          Eigen::Index at = 0;
          for (const auto& p : parts) {
            out.middleRows(at, p.rows()) = p;
            at += p.rows();
          }
          return out;
        };
        SampleBatch fine_all = concatenate(fine_parts);
        Vector lw = fine_all.log_weights();
        Matrix gc_all = stack(gc), gf_all = stack(gf), gt_all = stack(gt);
        for (Eigen::Index j = 0; j < m; ++j) {
          auto e = two_level_iw(column(gc_all, j), column(gf_all, j), column(gt_all, j),
                                {lw.data(), static_cast<std::size_t>(lw.size())});
          r.estimate[j] = e.estimate;
          if (fine_parts.size() > 1) {
            std::vector<double> per;
            for (std::size_t s = 0; s < fine_parts.size(); ++s) {
              Vector lws = fine_parts[s].log_weights();
              per.push_back(two_level_iw(column(gc[s], j), column(gf[s], j), column(gt[s], j),
                                         {lws.data(), static_cast<std::size_t>(lws.size())})
                                .estimate);
            }
            r.standard_error[j] = std::sqrt(sample_variance(per) / static_cast<double>(per.size()));
          }
        }
        weight_diagnostics(fine_all, r);
        r.target_evaluations = n;
        ph.estimation += since(t0);
      } else if (meth == Method::am) {
        t0 = Clock::now();
        AMConfig ac;
        ac.adapt_start = c.am.adapt_start;
        ac.adapt_interval = c.am.adapt_interval;
        ac.scale = c.am.scale;
        ac.dr_shrink = c.am.dr_shrink;
        ac.burn_in_fraction = c.am.burn_in_fraction;
        ac.delayed_rejection = c.am.delayed_rejection;
        auto res = am_run(target, ac, n, mrng);
        const Matrix& g = layout.coordinates ? res.chain.states : res.qoi;
        const std::size_t kept = static_cast<std::size_t>(g.rows());
        for (Eigen::Index j = 0; j < m && kept > 0; ++j) {
          auto s = column(g, j);
          r.estimate[j] = mean_of(s);
          r.standard_error[j] = std::sqrt(sample_variance(s) * safe_iact(s) / static_cast<double>(kept));
        }
        if (layout.shock && kept) r.estimate[m] = shock_quantile(res.chain.states, {});
        if (!res.chain.tau.empty()) r.tau = res.chain.max_tau();
        r.rejection_rate = res.chain.rejection_rate;
        r.target_evaluations = res.evaluations;
        ph.baseline += since(t0);
      }
      r.seconds = since(method_start) + extra;
      out.records.push_back(std::move(r));
    }
  }
  out.complete = true;
  out.wall = since(t_start);
  return out;
}

double gram_spread(const std::vector<const RepetitionResult*>& reps) {
  const std::size_t r = reps.size();
  if (r < 2) return kNaN;
  Matrix g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = inner_product(*reps[i]->tt, *reps[j]->tt) / (reps[i]->integral * reps[j]->integral);
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  const double rr = static_cast<double>(r);
  double mean_norm2 = g.sum() / (rr * rr);
  double spread = std::max(0.0, g.trace() - rr * mean_norm2);
  return std::sqrt(spread / (rr - 1.0) / mean_norm2);
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "null";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

double mean_optional(const std::vector<std::optional<double>>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& x : v)
    if (x && std::isfinite(*x)) {
      s += *x;
      ++n;
    }
  return n ? s / static_cast<double>(n) : kNaN;
}

}  // namespace

double relative_spread(std::span<const double> values) {
  if (values.size() < 2) return kNaN;
  double m = mean_of(values);
  double s = 0.0;
  for (double v : values) s += std::abs(v - m);
  return s / static_cast<double>(values.size()) / std::abs(m);
}

int run_study(const ExperimentConfig& config, std::ostream& log) {
  validate(config);
  g_interrupted = false;
  auto previous = std::signal(SIGINT, on_interrupt);

  auto target = make_target(config.target);
  auto coarse = make_coarse_target(config.target);
  StudyContext ctx{config, *target, coarse.get(), QoiLayout(*target, config.target.kind), {}};
  std::filesystem::create_directories(config.output);

  for (auto meth : config.methods)
    if (meth == Method::tt_qiw || meth == Method::tt_qiw_2l) {
      auto dir = config.lattice_cache.empty() ? config.output / "lattice" : config.lattice_cache;
      std::vector<std::size_t> sizes = config.samples;
      if (meth == Method::tt_qiw_2l) sizes.push_back(config.coarse_samples);
      for (auto n : sizes) {
        std::size_t per = n / config.qmc_shifts;
        if (!ctx.lattices.count(per)) ctx.lattices[per] = cached_generating_vector(dir, target->dimension(), per);
      }
    }

  const auto cases = config.resolved_cases();
  const std::size_t reps = config.repetitions;
  std::vector<RepetitionResult> results(cases.size() * reps);
  std::vector<std::string> errors(results.size());
  std::mutex log_mutex;
  auto task = [&](std::size_t idx) {
    const std::size_t ci = idx / reps, rep = idx % reps;
    try {
      results[idx] = run_repetition(ctx, ci, cases[ci], rep);
      std::lock_guard lock(log_mutex);
      log << config.name << ": case " << ci + 1 << "/" << cases.size() << " (grid "
          << grid_label(grid_sizes(cases[ci], *target, config.target.kind)) << ", delta " << cases[ci].delta
          << ") repetition " << rep + 1 << "/" << reps << " done in " << results[idx].wall << " s\n";
    } catch (const Interrupted&) {
    } catch (const std::exception& e) {
      errors[idx] = e.what();
      g_interrupted = true;
    }
  };
  // Repetitions run side by side only when there are enough of them to occupy the workers;
  // otherwise each repetition parallelizes internally.
  if (reps > 1 && worker_count() > 1)
    parallel_for(results.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) task(i);
    });
  else
    for (std::size_t i = 0; i < results.size(); ++i) task(i);
  std::signal(SIGINT, previous);
  for (const auto& e : errors)
    if (!e.empty()) throw NumericError("study '" + config.name + "' failed: " + e);

  const auto& names = ctx.layout.names;
  std::ofstream runs(config.output / "runs.jsonl"), timings(config.output / "timings.jsonl"),
      crossf(config.output / "cross.jsonl"), summary(config.output / "summary.csv");
  summary << "case,grid,delta,method,N,qoi,repetitions,mean_estimate,E_q,mean_standard_error,mean_tau,"
             "mean_rejection_rate,mean_el1,E_TT,mean_cross_evaluations,mean_max_rank,mean_target_evaluations\n";
  json status_cases = json::array();
  bool all_complete = true;

  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const auto sizes = grid_sizes(cases[ci], *target, config.target.kind);
    std::vector<const RepetitionResult*> done;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& res = results[ci * reps + rep];
      if (!res.complete) {
        all_complete = false;
        continue;
      }
      done.push_back(&res);
      json cj{{"case", ci},
              {"repetition", rep},
              {"grid", sizes},
              {"delta", cases[ci].delta},
              {"evaluations", res.cross_evaluations},
              {"max_rank", res.max_rank},
              {"ranks", res.ranks},
              {"converged", res.converged},
              {"log_shift", res.log_shift},
              {"integral", number(res.integral)}};
      json sweeps = json::array();
      for (const auto& s : res.sweeps)
        sweeps.push_back({{"iteration", s.iteration},
                          {"direction", s.forward ? "forward" : "backward"},
                          {"max_rank", s.max_rank},
                          {"evaluations", s.evaluations},
                          {"relative_change", number(s.relative_change)}});
      cj["sweeps"] = sweeps;
      crossf << cj.dump() << '\n';

      const auto& p = res.phases;
      timings << json{{"case", ci},
                      {"repetition", rep},
                      {"wall", res.wall},
                      {"phases",
                       {{"setup", p.setup},
                        {"cross", p.cross},
                        {"sampling", p.sampling},
                        {"evaluation", p.evaluation},
                        {"estimation", p.estimation},
                        {"baseline", p.baseline}}}}
                     .dump()
              << '\n';
      for (const auto& r : res.records) {
        EstimateRecord er;
        er.method = method_name(r.method);
        er.n = r.n;
        er.names = names;
        er.estimate = r.estimate;
        er.standard_error = r.standard_error;
        er.tau = r.tau;
        er.rejection_rate = r.rejection_rate;
        er.el1 = r.el1;
        json j = json::parse(to_json_line(er));
        json line{{"case", ci}, {"grid", sizes}, {"delta", cases[ci].delta}, {"repetition", rep}};
        for (auto& [k, v] : j.items()) line[k] = v;
        line["max_weight"] = r.max_weight ? number(*r.max_weight) : json(nullptr);
        line["target_evaluations"] = r.target_evaluations;
        line["coarse_evaluations"] = r.coarse_evaluations;
        line["cross_evaluations"] = r.method == Method::am ? 0 : res.cross_evaluations;
        line["max_rank"] = r.method == Method::am ? json(nullptr) : json(res.max_rank);
        runs << line.dump() << '\n';
        double setup = r.method == Method::am ? 0.0 : p.setup + p.cross;
        timings << json{{"case", ci},           {"repetition", rep}, {"method", er.method},
                        {"N", r.n},             {"seconds", r.seconds}, {"setup_seconds", setup}}
                       .dump()
                << '\n';
      }
    }
    status_cases.push_back({{"grid", sizes}, {"delta", cases[ci].delta}, {"completed_repetitions", done.size()}});
    if (done.empty()) continue;

    const double ett = gram_spread(done);
    double cross_evals = 0.0, max_rank = 0.0;
    for (const auto* d : done) {
      cross_evals += static_cast<double>(d->cross_evaluations);
      max_rank += static_cast<double>(d->max_rank);
    }
    cross_evals /= static_cast<double>(done.size());
    max_rank /= static_cast<double>(done.size());
    const std::size_t records = done.front()->records.size();
    for (std::size_t ri = 0; ri < records; ++ri) {
      const auto& first = done.front()->records[ri];
      std::vector<std::optional<double>> taus, rejections, el1s;
      double evals = 0.0;
      for (const auto* d : done) {
        const auto& r = d->records[ri];
        taus.push_back(r.tau);
        rejections.push_back(r.rejection_rate);
        el1s.push_back(r.el1);
        evals += static_cast<double>(r.target_evaluations);
      }
      evals /= static_cast<double>(done.size());
      const bool tt_method = first.method != Method::am;
      std::vector<double> eqs;
      auto row = [&](const std::string& qoi, double mean_est, double eq, double mean_se) {
        summary << ci << ',' << grid_label(sizes) << ',' << csv_number(cases[ci].delta) << ','
                << method_name(first.method) << ',' << first.n << ',' << qoi << ',' << done.size() << ','
                << csv_number(mean_est) << ',' << csv_number(eq) << ',' << csv_number(mean_se) << ','
                << csv_number(mean_optional(taus)) << ',' << csv_number(mean_optional(rejections)) << ','
                << csv_number(mean_optional(el1s)) << ',' << csv_number(tt_method ? ett : kNaN) << ','
                << csv_number(tt_method ? cross_evals : kNaN) << ',' << csv_number(tt_method ? max_rank : kNaN)
                << ',' << csv_number(evals) << '\n';
      };
      for (std::size_t q = 0; q < names.size(); ++q) {
        std::vector<double> est;
        std::vector<std::optional<double>> ses;
        for (const auto* d : done) {
          est.push_back(d->records[ri].estimate[q]);
          ses.push_back(d->records[ri].standard_error[q]);
        }
        bool finite = std::all_of(est.begin(), est.end(), [](double v) { return std::isfinite(v); });
        double eq = finite ? relative_spread(est) : kNaN;
        eqs.push_back(eq);
        row(names[q], finite ? mean_of(est) : kNaN, eq, mean_optional(ses));
      }
      if (names.size() > 1) {
        std::vector<std::optional<double>> opt(eqs.begin(), eqs.end());
        row("average", kNaN, mean_optional(opt), kNaN);
      }
    }
  }

  json study{{"name", config.name},
             {"status", all_complete ? "complete" : "interrupted"},
             {"target", config.target.kind},
             {"dimension", target->dimension()},
             {"qoi", names},
             {"cases", status_cases},
             {"config", to_ini(config)}};
  std::ofstream(config.output / "study.json") << study.dump(2) << '\n';
  log << config.name << ": results in " << config.output.string() << '\n';
  return all_complete ? 0 : 130;
}

void write_plot_data(const std::filesystem::path& dir, std::ostream& log) {
  std::ifstream runs(dir / "runs.jsonl");
  if (!runs) throw ConfigError("no runs.jsonl in " + dir.string());
  struct Key {
    std::size_t c;
    std::string method;
    std::size_t n;
    auto operator<=>(const Key&) const = default;
  };
  std::map<std::size_t, std::string> labels;
  std::map<Key, std::map<std::string, std::vector<double>>> estimates;
  std::vector<std::string> qoi_order;
  std::string line;
  while (std::getline(runs, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    Key k{j["case"].get<std::size_t>(), j["method"].get<std::string>(), j["N"].get<std::size_t>()};
    std::ostringstream label;
    label << "grid=" << grid_label(j["grid"].get<std::vector<std::size_t>>()) << " delta=" << j["delta"].get<double>();
    labels[k.c] = label.str();
    for (auto& [name, v] : j["estimate"].items()) {
      if (std::find(qoi_order.begin(), qoi_order.end(), name) == qoi_order.end()) qoi_order.push_back(name);
      estimates[k][name].push_back(v.is_null() ? kNaN : v.get<double>());
    }
  }
  std::map<Key, std::pair<double, std::size_t>> seconds;
  std::ifstream timings(dir / "timings.jsonl");
  while (std::getline(timings, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    if (!j.contains("method")) continue;
    Key k{j["case"].get<std::size_t>(), j["method"].get<std::string>(), j["N"].get<std::size_t>()};
    auto& s = seconds[k];
    s.first += j["seconds"].get<double>() + j["setup_seconds"].get<double>();
    s.second += 1;
  }

  std::filesystem::create_directories(dir / "plot");
  std::ofstream by_n(dir / "plot" / "error_vs_N.csv"), by_time(dir / "plot" / "error_vs_time.csv");
  by_n << "series,x,y\n";
  by_time << "series,x,y\n";
  by_n.precision(17);
  by_time.precision(17);
  for (const auto& [k, per_qoi] : estimates) {
    std::string base = labels[k.c] + " " + k.method;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& q : qoi_order) {
      auto it = per_qoi.find(q);
      if (it == per_qoi.end()) continue;
      double eq = relative_spread(it->second);
      if (!std::isfinite(eq)) continue;
      by_n << '"' << base << " " << q << "\"," << k.n << ',' << eq << '\n';
      sum += eq;
      ++count;
    }
    auto st = seconds.find(k);
    if (count && st != seconds.end() && st->second.second)
      by_time << '"' << base << "\"," << st->second.first / static_cast<double>(st->second.second) << ','
              << sum / static_cast<double>(count) << '\n';
  }
  log << "wrote " << (dir / "plot" / "error_vs_N.csv").string() << " and "
      << (dir / "plot" / "error_vs_time.csv").string() << '\n';
}

}  // namespace ttpdf::cli
