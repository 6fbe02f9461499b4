#include "ttpdf/tt_cross.hpp"

#include "svd.hpp"
#include "ttpdf/errors.hpp"
#include "ttpdf/log.hpp"
#include "ttpdf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace ttpdf {

namespace {

std::string format_index(std::span<const std::size_t> index) {
  std::ostringstream s;
  s << '(';
  for (std::size_t k = 0; k < index.size(); ++k) s << (k ? "," : "") << index[k];
  s << ')';
  return s.str();
}

}  // namespace

GridFunction point_function_on_grid(const Grid& grid,
                                    std::function<double(std::span<const double>)> f) {
  return [grid, f = std::move(f)](std::span<const std::size_t> indices, std::span<double> values) {
    const std::size_t d = grid.dimension();
    parallel_for(values.size(), [&](std::size_t begin, std::size_t end) {
      std::vector<double> x(d);
      for (std::size_t j = begin; j < end; ++j) {
        auto index = indices.subspan(j * d, d);
        for (std::size_t k = 0; k < d; ++k) x[k] = grid.nodes(k)[index[k]];
        double v;
        try {
          v = f(x);
        } catch (const std::exception& e) {
          throw NumericError("target evaluation failed at multi-index " + format_index(index) +
                             ": " + e.what());
        }
        if (!std::isfinite(v))
          throw NumericError("non-finite target value at multi-index " + format_index(index));
        values[j] = v;
      }
    }, 16);
  };
}

GridFunction density_on_grid(const TargetDensity& target, const Grid& grid, double log_offset) {
  if (target.dimension() != grid.dimension())
    throw DomainError("grid dimension differs from target dimension");
  return point_function_on_grid(grid, [&target, log_offset](std::span<const double> x) {
    double lp = target.log_density(x);
    if (std::isnan(lp)) return lp;
    return std::exp(lp - log_offset);
  });
}

double grid_mode_search(const TargetDensity& target, const Grid& grid, MultiIndex& index,
                        std::size_t passes) {
  const std::size_t d = grid.dimension();
  if (index.size() != d) throw DomainError("start index has wrong width");
  std::vector<double> x = grid.point(index);
  double best = target.log_density(x);
  if (std::isnan(best)) best = -std::numeric_limits<double>::infinity();
  for (std::size_t pass = 0; pass < passes; ++pass) {
    bool moved = false;
    for (std::size_t k = 0; k < d; ++k) {
      const auto& nodes = grid.nodes(k);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i == index[k]) continue;
        double keep = x[k];
        x[k] = nodes[i];
        double lp = target.log_density(x);
        if (lp > best) {
          best = lp;
          index[k] = i;
          moved = true;
        } else {
          x[k] = keep;
        }
      }
    }
    if (!moved) break;
  }
  return best;
}

void IndexSet::push_back(std::span<const std::size_t> t) {
  if (t.size() != width_) throw DomainError("index tuple has wrong width");
  data_.insert(data_.end(), t.begin(), t.end());
  ++count_;
}

bool IndexSet::contains(std::span<const std::size_t> t) const {
  for (std::size_t i = 0; i < count_; ++i)
    if (std::equal(t.begin(), t.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * width_)))
      return true;
  return false;
}

Matrix evaluate_unfolding(const GridFunction& f, const Grid& grid, const IndexSet& left,
                          std::size_t k, const IndexSet& right) {
  const std::size_t d = grid.dimension();
  if (left.width() != k || right.width() != d - k - 1)
    throw DomainError("index sets do not match dimension " + std::to_string(k));
  const std::size_t r = left.size(), n = grid.size(k), c = right.size();
  std::vector<std::size_t> indices(r * n * c * d);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < c; ++b)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < r; ++a) {
        auto l = left.tuple(a);
        auto rt = right.tuple(b);
        std::copy(l.begin(), l.end(), indices.begin() + static_cast<std::ptrdiff_t>(pos));
        indices[pos + k] = i;
        std::copy(rt.begin(), rt.end(), indices.begin() + static_cast<std::ptrdiff_t>(pos + k + 1));
        pos += d;
      }
  Matrix m(static_cast<Eigen::Index>(r * n), static_cast<Eigen::Index>(c));
  f(indices, std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
  return m;
}

IndexSet enrich_indices(const IndexSet& set, std::span<const std::size_t> sizes, std::size_t rho,
                        std::mt19937_64& rng) {
  if (sizes.size() != set.width()) throw DomainError("enrichment sizes do not match tuple width");
  IndexSet out = set;
  if (rho == 0) return out;
  // Capacity n^{width}, saturated.
  std::size_t capacity = 1;
  for (std::size_t n : sizes) {
    if (capacity > std::numeric_limits<std::size_t>::max() / std::max<std::size_t>(n, 1)) {
      capacity = std::numeric_limits<std::size_t>::max();
      break;
    }
    capacity *= n;
  }
  std::set<std::vector<std::size_t>> seen;
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto t = set.tuple(i);
    seen.emplace(t.begin(), t.end());
  }
  std::size_t available = capacity - std::min(capacity, seen.size());
  if (rho > available) {
    warn("only " + std::to_string(available) + " unused index tuples available, requested " +
         std::to_string(rho));
    rho = available;
  }
  if (rho == 0) return out;
  if (capacity <= 4 * (seen.size() + rho)) {
    // Small space: enumerate the unused tuples and draw without replacement.
    std::vector<std::vector<std::size_t>> unused;
    std::vector<std::size_t> t(sizes.size(), 0);
    for (std::size_t c = 0; c < capacity; ++c) {
      if (!seen.count(t)) unused.push_back(t);
      for (std::size_t j = 0; j < t.size(); ++j) {
        if (++t[j] < sizes[j]) break;
        t[j] = 0;
      }
    }
    for (std::size_t j = 0; j < rho; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, unused.size() - 1);
      std::swap(unused[j], unused[pick(rng)]);
      out.push_back(unused[j]);
    }
    return out;
  }
  std::vector<std::size_t> t(sizes.size());
  while (rho > 0) {
    for (std::size_t j = 0; j < t.size(); ++j)
      t[j] = std::uniform_int_distribution<std::size_t>(0, sizes[j] - 1)(rng);
    if (seen.insert(t).second) {
      out.push_back(t);
      --rho;
    }
  }
  return out;
}

namespace {

class BudgetExhausted {};

struct CrossState {
  const GridFunction& f;
  const Grid& grid;
  const CrossConfig& config;
  std::size_t d;
  std::size_t evaluations = 0;
  std::mt19937_64 rng;

  Matrix unfolding(const IndexSet& left, std::size_t k, const IndexSet& right) {
    std::size_t need = left.size() * grid.size(k) * right.size();
    if (config.max_evaluations > 0 && evaluations + need > config.max_evaluations)
      throw BudgetExhausted{};
    evaluations += need;
    return evaluate_unfolding(f, grid, left, k, right);
  }

  std::vector<std::size_t> sizes(std::size_t begin, std::size_t end) const {
    std::vector<std::size_t> s;
    for (std::size_t k = begin; k < end; ++k) s.push_back(grid.size(k));
    return s;
  }

  double truncation() const { return config.truncation > 0.0 ? config.truncation : config.delta; }

  // Leading left singular vectors of a, truncated by the configured rule.
  Matrix truncated_basis(const Matrix& a, std::size_t fixed_rank) const {
    auto svd = detail::thin_svd(a, false);
    const Vector& s = svd.s;
    Eigen::Index keep = s.size();
    if (config.mode == RankMode::grow) {
      double threshold =
          truncation() * s.norm() / std::sqrt(static_cast<double>(std::max<std::size_t>(d - 1, 1)));
      double tail = 0.0;
      while (keep > 1) {
        double t = tail + s(keep - 1) * s(keep - 1);
        if (std::sqrt(t) > threshold) break;
        tail = t;
        --keep;
      }
    } else {
      // Directions with negligible singular values are kept: a rank lost to an
      // unlucky sample could not be recovered in later sweeps.
      keep = std::min<Eigen::Index>(keep, static_cast<Eigen::Index>(fixed_rank));
    }
    if (config.max_rank > 0) keep = std::min<Eigen::Index>(keep, static_cast<Eigen::Index>(config.max_rank));
    keep = std::max<Eigen::Index>(keep, 1);
    if (s.size() == 0 || s(0) == 0.0) {
      // Identically zero unfolding: any single row interpolates it.
      Matrix u = Matrix::Zero(a.rows(), 1);
      u(0, 0) = 1.0;
      return u;
    }
    return svd.u.leftCols(keep);
  }
};

std::vector<double> to_block(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

CrossResult cross_approximate(const GridFunction& f, const Grid& grid, const CrossConfig& config) {
  const std::size_t d = grid.dimension();
  if (!(config.delta > 0.0)) throw ConfigError("cross tolerance delta must be positive");
  if (!(config.truncation >= 0.0)) throw ConfigError("cross truncation tolerance must be non-negative");
  if (config.iter_max < 1) throw ConfigError("cross iter_max must be at least 1");
  if (!config.initial_ranks.empty() && config.initial_ranks.size() != d + 1)
    throw ConfigError("initial_ranks must have d + 1 entries");

  CrossState st{f, grid, config, d, 0, std::mt19937_64(config.seed)};
  CrossResult result;
  std::vector<std::size_t> fixed_ranks(d + 1, config.initial_rank);
  if (!config.initial_ranks.empty()) fixed_ranks = config.initial_ranks;
  fixed_ranks.front() = fixed_ranks.back() = 1;

  CrossIndexSets sets;
  sets.left.resize(d);
  sets.right.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    sets.left[k] = IndexSet(k);
    sets.right[k] = IndexSet(d - k - 1);
  }
  sets.left[0].push_back({});
  sets.right[d - 1].push_back({});
  for (std::size_t k = 0; k + 1 < d; ++k) {
    IndexSet& r = sets.right[k];
    for (const auto& p : config.initial_points) {
      if (p.size() != d) throw ConfigError("initial point has wrong dimension");
      std::span<const std::size_t> suffix(p.data() + k + 1, d - k - 1);
      for (std::size_t j = 0; j < suffix.size(); ++j)
        if (suffix[j] >= grid.size(k + 1 + j)) throw ConfigError("initial point outside grid");
      if (!r.contains(suffix)) r.push_back(suffix);
    }
    std::size_t want = fixed_ranks[k + 1];
    if (r.size() < want) r = enrich_indices(r, st.sizes(k + 1, d), want - r.size(), st.rng);
  }

  std::optional<TTTensor> complete;
  std::optional<TTTensor> previous;

  try {
    for (std::size_t iter = 1; iter <= config.iter_max; ++iter) {
      // Forward sweep.
      std::vector<std::vector<double>> blocks(d);
      std::vector<std::size_t> ranks(d + 1, 1);
      for (std::size_t k = 0; k < d; ++k) {
        ranks[k] = sets.left[k].size();
        if (k + 1 == d) {
          blocks[k] = to_block(st.unfolding(sets.left[k], k, sets.right[k]));
          break;
        }
        IndexSet cols = sets.right[k];
        if (config.mode == RankMode::grow)
          cols = enrich_indices(cols, st.sizes(k + 1, d), config.rho, st.rng);
        Matrix a = st.unfolding(sets.left[k], k, cols);
        Matrix u = st.truncated_basis(a, fixed_ranks[k + 1]);
        auto rows = maxvol(u, config.maxvol);
        Matrix sub(u.cols(), u.cols());
        for (Eigen::Index j = 0; j < u.cols(); ++j)
          sub.row(j) = u.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(j)]));
        Matrix block = sub.transpose().partialPivLu().solve(u.transpose()).transpose();
        blocks[k] = to_block(block);
        IndexSet next(k + 1);
        std::vector<std::size_t> t(k + 1);
        for (std::size_t row : rows) {
          std::size_t a_idx = row % ranks[k], i = row / ranks[k];
          auto l = sets.left[k].tuple(a_idx);
          std::copy(l.begin(), l.end(), t.begin());
          t[k] = i;
          next.push_back(t);
        }
        sets.left[k + 1] = std::move(next);
      }
      for (std::size_t k = 1; k < d; ++k) ranks[k] = sets.left[k].size();
      complete = TTTensor(grid, ranks, std::move(blocks));
      result.sweeps.push_back({iter, true, complete->max_rank(), st.evaluations,
                               std::numeric_limits<double>::quiet_NaN()});

      // Backward sweep.
      blocks.assign(d, {});
      ranks.assign(d + 1, 1);
      for (std::size_t k = d; k-- > 0;) {
        ranks[k + 1] = sets.right[k].size();
        if (k == 0) {
          blocks[0] = to_block(st.unfolding(sets.left[0], 0, sets.right[0]));
          break;
        }
        IndexSet rows_set = sets.left[k];
        if (config.mode == RankMode::grow)
          rows_set = enrich_indices(rows_set, st.sizes(0, k), config.rho, st.rng);
        Matrix a = st.unfolding(rows_set, k, sets.right[k]);
        const std::size_t n = grid.size(k), c = sets.right[k].size();
        Matrix right = Eigen::Map<const Matrix>(a.data(), static_cast<Eigen::Index>(rows_set.size()),
                                                static_cast<Eigen::Index>(n * c));
        Matrix v = st.truncated_basis(right.transpose(), fixed_ranks[k]);
        auto cols = maxvol(v, config.maxvol);
        Matrix sub(v.cols(), v.cols());
        for (Eigen::Index j = 0; j < v.cols(); ++j)
          sub.row(j) = v.row(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(j)]));
        Matrix block_t = sub.transpose().partialPivLu().solve(v.transpose()).transpose();
        Matrix block = block_t.transpose();
        blocks[k] = to_block(block);
        IndexSet next(d - k);
        std::vector<std::size_t> t(d - k);
        for (std::size_t col : cols) {
          std::size_t i = col % n, b = col / n;
          auto rt = sets.right[k].tuple(b);
          t[0] = i;
          std::copy(rt.begin(), rt.end(), t.begin() + 1);
          next.push_back(t);
        }
        sets.right[k - 1] = std::move(next);
      }
      for (std::size_t k = 0; k + 1 < d; ++k) ranks[k + 1] = sets.right[k].size();
      complete = TTTensor(grid, ranks, std::move(blocks));
      double change = std::numeric_limits<double>::quiet_NaN();
      if (previous) {
        double norm = frobenius_norm(*complete);
        change = norm > 0.0 ? frobenius_distance(*complete, *previous) / norm
                            : frobenius_norm(*previous);
      }
      result.sweeps.push_back({iter, false, complete->max_rank(), st.evaluations, change});
      previous = complete;
      if (d == 1 || (std::isfinite(change) && change <= config.delta)) {
        result.converged = true;
        break;
      }
    }
  } catch (const BudgetExhausted&) {
    if (!complete) throw NumericError("evaluation budget exhausted before the first sweep completed");
    warn("cross evaluation budget exhausted after " + std::to_string(st.evaluations) +
         " evaluations; returning the last complete sweep");
  }

  result.tt = std::move(*complete);
  result.index_sets = std::move(sets);
  result.evaluations = st.evaluations;
  return result;
}

std::vector<MultiIndex> seed_points(const TargetDensity& target, const Grid& grid,
                                    const Matrix& reference, double& log_shift) {
  if (static_cast<std::size_t>(reference.cols()) != grid.dimension())
    throw DomainError("reference points have wrong dimension");
  Vector lp = evaluate_batch(target, reference);
  std::vector<MultiIndex> out;
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < reference.rows(); ++i) {
    MultiIndex idx(grid.dimension());
    for (std::size_t k = 0; k < grid.dimension(); ++k) {
      double x = std::clamp(reference(i, static_cast<Eigen::Index>(k)), grid.lower(k), grid.upper(k));
      auto [cell, t] = grid.locate(k, x);
      idx[k] = t < 0.5 ? cell : cell + 1;
    }
    out.push_back(std::move(idx));
    if (std::isfinite(lp(i)) && (best < 0 || lp(i) > lp(best))) best = i;
  }
  if (best < 0) throw NumericError("target log density is not finite at any reference point");
  MultiIndex mode = out[static_cast<std::size_t>(best)];
  log_shift = std::max(lp(best), grid_mode_search(target, grid, mode));
  out.push_back(std::move(mode));
  return out;
}

CrossResult cross_approximate_density(const TargetDensity& target, const Grid& grid,
                                      const CrossConfig& config, double& log_shift,
                                      double overflow_margin) {
  if (target.dimension() != grid.dimension())
    throw DomainError("grid dimension differs from target dimension");
  std::size_t abandoned = 0;
  for (int attempt = 0;; ++attempt) {
    std::atomic<double> seen(-std::numeric_limits<double>::infinity());
    std::atomic<std::size_t> calls(0);
    const double shift = log_shift;
    auto f = point_function_on_grid(grid, [&](std::span<const double> x) {
      ++calls;
      double lp = target.log_density(x);
      if (std::isnan(lp)) return lp;
      double cur = seen.load();
      while (lp > cur && !seen.compare_exchange_weak(cur, lp)) {
      }
      if (lp - shift > overflow_margin) return std::numeric_limits<double>::quiet_NaN();
      return std::exp(lp - shift);
    });
    try {
      CrossResult r = cross_approximate(f, grid, config);
      r.evaluations += abandoned;
      return r;
    } catch (const NumericError&) {
      if (!(seen.load() - shift > overflow_margin) || attempt >= 8) throw;
      abandoned += calls.load();
      log_shift = seen.load();
      warn("raising density shift to " + std::to_string(log_shift) + " and restarting cross");
    }
  }
}

void write_cross_csv(std::ostream& out, const CrossResult& result) {
  out << "iteration,direction,max_rank,evaluations,relative_change\n";
  for (const auto& s : result.sweeps) {
    out << s.iteration << ',' << (s.forward ? "forward" : "backward") << ',' << s.max_rank << ','
        << s.evaluations << ',';
    if (std::isfinite(s.relative_change)) out << s.relative_change;
    out << '\n';
  }
}

}  // namespace ttpdf
