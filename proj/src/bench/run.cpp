#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "isvrg/bench.hpp"

namespace isvrg::bench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

StepSchedule make_schedule(const OptimizerEntry& e, double lipschitz, Index n, Index m) {
  StepSchedule s;
  s.kind = e.schedule;
  s.lipschitz = e.lipschitz.value_or(lipschitz);
  s.n = n;
  s.a = e.a;
  s.b = e.b;
  s.alpha = e.alpha;
  s.inner_length = m;
  const TunedScalar scalar = e.tuned_scalar();
  if (scalar == TunedScalar::C) {
    if (!e.c) throw ConfigError("optimizer '" + e.name + "' has no value for c");
    s.c = *e.c;
  } else if (scalar == TunedScalar::Eta0) {
    if (!e.eta0) throw ConfigError("optimizer '" + e.name + "' has no value for eta0");
    s.eta0 = *e.eta0;
  }
  s.validate();
  return s;
}

// cheapest possible epoch, used to turn an IFO cap into an epoch count
std::uint64_t min_epoch_cost(const EstimatorSpec& spec, bool full, Index n, Index m) {
  std::uint64_t per_step = 2;
  for (Branch b : {Branch::Decayed, Branch::Fixed}) {
    const DirectionWeights w = direction_weights(spec, b);
    per_step = std::min<std::uint64_t>(per_step, (w.current != 0.0) + (w.snapshot != 0.0));
  }
  return (full ? static_cast<std::uint64_t>(n) : 0) + per_step * static_cast<std::uint64_t>(m);
}

struct Envelope {
  double median = kNaN, min = kNaN, max = kNaN;
};

Envelope envelope(const std::vector<double>& values) {
  Envelope out;
  out.median = median(values);
  for (double v : values) {
    if (std::isnan(v)) continue;
    out.min = std::isnan(out.min) ? v : std::min(out.min, v);
    out.max = std::isnan(out.max) ? v : std::max(out.max, v);
  }
  return out;
}

std::uint64_t tuning_seed(const Experiment& exp, const OptimizerEntry& entry) {
  if (entry.tune_seed) return *entry.tune_seed;
  return *std::max_element(exp.config.seeds.begin(), exp.config.seeds.end()) + 1;
}

}  // namespace

RunConfig<double> make_run_config(const Experiment& exp, const OptimizerEntry& entry,
                                  std::uint64_t seed) {
  const Index n = exp.problem->size();
  RunConfig<double> rc;
  rc.estimator = entry.estimator;
  rc.inner_length = entry.inner_length.value_or(default_inner_length(
      InnerLengthVariant::IsvrgPlus, n, entry.a, entry.b, entry.alpha));
  rc.schedule = make_schedule(entry, exp.lipschitz, n, rc.inner_length);
  rc.seed = seed;
  rc.x0 = exp.x0;
  rc.output_policy = entry.output_policy;
  rc.snapshot_gradient = entry.snapshot_gradient;

  const Budget& budget = exp.config.budget;
  rc.epsilon = budget.epsilon;
  rc.ifo_budget = budget.ifo_cap(n);
  if (budget.epochs) {
    rc.epochs = *budget.epochs;
  } else {
    const bool full = reads_full_gradient(rc.estimator) ||
                      rc.snapshot_gradient == SnapshotGradient::Always;
    const std::uint64_t cost = min_epoch_cost(rc.estimator, full, n, rc.inner_length);
    if (cost == 0) throw ConfigError("optimizer '" + entry.name + "' spends no IFO per epoch");
    rc.epochs = static_cast<Index>((*rc.ifo_budget + cost - 1) / cost) + 1;
  }
  return rc;
}

double CellResult::final_grad_sq() const {
  if (diverged || trace.empty()) return kInf;
  return trace.back().grad_sq;
}

CellResult run_cell(const Experiment& exp, const OptimizerEntry& entry, std::uint64_t seed) {
  CellResult cell;
  cell.optimizer = entry.name;
  cell.seed = seed;
  const RunConfig<double> rc = make_run_config(exp, entry, seed);
  try {
    RunResult<double> r = run(*exp.problem, rc);
    cell.trace = std::move(r.trace);
    cell.ledger = r.ledger;
    cell.truncated = r.truncated;
  } catch (const DivergenceError& e) {
    cell.trace = e.trace();
    cell.diverged = true;
    cell.error = e.what();
  }
  return cell;
}

TuningResult tune(const Experiment& exp, OptimizerEntry& entry, int workers) {
  TuningResult out;
  out.optimizer = entry.name;
  out.scalar = entry.tuned_scalar();
  out.seed = tuning_seed(exp, entry);
  if (!entry.wants_tuning()) {
    out.chosen = entry.tuned_value();
    return out;
  }
  const std::vector<double> grid = entry.grid();
  for (double v : grid)
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError("tune_grid values must be positive");
  std::vector<double> scores(grid.size(), kInf);
  parallel_for(grid.size(), workers, [&](std::size_t k) {
    OptimizerEntry trial = entry;
    trial.set_tuned(grid[k]);
    scores[k] = run_cell(exp, trial, out.seed).final_grad_sq();
  });
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.scores.emplace_back(grid[k], scores[k]);
    if (scores[k] < scores[best]) best = k;
  }
  out.chosen = grid[best];
  entry.set_tuned(grid[best]);
  return out;
}

const FinalRow& CompareResult::final_row(std::string_view optimizer) const {
  for (const auto& row : finals)
    if (row.optimizer == optimizer) return row;
  throw ContractError("no final row for '" + std::string(optimizer) + "'");
}

CompareResult compare(const Experiment& exp, int workers) {
  CompareResult out;
  out.resolved = exp.config.optimizers;
  for (auto& entry : out.resolved) out.tuning.push_back(tune(exp, entry, workers));

  const auto& seeds = exp.config.seeds;
  const std::size_t cells = out.resolved.size() * seeds.size();
  out.cells.resize(cells);
  parallel_for(cells, workers, [&](std::size_t k) {
    out.cells[k] = run_cell(exp, out.resolved[k / seeds.size()], seeds[k % seeds.size()]);
  });

  // single-threaded reduction
  const Index n = exp.problem->size();
  std::uint64_t limit = 0;
  if (auto cap = exp.config.budget.ifo_cap(n)) {
    limit = *cap;
  } else {
    for (const auto& c : out.cells)
      if (!c.trace.empty()) limit = std::max(limit, c.trace.back().cum_ifo);
  }
  const std::vector<std::uint64_t> grid = checkpoint_grid(limit, n);

  for (std::size_t o = 0; o < out.resolved.size(); ++o) {
    const auto first = out.cells.begin() + static_cast<std::ptrdiff_t>(o * seeds.size());
    const auto last = first + static_cast<std::ptrdiff_t>(seeds.size());
    for (std::uint64_t ifo : grid) {
      std::vector<double> values;
      for (auto it = first; it != last; ++it)
        values.push_back(grad_sq_at(it->trace, it->diverged, ifo));
      const Envelope env = envelope(values);
      if (std::isnan(env.median)) continue;
      out.summary.push_back({out.resolved[o].name, ifo, env.median, env.min, env.max});
    }
    std::vector<double> finals;
    int diverged = 0;
    for (auto it = first; it != last; ++it) {
      finals.push_back(it->final_grad_sq());
      diverged += it->diverged ? 1 : 0;
    }
    const Envelope env = envelope(finals);
    out.finals.push_back({out.resolved[o].name, out.resolved[o].tuned_value(), env.median, env.min,
                          env.max, diverged, static_cast<int>(seeds.size())});
  }
  return out;
}

std::vector<SweepRow> sweep_lambda(const Experiment& exp, const OptimizerEntry& entry,
                                   std::span<const double> lambdas, LambdaField field,
                                   int workers) {
  if (lambdas.empty()) throw ConfigError("sweep needs at least one lambda");
  OptimizerEntry base = entry;
  tune(exp, base, workers);

  std::vector<OptimizerEntry> trials;
  for (double l : lambdas) {
    OptimizerEntry t = base;
    switch (field) {
      case LambdaField::Lambda: t.estimator.lambda = l; break;
      case LambdaField::LambdaBiased: t.estimator.lambda_biased = l; break;
      case LambdaField::LambdaUnbiased: t.estimator.lambda_unbiased = l; break;
    }
    t.estimator.validate();
    trials.push_back(std::move(t));
  }

  const auto& seeds = exp.config.seeds;
  std::vector<double> finals(trials.size() * seeds.size(), kInf);
  std::vector<char> diverged(finals.size(), 0);
  parallel_for(finals.size(), workers, [&](std::size_t k) {
    const CellResult c = run_cell(exp, trials[k / seeds.size()], seeds[k % seeds.size()]);
    finals[k] = c.final_grad_sq();
    diverged[k] = c.diverged ? 1 : 0;
  });

  std::vector<SweepRow> rows;
  for (std::size_t l = 0; l < trials.size(); ++l) {
    const auto lo = static_cast<std::ptrdiff_t>(l * seeds.size());
    const auto hi = lo + static_cast<std::ptrdiff_t>(seeds.size());
    const Envelope env = envelope(std::vector<double>(finals.begin() + lo, finals.begin() + hi));
    const int div = static_cast<int>(std::count(diverged.begin() + lo, diverged.begin() + hi, 1));
    rows.push_back({lambdas[l], env.median, env.min, env.max, div});
  }
  return rows;
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size() / 2;
  if (values.size() % 2 == 1) return values[k];
  const double lo = values[k - 1], hi = values[k];
  if (std::isinf(lo) || std::isinf(hi)) return std::isinf(lo) ? lo : hi;
  return 0.5 * (lo + hi);
}

double grad_sq_at(const std::vector<TraceRecord>& trace, bool diverged, std::uint64_t ifo) {
  if (trace.empty()) return diverged ? kInf : kNaN;
  if (ifo < trace.front().cum_ifo) return kNaN;
  if (ifo >= trace.back().cum_ifo) {
    if (diverged) return kInf;
    return trace.back().grad_sq;
  }
  auto hi = std::upper_bound(trace.begin(), trace.end(), ifo,
                             [](std::uint64_t v, const TraceRecord& r) { return v < r.cum_ifo; });
  auto lo = hi - 1;
  if (lo->cum_ifo == ifo) return lo->grad_sq;
  const double w = static_cast<double>(ifo - lo->cum_ifo) /
                   static_cast<double>(hi->cum_ifo - lo->cum_ifo);
  return lo->grad_sq + w * (hi->grad_sq - lo->grad_sq);
}

std::vector<std::uint64_t> checkpoint_grid(std::uint64_t limit, Index n) {
  std::uint64_t step = static_cast<std::uint64_t>(std::max<Index>(n, 1));
  if (limit / step > 500) step = (limit + 499) / 500;
  std::vector<std::uint64_t> grid;
  for (std::uint64_t v = step; v <= limit; v += step) grid.push_back(v);
  if (grid.empty() || grid.back() != limit) {
    if (limit > 0) grid.push_back(limit);
  }
  return grid;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int resolve_workers(int requested) {
  if (const char* env = std::getenv("ISVRG_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace isvrg::bench
