#ifndef ISVRG_OPTIMIZER_HPP
#define ISVRG_OPTIMIZER_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "isvrg/core.hpp"
#include "isvrg/estimators.hpp"
#include "isvrg/rng.hpp"
#include "isvrg/schedules.hpp"

namespace isvrg {

enum class OutputPolicy { LastSnapshot, BestSnapshotByGradNorm, UniformRandomSnapshot };

/// Auto skips the epoch full gradient when no branch of the estimator reads it.
enum class SnapshotGradient { Auto, Always };

/// Weights p_0..p_m of the epoch-end average; empty means p_m = 1.
struct SnapshotWeights {
  std::vector<double> p;

  static SnapshotWeights last_iterate() { return {}; }
  static SnapshotWeights explicit_weights(std::vector<double> p) { return {std::move(p)}; }
  bool is_last_iterate() const { return p.empty(); }
};

/// One row per completed epoch, evaluated at the epoch's snapshot.
struct TraceRecord {
  Index epoch = 0;              // s, 1-based
  std::uint64_t cum_ifo = 0;    // optimization IFO so far
  double objective = 0.0;       // f(x~^s)
  double grad_sq = 0.0;         // ||grad f(x~^s)||^2
  double step_size = 0.0;       // eta of the last inner step
  Branch branch = Branch::Fixed;
  double second_moment = 0.0;   // mean ||v||^2 over the epoch's inner steps

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

template <typename Scalar>
struct RunConfig {
  EstimatorSpec estimator;
  StepSchedule schedule;
  Index epochs = 1;        // S
  Index inner_length = 1;  // m
  SnapshotWeights snapshot_weights;
  std::uint64_t seed = 0;
  ParamVector<Scalar> x0;
  double epsilon = 0.0;  // stop once grad_sq <= epsilon; 0 disables
  std::optional<std::uint64_t> ifo_budget;
  OutputPolicy output_policy = OutputPolicy::LastSnapshot;
  SnapshotGradient snapshot_gradient = SnapshotGradient::Auto;

  void validate(Index dim) const {
    estimator.validate();
    schedule.validate();
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (inner_length < 1) throw ConfigError("inner_length must be positive");
    if (x0.size() != dim)
      throw ConfigError("x0 has dimension " + std::to_string(x0.size()) + ", problem has " +
                        std::to_string(dim));
    if (!x0.allFinite()) throw ConfigError("x0 has a non-finite coordinate");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
    if (ifo_budget && *ifo_budget == 0) throw ConfigError("ifo_budget must be positive");
    if (!snapshot_weights.is_last_iterate()) {
      const auto& p = snapshot_weights.p;
      if (static_cast<Index>(p.size()) != inner_length + 1)
        throw ConfigError("snapshot weights need m + 1 entries");
      double sum = 0.0;
      for (double w : p) {
        if (!(w >= 0.0) || !std::isfinite(w))
          throw ConfigError("snapshot weights must be non-negative");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("snapshot weights must sum to 1");
    }
  }
};

template <typename Scalar>
struct RunResult {
  ParamVector<Scalar> x;
  std::vector<TraceRecord> trace;
  IfoLedger ledger;
  bool truncated = false;  // stopped by the IFO budget
  bool converged = false;  // stopped by epsilon
  Index output_epoch = 0;  // epoch of the returned snapshot
};

/// Thrown when an iterate or oracle value becomes non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<TraceRecord> trace, std::uint64_t delta)
      : Error(what), trace_(std::move(trace)), delta_(delta) {}
  const std::vector<TraceRecord>& trace() const { return trace_; }
  std::uint64_t delta() const { return delta_; }

 private:
  std::vector<TraceRecord> trace_;
  std::uint64_t delta_;
};

/// What the optimizer is about to do at one inner step.
struct InnerStep {
  std::uint64_t delta;  // global inner step, 0-based
  Index epoch;          // s, 1-based
  Index t;              // 0-based within the epoch
  Index component;      // sampled i_t, 0-based
  double eta;
  Branch branch;
};

template <typename Scalar>
using StepObserver = std::function<void(const InnerStep&, const ParamVector<Scalar>& x)>;

/// Picks the returned snapshot. `trace[k]` describes `snapshots[k]`.
template <typename Scalar>
Index select_output_index(std::span<const TraceRecord> trace, OutputPolicy policy,
                          CounterRng& rng) {
  if (trace.empty()) throw ContractError("select_output needs at least one snapshot");
  switch (policy) {
    case OutputPolicy::LastSnapshot:
      return static_cast<Index>(trace.size()) - 1;
    case OutputPolicy::BestSnapshotByGradNorm: {
      Index best = 0;
      for (Index k = 1; k < static_cast<Index>(trace.size()); ++k)
        if (trace[k].grad_sq < trace[best].grad_sq) best = k;
      return best;
    }
    case OutputPolicy::UniformRandomSnapshot:
      return static_cast<Index>(rng.index(trace.size()));
  }
  throw ContractError("select_output: unknown policy");
}

template <typename Scalar>
ParamVector<Scalar> select_output(std::span<const TraceRecord> trace,
                                  std::span<const ParamVector<Scalar>> snapshots,
                                  OutputPolicy policy, CounterRng& rng) {
  if (snapshots.size() != trace.size())
    throw ContractError("select_output: one snapshot per trace record required");
  return snapshots[static_cast<std::size_t>(select_output_index<Scalar>(trace, policy, rng))];
}

/// Runs S epochs of the variance-reduced loop.
///
/// Each epoch takes the full gradient at the snapshot (n optimization IFO,
/// skipped when the estimator never reads it), then m inner steps that each
/// fetch only the component gradients with a non-zero weight. The index
/// stream is counter-based on the global step, so skipping an oracle never
/// shifts the sampled indices.
template <typename Scalar>
RunResult<Scalar> run(const FiniteSumProblem<Scalar>& problem, const RunConfig<Scalar>& config,
                      const StepObserver<Scalar>& observer = {}) {
  using Vec = ParamVector<Scalar>;
  const Index n = problem.size();
  const Index d = problem.dim();
  config.validate(d);

  RunResult<Scalar> result;
  IfoLedger& ledger = result.ledger;
  const bool keep_history = !config.snapshot_weights.is_last_iterate();
  const bool keep_snapshots = config.output_policy != OutputPolicy::LastSnapshot;
  const bool needs_full = reads_full_gradient(config.estimator) ||
                          config.snapshot_gradient == SnapshotGradient::Always;
  const std::uint64_t budget =
      config.ifo_budget.value_or(std::numeric_limits<std::uint64_t>::max());
  const auto affordable = [&](std::uint64_t cost) {
    return ledger.optimization <= budget && cost <= budget - ledger.optimization;
  };

  CounterRng sampler(config.seed);
  Vec x = config.x0;
  Vec snapshot = config.x0;
  Vec g_s = Vec::Zero(d), g_ix = Vec::Zero(d), g_is = Vec::Zero(d), average(d);
  std::vector<Vec> snapshots;
  std::uint64_t delta = 0;

  try {
    for (Index s = 1; s <= config.epochs; ++s) {
      const std::uint64_t ifo_at_start = ledger.optimization;
      if (needs_full) {
        if (!affordable(static_cast<std::uint64_t>(n))) {
          result.truncated = true;
          break;
        }
        g_s = full_gradient(problem, snapshot, ledger, IfoChannel::Optimization);
      }
      if (keep_history) average = config.snapshot_weights.p[0] * x;

      double sum_sq = 0.0;
      Index steps = 0;
      Step last{0.0, Branch::Fixed};
      for (Index t = 0; t < config.inner_length; ++t, ++delta) {
        const auto i = static_cast<Index>(sampler.index(static_cast<std::uint64_t>(n)));
        const Step step = step_at(config.schedule, delta, static_cast<std::uint64_t>(t + 1),
                                  static_cast<std::uint64_t>(s));
        const DirectionWeights w = direction_weights(config.estimator, step.branch);
        const std::uint64_t cost = (w.current != 0.0) + (w.snapshot != 0.0);
        if (!affordable(cost)) {
          result.truncated = true;
          break;
        }
        if (observer) observer(InnerStep{delta, s, t, i, step.eta, step.branch}, x);
        if (w.current != 0.0) problem.gradient(i, x, g_ix); else g_ix.setZero();
        if (w.snapshot != 0.0) problem.gradient(i, snapshot, g_is); else g_is.setZero();
        ledger.charge(IfoChannel::Optimization, cost);

        const Vec v = direction(config.estimator, step.branch, g_ix, g_is, g_s);
        x.noalias() -= static_cast<Scalar>(step.eta) * v;
        if (!x.allFinite()) {
          throw DivergenceError("iterate became non-finite at inner step " +
                                    std::to_string(delta),
                                result.trace, delta);
        }
        sum_sq += static_cast<double>(v.squaredNorm());
        ++steps;
        last = step;
        if (keep_history) average += config.snapshot_weights.p[static_cast<std::size_t>(t + 1)] * x;
      }

      if (ledger.optimization == ifo_at_start) break;  // nothing was spent this epoch
      // A truncated epoch has no complete weight sequence; it ends at its last iterate.
      snapshot = (keep_history && !result.truncated) ? average : x;

      TraceRecord rec;
      rec.epoch = s;
      rec.cum_ifo = ledger.optimization;
      rec.objective = static_cast<double>(objective(problem, snapshot, ledger));
      rec.grad_sq = static_cast<double>(grad_sq_norm(problem, snapshot, ledger));
      rec.step_size = last.eta;
      rec.branch = last.branch;
      rec.second_moment = steps > 0 ? sum_sq / static_cast<double>(steps) : 0.0;
      result.trace.push_back(rec);
      if (keep_snapshots) snapshots.push_back(snapshot);

      if (config.epsilon > 0.0 && rec.grad_sq <= config.epsilon) {
        result.converged = true;
        break;
      }
      if (result.truncated) break;
    }
  } catch (const NumericError& e) {
    throw DivergenceError(e.what(), result.trace, delta);
  }

  if (result.trace.empty()) {
    result.x = snapshot;
    return result;
  }
  CounterRng output_rng = CounterRng(config.seed).substream(1);
  const Index k = select_output_index<Scalar>(result.trace, config.output_policy, output_rng);
  result.output_epoch = result.trace[static_cast<std::size_t>(k)].epoch;
  result.x = keep_snapshots ? snapshots[static_cast<std::size_t>(k)] : snapshot;
  return result;
}

enum class InnerLengthVariant { Svrg, Unbiased, Biased, IsvrgPlus };

/// Epoch length prescribed for each variant (floored, at least 1).
///   Svrg       9 n^(alpha/2) / 5
///   Unbiased   3 n^((3a+b) alpha) / (1 - lambda)
///   Biased     3 n^(2 a alpha) / (2 (1 - lambda))
///   IsvrgPlus  n^((3a+b) alpha)
Index default_inner_length(InnerLengthVariant variant, Index n, double a, double b, double alpha,
                           double lambda = 0.0);

}  // namespace isvrg

#endif  // ISVRG_OPTIMIZER_HPP
