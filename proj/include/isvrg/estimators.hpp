#ifndef ISVRG_ESTIMATORS_HPP
#define ISVRG_ESTIMATORS_HPP

#include <string_view>

#include "isvrg/core.hpp"

namespace isvrg {

enum class EstimatorKind { PlainSgd, ScaledSvrg, WeightedUnbiased, Biased, HybridSwitch };

/// Which side of the hybrid step-size rule is active.
enum class Branch { Decayed, Fixed };

std::string_view estimator_name(EstimatorKind kind);
EstimatorKind parse_estimator(std::string_view name);
std::string_view branch_name(Branch branch);

/// Inner-loop direction formula and its weights.
///
/// `lambda` weights the batch side against the stochastic side. The hybrid
/// estimator is Biased(lambda_biased) while the step size is on its decayed
/// branch and WeightedUnbiased(lambda_unbiased) once it is fixed.
struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::PlainSgd;
  double lambda = 0.0;
  double lambda_biased = 2.0 / 3.0;
  double lambda_unbiased = 0.01;

  static EstimatorSpec plain_sgd() { return {EstimatorKind::PlainSgd}; }
  static EstimatorSpec scaled_svrg() { return {EstimatorKind::ScaledSvrg}; }
  static EstimatorSpec weighted_unbiased(double lambda) {
    return {EstimatorKind::WeightedUnbiased, lambda};
  }
  static EstimatorSpec biased(double lambda) { return {EstimatorKind::Biased, lambda}; }
  static EstimatorSpec hybrid_switch(double lambda_biased = 2.0 / 3.0,
                                     double lambda_unbiased = 0.01) {
    return {EstimatorKind::HybridSwitch, 0.0, lambda_biased, lambda_unbiased};
  }

  /// The single-formula estimator in effect on `branch`.
  EstimatorSpec resolve(Branch branch) const {
    if (kind != EstimatorKind::HybridSwitch) return *this;
    return branch == Branch::Decayed ? biased(lambda_biased) : weighted_unbiased(lambda_unbiased);
  }

  void validate() const;
};

/// v = current * g_i(x) - snapshot * g_i(x~) + full * g(x~).
///
/// Every estimator is of this form; the optimizer uses the coefficients to
/// decide which oracles a step actually needs.
struct DirectionWeights {
  double current = 0.0;
  double snapshot = 0.0;
  double full = 0.0;
};

DirectionWeights direction_weights(const EstimatorSpec& spec, Branch branch);

/// True when some branch of `spec` reads the snapshot full gradient.
bool reads_full_gradient(const EstimatorSpec& spec);

/// Inner-loop direction from the three gradients.
///
/// PlainSgd: g_ix. ScaledSvrg: (g_ix - g_is + g_s) / 2.
/// WeightedUnbiased: (1-l) g_ix - l (g_is - g_s).
/// Biased: (1-l)(g_ix - g_is) + l g_s. HybridSwitch picks by `branch`.
template <typename D1, typename D2, typename D3>
ParamVector<typename D1::Scalar> direction(const EstimatorSpec& spec, Branch branch,
                                           const Eigen::MatrixBase<D1>& g_ix,
                                           const Eigen::MatrixBase<D2>& g_is,
                                           const Eigen::MatrixBase<D3>& g_s) {
  using Scalar = typename D1::Scalar;
  if (g_ix.size() != g_is.size() || g_ix.size() != g_s.size())
    throw ContractError("direction: gradient dimensions differ");
  const EstimatorSpec active = spec.resolve(branch);
  const auto lambda = static_cast<Scalar>(active.lambda);
  switch (active.kind) {
    case EstimatorKind::PlainSgd:
      return g_ix;
    case EstimatorKind::ScaledSvrg:
      return Scalar(0.5) * (g_ix - g_is + g_s);
    case EstimatorKind::WeightedUnbiased:
      return (Scalar(1) - lambda) * g_ix - lambda * (g_is - g_s);
    case EstimatorKind::Biased:
      return (Scalar(1) - lambda) * (g_ix - g_is) + lambda * g_s;
    case EstimatorKind::HybridSwitch:
      break;
  }
  throw ContractError("direction: unresolved estimator kind");
}

inline constexpr Index kMaxEnumeration = 1'000'000;

namespace detail {

template <typename Scalar>
void require_enumerable(const FiniteSumProblem<Scalar>& problem) {
  if (problem.size() > kMaxEnumeration)
    throw CapacityError("exact expectation needs n <= 1e6, got n = " +
                        std::to_string(problem.size()));
}

// Calls visit(v) for the direction of every component i.
template <typename Scalar, typename Visit>
void for_each_direction(const EstimatorSpec& spec, Branch branch,
                        const FiniteSumProblem<Scalar>& problem,
                        const ParamVector<Scalar>& x, const ParamVector<Scalar>& snapshot,
                        IfoLedger& ledger, Visit&& visit) {
  require_enumerable(problem);
  require_dim(x, problem.dim(), "x");
  require_dim(snapshot, problem.dim(), "snapshot");
  const ParamVector<Scalar> g_s = full_gradient(problem, snapshot, ledger, IfoChannel::Evaluation);
  ledger.charge(IfoChannel::Evaluation, 2 * static_cast<std::uint64_t>(problem.size()));
  ParamVector<Scalar> g_ix(problem.dim()), g_is(problem.dim());
  for (Index i = 0; i < problem.size(); ++i) {
    problem.gradient(i, x, g_ix);
    problem.gradient(i, snapshot, g_is);
    visit(i, direction(spec, branch, g_ix, g_is, g_s));
  }
}

}  // namespace detail

/// E[v] over a uniformly drawn component, by enumeration. Charged to evaluation.
template <typename Scalar>
ParamVector<Scalar> exact_mean(const EstimatorSpec& spec, Branch branch,
                               const FiniteSumProblem<Scalar>& problem,
                               const ParamVector<Scalar>& x,
                               const ParamVector<Scalar>& snapshot, IfoLedger& ledger) {
  std::vector<ParamVector<Scalar>> directions(static_cast<std::size_t>(problem.size()));
  detail::for_each_direction(spec, branch, problem, x, snapshot, ledger,
                             [&](Index i, ParamVector<Scalar> v) {
                               directions[static_cast<std::size_t>(i)] = std::move(v);
                             });
  return pairwise_mean<Scalar>(problem.size(), problem.dim(),
                               [&](Index i, ParamVector<Scalar>& out) {
                                 out = directions[static_cast<std::size_t>(i)];
                               });
}

/// E[v] - grad f(x).
template <typename Scalar>
ParamVector<Scalar> exact_bias(const EstimatorSpec& spec, Branch branch,
                               const FiniteSumProblem<Scalar>& problem,
                               const ParamVector<Scalar>& x,
                               const ParamVector<Scalar>& snapshot, IfoLedger& ledger) {
  return exact_mean(spec, branch, problem, x, snapshot, ledger) -
         full_gradient(problem, x, ledger, IfoChannel::Evaluation);
}

/// E||v||^2 over a uniformly drawn component.
template <typename Scalar>
Scalar exact_second_moment(const EstimatorSpec& spec, Branch branch,
                           const FiniteSumProblem<Scalar>& problem,
                           const ParamVector<Scalar>& x, const ParamVector<Scalar>& snapshot,
                           IfoLedger& ledger) {
  std::vector<Scalar> sq(static_cast<std::size_t>(problem.size()));
  detail::for_each_direction(spec, branch, problem, x, snapshot, ledger,
                             [&](Index i, const ParamVector<Scalar>& v) {
                               sq[static_cast<std::size_t>(i)] = v.squaredNorm();
                             });
  auto term = [&](Index i) { return sq[static_cast<std::size_t>(i)]; };
  return detail::pairwise_sum_scalar<Scalar>(0, problem.size(), term) /
         static_cast<Scalar>(problem.size());
}

// Ledger-free conveniences for analysis code.
template <typename Scalar>
ParamVector<Scalar> exact_mean(const EstimatorSpec& spec, Branch branch,
                               const FiniteSumProblem<Scalar>& problem,
                               const ParamVector<Scalar>& x,
                               const ParamVector<Scalar>& snapshot) {
  IfoLedger scratch;
  return exact_mean(spec, branch, problem, x, snapshot, scratch);
}

template <typename Scalar>
ParamVector<Scalar> exact_bias(const EstimatorSpec& spec, Branch branch,
                               const FiniteSumProblem<Scalar>& problem,
                               const ParamVector<Scalar>& x,
                               const ParamVector<Scalar>& snapshot) {
  IfoLedger scratch;
  return exact_bias(spec, branch, problem, x, snapshot, scratch);
}

template <typename Scalar>
Scalar exact_second_moment(const EstimatorSpec& spec, Branch branch,
                           const FiniteSumProblem<Scalar>& problem,
                           const ParamVector<Scalar>& x, const ParamVector<Scalar>& snapshot) {
  IfoLedger scratch;
  return exact_second_moment(spec, branch, problem, x, snapshot, scratch);
}

}  // namespace isvrg

#endif  // ISVRG_ESTIMATORS_HPP
