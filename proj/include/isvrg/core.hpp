#ifndef ISVRG_CORE_HPP
#define ISVRG_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace isvrg {

using Index = Eigen::Index;

template <typename Scalar>
using ParamVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Vector = ParamVector<double>;

// Non-deduced read-only view, so a problem fixes Scalar for the helpers below.
template <typename Scalar>
using ConstParamRef = Eigen::Ref<const ParamVector<std::type_identity_t<Scalar>>>;

// Error hierarchy. Everything the library raises derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A non-finite value produced by an oracle or an update.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller violated a precondition (dimension mismatch, empty input, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

// A closed form was evaluated outside the parameter range it is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Known constants of a problem. Any of them may be absent.
template <typename Scalar>
struct ProblemMetadata {
  std::optional<Scalar> lipschitz;      // component-wise smoothness constant L
  std::optional<Scalar> sigma;          // bound on every ||grad f_i(x)||
  std::optional<Scalar> optimal_value;  // f(x*)
  std::optional<ParamVector<Scalar>> minimizer;
  std::optional<ParamVector<Scalar>> planted;  // generating parameter of synthetic data
};

/// Finite-sum objective f(x) = (1/n) sum_i f_i(x).
///
/// Component indices are 0-based here; messages shown to users are 1-based.
/// Implementations must be safe for concurrent const access.
template <typename Scalar>
class FiniteSumProblem {
 public:
  using Vec = ParamVector<Scalar>;
  using ConstRef = Eigen::Ref<const Vec>;
  using Ref = Eigen::Ref<Vec>;

  virtual ~FiniteSumProblem() = default;

  virtual Index size() const = 0;
  virtual Index dim() const = 0;

  virtual Scalar value(Index i, ConstRef x) const = 0;

  /// Writes grad f_i(x) into `grad`, which must already have dim() entries.
  virtual void gradient(Index i, ConstRef x, Ref grad) const = 0;

  Vec gradient(Index i, ConstRef x) const {
    Vec g(dim());
    gradient(i, x, g);
    return g;
  }

  const ProblemMetadata<Scalar>& metadata() const { return metadata_; }

 protected:
  ProblemMetadata<Scalar> metadata_;
};

using Problem = FiniteSumProblem<double>;

/// Problem assembled from two callables; handy for toy objectives.
template <typename Scalar>
class FunctionalProblem final : public FiniteSumProblem<Scalar> {
 public:
  using Base = FiniteSumProblem<Scalar>;
  using ValueFn = std::function<Scalar(Index, typename Base::ConstRef)>;
  using GradientFn =
      std::function<void(Index, typename Base::ConstRef, typename Base::Ref)>;

  FunctionalProblem(Index n, Index d, ValueFn value, GradientFn gradient,
                    ProblemMetadata<Scalar> meta = {})
      : n_(n), d_(d), value_(std::move(value)), gradient_(std::move(gradient)) {
    if (n < 1 || d < 1) throw ContractError("problem needs n >= 1 and d >= 1");
    this->metadata_ = std::move(meta);
  }

  Index size() const override { return n_; }
  Index dim() const override { return d_; }
  Scalar value(Index i, typename Base::ConstRef x) const override {
    return value_(i, x);
  }
  void gradient(Index i, typename Base::ConstRef x,
                typename Base::Ref grad) const override {
    gradient_(i, x, grad);
  }
  using Base::gradient;

 private:
  Index n_;
  Index d_;
  ValueFn value_;
  GradientFn gradient_;
};

enum class IfoChannel { Optimization, Evaluation };

/// Incremental first-order oracle counters. One component gradient = 1 IFO.
struct IfoLedger {
  std::uint64_t optimization = 0;
  std::uint64_t evaluation = 0;

  void charge(IfoChannel channel, std::uint64_t calls) {
    (channel == IfoChannel::Optimization ? optimization : evaluation) += calls;
  }

  IfoLedger& operator+=(const IfoLedger& other) {
    optimization += other.optimization;
    evaluation += other.evaluation;
    return *this;
  }

  friend bool operator==(const IfoLedger&, const IfoLedger&) = default;
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x, const char* what) {
  if (!x.allFinite()) throw NumericError(std::string(what) + " has a non-finite coordinate");
}

template <typename Derived>
void require_dim(const Eigen::MatrixBase<Derived>& x, Index d, const char* what) {
  if (x.size() != d) {
    throw ContractError(std::string(what) + " has dimension " + std::to_string(x.size()) +
                        ", expected " + std::to_string(d));
  }
}

namespace detail {

inline constexpr Index kPairwiseLeaf = 8;

// Pairwise summation of term(i, out) over i in [lo, hi) into acc.
// Keeps the rounding error O(log n) instead of O(n).
template <typename Scalar, typename Term>
void pairwise_sum(Index lo, Index hi, Term& term, ParamVector<Scalar>& acc,
                  ParamVector<Scalar>& scratch) {
  if (hi - lo <= kPairwiseLeaf) {
    acc.setZero();
    for (Index i = lo; i < hi; ++i) {
      term(i, scratch);
      acc += scratch;
    }
    return;
  }
  const Index mid = lo + (hi - lo) / 2;
  ParamVector<Scalar> right(acc.size());
  pairwise_sum(lo, mid, term, acc, scratch);
  pairwise_sum(mid, hi, term, right, scratch);
  acc += right;
}

template <typename Scalar, typename Term>
Scalar pairwise_sum_scalar(Index lo, Index hi, Term& term) {
  if (hi - lo <= kPairwiseLeaf) {
    Scalar acc(0);
    for (Index i = lo; i < hi; ++i) acc += term(i);
    return acc;
  }
  const Index mid = lo + (hi - lo) / 2;
  return pairwise_sum_scalar<Scalar>(lo, mid, term) +
         pairwise_sum_scalar<Scalar>(mid, hi, term);
}

}  // namespace detail

/// (1/n) sum_i term(i, out) with pairwise accumulation.
template <typename Scalar, typename Term>
ParamVector<Scalar> pairwise_mean(Index n, Index d, Term term) {
  ParamVector<Scalar> acc(d), scratch(d);
  detail::pairwise_sum<Scalar>(0, n, term, acc, scratch);
  return acc / static_cast<Scalar>(n);
}

/// grad f(x) = (1/n) sum_i grad f_i(x). Charges n calls to `channel`.
template <typename Scalar>
ParamVector<Scalar> full_gradient(const FiniteSumProblem<Scalar>& problem,
                                  const ConstParamRef<Scalar>& x, IfoLedger& ledger,
                                  IfoChannel channel) {
  require_dim(x, problem.dim(), "x");
  require_finite(x, "x");
  const Index n = problem.size();
  ledger.charge(channel, static_cast<std::uint64_t>(n));
  auto term = [&](Index i, ParamVector<Scalar>& out) {
    problem.gradient(i, x, out);
    if (!out.allFinite()) {
      throw NumericError("gradient of component " + std::to_string(i + 1) +
                         " is not finite");
    }
  };
  return pairwise_mean<Scalar>(n, problem.dim(), term);
}

/// f(x), charged to the evaluation channel.
template <typename Scalar>
Scalar objective(const FiniteSumProblem<Scalar>& problem, const ConstParamRef<Scalar>& x,
                 IfoLedger& ledger) {
  require_dim(x, problem.dim(), "x");
  require_finite(x, "x");
  const Index n = problem.size();
  ledger.charge(IfoChannel::Evaluation, static_cast<std::uint64_t>(n));
  auto term = [&](Index i) {
    const Scalar v = problem.value(i, x);
    if (!std::isfinite(v)) {
      throw NumericError("value of component " + std::to_string(i + 1) + " is not finite");
    }
    return v;
  };
  return detail::pairwise_sum_scalar<Scalar>(0, n, term) / static_cast<Scalar>(n);
}

/// ||grad f(x)||^2, the epsilon-accuracy measure. Charged to evaluation.
template <typename Scalar>
Scalar grad_sq_norm(const FiniteSumProblem<Scalar>& problem, const ConstParamRef<Scalar>& x,
                    IfoLedger& ledger) {
  return full_gradient(problem, x, ledger, IfoChannel::Evaluation).squaredNorm();
}

}  // namespace isvrg

#endif  // ISVRG_CORE_HPP
