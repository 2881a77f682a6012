#include "isvrg/estimators.hpp"

#include <cmath>
#include <string>

namespace isvrg {

namespace {

bool in_unit_interval(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::PlainSgd: return "plain_sgd";
    case EstimatorKind::ScaledSvrg: return "scaled_svrg";
    case EstimatorKind::WeightedUnbiased: return "weighted_unbiased";
    case EstimatorKind::Biased: return "biased";
    case EstimatorKind::HybridSwitch: return "hybrid_switch";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view name) {
  for (auto kind : {EstimatorKind::PlainSgd, EstimatorKind::ScaledSvrg,
                    EstimatorKind::WeightedUnbiased, EstimatorKind::Biased,
                    EstimatorKind::HybridSwitch}) {
    if (estimator_name(kind) == name) return kind;
  }
  throw ConfigError("unknown estimator '" + std::string(name) + "'");
}

std::string_view branch_name(Branch branch) {
  return branch == Branch::Decayed ? "decayed" : "fixed";
}

void EstimatorSpec::validate() const {
  switch (kind) {
    case EstimatorKind::PlainSgd:
    case EstimatorKind::ScaledSvrg:
      return;
    case EstimatorKind::WeightedUnbiased:
    case EstimatorKind::Biased:
      if (!in_unit_interval(lambda)) throw ConfigError("lambda must lie in [0, 1]");
      return;
    case EstimatorKind::HybridSwitch:
      if (!in_unit_interval(lambda_biased)) throw ConfigError("lambda_biased must lie in [0, 1]");
      // the fixed branch has no sigma-free guarantee at lambda = 0
      if (!in_unit_interval(lambda_unbiased) || lambda_unbiased <= 0.0)
        throw ConfigError("lambda_unbiased must lie in (0, 1]");
      return;
  }
}

DirectionWeights direction_weights(const EstimatorSpec& spec, Branch branch) {
  const EstimatorSpec active = spec.resolve(branch);
  const double l = active.lambda;
  switch (active.kind) {
    case EstimatorKind::PlainSgd: return {1.0, 0.0, 0.0};
    case EstimatorKind::ScaledSvrg: return {0.5, 0.5, 0.5};
    case EstimatorKind::WeightedUnbiased: return {1.0 - l, l, l};
    case EstimatorKind::Biased: return {1.0 - l, 1.0 - l, l};
    case EstimatorKind::HybridSwitch: break;
  }
  throw ContractError("direction_weights: unresolved estimator kind");
}

bool reads_full_gradient(const EstimatorSpec& spec) {
  return direction_weights(spec, Branch::Decayed).full != 0.0 ||
         direction_weights(spec, Branch::Fixed).full != 0.0;
}

}  // namespace isvrg
