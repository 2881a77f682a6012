#include "isvrg/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace isvrg {

namespace {

// floor() that tolerates pow() landing one ulp below an exact integer
Index robust_floor(double v) {
  const double f = std::floor(v * (1.0 + 1e-12));
  if (!(f < 9.0e18)) throw ConfigError("inner length overflows");
  return std::max<Index>(1, static_cast<Index>(f));
}

}  // namespace

Index default_inner_length(InnerLengthVariant variant, Index n, double a, double b, double alpha,
                           double lambda) {
  if (n < 1) throw ConfigError("inner length needs n >= 1");
  const auto nn = static_cast<double>(n);
  switch (variant) {
    case InnerLengthVariant::Svrg:
      return robust_floor(9.0 * std::pow(nn, alpha / 2.0) / 5.0);
    case InnerLengthVariant::Unbiased:
      if (!(lambda < 1.0)) throw ConfigError("unbiased inner length needs lambda < 1");
      return robust_floor(3.0 * std::pow(nn, (3.0 * a + b) * alpha) / (1.0 - lambda));
    case InnerLengthVariant::Biased:
      if (!(lambda < 1.0)) throw ConfigError("biased inner length needs lambda < 1");
      return robust_floor(3.0 * std::pow(nn, 2.0 * a * alpha) / (2.0 * (1.0 - lambda)));
    case InnerLengthVariant::IsvrgPlus:
      return robust_floor(std::pow(nn, (3.0 * a + b) * alpha));
  }
  throw ConfigError("unknown inner length variant");
}

}  // namespace isvrg
