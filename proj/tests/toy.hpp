#ifndef ISVRG_TESTS_TOY_HPP
#define ISVRG_TESTS_TOY_HPP

#include <vector>

#include "isvrg/core.hpp"

namespace isvrg::test {

// f_i(x) = w_i ||x||^2, so grad f_i(x) = 2 w_i x. {1, 2} is the two-term toy.
inline FunctionalProblem<double> scaled_squares(std::vector<double> weights, Index d = 1) {
  const auto n = static_cast<Index>(weights.size());
  return FunctionalProblem<double>(
      n, d,
      [weights](Index i, Problem::ConstRef x) { return weights[i] * x.squaredNorm(); },
      [weights](Index i, Problem::ConstRef x, Problem::Ref g) { g = 2.0 * weights[i] * x; });
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

}  // namespace isvrg::test

#endif  // ISVRG_TESTS_TOY_HPP
