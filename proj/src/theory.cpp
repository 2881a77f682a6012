#include "isvrg/theory.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "isvrg/optimizer.hpp"
#include "isvrg/schedules.hpp"

namespace isvrg {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

double npow(Index n, double exponent) { return std::pow(static_cast<double>(n), exponent); }

}  // namespace

void TheoryInputs::validate() const {
  if (n < 1) throw ConfigError("n must be positive");
  if (!positive(lipschitz)) throw ConfigError("L must be positive");
  if (!positive(sigma)) throw ConfigError("sigma must be positive");
  if (!(gap >= 0.0) || !std::isfinite(gap)) throw ConfigError("gap must be non-negative");
  if (T < 1) throw ConfigError("T must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("a must lie in [0, 1]");
  if (!positive(b)) throw ConfigError("b must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (beta && !positive(*beta)) throw ConfigError("beta must be positive");
  if (!positive(nu.nu) || !positive(nu.nu1) || !positive(nu.nu2) || !positive(nu.nu_tilde))
    throw ConfigError("universal constants must be positive");
  if (epsilon && !positive(*epsilon)) throw ConfigError("epsilon must be positive");
}

double TheoryInputs::beta_or_default() const {
  return beta.value_or(lipschitz / npow(n, b * alpha));
}

double TheoryInputs::size_factor() const { return npow(n, (2.0 * a - b) * alpha); }

std::string_view variant_name(BoundVariant variant) {
  switch (variant) {
    case BoundVariant::Svrg: return "svrg";
    case BoundVariant::Unbiased: return "unbiased";
    case BoundVariant::Biased: return "biased";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

double c_svrg(double gap, double lipschitz, double sigma) {
  return std::sqrt(gap / (2.0 * lipschitz * sigma * sigma));
}

double c_unbiased(double gap, double lipschitz, double sigma, double lambda) {
  return std::sqrt(gap / ((2.0 * lambda * lambda - 2.0 * lambda + 1.0) * lipschitz * sigma * sigma));
}

double c_biased(double gap, double lipschitz, double sigma, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("c_biased is undefined for lambda <= 0");
  return std::sqrt(gap / (2.0 * lambda * lipschitz * sigma * sigma));
}

DecayedConstants decayed_constants(const TheoryInputs& in) {
  return {c_svrg(in.gap, in.lipschitz, in.sigma),
          c_unbiased(in.gap, in.lipschitz, in.sigma, in.lambda),
          c_biased(in.gap, in.lipschitz, in.sigma, in.lambda),
          hybrid_numerator(in.gap, in.lipschitz, in.sigma)};
}

double factor_svrg() { return std::numbers::sqrt2; }

double factor_unbiased(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw DomainError("unbiased decayed factor needs lambda in [0, 1)");
  return std::sqrt(2.0 * lambda * lambda - 2.0 * lambda + 1.0) / (1.0 - lambda);
}

double factor_biased(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw DomainError("biased decayed factor needs lambda in (0, 1]");
  return 2.0 * (1.0 - lambda) / std::sqrt(lambda);
}

DecayedBounds decayed_bounds(const TheoryInputs& in) {
  const double base =
      std::sqrt(2.0 * in.gap * in.lipschitz / static_cast<double>(in.T)) * in.sigma;
  return {base, base * factor_svrg(), base * factor_unbiased(in.lambda),
          base * factor_biased(in.lambda)};
}

// ---------------------------------------------------------------------------

Recursion ct_recursion(BoundVariant variant, double eta, double beta, double lipschitz,
                       double lambda, Index m) {
  if (m < 1) throw ContractError("ct_recursion needs m >= 1");
  if (!positive(eta) || !positive(beta)) throw ContractError("ct_recursion needs eta, beta > 0");
  const double L = lipschitz;
  const double e2 = eta * eta;
  const double k = 1.0 - lambda;

  Recursion r;
  r.c.assign(static_cast<std::size_t>(m) + 1, 0.0);
  r.omega.assign(static_cast<std::size_t>(m), 0.0);
  for (Index t = m - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    const double next = r.c[ti + 1];
    switch (variant) {
      case BoundVariant::Svrg:
        r.c[ti] = next * (1.0 + eta * beta + 2.0 * e2 * L * L) + L * L * L * e2;
        r.omega[ti] = eta - next * eta / beta - L * e2 - 2.0 * next * e2;
        break;
      case BoundVariant::Unbiased:
        r.c[ti] = next * (1.0 + k * eta * beta + 2.0 * k * k * e2 * L * L) + L * L * L * e2;
        r.omega[ti] =
            eta - k * next * eta / beta - k * k * L * e2 - 2.0 * k * k * k * k * next * e2;
        break;
      case BoundVariant::Biased:
        r.c[ti] = next * (1.0 + eta * beta + 2.0 * k * k * e2 * L * L) + L * L * L * e2 * k * k;
        r.omega[ti] = eta - next * eta / beta - lambda * lambda * L * e2 -
                      2.0 * lambda * lambda * next * e2;
        break;
    }
  }
  r.gamma = r.omega.front();
  for (double w : r.omega) r.gamma = std::min(r.gamma, w);
  r.positive = r.gamma > 0.0;
  return r;
}

double gamma_lower_bound(BoundVariant variant, Index n, double a, double b, double alpha,
                         double lipschitz, double lambda, const NuConstants& nu) {
  const double size = npow(n, (2.0 * a - b) * alpha);
  switch (variant) {
    case BoundVariant::Svrg:
      return nu.nu / (18.0 * lipschitz * npow(n, alpha));
    case BoundVariant::Unbiased:
      return (1.0 - lambda) * nu.nu / (9.0 * size * lipschitz);
    case BoundVariant::Biased:
      return (1.0 - lambda) * lambda * nu.nu1 / (9.0 * lipschitz * size);
  }
  throw ContractError("gamma_lower_bound: unknown variant");
}

Bound recursion_bound(double gap, std::uint64_t T, double gamma) {
  if (!(gamma > 0.0)) return std::nullopt;
  return gap / (static_cast<double>(T) * gamma);
}

FixedStepSetup prescribed_setup(BoundVariant variant, const TheoryInputs& in) {
  const double beta = in.beta_or_default();
  switch (variant) {
    case BoundVariant::Svrg:
      return {fixed_step(in.lipschitz, in.n, 1.0, in.alpha), beta,
              default_inner_length(InnerLengthVariant::Svrg, in.n, in.a, in.b, in.alpha)};
    case BoundVariant::Unbiased:
      return {fixed_step(in.lipschitz, in.n, in.a, in.alpha), beta,
              default_inner_length(InnerLengthVariant::Unbiased, in.n, in.a, in.b, in.alpha,
                                   in.lambda)};
    case BoundVariant::Biased:
      return {fixed_step(in.lipschitz, in.n, in.a, in.alpha), beta,
              default_inner_length(InnerLengthVariant::Biased, in.n, in.a, in.b, in.alpha,
                                   in.lambda)};
  }
  throw ContractError("prescribed_setup: unknown variant");
}

namespace {

Bound closed_form_bound(BoundVariant variant, const TheoryInputs& in) {
  const double T = static_cast<double>(in.T);
  const double size = in.size_factor();
  double denominator = 0.0;
  double numerator = 0.0;
  switch (variant) {
    case BoundVariant::Svrg:
      numerator = 18.0 * in.lipschitz * npow(in.n, in.alpha) * in.gap;
      denominator = T * in.nu.nu;
      break;
    case BoundVariant::Unbiased:
      numerator = 9.0 * size * in.lipschitz * in.gap;
      denominator = (1.0 - in.lambda) * T * in.nu.nu;
      break;
    case BoundVariant::Biased:
      numerator = 9.0 * in.lipschitz * size * in.gap;
      denominator = in.lambda * (1.0 - in.lambda) * T * in.nu.nu1;
      break;
  }
  if (!(denominator > 0.0)) return std::nullopt;
  return numerator / denominator;
}

Bound recursion_variant_bound(BoundVariant variant, const TheoryInputs& in) {
  const FixedStepSetup setup = prescribed_setup(variant, in);
  const Recursion r = ct_recursion(variant, setup.eta, setup.beta, in.lipschitz, in.lambda, setup.m);
  return recursion_bound(in.gap, in.T, r.gamma);
}

}  // namespace

FixedBounds fixed_bounds(const TheoryInputs& in, GammaSource source) {
  auto eval = [&](BoundVariant v) -> Bound {
    if (source == GammaSource::ClosedForm) return closed_form_bound(v, in);
    try {
      return recursion_variant_bound(v, in);
    } catch (const ConfigError&) {
      return std::nullopt;  // epoch length undefined at lambda = 1
    }
  };
  return {eval(BoundVariant::Svrg), eval(BoundVariant::Unbiased), eval(BoundVariant::Biased)};
}

// ---------------------------------------------------------------------------

bool Interval::empty() const {
  if (lo > hi) return true;
  return lo == hi && !(lo_closed && hi_closed);
}

bool Interval::contains(double v) const {
  if (empty()) return false;
  const bool above = lo_closed ? v >= lo : v > lo;
  const bool below = hi_closed ? v <= hi : v < hi;
  return above && below;
}

AdmissibleLambda admissible_lambda(BoundVariant variant, Regime regime, Index n, double a,
                                   double b, double alpha) {
  const double size = npow(n, (2.0 * a - b) * alpha);
  AdmissibleLambda out;
  if (variant == BoundVariant::Svrg)
    throw ContractError("admissible_lambda applies to the weighted estimators only");

  if (variant == BoundVariant::Unbiased && regime == Regime::Decayed) {
    out.interval = {0.0, 0.5, true, false};
    out.optimum = 0.0;
    out.optimum_attained = true;
  } else if (variant == BoundVariant::Unbiased) {
    out.interval = {0.0, 1.0 - size / 2.0, false, false};
    if (!out.interval.empty()) out.optimum = 0.0;  // infimum only
    out.optimum_attained = false;
  } else if (regime == Regime::Decayed) {
    out.interval = {0.5, 2.0 / 3.0, false, true};
    out.optimum = 2.0 / 3.0;
    out.optimum_attained = true;
  } else {
    const double disc = 1.0 - 4.0 * size;
    if (disc > 0.0) {
      const double root = std::sqrt(disc);
      out.interval = {(1.0 - root) / 2.0, (1.0 + root) / 2.0, false, false};
      out.optimum = 0.5;
      out.optimum_attained = true;
    } else {
      out.interval = {0.5, 0.5, false, false};
    }
  }
  return out;
}

FactorOptima lambda_factor_optima() {
  constexpr double step = 1e-4;
  const double sqrt2 = std::numbers::sqrt2;
  FactorOptima out{};

  out.unbiased_argmin = 0.0;
  out.unbiased_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k * step < 0.5; ++k) {
    const double l = k * step;
    const double f = factor_unbiased(l);
    if (f < out.unbiased_min) {
      out.unbiased_min = f;
      out.unbiased_argmin = l;
    }
    if (!(f < sqrt2)) ++out.unbiased_violations;
    ++out.grid_points;
  }

  std::vector<double> grid;
  for (int k = 1; 0.5 + k * step < 2.0 / 3.0; ++k) grid.push_back(0.5 + k * step);
  grid.push_back(2.0 / 3.0);
  out.biased_strictly_decreasing = true;
  out.biased_min = std::numeric_limits<double>::infinity();
  double previous = std::numeric_limits<double>::infinity();
  for (double l : grid) {
    const double f = factor_biased(l);
    if (!(f < previous)) out.biased_strictly_decreasing = false;
    previous = f;
    if (f < out.biased_min) {
      out.biased_min = f;
      out.biased_argmin = l;
    }
    if (!(f < sqrt2)) ++out.biased_violations;
    ++out.grid_points;
  }
  return out;
}

// ---------------------------------------------------------------------------

HybridBound hybrid_bound(const TheoryInputs& in) {
  const double T = static_cast<double>(in.T);
  HybridBound out;
  out.decayed_term = std::sqrt(3.0) * std::sqrt(in.gap * in.lipschitz / T) * in.sigma;
  out.fixed_term = 9.0 * in.size_factor() * in.lipschitz * in.gap / (T * in.nu.nu2);
  out.value = in.nu.nu_tilde * std::min(out.decayed_term, out.fixed_term);
  return out;
}

double hybrid_bound_value(const TheoryInputs& in) { return hybrid_bound(in).value; }

IfoComplexity ifo_complexity(Index n, double epsilon) {
  if (!positive(epsilon)) throw DomainError("ifo_complexity needs epsilon > 0");
  if (n < 1) throw DomainError("ifo_complexity needs n >= 1");
  IfoComplexity out;
  out.inverse_epsilon_squared = 1.0 / (epsilon * epsilon);
  out.size_over_epsilon = npow(n, 0.2) / epsilon;
  if (out.size_over_epsilon <= out.inverse_epsilon_squared) {
    out.value = out.size_over_epsilon;
    out.regime = IfoRegime::SizeOverEpsilon;
  } else {
    out.value = out.inverse_epsilon_squared;
    out.regime = IfoRegime::InverseEpsilonSquared;
  }
  return out;
}

// ---------------------------------------------------------------------------

TheoryReport build_theory_report(const TheoryInputs& in) {
  in.validate();
  TheoryReport rep;
  rep.inputs = in;
  rep.beta = in.beta_or_default();

  rep.c_svrg = c_svrg(in.gap, in.lipschitz, in.sigma);
  rep.c_unbiased = c_unbiased(in.gap, in.lipschitz, in.sigma, in.lambda);
  rep.c_hybrid = hybrid_numerator(in.gap, in.lipschitz, in.sigma);
  try {
    rep.c_biased = c_biased(in.gap, in.lipschitz, in.sigma, in.lambda);
  } catch (const DomainError& e) {
    rep.notes.emplace_back(e.what());
  }

  rep.factor_svrg = factor_svrg();
  const double base = std::sqrt(2.0 * in.gap * in.lipschitz / static_cast<double>(in.T)) * in.sigma;
  rep.decayed_base = base;
  rep.decayed_svrg = base * rep.factor_svrg;
  try {
    rep.factor_unbiased = factor_unbiased(in.lambda);
    rep.decayed_unbiased = base * *rep.factor_unbiased;
  } catch (const DomainError& e) {
    rep.notes.emplace_back(e.what());
  }
  try {
    rep.factor_biased = factor_biased(in.lambda);
    rep.decayed_biased = base * *rep.factor_biased;
  } catch (const DomainError& e) {
    rep.notes.emplace_back(e.what());
  }

  for (auto v : {BoundVariant::Svrg, BoundVariant::Unbiased, BoundVariant::Biased}) {
    try {
      RecursionEntry entry;
      entry.variant = v;
      entry.setup = prescribed_setup(v, in);
      entry.recursion = ct_recursion(v, entry.setup.eta, entry.setup.beta, in.lipschitz,
                                     in.lambda, entry.setup.m);
      entry.gamma_lower_bound =
          gamma_lower_bound(v, in.n, in.a, in.b, in.alpha, in.lipschitz, in.lambda, in.nu);
      entry.bound = recursion_bound(in.gap, in.T, entry.recursion.gamma);
      if (!entry.recursion.positive)
        rep.notes.push_back(std::string(variant_name(v)) +
                            " recursion has gamma <= 0: no finite fixed-step guarantee");
      rep.recursions.push_back(std::move(entry));
    } catch (const ConfigError& e) {
      rep.notes.push_back(std::string(variant_name(v)) + " recursion skipped: " + e.what());
    }
  }
  rep.closed_form = fixed_bounds(in, GammaSource::ClosedForm);
  rep.hybrid = hybrid_bound(in);

  for (auto v : {BoundVariant::Unbiased, BoundVariant::Biased})
    for (auto r : {Regime::Decayed, Regime::Fixed})
      rep.admissible.push_back({v, r, admissible_lambda(v, r, in.n, in.a, in.b, in.alpha)});

  if (in.epsilon) rep.complexity = ifo_complexity(in.n, *in.epsilon);

  rep.reconstructed = {
      "svrg beta taken as L / n^(b alpha)",
      "svrg gamma lower bound taken as nu / (18 L n^alpha)",
      "hybrid decay numerator read as sqrt(3 (f(x0) - f*) / (4 L sigma^2))",
  };
  rep.notes.push_back("universal constants nu, nu1, nu2, nu_tilde are user inputs (default 1)");
  return rep;
}

}  // namespace isvrg
