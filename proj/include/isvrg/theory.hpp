#ifndef ISVRG_THEORY_HPP
#define ISVRG_THEORY_HPP

#include <optional>
#include <string>
#include <vector>

#include "isvrg/core.hpp"

namespace isvrg {

/// Universal constants left unspecified by the convergence results.
struct NuConstants {
  double nu = 1.0;        // unbiased fixed-step bound (and the SVRG one)
  double nu1 = 1.0;       // biased fixed-step bound
  double nu2 = 1.0;       // hybrid bound, fixed-regime term
  double nu_tilde = 1.0;  // hybrid bound, outer factor
};

struct TheoryInputs {
  Index n = 1;
  double lipschitz = 1.0;
  double sigma = 1.0;
  double gap = 0.0;  // f(x0) - f(x*)
  std::uint64_t T = 1;
  double lambda = 0.5;
  double a = 1.0;
  double b = 2.0;
  double alpha = 0.2;
  std::optional<double> beta;     // defaults to L / n^(b alpha)
  NuConstants nu;
  std::optional<double> epsilon;  // enables the IFO complexity entry

  void validate() const;
  double beta_or_default() const;
  /// n^((2a - b) alpha), the size factor shared by the fixed-step bounds.
  double size_factor() const;
};

enum class BoundVariant { Svrg, Unbiased, Biased };

std::string_view variant_name(BoundVariant variant);

// -- decayed step size --------------------------------------------------------

double c_svrg(double gap, double lipschitz, double sigma);
double c_unbiased(double gap, double lipschitz, double sigma, double lambda);
/// Throws DomainError for lambda <= 0.
double c_biased(double gap, double lipschitz, double sigma, double lambda);

struct DecayedConstants {
  double c_svrg;
  double c_unbiased;
  double c_biased;
  double c_hybrid;  // decay numerator of the hybrid schedule
};

DecayedConstants decayed_constants(const TheoryInputs& in);

double factor_svrg();
/// sqrt(2 l^2 - 2 l + 1) / (1 - l), defined for l in [0, 1).
double factor_unbiased(double lambda);
/// 2 (1 - l) / sqrt(l), defined for l in (0, 1].
double factor_biased(double lambda);

struct DecayedBounds {
  double base;  // sqrt(2 gap L / T) sigma
  double svrg;
  double unbiased;
  double biased;
};

DecayedBounds decayed_bounds(const TheoryInputs& in);

// -- fixed step size ----------------------------------------------------------

struct Recursion {
  std::vector<double> c;      // c_0 .. c_m, c_m = 0
  std::vector<double> omega;  // Omega_0 .. Omega_{m-1}
  double gamma = 0.0;         // min_t Omega_t
  bool positive = false;      // gamma > 0
};

/// Backward recursion from c_m = 0; gamma may come out non-positive.
Recursion ct_recursion(BoundVariant variant, double eta, double beta, double lipschitz,
                       double lambda, Index m);

/// Closed-form lower bound on gamma. For Svrg this is nu / (18 L n^alpha).
double gamma_lower_bound(BoundVariant variant, Index n, double a, double b, double alpha,
                         double lipschitz, double lambda, const NuConstants& nu);

/// Empty when the guarantee is vacuous (gamma <= 0 or a zero denominator).
using Bound = std::optional<double>;

Bound recursion_bound(double gap, std::uint64_t T, double gamma);

/// Step size, Lyapunov weight and epoch length each fixed-step result prescribes.
struct FixedStepSetup {
  double eta;
  double beta;
  Index m;
};

FixedStepSetup prescribed_setup(BoundVariant variant, const TheoryInputs& in);

enum class GammaSource { Recursion, ClosedForm };

struct FixedBounds {
  Bound svrg;
  Bound unbiased;
  Bound biased;
};

FixedBounds fixed_bounds(const TheoryInputs& in, GammaSource source);

// -- admissible lambda ----------------------------------------------------------

enum class Regime { Decayed, Fixed };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = false;
  bool hi_closed = false;

  bool empty() const;
  bool contains(double v) const;
};

struct AdmissibleLambda {
  Interval interval;
  std::optional<double> optimum;  // empty when the interval is empty
  bool optimum_attained = false;  // false: optimum is only an infimum
};

AdmissibleLambda admissible_lambda(BoundVariant variant, Regime regime, Index n, double a,
                                   double b, double alpha);

struct FactorOptima {
  double unbiased_argmin;
  double unbiased_min;
  double biased_argmin;
  double biased_min;
  bool biased_strictly_decreasing;
  int unbiased_violations;  // grid points in [0, 1/2) with factor >= sqrt(2)
  int biased_violations;    // grid points in (1/2, 2/3] with factor >= sqrt(2)
  std::size_t grid_points;
};

/// Dense-grid (step 1e-4) check of where the two decayed-step factors are minimal.
FactorOptima lambda_factor_optima();

// -- hybrid estimator -----------------------------------------------------------

struct HybridBound {
  double decayed_term;
  double fixed_term;
  double value;  // nu_tilde * min(decayed_term, fixed_term)
};

HybridBound hybrid_bound(const TheoryInputs& in);
double hybrid_bound_value(const TheoryInputs& in);

enum class IfoRegime { InverseEpsilonSquared, SizeOverEpsilon };

struct IfoComplexity {
  double value;
  double inverse_epsilon_squared;  // 1 / eps^2
  double size_over_epsilon;        // n^(1/5) / eps
  IfoRegime regime;
};

/// min(1/eps^2, n^(1/5)/eps); ties go to the size term.
IfoComplexity ifo_complexity(Index n, double epsilon);

// -- report ---------------------------------------------------------------------

struct RecursionEntry {
  BoundVariant variant;
  FixedStepSetup setup;
  Recursion recursion;
  double gamma_lower_bound;
  Bound bound;  // gap / (T gamma)
};

struct AdmissibleEntry {
  BoundVariant variant;
  Regime regime;
  AdmissibleLambda result;
};

struct TheoryReport {
  TheoryInputs inputs;
  double beta;
  std::optional<double> c_svrg, c_unbiased, c_biased, c_hybrid;
  double factor_svrg;
  std::optional<double> factor_unbiased, factor_biased;
  double decayed_base;
  double decayed_svrg;
  std::optional<double> decayed_unbiased, decayed_biased;
  std::vector<RecursionEntry> recursions;
  FixedBounds closed_form;
  HybridBound hybrid;
  std::vector<AdmissibleEntry> admissible;
  std::optional<IfoComplexity> complexity;
  std::vector<std::string> reconstructed;  // quantities whose printed form was repaired
  std::vector<std::string> notes;          // out-of-domain entries and why
};

TheoryReport build_theory_report(const TheoryInputs& in);

}  // namespace isvrg

#endif  // ISVRG_THEORY_HPP
