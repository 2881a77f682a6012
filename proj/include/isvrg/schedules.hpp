#ifndef ISVRG_SCHEDULES_HPP
#define ISVRG_SCHEDULES_HPP

#include <cstdint>
#include <string_view>

#include "isvrg/core.hpp"
#include "isvrg/estimators.hpp"

namespace isvrg {

/// Step-size rules.
///
///   Decayed        c / sqrt(delta + 1)
///   Fixed          1 / (3 L n^(a alpha))
///   HybridMax      max of the two above, per global inner step delta
///   Practical      max{eta0 / (t s), 1 / (3 L n^(1/5))}, 1-based t and s
///   PracticalDecay eta0 / (t s) with no floor (the SGD baseline)
///   EpochwiseMax   max{sqrt(c) / (m s), 1 / (3 L n^(a alpha))}, constant within an epoch
enum class ScheduleKind { Decayed, Fixed, HybridMax, Practical, PracticalDecay, EpochwiseMax };

std::string_view schedule_name(ScheduleKind kind);
ScheduleKind parse_schedule(std::string_view name);

struct StepSchedule {
  ScheduleKind kind = ScheduleKind::Fixed;
  double c = 1.0;
  double eta0 = 0.1;
  double lipschitz = 1.0;
  Index n = 1;
  double a = 1.0;
  double alpha = 0.2;
  double b = 2.0;
  Index inner_length = 1;  // EpochwiseMax only

  /// 1 / (3 L n^(a alpha)), always recomputed from the fields.
  double eta_fixed() const;

  static StepSchedule decayed(double c);
  static StepSchedule fixed(double lipschitz, Index n, double a = 1.0, double alpha = 0.2);
  /// Fixed schedule whose step equals `eta` (L chosen as 1 / (3 eta), n = 1).
  static StepSchedule constant(double eta);
  static StepSchedule hybrid_max(double c, double lipschitz, Index n, double a = 1.0,
                                 double alpha = 0.2);
  static StepSchedule practical(double eta0, double lipschitz, Index n);
  static StepSchedule practical_decay(double eta0);
  static StepSchedule epochwise_max(double c, Index inner_length, double lipschitz, Index n,
                                    double a = 1.0, double alpha = 0.2);

  void validate() const;
};

struct Step {
  double eta;
  Branch branch;
};

double decayed_step(double c, std::uint64_t delta);
double fixed_step(double lipschitz, Index n, double a, double alpha);

/// Step size and active branch. `delta` is the 0-based global inner step;
/// `t` and `s` are the 1-based inner and epoch indices. A tie between the
/// two candidates resolves to the fixed branch.
Step step_at(const StepSchedule& schedule, std::uint64_t delta, std::uint64_t t, std::uint64_t s);

/// Smallest delta with c / sqrt(delta + 1) <= eta_fixed.
std::uint64_t crossover_index(double c, double eta_fixed);

/// sqrt(3 (f(x0) - f*) / (4 L sigma^2)), the hybrid decay numerator.
double hybrid_numerator(double gap, double lipschitz, double sigma);

}  // namespace isvrg

#endif  // ISVRG_SCHEDULES_HPP
