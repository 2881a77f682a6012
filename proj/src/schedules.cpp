#include "isvrg/schedules.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace isvrg {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

Step take_max(double decayed_candidate, double fixed_candidate) {
  if (decayed_candidate > fixed_candidate) return {decayed_candidate, Branch::Decayed};
  return {fixed_candidate, Branch::Fixed};
}

}  // namespace

std::string_view schedule_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Decayed: return "decayed";
    case ScheduleKind::Fixed: return "fixed";
    case ScheduleKind::HybridMax: return "hybrid_max";
    case ScheduleKind::Practical: return "practical";
    case ScheduleKind::PracticalDecay: return "practical_decay";
    case ScheduleKind::EpochwiseMax: return "epochwise_max";
  }
  return "unknown";
}

ScheduleKind parse_schedule(std::string_view name) {
  for (auto kind : {ScheduleKind::Decayed, ScheduleKind::Fixed, ScheduleKind::HybridMax,
                    ScheduleKind::Practical, ScheduleKind::PracticalDecay,
                    ScheduleKind::EpochwiseMax}) {
    if (schedule_name(kind) == name) return kind;
  }
  throw ConfigError("unknown schedule '" + std::string(name) + "'");
}

double decayed_step(double c, std::uint64_t delta) {
  return c / std::sqrt(static_cast<double>(delta) + 1.0);
}

double fixed_step(double lipschitz, Index n, double a, double alpha) {
  return 1.0 / (3.0 * lipschitz * std::pow(static_cast<double>(n), a * alpha));
}

double StepSchedule::eta_fixed() const { return fixed_step(lipschitz, n, a, alpha); }

StepSchedule StepSchedule::decayed(double c) {
  StepSchedule s;
  s.kind = ScheduleKind::Decayed;
  s.c = c;
  return s;
}

StepSchedule StepSchedule::fixed(double lipschitz, Index n, double a, double alpha) {
  StepSchedule s;
  s.kind = ScheduleKind::Fixed;
  s.lipschitz = lipschitz;
  s.n = n;
  s.a = a;
  s.alpha = alpha;
  return s;
}

StepSchedule StepSchedule::constant(double eta) {
  return fixed(1.0 / (3.0 * eta), 1);
}

StepSchedule StepSchedule::hybrid_max(double c, double lipschitz, Index n, double a,
                                      double alpha) {
  StepSchedule s = fixed(lipschitz, n, a, alpha);
  s.kind = ScheduleKind::HybridMax;
  s.c = c;
  return s;
}

StepSchedule StepSchedule::practical(double eta0, double lipschitz, Index n) {
  StepSchedule s = fixed(lipschitz, n, 1.0, 0.2);
  s.kind = ScheduleKind::Practical;
  s.eta0 = eta0;
  return s;
}

StepSchedule StepSchedule::practical_decay(double eta0) {
  StepSchedule s;
  s.kind = ScheduleKind::PracticalDecay;
  s.eta0 = eta0;
  return s;
}

StepSchedule StepSchedule::epochwise_max(double c, Index inner_length, double lipschitz, Index n,
                                         double a, double alpha) {
  StepSchedule s = fixed(lipschitz, n, a, alpha);
  s.kind = ScheduleKind::EpochwiseMax;
  s.c = c;
  s.inner_length = inner_length;
  return s;
}

void StepSchedule::validate() const {
  switch (kind) {
    case ScheduleKind::Decayed:
      if (!positive(c)) throw ConfigError("decayed schedule needs c > 0");
      return;
    case ScheduleKind::PracticalDecay:
      if (!positive(eta0)) throw ConfigError("practical schedule needs eta0 > 0");
      return;
    case ScheduleKind::Fixed:
    case ScheduleKind::HybridMax:
    case ScheduleKind::Practical:
    case ScheduleKind::EpochwiseMax:
      break;
  }
  if (!positive(lipschitz)) throw ConfigError("schedule needs L > 0");
  if (n < 1) throw ConfigError("schedule needs n >= 1");
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("schedule needs a in [0, 1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("schedule needs alpha in (0, 1]");
  if (!positive(eta_fixed())) throw ConfigError("fixed step is not a positive finite number");
  if ((kind == ScheduleKind::HybridMax || kind == ScheduleKind::EpochwiseMax) && !positive(c))
    throw ConfigError("hybrid schedule needs c > 0");
  if (kind == ScheduleKind::Practical && !positive(eta0))
    throw ConfigError("practical schedule needs eta0 > 0");
  if (kind == ScheduleKind::EpochwiseMax && inner_length < 1)
    throw ConfigError("epochwise schedule needs m >= 1");
}

Step step_at(const StepSchedule& schedule, std::uint64_t delta, std::uint64_t t,
             std::uint64_t s) {
  switch (schedule.kind) {
    case ScheduleKind::Decayed:
      return {decayed_step(schedule.c, delta), Branch::Decayed};
    case ScheduleKind::Fixed:
      return {schedule.eta_fixed(), Branch::Fixed};
    case ScheduleKind::HybridMax:
      return take_max(decayed_step(schedule.c, delta), schedule.eta_fixed());
    case ScheduleKind::Practical:
      return take_max(schedule.eta0 / (static_cast<double>(t) * static_cast<double>(s)),
                      schedule.eta_fixed());
    case ScheduleKind::PracticalDecay:
      return {schedule.eta0 / (static_cast<double>(t) * static_cast<double>(s)), Branch::Decayed};
    case ScheduleKind::EpochwiseMax:
      return take_max(std::sqrt(schedule.c) / (static_cast<double>(schedule.inner_length) *
                                               static_cast<double>(s)),
                      schedule.eta_fixed());
  }
  throw ContractError("step_at: unknown schedule kind");
}

std::uint64_t crossover_index(double c, double eta_fixed) {
  if (!positive(c) || !positive(eta_fixed)) throw ContractError("crossover_index needs c, eta > 0");
  if (c <= eta_fixed) return 0;
  const double ratio = c / eta_fixed;
  const double guess = std::ceil(ratio * ratio - 1.0);
  if (!(guess < 9.0e18)) return std::numeric_limits<std::uint64_t>::max();
  auto k = static_cast<std::uint64_t>(std::max(guess, 0.0));
  // Align with the rounding of decayed_step so the branch flips exactly at k.
  while (decayed_step(c, k) > eta_fixed) ++k;
  while (k > 0 && !(decayed_step(c, k - 1) > eta_fixed)) --k;
  return k;
}

double hybrid_numerator(double gap, double lipschitz, double sigma) {
  return std::sqrt(3.0 * gap / (4.0 * lipschitz * sigma * sigma));
}

}  // namespace isvrg
