#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "isvrg/bench.hpp"
#include "isvrg/rng.hpp"

namespace isvrg::bench {

using nlohmann::json;

namespace {

void require_keys(const json& obj, std::string_view where,
                  std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T get(const json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " is missing or has the wrong type");
  }
}

template <typename T>
std::optional<T> get_opt(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) return std::nullopt;
  return get<T>(obj, key, where);
}

ProblemRecipe parse_problem(const json& p, InitSpec& init) {
  require_keys(p, "problem",
               {"family", "n", "d", "seed", "regularizer", "hidden", "data_scale", "label_noise",
                "lipschitz_target", "init", "init_scale", "init_seed"});
  ProblemRecipe r;
  r.family = parse_family(get<std::string>(p, "family", "problem"));
  r.n = get<Index>(p, "n", "problem");
  r.d = get<Index>(p, "d", "problem");
  r.seed = get_opt<std::uint64_t>(p, "seed", "problem").value_or(0);
  r.regularizer = get_opt<double>(p, "regularizer", "problem").value_or(r.regularizer);
  r.hidden = get_opt<Index>(p, "hidden", "problem").value_or(r.hidden);
  r.data_scale = get_opt<double>(p, "data_scale", "problem").value_or(r.data_scale);
  r.label_noise = get_opt<double>(p, "label_noise", "problem").value_or(r.label_noise);
  r.lipschitz_target =
      get_opt<double>(p, "lipschitz_target", "problem").value_or(r.lipschitz_target);
  init.kind = get_opt<std::string>(p, "init", "problem").value_or(init.kind);
  if (init.kind != "zeros" && init.kind != "normal")
    throw ConfigError("problem.init must be 'zeros' or 'normal'");
  init.scale = get_opt<double>(p, "init_scale", "problem").value_or(init.scale);
  init.seed = get_opt<std::uint64_t>(p, "init_seed", "problem").value_or(r.seed);
  r.validate();
  return r;
}

OutputPolicy parse_policy(std::string_view s) {
  if (s == "last") return OutputPolicy::LastSnapshot;
  if (s == "best") return OutputPolicy::BestSnapshotByGradNorm;
  if (s == "uniform") return OutputPolicy::UniformRandomSnapshot;
  throw ConfigError("output_policy must be last, best or uniform");
}

OptimizerEntry parse_optimizer(const json& o) {
  if (o.is_string()) return preset_entry(o.get<std::string>());
  require_keys(o, "optimizer",
               {"name", "preset", "estimator", "lambda", "lambda_biased", "lambda_unbiased",
                "schedule", "c", "eta0", "L", "a", "b", "alpha", "m", "snapshot_gradient",
                "output_policy", "tune_grid", "tune_seed"});
  OptimizerEntry e;
  if (auto preset = get_opt<std::string>(o, "preset", "optimizer")) {
    e = preset_entry(*preset);
  } else if (!o.contains("estimator") || !o.contains("schedule")) {
    throw ConfigError("optimizer without a preset needs 'estimator' and 'schedule'");
  }
  if (auto name = get_opt<std::string>(o, "name", "optimizer")) e.name = *name;
  if (e.name.empty()) throw ConfigError("optimizer needs a name");
  if (auto k = get_opt<std::string>(o, "estimator", "optimizer"))
    e.estimator.kind = parse_estimator(*k);
  if (auto v = get_opt<double>(o, "lambda", "optimizer")) e.estimator.lambda = *v;
  if (auto v = get_opt<double>(o, "lambda_biased", "optimizer")) e.estimator.lambda_biased = *v;
  if (auto v = get_opt<double>(o, "lambda_unbiased", "optimizer"))
    e.estimator.lambda_unbiased = *v;
  if (auto k = get_opt<std::string>(o, "schedule", "optimizer")) e.schedule = parse_schedule(*k);
  if (auto v = get_opt<double>(o, "c", "optimizer")) e.c = v;
  if (auto v = get_opt<double>(o, "eta0", "optimizer")) e.eta0 = v;
  if (auto v = get_opt<double>(o, "L", "optimizer")) e.lipschitz = v;
  e.a = get_opt<double>(o, "a", "optimizer").value_or(e.a);
  e.b = get_opt<double>(o, "b", "optimizer").value_or(e.b);
  e.alpha = get_opt<double>(o, "alpha", "optimizer").value_or(e.alpha);
  if (auto v = get_opt<Index>(o, "m", "optimizer")) e.inner_length = v;
  if (auto v = get_opt<std::string>(o, "snapshot_gradient", "optimizer")) {
    if (*v == "auto") e.snapshot_gradient = SnapshotGradient::Auto;
    else if (*v == "always") e.snapshot_gradient = SnapshotGradient::Always;
    else throw ConfigError("snapshot_gradient must be auto or always");
  }
  if (auto v = get_opt<std::string>(o, "output_policy", "optimizer"))
    e.output_policy = parse_policy(*v);
  if (auto v = get_opt<std::vector<double>>(o, "tune_grid", "optimizer")) e.tune_grid = v;
  if (auto v = get_opt<std::uint64_t>(o, "tune_seed", "optimizer")) e.tune_seed = v;
  e.estimator.validate();
  return e;
}

Budget parse_budget(const json& b) {
  require_keys(b, "budget", {"passes", "ifo", "epochs", "epsilon"});
  Budget out;
  out.passes = get_opt<double>(b, "passes", "budget");
  out.ifo = get_opt<std::uint64_t>(b, "ifo", "budget");
  out.epochs = get_opt<Index>(b, "epochs", "budget");
  out.epsilon = get_opt<double>(b, "epsilon", "budget").value_or(0.0);
  if (!out.passes && !out.ifo && !out.epochs)
    throw ConfigError("budget needs at least one of passes, ifo, epochs");
  if (out.passes && !(*out.passes > 0)) throw ConfigError("budget.passes must be positive");
  if (out.ifo && *out.ifo == 0) throw ConfigError("budget.ifo must be positive");
  if (out.epochs && *out.epochs < 1) throw ConfigError("budget.epochs must be positive");
  if (!(out.epsilon >= 0)) throw ConfigError("budget.epsilon must be non-negative");
  return out;
}

OutputSpec parse_output(const json& o) {
  require_keys(o, "output", {"dir", "formats"});
  OutputSpec out;
  out.dir = get_opt<std::string>(o, "dir", "output").value_or("out");
  if (auto formats = get_opt<std::vector<std::string>>(o, "formats", "output")) {
    out.csv = out.json = false;
    for (const auto& f : *formats) {
      if (f == "csv") out.csv = true;
      else if (f == "json") out.json = true;
      else throw ConfigError("unknown output format '" + f + "'");
    }
  }
  return out;
}

}  // namespace

std::string_view tuned_scalar_name(TunedScalar scalar) {
  switch (scalar) {
    case TunedScalar::None: return "none";
    case TunedScalar::Eta0: return "eta0";
    case TunedScalar::C: return "c";
  }
  return "unknown";
}

TunedScalar OptimizerEntry::tuned_scalar() const {
  switch (schedule) {
    case ScheduleKind::Decayed:
    case ScheduleKind::HybridMax:
    case ScheduleKind::EpochwiseMax:
      return TunedScalar::C;
    case ScheduleKind::Practical:
    case ScheduleKind::PracticalDecay:
      return TunedScalar::Eta0;
    case ScheduleKind::Fixed:
      return TunedScalar::None;
  }
  return TunedScalar::None;
}

bool OptimizerEntry::wants_tuning() const {
  const TunedScalar scalar = tuned_scalar();
  if (scalar == TunedScalar::None) return false;
  if (tune_grid) return !tune_grid->empty();
  return !tuned_value().has_value();
}

std::vector<double> OptimizerEntry::grid() const {
  return tune_grid.value_or(std::vector<double>{0.01, 0.1, 1.0});
}

void OptimizerEntry::set_tuned(double value) {
  if (tuned_scalar() == TunedScalar::C) c = value;
  else if (tuned_scalar() == TunedScalar::Eta0) eta0 = value;
}

std::optional<double> OptimizerEntry::tuned_value() const {
  switch (tuned_scalar()) {
    case TunedScalar::C: return c;
    case TunedScalar::Eta0: return eta0;
    case TunedScalar::None: return std::nullopt;
  }
  return std::nullopt;
}

OptimizerEntry preset_entry(std::string_view preset) {
  OptimizerEntry e;
  e.name = std::string(preset);
  if (preset == "sgd") {
    e.preset = Preset::Sgd;
    e.estimator = EstimatorSpec::plain_sgd();
    e.schedule = ScheduleKind::PracticalDecay;
  } else if (preset == "svrg") {
    e.preset = Preset::Svrg;
    e.estimator = EstimatorSpec::scaled_svrg();
    e.schedule = ScheduleKind::Fixed;
  } else if (preset == "msvrg") {
    e.preset = Preset::Msvrg;
    e.estimator = EstimatorSpec::weighted_unbiased(0.5);
    e.schedule = ScheduleKind::Practical;
  } else if (preset == "isvrg+") {
    e.preset = Preset::IsvrgPlus;
    e.estimator = EstimatorSpec::hybrid_switch();
    e.schedule = ScheduleKind::HybridMax;
  } else {
    throw ConfigError("unknown preset '" + std::string(preset) + "'");
  }
  return e;
}

std::optional<std::uint64_t> Budget::ifo_cap(Index n) const {
  std::optional<std::uint64_t> cap = ifo;
  if (passes) {
    const auto from_passes = static_cast<std::uint64_t>(std::llround(*passes * double(n)));
    cap = cap ? std::min(*cap, from_passes) : from_passes;
  }
  return cap;
}

const OptimizerEntry& ExperimentConfig::optimizer(std::string_view name) const {
  for (const auto& e : optimizers)
    if (e.name == name) return e;
  throw ConfigError("no optimizer named '" + std::string(name) + "' in the config");
}

ExperimentConfig parse_config(const json& doc) {
  require_keys(doc, "config", {"problem", "optimizers", "seeds", "budget", "output"});
  for (const char* key : {"problem", "optimizers", "seeds", "budget"})
    if (!doc.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");

  ExperimentConfig cfg;
  cfg.problem = parse_problem(doc.at("problem"), cfg.init);

  const json& opts = doc.at("optimizers");
  if (!opts.is_array() || opts.empty()) throw ConfigError("optimizers must be a non-empty array");
  std::set<std::string> names;
  for (const auto& o : opts) {
    cfg.optimizers.push_back(parse_optimizer(o));
    if (!names.insert(cfg.optimizers.back().name).second)
      throw ConfigError("duplicate optimizer name '" + cfg.optimizers.back().name + "'");
  }

  try {
    cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const json::exception&) {
    throw ConfigError("seeds must be an array of unsigned integers");
  }
  if (cfg.seeds.empty()) throw ConfigError("at least one seed is required");

  cfg.budget = parse_budget(doc.at("budget"));
  if (doc.contains("output")) cfg.output = parse_output(doc.at("output"));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

Experiment prepare(const ExperimentConfig& config) {
  Experiment exp;
  exp.config = config;
  exp.problem = make_problem(config.problem);
  const auto& meta = exp.problem->metadata();
  exp.lipschitz = meta.lipschitz ? *meta.lipschitz
                                 : estimate_lipschitz(*exp.problem, 1000, 1.0, config.problem.seed);
  if (!(exp.lipschitz > 0)) exp.lipschitz = 1.0;

  exp.x0 = Vector::Zero(exp.problem->dim());
  if (config.init.kind == "normal") {
    CounterRng rng = CounterRng(config.init.seed).substream(7);
    for (Index j = 0; j < exp.x0.size(); ++j) exp.x0(j) = config.init.scale * rng.normal();
  }
  return exp;
}

}  // namespace isvrg::bench
