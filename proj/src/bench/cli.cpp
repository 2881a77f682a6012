#include <algorithm>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "isvrg/bench.hpp"
#include "isvrg/rng.hpp"

namespace isvrg::bench {

namespace {

struct RunArgs {
  std::string config, optimizer, out;
  std::optional<std::uint64_t> seed;
};

struct CompareArgs {
  std::string config, out;
  int workers = 0;
};

struct SweepArgs {
  std::string config, optimizer, out, field = "lambda";
  std::vector<double> lambdas;
  int workers = 0;
};

struct TheoryArgs {
  TheoryInputs in;
  std::optional<double> beta, epsilon;
  bool json = false;
  std::string out;
};

struct GradcheckArgs {
  ProblemRecipe recipe;
  std::string family;
  double h = 1e-5;
  int points = 5;
  std::optional<double> tolerance;
};

int do_run(const RunArgs& a) {
  Experiment exp = prepare(load_config(a.config));
  OptimizerEntry entry = exp.config.optimizer(a.optimizer);
  tune(exp, entry, resolve_workers(0));
  const std::uint64_t seed = a.seed.value_or(exp.config.seeds.front());
  const CellResult cell = run_cell(exp, entry, seed);
  const std::filesystem::path dir =
      a.out.empty() ? exp.config.output.dir : std::filesystem::path(a.out);
  write_text(dir / trace_file_name(entry.name, seed), trace_csv(cell.trace));
  std::printf("%s seed %llu: %zu epochs, %llu IFO, final grad_sq %s\n", entry.name.c_str(),
              static_cast<unsigned long long>(seed), cell.trace.size(),
              static_cast<unsigned long long>(cell.ledger.optimization),
              format_double(cell.final_grad_sq()).c_str());
  if (cell.diverged) {
    std::fprintf(stderr, "diverged: %s\n", cell.error.c_str());
    return kExitDiverged;
  }
  return kExitOk;
}

int do_compare(const CompareArgs& a) {
  Experiment exp = prepare(load_config(a.config));
  if (!a.out.empty()) exp.config.output.dir = a.out;
  const CompareResult result = compare(exp, resolve_workers(a.workers));
  write_compare(result, exp.config.output);
  std::printf("%-12s %-10s %-24s %s\n", "optimizer", "tuned", "median final grad_sq", "diverged");
  for (const auto& r : result.finals)
    std::printf("%-12s %-10s %-24s %d/%d\n", r.optimizer.c_str(),
                r.tuned_value ? format_double(*r.tuned_value).c_str() : "-",
                format_double(r.median).c_str(), r.diverged, r.seeds);
  const bool all_diverged = std::all_of(result.cells.begin(), result.cells.end(),
                                        [](const CellResult& c) { return c.diverged; });
  return all_diverged ? kExitDiverged : kExitOk;
}

int do_sweep(const SweepArgs& a) {
  Experiment exp = prepare(load_config(a.config));
  LambdaField field = LambdaField::Lambda;
  if (a.field == "lambda_biased") field = LambdaField::LambdaBiased;
  else if (a.field == "lambda_unbiased") field = LambdaField::LambdaUnbiased;
  else if (a.field != "lambda") throw ConfigError("unknown lambda field '" + a.field + "'");
  const auto rows = sweep_lambda(exp, exp.config.optimizer(a.optimizer), a.lambdas, field,
                                 resolve_workers(a.workers));
  std::string csv = "lambda,median_grad_sq,min_grad_sq,max_grad_sq,diverged\n";
  for (const auto& r : rows)
    csv += format_double(r.lambda) + ',' + format_double(r.median) + ',' + format_double(r.min) +
           ',' + format_double(r.max) + ',' + std::to_string(r.diverged) + '\n';
  const std::filesystem::path dir =
      a.out.empty() ? exp.config.output.dir : std::filesystem::path(a.out);
  write_text(dir / ("sweep_" + a.optimizer + ".csv"), csv);
  std::fputs(csv.c_str(), stdout);
  const bool all_diverged = std::all_of(rows.begin(), rows.end(), [&](const SweepRow& r) {
    return r.diverged == static_cast<int>(exp.config.seeds.size());
  });
  return all_diverged ? kExitDiverged : kExitOk;
}

int do_theory(TheoryArgs a) {
  a.in.beta = a.beta;
  a.in.epsilon = a.epsilon;
  const TheoryReport report = build_theory_report(a.in);
  const std::string text =
      a.json ? theory_report_json(report).dump(2) + "\n" : theory_report_text(report);
  if (a.out.empty()) std::fputs(text.c_str(), stdout);
  else write_text(a.out, text);
  return kExitOk;
}

int do_gradcheck(GradcheckArgs a) {
  a.recipe.family = parse_family(a.family);
  a.recipe.validate();
  if (a.points < 1) throw ConfigError("--points must be positive");
  if (!(a.h > 0)) throw ConfigError("--fd-step must be positive");
  const auto problem = make_problem(a.recipe);
  const double tol =
      a.tolerance.value_or(a.recipe.family == Family::QuadraticSum ? 1e-9 : 1e-5);
  CounterRng rng = CounterRng(a.recipe.seed).substream(3);
  double worst = 0.0;
  for (int p = 0; p < a.points; ++p) {
    Vector x(problem->dim());
    for (Index j = 0; j < x.size(); ++j) x(j) = rng.normal();
    worst = std::max(worst, finite_diff_check(*problem, x, a.h));
  }
  std::printf("%s n=%lld d=%lld: max relative error %s (tolerance %s)\n", a.family.c_str(),
              static_cast<long long>(problem->size()), static_cast<long long>(problem->dim()),
              format_double(worst).c_str(), format_double(tol).c_str());
  return worst <= tol ? kExitOk : kExitConfig;
}

}  // namespace

int cli_run(int argc, const char* const* argv) {
  CLI::App app{"variance-reduced SGD benchmark and bound calculator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run one optimizer on one seed");
  run_cmd->add_option("--config", run_args.config, "experiment JSON")->required();
  run_cmd->add_option("--optimizer", run_args.optimizer, "optimizer name")->required();
  run_cmd->add_option("--seed", run_args.seed, "seed (default: first in config)");
  run_cmd->add_option("--out", run_args.out, "output directory");

  CompareArgs cmp_args;
  auto* cmp_cmd = app.add_subcommand("compare", "all optimizers x all seeds");
  cmp_cmd->add_option("--config", cmp_args.config, "experiment JSON")->required();
  cmp_cmd->add_option("--workers", cmp_args.workers, "parallel cells");
  cmp_cmd->add_option("--out", cmp_args.out, "output directory");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep-lambda", "one optimizer across a lambda grid");
  sweep_cmd->add_option("--config", sweep_args.config, "experiment JSON")->required();
  sweep_cmd->add_option("--optimizer", sweep_args.optimizer, "optimizer name")->required();
  sweep_cmd->add_option("--lambdas", sweep_args.lambdas, "comma-separated grid")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--field", sweep_args.field, "lambda | lambda_biased | lambda_unbiased");
  sweep_cmd->add_option("--workers", sweep_args.workers, "parallel cells");
  sweep_cmd->add_option("--out", sweep_args.out, "output directory");

  TheoryArgs th;
  auto* th_cmd = app.add_subcommand("theory", "evaluate constants and bounds");
  th_cmd->add_option("--n", th.in.n)->required();
  th_cmd->add_option("--L", th.in.lipschitz)->required();
  th_cmd->add_option("--sigma", th.in.sigma)->required();
  th_cmd->add_option("--gap", th.in.gap)->required();
  th_cmd->add_option("--T", th.in.T)->required();
  th_cmd->add_option("--lambda", th.in.lambda);
  th_cmd->add_option("--a", th.in.a);
  th_cmd->add_option("--b", th.in.b);
  th_cmd->add_option("--alpha", th.in.alpha);
  th_cmd->add_option("--beta", th.beta);
  th_cmd->add_option("--nu", th.in.nu.nu);
  th_cmd->add_option("--nu1", th.in.nu.nu1);
  th_cmd->add_option("--nu2", th.in.nu.nu2);
  th_cmd->add_option("--nu-tilde", th.in.nu.nu_tilde);
  th_cmd->add_option("--epsilon", th.epsilon);
  th_cmd->add_flag("--json", th.json, "JSON instead of text");
  th_cmd->add_option("--out", th.out, "write to file instead of stdout");

  GradcheckArgs gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of a built-in family");
  gc_cmd->add_option("--family", gc.family, "quadratic | sigmoid | logistic | mlp")->required();
  gc_cmd->add_option("--n", gc.recipe.n)->required();
  gc_cmd->add_option("--d", gc.recipe.d)->required();
  gc_cmd->add_option("--seed", gc.recipe.seed);
  gc_cmd->add_option("--fd-step", gc.h, "finite-difference step");
  gc_cmd->add_option("--points", gc.points);
  gc_cmd->add_option("--hidden", gc.recipe.hidden);
  gc_cmd->add_option("--regularizer", gc.recipe.regularizer);
  gc_cmd->add_option("--tolerance", gc.tolerance);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return do_run(run_args);
    if (*cmp_cmd) return do_compare(cmp_args);
    if (*sweep_cmd) return do_sweep(sweep_args);
    if (*th_cmd) return do_theory(th);
    if (*gc_cmd) return do_gradcheck(gc);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDiverged;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace isvrg::bench
