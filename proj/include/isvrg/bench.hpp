#ifndef ISVRG_BENCH_HPP
#define ISVRG_BENCH_HPP

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "isvrg/optimizer.hpp"
#include "isvrg/problems.hpp"
#include "isvrg/theory.hpp"

namespace isvrg::bench {

enum class Preset { Sgd, Svrg, Msvrg, IsvrgPlus, Custom };

/// The schedule scalar tuned by grid search: eta0 for the practical
/// schedules, c for the decayed / hybrid ones, nothing for a fixed step.
enum class TunedScalar { None, Eta0, C };

std::string_view tuned_scalar_name(TunedScalar scalar);

struct InitSpec {
  std::string kind = "zeros";  // zeros | normal
  double scale = 0.1;
  std::uint64_t seed = 0;
};

struct OptimizerEntry {
  std::string name;
  Preset preset = Preset::Custom;
  EstimatorSpec estimator;
  ScheduleKind schedule = ScheduleKind::Fixed;
  std::optional<double> c;
  std::optional<double> eta0;
  std::optional<double> lipschitz;
  double a = 1.0;
  double b = 2.0;
  double alpha = 0.2;
  std::optional<Index> inner_length;
  SnapshotGradient snapshot_gradient = SnapshotGradient::Auto;
  OutputPolicy output_policy = OutputPolicy::LastSnapshot;
  std::optional<std::vector<double>> tune_grid;
  std::optional<std::uint64_t> tune_seed;

  TunedScalar tuned_scalar() const;
  /// Tuning runs when the free scalar was left unset or a grid was given.
  bool wants_tuning() const;
  std::vector<double> grid() const;
  void set_tuned(double value);
  std::optional<double> tuned_value() const;
};

/// Preset names: sgd, svrg, msvrg, isvrg+.
OptimizerEntry preset_entry(std::string_view preset);

struct Budget {
  std::optional<double> passes;  // multiples of n optimization IFO
  std::optional<std::uint64_t> ifo;
  std::optional<Index> epochs;
  double epsilon = 0.0;

  std::optional<std::uint64_t> ifo_cap(Index n) const;
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  bool csv = true;
  bool json = false;
};

struct ExperimentConfig {
  ProblemRecipe problem;
  InitSpec init;
  std::vector<OptimizerEntry> optimizers;
  std::vector<std::uint64_t> seeds;
  Budget budget;
  OutputSpec output;

  const OptimizerEntry& optimizer(std::string_view name) const;
};

/// Strict parse: unknown keys anywhere are configuration errors.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// A config with its problem built, L resolved and x0 drawn.
struct Experiment {
  ExperimentConfig config;
  std::shared_ptr<const Problem> problem;
  double lipschitz = 1.0;  // metadata L, else the empirical estimate
  Vector x0;
};

Experiment prepare(const ExperimentConfig& config);

RunConfig<double> make_run_config(const Experiment& exp, const OptimizerEntry& entry,
                                  std::uint64_t seed);

struct CellResult {
  std::string optimizer;
  std::uint64_t seed = 0;
  std::vector<TraceRecord> trace;
  IfoLedger ledger;
  bool diverged = false;
  bool truncated = false;
  std::string error;

  /// grad_sq of the last record; +inf for a diverged or empty run.
  double final_grad_sq() const;
};

CellResult run_cell(const Experiment& exp, const OptimizerEntry& entry, std::uint64_t seed);

struct TuningResult {
  std::string optimizer;
  TunedScalar scalar = TunedScalar::None;
  std::uint64_t seed = 0;
  std::vector<std::pair<double, double>> scores;  // (value, final grad_sq)
  std::optional<double> chosen;
};

/// Grid search on the held-out seed; writes the winner into `entry`.
TuningResult tune(const Experiment& exp, OptimizerEntry& entry, int workers);

struct SummaryRow {
  std::string optimizer;
  std::uint64_t cum_ifo;
  double median;
  double min;
  double max;
};

struct FinalRow {
  std::string optimizer;
  std::optional<double> tuned_value;
  double median;
  double min;
  double max;
  int diverged;
  int seeds;
};

struct CompareResult {
  std::vector<OptimizerEntry> resolved;  // entries after tuning
  std::vector<TuningResult> tuning;
  std::vector<CellResult> cells;
  std::vector<SummaryRow> summary;
  std::vector<FinalRow> finals;

  const FinalRow& final_row(std::string_view optimizer) const;
};

CompareResult compare(const Experiment& exp, int workers);

struct SweepRow {
  double lambda;
  double median;
  double min;
  double max;
  int diverged;
};

enum class LambdaField { Lambda, LambdaBiased, LambdaUnbiased };

std::vector<SweepRow> sweep_lambda(const Experiment& exp, const OptimizerEntry& entry,
                                   std::span<const double> lambdas, LambdaField field,
                                   int workers);

// -- helpers shared with the tests -------------------------------------------

/// Median of the finite-or-infinite values, NaN ignored; NaN if none remain.
double median(std::vector<double> values);

/// grad_sq at `ifo` by linear interpolation between records; NaN before the
/// first record, the last value after it (+inf once a run has diverged).
double grad_sq_at(const std::vector<TraceRecord>& trace, bool diverged, std::uint64_t ifo);

std::vector<std::uint64_t> checkpoint_grid(std::uint64_t limit, Index n);

/// Runs fn(k) for k in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// Worker count from ISVRG_WORKERS if set, else `requested`, else hardware threads.
int resolve_workers(int requested);

// -- file formats ----------------------------------------------------------------

std::string format_double(double v);
std::string trace_csv(const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> parse_trace_csv(const std::string& text);
std::string trace_file_name(const std::string& optimizer, std::uint64_t seed);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_compare(const CompareResult& result, const OutputSpec& output);

nlohmann::json theory_report_json(const TheoryReport& report);
std::string theory_report_text(const TheoryReport& report);

/// Entry point of the command-line tool; returns the process exit code.
int cli_run(int argc, const char* const* argv);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitIo = 3;

}  // namespace isvrg::bench

#endif  // ISVRG_BENCH_HPP
