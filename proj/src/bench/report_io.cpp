#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "isvrg/bench.hpp"

namespace isvrg::bench {

using nlohmann::json;

namespace {

const char* const kTraceHeader = "epoch,cum_ifo,objective,grad_sq,step_size,branch,second_moment";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw IoError("bad number '" + s + "' in trace");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw IoError("bad integer '" + s + "' in trace");
  return v;
}

// JSON has no inf / nan; they go out as strings
json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

std::string_view regime_name(Regime r) { return r == Regime::Decayed ? "decayed" : "fixed"; }

std::string interval_text(const Interval& iv) {
  if (iv.empty()) return "empty";
  return std::string(iv.lo_closed ? "[" : "(") + format_double(iv.lo) + ", " +
         format_double(iv.hi) + (iv.hi_closed ? "]" : ")");
}

std::string opt_text(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("n/a");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : trace) {
    out += std::to_string(r.epoch) + ',' + std::to_string(r.cum_ifo) + ',' +
           format_double(r.objective) + ',' + format_double(r.grad_sq) + ',' +
           format_double(r.step_size) + ',' + std::string(branch_name(r.branch)) + ',' +
           format_double(r.second_moment) + '\n';
  }
  return out;
}

std::vector<TraceRecord> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw IoError("trace CSV has a bad header");
  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw IoError("trace row needs 7 fields: " + line);
    TraceRecord r;
    r.epoch = static_cast<Index>(parse_uint(f[0]));
    r.cum_ifo = parse_uint(f[1]);
    r.objective = parse_double(f[2]);
    r.grad_sq = parse_double(f[3]);
    r.step_size = parse_double(f[4]);
    if (f[5] == "decayed") r.branch = Branch::Decayed;
    else if (f[5] == "fixed") r.branch = Branch::Fixed;
    else throw IoError("unknown branch '" + f[5] + "' in trace");
    r.second_moment = parse_double(f[6]);
    out.push_back(r);
  }
  return out;
}

std::string trace_file_name(const std::string& optimizer, std::uint64_t seed) {
  return optimizer + "_" + std::to_string(seed) + ".csv";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
  if (!out) throw IoError("write to " + path.string() + " failed");
}

void write_compare(const CompareResult& result, const OutputSpec& output) {
  if (output.csv) {
    for (const auto& cell : result.cells)
      write_text(output.dir / trace_file_name(cell.optimizer, cell.seed), trace_csv(cell.trace));

    std::string summary = "optimizer,cum_ifo,median_grad_sq,min_grad_sq,max_grad_sq\n";
    for (const auto& r : result.summary)
      summary += r.optimizer + ',' + std::to_string(r.cum_ifo) + ',' + format_double(r.median) +
                 ',' + format_double(r.min) + ',' + format_double(r.max) + '\n';
    write_text(output.dir / "summary.csv", summary);

    std::string finals = "optimizer,tuned_value,median_grad_sq,min_grad_sq,max_grad_sq,diverged,seeds\n";
    for (const auto& r : result.finals)
      finals += r.optimizer + ',' + (r.tuned_value ? format_double(*r.tuned_value) : "") + ',' +
                format_double(r.median) + ',' + format_double(r.min) + ',' +
                format_double(r.max) + ',' + std::to_string(r.diverged) + ',' +
                std::to_string(r.seeds) + '\n';
    write_text(output.dir / "final.csv", finals);

    std::string tuning = "optimizer,scalar,seed,value,final_grad_sq,chosen\n";
    for (const auto& t : result.tuning)
      for (const auto& [value, score] : t.scores)
        tuning += t.optimizer + ',' + std::string(tuned_scalar_name(t.scalar)) + ',' +
                  std::to_string(t.seed) + ',' + format_double(value) + ',' +
                  format_double(score) + ',' + (t.chosen && *t.chosen == value ? "1" : "0") +
                  '\n';
    write_text(output.dir / "tuning.csv", tuning);
  }

  if (output.json) {
    json doc;
    doc["summary"] = json::array();
    for (const auto& r : result.summary)
      doc["summary"].push_back({{"optimizer", r.optimizer},
                                {"cum_ifo", r.cum_ifo},
                                {"median_grad_sq", num(r.median)},
                                {"min_grad_sq", num(r.min)},
                                {"max_grad_sq", num(r.max)}});
    doc["final"] = json::array();
    for (const auto& r : result.finals)
      doc["final"].push_back({{"optimizer", r.optimizer},
                              {"tuned_value", num(r.tuned_value)},
                              {"median_grad_sq", num(r.median)},
                              {"min_grad_sq", num(r.min)},
                              {"max_grad_sq", num(r.max)},
                              {"diverged", r.diverged},
                              {"seeds", r.seeds}});
    doc["tuning"] = json::array();
    for (const auto& t : result.tuning) {
      json scores = json::array();
      for (const auto& [value, score] : t.scores) scores.push_back({num(value), num(score)});
      doc["tuning"].push_back({{"optimizer", t.optimizer},
                               {"scalar", tuned_scalar_name(t.scalar)},
                               {"seed", t.seed},
                               {"scores", scores},
                               {"chosen", num(t.chosen)}});
    }
    write_text(output.dir / "summary.json", doc.dump(2));
  }
}

json theory_report_json(const TheoryReport& r) {
  const TheoryInputs& in = r.inputs;
  json doc;
  doc["inputs"] = {{"n", in.n},         {"L", num(in.lipschitz)}, {"sigma", num(in.sigma)},
                   {"gap", num(in.gap)}, {"T", in.T},              {"lambda", num(in.lambda)},
                   {"a", num(in.a)},     {"b", num(in.b)},         {"alpha", num(in.alpha)},
                   {"beta", num(r.beta)},
                   {"nu", {num(in.nu.nu), num(in.nu.nu1), num(in.nu.nu2), num(in.nu.nu_tilde)}},
                   {"epsilon", num(in.epsilon)}};
  doc["decayed"] = {{"c_svrg", num(r.c_svrg)},
                    {"c_unbiased", num(r.c_unbiased)},
                    {"c_biased", num(r.c_biased)},
                    {"c_hybrid", num(r.c_hybrid)},
                    {"factor_svrg", num(r.factor_svrg)},
                    {"factor_unbiased", num(r.factor_unbiased)},
                    {"factor_biased", num(r.factor_biased)},
                    {"base", num(r.decayed_base)},
                    {"bound_svrg", num(r.decayed_svrg)},
                    {"bound_unbiased", num(r.decayed_unbiased)},
                    {"bound_biased", num(r.decayed_biased)}};
  doc["fixed"] = json::array();
  for (const auto& e : r.recursions) {
    json c = json::array(), omega = json::array();
    for (double v : e.recursion.c) c.push_back(num(v));
    for (double v : e.recursion.omega) omega.push_back(num(v));
    doc["fixed"].push_back({{"variant", variant_name(e.variant)},
                            {"eta", num(e.setup.eta)},
                            {"beta", num(e.setup.beta)},
                            {"m", e.setup.m},
                            {"c", c},
                            {"omega", omega},
                            {"gamma", num(e.recursion.gamma)},
                            {"gamma_positive", e.recursion.positive},
                            {"gamma_lower_bound", num(e.gamma_lower_bound)},
                            {"bound", num(e.bound)}});
  }
  doc["fixed_closed_form"] = {{"svrg", num(r.closed_form.svrg)},
                              {"unbiased", num(r.closed_form.unbiased)},
                              {"biased", num(r.closed_form.biased)}};
  doc["hybrid"] = {{"decayed_term", num(r.hybrid.decayed_term)},
                   {"fixed_term", num(r.hybrid.fixed_term)},
                   {"bound", num(r.hybrid.value)}};
  doc["admissible_lambda"] = json::array();
  for (const auto& a : r.admissible) {
    const Interval& iv = a.result.interval;
    doc["admissible_lambda"].push_back(
        {{"variant", variant_name(a.variant)},
         {"regime", regime_name(a.regime)},
         {"empty", iv.empty()},
         {"lo", num(iv.lo)},
         {"hi", num(iv.hi)},
         {"lo_closed", iv.lo_closed},
         {"hi_closed", iv.hi_closed},
         {"optimum", num(a.result.optimum)},
         {"optimum_attained", a.result.optimum_attained}});
  }
  if (r.complexity) {
    doc["ifo_complexity"] = {
        {"value", num(r.complexity->value)},
        {"inverse_epsilon_squared", num(r.complexity->inverse_epsilon_squared)},
        {"size_over_epsilon", num(r.complexity->size_over_epsilon)},
        {"regime", r.complexity->regime == IfoRegime::SizeOverEpsilon ? "size_over_epsilon"
                                                                      : "inverse_epsilon_squared"}};
  } else {
    doc["ifo_complexity"] = nullptr;
  }
  doc["reconstructed"] = r.reconstructed;
  doc["notes"] = r.notes;
  return doc;
}

std::string theory_report_text(const TheoryReport& r) {
  const TheoryInputs& in = r.inputs;
  std::ostringstream o;
  o << "inputs\n"
    << "  n " << in.n << "  L " << format_double(in.lipschitz) << "  sigma "
    << format_double(in.sigma) << "  gap " << format_double(in.gap) << "  T " << in.T << '\n'
    << "  lambda " << format_double(in.lambda) << "  a " << format_double(in.a) << "  b "
    << format_double(in.b) << "  alpha " << format_double(in.alpha) << "  beta "
    << format_double(r.beta) << '\n';

  o << "\ndecayed step\n"
    << "  c_svrg           " << opt_text(r.c_svrg) << '\n'
    << "  c_unbiased       " << opt_text(r.c_unbiased) << '\n'
    << "  c_biased         " << opt_text(r.c_biased) << '\n'
    << "  c_hybrid         " << opt_text(r.c_hybrid) << '\n'
    << "  factor_svrg      " << format_double(r.factor_svrg) << '\n'
    << "  factor_unbiased  " << opt_text(r.factor_unbiased) << '\n'
    << "  factor_biased    " << opt_text(r.factor_biased) << '\n'
    << "  base             " << format_double(r.decayed_base) << '\n'
    << "  bound_svrg       " << format_double(r.decayed_svrg) << '\n'
    << "  bound_unbiased   " << opt_text(r.decayed_unbiased) << '\n'
    << "  bound_biased     " << opt_text(r.decayed_biased) << '\n';

  o << "\nfixed step\n";
  for (const auto& e : r.recursions) {
    o << "  " << variant_name(e.variant) << ": eta " << format_double(e.setup.eta) << "  beta "
      << format_double(e.setup.beta) << "  m " << e.setup.m << "  gamma "
      << format_double(e.recursion.gamma) << (e.recursion.positive ? "" : " (non-positive)")
      << "  gamma_lb " << format_double(e.gamma_lower_bound) << "  bound " << opt_text(e.bound)
      << '\n';
  }
  o << "  closed form: svrg " << opt_text(r.closed_form.svrg) << "  unbiased "
    << opt_text(r.closed_form.unbiased) << "  biased " << opt_text(r.closed_form.biased) << '\n';

  o << "\nhybrid\n"
    << "  decayed_term " << format_double(r.hybrid.decayed_term) << "  fixed_term "
    << format_double(r.hybrid.fixed_term) << "  bound " << format_double(r.hybrid.value) << '\n';

  o << "\nadmissible lambda\n";
  for (const auto& a : r.admissible) {
    o << "  " << variant_name(a.variant) << ' ' << regime_name(a.regime) << ": "
      << interval_text(a.result.interval);
    if (a.result.optimum)
      o << "  optimum " << format_double(*a.result.optimum)
        << (a.result.optimum_attained ? "" : " (infimum)");
    o << '\n';
  }

  if (r.complexity) {
    o << "\nifo complexity " << format_double(r.complexity->value) << "  ("
      << (r.complexity->regime == IfoRegime::SizeOverEpsilon ? "n^(1/5)/eps" : "1/eps^2")
      << ")\n";
  }
  if (!r.reconstructed.empty()) {
    o << "\nreconstructed\n";
    for (const auto& s : r.reconstructed) o << "  " << s << '\n';
  }
  if (!r.notes.empty()) {
    o << "\nnotes\n";
    for (const auto& s : r.notes) o << "  " << s << '\n';
  }
  return o.str();
}

}  // namespace isvrg::bench
