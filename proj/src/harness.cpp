#include "rpd/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fmt/core.h>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "rpd/baselines.hpp"
#include "rpd/dataio.hpp"
#include "rpd/frpd.hpp"
#include "rpd/schedule.hpp"
#include "rpd/srpd.hpp"

namespace rpd {

using nlohmann::json;

ConfigError::ConfigError(std::string field, const std::string& what)
    : std::invalid_argument(fmt::format("{}: {}", field, what)), field_(std::move(field)) {}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_baseline(const std::string& method) { return method == "pdhg" || method == "spdhg"; }

std::string resolved_schedule(const RunConfig& cfg) {
  if (!cfg.schedule.empty()) return cfg.schedule;
  if (cfg.method == "frpd") return "s1";
  if (cfg.method == "srpd") return "s3";
  return "none";
}

void require_positive(std::optional<double> v, const char* field) {
  if (v && !(*v > 0.0 && std::isfinite(*v))) throw ConfigError(field, "must be a positive number");
}

}  // namespace

void validate(const RunConfig& cfg) {
  static const std::set<std::string> methods{"frpd", "srpd", "pdhg", "spdhg"};
  if (!methods.count(cfg.method)) throw ConfigError("method", fmt::format("unknown method '{}'", cfg.method));
  const std::string sched = resolved_schedule(cfg);
  if (is_baseline(cfg.method)) {
    if (sched != "none") throw ConfigError("schedule", fmt::format("{} takes no schedule, got '{}'", cfg.method, sched));
  } else {
    ScheduleKind kind;
    try {
      kind = parse_schedule(sched);
    } catch (const std::exception& e) {
      throw ConfigError("schedule", e.what());
    }
    if (cfg.method == "frpd" && !is_frpd_kind(kind))
      throw ConfigError("schedule", fmt::format("frpd runs s1, s2, s6 or s7, not {}", sched));
    if (cfg.method == "srpd" && !is_srpd_kind(kind))
      throw ConfigError("schedule", fmt::format("srpd runs s3, s4 or s5, not {}", sched));
  }
  if (cfg.zero_eta && cfg.method != "frpd") throw ConfigError("zero_eta", "only applies to frpd");
  require_positive(cfg.c, "c");
  require_positive(cfg.rho0, "rho0");
  require_positive(cfg.step_tau, "step_tau");
  require_positive(cfg.step_sigma, "step_sigma");
  if (!(cfg.theta >= 0.0)) throw ConfigError("theta", "must be >= 0");
  if (cfg.blocks == 0) throw ConfigError("blocks", "must be >= 1");
  if (cfg.dual_blocks && *cfg.dual_blocks == 0) throw ConfigError("dual_blocks", "must be >= 1");
  if (cfg.epochs == 0) throw ConfigError("epochs", "must be >= 1");
  if (cfg.cadence == 0) throw ConfigError("cadence", "must be >= 1");
  if (cfg.seeds.empty()) throw ConfigError("seeds", "need at least one seed");
  if (cfg.out.empty()) throw ConfigError("out", "empty output path");

  const ProblemConfig& p = cfg.problem;
  if (p.kind != "lad" && p.kind != "svm") throw ConfigError("problem.kind", fmt::format("unknown problem '{}'", p.kind));
  if (!p.path) {
    if (p.rows == 0 || p.cols == 0) throw ConfigError("problem.rows", "dimensions must be >= 1");
    if (!(p.density > 0.0 && p.density <= 1.0)) throw ConfigError("problem.density", "must be in (0, 1]");
    if (!(p.noise >= 0.0)) throw ConfigError("problem.noise", "must be >= 0");
    if (!(p.support >= 0.0 && p.support <= 1.0)) throw ConfigError("problem.support", "must be in [0, 1]");
    if (!(p.flip >= 0.0 && p.flip <= 1.0)) throw ConfigError("problem.flip", "must be in [0, 1]");
  }
  require_positive(p.lambda, "problem.lambda");
  if (!(p.dual_curvature >= 0.0)) throw ConfigError("problem.dual_curvature", "must be >= 0");
  if (p.sigma != "unit" && p.sigma != "colnorm") throw ConfigError("problem.sigma", "must be unit or colnorm");
}

// ---------------------------------------------------------------- json

namespace {

template <class T>
void take(const json& j, const char* key, T& dst, const std::string& prefix = "") {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(prefix + key, e.what());
  }
}

template <class T>
void take_opt(const json& j, const char* key, std::optional<T>& dst, const std::string& prefix = "") {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) {
    dst.reset();
    return;
  }
  try {
    dst = v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(prefix + key, e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError(prefix + it.key(), "unknown key");
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json("auto");
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config", e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  reject_unknown(j,
                 {"problem", "method", "schedule", "c", "rho0", "blocks", "dual_blocks", "epochs", "seeds", "cadence",
                  "out", "timing", "average", "multiplier", "zero_eta", "step_tau", "step_sigma", "theta"},
                 "");
  RunConfig cfg;
  if (j.contains("problem")) {
    const json& p = j.at("problem");
    if (!p.is_object()) throw ConfigError("problem", "must be an object");
    reject_unknown(p,
                   {"kind", "path", "rows", "cols", "density", "noise", "support", "flip", "data_seed", "lambda",
                    "dual_curvature", "sigma"},
                   "problem.");
    ProblemConfig& pc = cfg.problem;
    take(p, "kind", pc.kind, "problem.");
    take_opt(p, "path", pc.path, "problem.");
    take(p, "rows", pc.rows, "problem.");
    take(p, "cols", pc.cols, "problem.");
    take(p, "density", pc.density, "problem.");
    take(p, "noise", pc.noise, "problem.");
    take(p, "support", pc.support, "problem.");
    take(p, "flip", pc.flip, "problem.");
    take(p, "data_seed", pc.data_seed, "problem.");
    take_opt(p, "lambda", pc.lambda, "problem.");
    take(p, "dual_curvature", pc.dual_curvature, "problem.");
    take(p, "sigma", pc.sigma, "problem.");
  }
  take(j, "method", cfg.method);
  take(j, "schedule", cfg.schedule);
  take_opt(j, "c", cfg.c);
  take_opt(j, "rho0", cfg.rho0);
  take(j, "blocks", cfg.blocks);
  take_opt(j, "dual_blocks", cfg.dual_blocks);
  take(j, "epochs", cfg.epochs);
  if (j.contains("seeds") && j.at("seeds").is_number()) {
    cfg.seeds = {j.at("seeds").get<std::uint64_t>()};
  } else {
    take(j, "seeds", cfg.seeds);
  }
  take(j, "cadence", cfg.cadence);
  take(j, "out", cfg.out);
  take(j, "timing", cfg.timing);
  take(j, "average", cfg.average);
  take(j, "multiplier", cfg.multiplier);
  take(j, "zero_eta", cfg.zero_eta);
  take_opt(j, "step_tau", cfg.step_tau);
  take_opt(j, "step_sigma", cfg.step_sigma);
  take(j, "theta", cfg.theta);
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", fmt::format("cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
  const ProblemConfig& p = cfg.problem;
  json jp{{"kind", p.kind},
          {"path", p.path ? json(*p.path) : json(nullptr)},
          {"rows", p.rows},
          {"cols", p.cols},
          {"density", p.density},
          {"noise", p.noise},
          {"support", p.support},
          {"flip", p.flip},
          {"data_seed", p.data_seed},
          {"lambda", opt_json(p.lambda)},
          {"dual_curvature", p.dual_curvature},
          {"sigma", p.sigma}};
  json j{{"problem", jp},
         {"method", cfg.method},
         {"schedule", cfg.schedule},
         {"c", opt_json(cfg.c)},
         {"rho0", opt_json(cfg.rho0)},
         {"blocks", cfg.blocks},
         {"dual_blocks", opt_json(cfg.dual_blocks)},
         {"epochs", cfg.epochs},
         {"seeds", cfg.seeds},
         {"cadence", cfg.cadence},
         {"out", cfg.out},
         {"timing", cfg.timing},
         {"average", cfg.average},
         {"multiplier", cfg.multiplier},
         {"zero_eta", cfg.zero_eta},
         {"step_tau", opt_json(cfg.step_tau)},
         {"step_sigma", opt_json(cfg.step_sigma)},
         {"theta", cfg.theta}};
  return j.dump(2);
}

// ---------------------------------------------------------------- problems

ProblemSpec build_problem(const ProblemConfig& pc, std::size_t n_blocks, std::size_t m_blocks) {
  ProblemSpec spec;
  try {
    if (pc.kind == "lad") {
      LadInstance inst;
      if (pc.path) {
        inst = load_instance(*pc.path);
      } else {
        inst = gen_lad({pc.rows, pc.cols, pc.density, pc.noise, pc.support, pc.data_seed});
      }
      const double lambda = pc.lambda.value_or(1.0 / static_cast<double>(inst.K.rows));
      if (n_blocks > inst.K.cols) throw ConfigError("blocks", fmt::format("{} blocks for {} columns", n_blocks, inst.K.cols));
      if (m_blocks > inst.K.rows)
        throw ConfigError("dual_blocks", fmt::format("{} blocks for {} rows", m_blocks, inst.K.rows));
      spec = build_lad(inst.K, inst.b, lambda, n_blocks, m_blocks);
    } else if (pc.kind == "svm") {
      Dataset data = pc.path ? read_libsvm(*pc.path) : gen_svm({pc.rows, pc.cols, pc.density, pc.flip, pc.data_seed});
      if (n_blocks > data.n_features)
        throw ConfigError("blocks", fmt::format("{} blocks for {} features", n_blocks, data.n_features));
      if (m_blocks > data.n_samples())
        throw ConfigError("dual_blocks", fmt::format("{} blocks for {} samples", m_blocks, data.n_samples()));
      spec = build_svm(data, pc.lambda.value_or(1e-4), n_blocks, m_blocks);
    } else {
      throw ConfigError("problem.kind", fmt::format("unknown problem '{}'", pc.kind));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const ParseError& e) {
    throw ConfigError("problem.path", e.what());
  } catch (const std::ios_base::failure& e) {
    throw ConfigError("problem.path", e.what());
  }
  if (pc.dual_curvature > 0.0) add_dual_curvature(spec, pc.dual_curvature);
  apply_sigma_rule(spec, pc.sigma == "colnorm" ? SigmaRule::ColumnNorm : SigmaRule::Unit);
  return spec;
}

ProblemSpec build_problem(const RunConfig& cfg) {
  validate(cfg);
  std::size_t m = cfg.dual_blocks.value_or(cfg.blocks);
  if (cfg.method == "pdhg") m = 1;
  return build_problem(cfg.problem, cfg.blocks, m);
}

// ---------------------------------------------------------------- runs

namespace {

RunOptions run_options(const RunConfig& cfg, std::uint64_t seed) {
  RunOptions o;
  o.epochs = cfg.epochs;
  o.seed = seed;
  o.cadence = cfg.cadence;
  o.average = cfg.average;
  o.multiplier = cfg.multiplier;
  o.zero_eta = cfg.zero_eta;
  o.timing = cfg.timing;
  return o;
}

RunResult run_with(const ProblemSpec& spec, const ProblemConstants& consts, const RunConfig& cfg,
                   std::uint64_t seed) {
  const std::vector<double> x0(spec.p(), 0.0);
  const std::vector<double> y0(spec.d(), 0.0);
  const RunOptions opts = run_options(cfg, seed);
  if (cfg.method == "pdhg" || cfg.method == "spdhg") {
    PdhgConfig pc = cfg.method == "pdhg" ? default_pdhg_config(consts) : default_spdhg_config(spec);
    if (cfg.step_tau) pc.tau = *cfg.step_tau;
    if (cfg.step_sigma) pc.sigma = *cfg.step_sigma;
    pc.theta = cfg.theta;
    return cfg.method == "pdhg" ? pdhg_run(spec, pc, x0, y0, opts) : spdhg_run(spec, pc, x0, y0, opts);
  }
  const ScheduleKind kind = parse_schedule(resolved_schedule(cfg));
  Schedule sched = [&] {
    try {
      return Schedule::make(kind, consts, cfg.c, cfg.rho0);
    } catch (const ScheduleError& e) {
      throw ConfigError("schedule", e.what());
    }
  }();
  if (cfg.method == "frpd") return frpd_run(spec, sched, x0, y0, opts);
  return srpd_run(spec, sched, x0, y0, opts);
}

}  // namespace

RunResult run_seed(const ProblemSpec& spec, const RunConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  return run_with(spec, constants(spec), cfg, seed);
}

std::size_t thread_count() {
  if (const char* env = std::getenv("RPD_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::vector<RunResult> run_seeds(const ProblemSpec& spec, const RunConfig& cfg, std::size_t threads) {
  validate(cfg);
  const ProblemConstants consts = constants(spec);
  const std::size_t count = cfg.seeds.size();
  std::vector<RunResult> results(count);
  std::vector<std::exception_ptr> errors(count);
  if (threads == 0) threads = thread_count();
  threads = std::min(threads, count);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s = next++; s < count; s = next++) {
      try {
        results[s] = run_with(spec, consts, cfg, cfg.seeds[s]);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

// ---------------------------------------------------------------- csv

namespace {

std::string cell(double v) {
  if (!std::isfinite(v)) return "";
  return fmt::format("{:.17g}", v);
}

std::string cell(const std::optional<double>& v) { return v ? cell(*v) : ""; }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line, const char* col) {
  if (s.empty()) return kInf;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ParseError(line, fmt::format("{}: bad number '{}'", col, s));
  return v;
}

std::optional<double> parse_optional(const std::string& s, std::size_t line, const char* col) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, line, col);
}

std::uint64_t parse_uint(const std::string& s, std::size_t line, const char* col) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end == s.c_str() || *end != '\0' || s[0] == '-')
    throw ParseError(line, fmt::format("{}: bad integer '{}'", col, s));
  return v;
}

}  // namespace

std::string format_trace_row(const TraceRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", r.method, r.schedule, r.seed, r.k, cell(r.epoch),
                     cell(r.primal), cell(r.dual), cell(r.gap), cell(r.feas), cell(r.dual_violation),
                     cell(r.time_ms));
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << kTraceHeader << '\n';
  for (const TraceRecord& r : trace) out << format_trace_row(r) << '\n';
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  std::size_t no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError(1, "unexpected header");
  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 11) throw ParseError(no, fmt::format("expected 11 fields, got {}", f.size()));
    TraceRecord r;
    r.method = f[0];
    r.schedule = f[1];
    r.seed = parse_uint(f[2], no, "seed");
    r.k = parse_uint(f[3], no, "k");
    r.epoch = parse_double(f[4], no, "epoch");
    r.primal = parse_double(f[5], no, "primal");
    r.dual = parse_double(f[6], no, "dual");
    r.gap = parse_double(f[7], no, "gap");
    r.feas = parse_optional(f[8], no, "feas");
    r.dual_violation = parse_double(f[9], no, "dual_violation");
    r.time_ms = parse_optional(f[10], no, "time_ms");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TraceRecord> load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  return read_trace_csv(in);
}

SummaryRow summarize(const RunResult& res, const RunConfig& cfg, std::uint64_t seed) {
  SummaryRow row;
  row.method = cfg.method;
  row.schedule = resolved_schedule(cfg);
  row.seed = seed;
  row.epochs = cfg.epochs;
  row.iterations = res.iterations;
  row.final_gap = res.trace.empty() ? kInf : res.trace.back().gap;
  try {
    row.slope = fit_rate(res.trace, "gap", 0.5).slope;
  } catch (const std::invalid_argument&) {
    row.slope.reset();
  }
  return row;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const SummaryRow& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{}\n", r.method, r.schedule, r.seed, r.epochs, r.iterations,
                       cell(r.final_gap), cell(r.slope));
  }
}

std::string trace_filename(const RunConfig& cfg, std::uint64_t seed) {
  return fmt::format("{}_{}_seed{}.csv", cfg.method, resolved_schedule(cfg), seed);
}

std::vector<std::string> solve(const RunConfig& cfg, std::size_t threads) {
  validate(cfg);
  const ProblemSpec spec = build_problem(cfg);
  const std::vector<RunResult> results = run_seeds(spec, cfg, threads);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out);
  std::vector<std::string> paths;
  std::vector<SummaryRow> rows;
  for (std::size_t s = 0; s < results.size(); ++s) {
    const std::string path = (fs::path(cfg.out) / trace_filename(cfg, cfg.seeds[s])).string();
    std::ofstream out(path);
    if (!out) throw ConfigError("out", fmt::format("cannot write '{}'", path));
    write_trace_csv(out, results[s].trace);
    paths.push_back(path);
    rows.push_back(summarize(results[s], cfg, cfg.seeds[s]));
  }
  const std::string summary =
      (fs::path(cfg.out) / fmt::format("summary_{}_{}.csv", cfg.method, resolved_schedule(cfg))).string();
  std::ofstream out(summary);
  if (!out) throw ConfigError("out", fmt::format("cannot write '{}'", summary));
  write_summary_csv(out, rows);
  return paths;
}

}  // namespace rpd
