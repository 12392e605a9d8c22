#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpd/metrics.hpp"
#include "rpd/problem.hpp"
#include "rpd/run.hpp"

namespace rpd {

/// Bad configuration; field() names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ProblemConfig {
  std::string kind = "lad";         // lad | svm
  std::optional<std::string> path;  // LIBSVM file (svm) or instance dump (lad)
  std::size_t rows = 500;           // samples for svm
  std::size_t cols = 200;           // features for svm
  double density = 0.1;
  double noise = 0.1;    // lad
  double support = 0.05; // lad
  double flip = 0.05;    // svm
  std::uint64_t data_seed = 1;
  std::optional<double> lambda;  // default 1/d for lad, 1e-4 for svm
  double dual_curvature = 0.0;   // adds (mu/2)||r||^2 to every g
  std::string sigma = "unit";    // unit | colnorm
};

struct RunConfig {
  ProblemConfig problem;
  std::string method = "srpd";  // frpd | srpd | pdhg | spdhg
  std::string schedule;         // empty = s1 for frpd, s3 for srpd, none for the baselines
  std::optional<double> c;     // unset = auto
  std::optional<double> rho0;  // unset = auto
  std::size_t blocks = 32;                 // primal blocks n
  std::optional<std::size_t> dual_blocks;  // m, defaults to blocks
  std::size_t epochs = 300;
  std::vector<std::uint64_t> seeds{1};
  std::size_t cadence = 1;
  std::string out = ".";
  bool timing = false;
  bool average = true;
  bool multiplier = true;
  bool zero_eta = false;
  std::optional<double> step_tau;    // pdhg / spdhg primal step
  std::optional<double> step_sigma;  // pdhg / spdhg dual step
  double theta = 1.0;
};

/// Throws ConfigError for the first invalid field.
void validate(const RunConfig& cfg);

RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

ProblemSpec build_problem(const ProblemConfig& pc, std::size_t n_blocks, std::size_t m_blocks);
ProblemSpec build_problem(const RunConfig& cfg);

/// One seed from the zero start point.
RunResult run_seed(const ProblemSpec& spec, const RunConfig& cfg, std::uint64_t seed);
/// All seeds, in the order of cfg.seeds; threads = 0 reads RPD_THREADS.
std::vector<RunResult> run_seeds(const ProblemSpec& spec, const RunConfig& cfg, std::size_t threads = 0);

/// RPD_THREADS if set and positive, else hardware concurrency (at least 1).
std::size_t thread_count();

// CSV: method,schedule,seed,k,epoch,primal,dual,gap,feas,dual_violation,time_ms
// Doubles use 17 significant digits; an empty cell is undefined or infinite.
inline constexpr const char* kTraceHeader = "method,schedule,seed,k,epoch,primal,dual,gap,feas,dual_violation,time_ms";
std::string format_trace_row(const TraceRecord& rec);
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& in);
std::vector<TraceRecord> load_trace_csv(const std::string& path);

struct SummaryRow {
  std::string method;
  std::string schedule;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t iterations = 0;
  double final_gap = 0.0;
  std::optional<double> slope;  // fitted on the gap column, tail 0.5
};

inline constexpr const char* kSummaryHeader = "method,schedule,seed,epochs,iterations,final_gap,slope";
SummaryRow summarize(const RunResult& res, const RunConfig& cfg, std::uint64_t seed);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

std::string trace_filename(const RunConfig& cfg, std::uint64_t seed);

/// Runs every seed and writes one trace CSV per seed plus summary.csv into cfg.out.
/// Returns the written trace paths.
std::vector<std::string> solve(const RunConfig& cfg, std::size_t threads = 0);

}  // namespace rpd
