#include <CLI11.hpp>
#include <fmt/core.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "rpd/dataio.hpp"
#include "rpd/harness.hpp"
#include "rpd/metrics.hpp"
#include "rpd/schedule.hpp"

using namespace rpd;

namespace {

// config field -> command-line flag, for error messages
const std::map<std::string, std::string> kFlagOf{
    {"problem.kind", "--problem"},   {"problem.path", "--data"},       {"problem.rows", "--gen"},
    {"problem.cols", "--gen"},       {"problem.density", "--density"}, {"problem.noise", "--noise"},
    {"problem.support", "--support"}, {"problem.flip", "--flip"},      {"problem.lambda", "--lambda"},
    {"problem.dual_curvature", "--dual-curvature"}, {"problem.sigma", "--sigma-rule"},
    {"method", "--method"},          {"schedule", "--schedule"},       {"c", "--c"},
    {"rho0", "--rho0"},              {"blocks", "--blocks"},           {"dual_blocks", "--dual-blocks"},
    {"epochs", "--epochs"},          {"seeds", "--seed"},              {"cadence", "--cadence"},
    {"out", "--out"},                {"zero_eta", "--zero-eta"},       {"step_tau", "--tau"},
    {"step_sigma", "--sigma"},       {"theta", "--theta"}};

std::string flag_for(const std::string& field) {
  auto it = kFlagOf.find(field);
  return it == kFlagOf.end() ? field : it->second;
}

// "auto" or a number
std::optional<double> parse_auto(const std::string& text, const std::string& flag) {
  if (text.empty() || text == "auto") return std::nullopt;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size()) throw ConfigError(flag, fmt::format("expected a number or 'auto', got '{}'", text));
  return v;
}

// "500x200"
std::pair<std::size_t, std::size_t> parse_dims(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw ConfigError("--gen", fmt::format("expected ROWSxCOLS, got '{}'", text));
  try {
    std::size_t a = 0, b = 0;
    const unsigned long r = std::stoul(text.substr(0, x), &a);
    const unsigned long c = std::stoul(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1) throw std::invalid_argument("trailing");
    return {r, c};
  } catch (const std::exception&) {
    throw ConfigError("--gen", fmt::format("expected ROWSxCOLS, got '{}'", text));
  }
}

struct ProblemFlags {
  std::string problem = "lad";
  std::string data;
  std::string gen = "500x200";
  double density = 0.1;
  double noise = 0.1;
  double support = 0.05;
  double flip = 0.05;
  std::uint64_t data_seed = 1;
  std::string lambda = "auto";
  double dual_curvature = 0.0;
  std::string sigma_rule = "unit";

  void add(CLI::App* app) {
    app->add_option("--problem", problem, "lad or svm")->check(CLI::IsMember({"lad", "svm"}));
    app->add_option("--data", data, "LIBSVM file (svm) or instance file (lad); generated when absent");
    app->add_option("--gen", gen, "generated size ROWSxCOLS (samples x features for svm)");
    app->add_option("--density", density, "nonzero fraction of the generated matrix");
    app->add_option("--noise", noise, "Laplace noise scale (lad)");
    app->add_option("--support", support, "nonzero fraction of the planted solution (lad)");
    app->add_option("--flip", flip, "label flip probability (svm)");
    app->add_option("--data-seed", data_seed, "seed of the generated data");
    app->add_option("--lambda", lambda, "regularizer, 'auto' = 1/d for lad, 1e-4 for svm");
    app->add_option("--dual-curvature", dual_curvature, "add (mu/2)|r|^2 to every g");
    app->add_option("--sigma-rule", sigma_rule, "unit or colnorm")->check(CLI::IsMember({"unit", "colnorm"}));
  }

  ProblemConfig config(CLI::App* app) const {
    ProblemConfig pc;
    pc.kind = problem;
    if (app->count("--data")) {
      if (data.empty()) throw ConfigError("--data", "empty path");
      pc.path = data;
    }
    const auto [r, c] = parse_dims(gen);
    pc.rows = r;
    pc.cols = c;
    pc.density = density;
    pc.noise = noise;
    pc.support = support;
    pc.flip = flip;
    pc.data_seed = data_seed;
    pc.lambda = parse_auto(lambda, "--lambda");
    pc.dual_curvature = dual_curvature;
    pc.sigma = sigma_rule;
    return pc;
  }
};

int report_error(const std::exception& e) {
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    const std::string flag = flag_for(ce->field());
    std::string msg = ce->what();
    const std::string prefix = ce->field() + ": ";
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    fmt::print(stderr, "error: {}: {}\n", flag, msg);
    return 2;
  }
  if (dynamic_cast<const SolverAbort*>(&e)) {
    fmt::print(stderr, "solver aborted: {}\n", e.what());
    return 3;
  }
  fmt::print(stderr, "error: {}\n", e.what());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized primal-dual solvers and benchmark harness"};
  app.require_subcommand(1);

  // solve
  CLI::App* solve_cmd = app.add_subcommand("solve", "run a solver over one or more seeds and write CSV traces");
  ProblemFlags solve_problem;
  solve_problem.add(solve_cmd);
  std::string config_path, method = "srpd", schedule, c_text = "auto", rho0_text = "auto", out = ".";
  std::string tau_text = "auto", sigma_text = "auto";
  std::size_t blocks = 32, dual_blocks = 0, epochs = 300, cadence = 1;
  std::vector<std::uint64_t> seeds;
  bool timing = false, no_average = false, no_multiplier = false, zero_eta = false;
  double theta = 1.0;
  solve_cmd->add_option("--config", config_path, "JSON run configuration; other flags are ignored");
  solve_cmd->add_option("--method", method, "frpd, srpd, pdhg or spdhg");
  solve_cmd->add_option("--schedule", schedule, "s1..s7; default s1 for frpd, s3 for srpd");
  solve_cmd->add_option("--c", c_text, "schedule constant c or 'auto'");
  solve_cmd->add_option("--rho0", rho0_text, "initial penalty or 'auto'");
  solve_cmd->add_option("--blocks", blocks, "primal blocks n");
  solve_cmd->add_option("--dual-blocks", dual_blocks, "dual blocks m (default: --blocks)");
  solve_cmd->add_option("--epochs", epochs, "number of epochs");
  solve_cmd->add_option("--seed,--seeds", seeds, "one or more seeds")->expected(1, -1);
  solve_cmd->add_option("--cadence", cadence, "epochs between checkpoints");
  solve_cmd->add_option("--out", out, "output directory");
  solve_cmd->add_flag("--timing", timing, "fill the time_ms column");
  solve_cmd->add_flag("--no-average", no_average, "skip the averaged dual iterate");
  solve_cmd->add_flag("--no-multiplier", no_multiplier, "skip the multiplier update (srpd)");
  solve_cmd->add_flag("--zero-eta", zero_eta, "frpd with eta_k = 0");
  solve_cmd->add_option("--tau", tau_text, "pdhg/spdhg primal step or 'auto'");
  solve_cmd->add_option("--sigma", sigma_text, "pdhg/spdhg dual step or 'auto'");
  solve_cmd->add_option("--theta", theta, "pdhg/spdhg extrapolation");

  // check-schedule
  CLI::App* check_cmd = app.add_subcommand("check-schedule", "verify the parameter conditions along a schedule");
  std::string chk_schedule = "s1", chk_c = "auto", chk_rho0 = "auto";
  std::size_t chk_m = 1, chk_n = 1, horizon = 10000;
  double chk_Lbar = 1.0, chk_Lh = 0.0, chk_muf = 0.0, chk_mug = 0.0;
  bool from_problem = false, verbose = false;
  ProblemFlags check_problem;
  std::size_t chk_blocks = 32;
  check_cmd->add_option("--schedule", chk_schedule, "s1..s7")->required();
  check_cmd->add_option("--c", chk_c, "schedule constant c or 'auto'");
  check_cmd->add_option("--rho0", chk_rho0, "initial penalty or 'auto'");
  check_cmd->add_option("--m", chk_m, "dual blocks (uniform law)");
  check_cmd->add_option("--n", chk_n, "primal blocks (uniform law)");
  check_cmd->add_option("--L-bar", chk_Lbar, "weighted operator norm squared");
  check_cmd->add_option("--L-h", chk_Lh, "smoothness constant of h");
  check_cmd->add_option("--mu-f", chk_muf, "strong convexity of f");
  check_cmd->add_option("--mu-g", chk_mug, "strong convexity of g");
  check_cmd->add_option("--horizon", horizon, "last k to check");
  check_cmd->add_flag("--from-problem", from_problem, "take constants and laws from a problem instead");
  check_cmd->add_option("--blocks", chk_blocks, "blocks used with --from-problem");
  check_cmd->add_flag("--verbose", verbose, "print per-condition slacks");
  check_problem.add(check_cmd);

  // rate
  CLI::App* rate_cmd = app.add_subcommand("rate", "fit a log-log slope to a trace column");
  std::vector<std::string> csv_paths;
  std::string column = "gap";
  double tail = 0.5;
  rate_cmd->add_option("csv", csv_paths, "trace CSV file(s); several are combined by median")->required();
  rate_cmd->add_option("--column", column, "primal, dual, gap, feas, feas_sq");
  rate_cmd->add_option("--tail", tail, "fraction of the log-k span to fit");

  // gen-data
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "write a generated instance");
  ProblemFlags gen_problem;
  gen_problem.add(gen_cmd);
  std::string gen_out;
  gen_cmd->add_option("--out", gen_out, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) {
      RunConfig cfg;
      if (!config_path.empty()) {
        cfg = load_config(config_path);
      } else {
        cfg.problem = solve_problem.config(solve_cmd);
        cfg.method = method;
        cfg.schedule = schedule;
        cfg.c = parse_auto(c_text, "c");
        cfg.rho0 = parse_auto(rho0_text, "rho0");
        cfg.blocks = blocks;
        if (dual_blocks > 0) cfg.dual_blocks = dual_blocks;
        cfg.epochs = epochs;
        if (!seeds.empty()) cfg.seeds = seeds;
        cfg.cadence = cadence;
        cfg.out = out;
        cfg.timing = timing;
        cfg.average = !no_average;
        cfg.multiplier = !no_multiplier;
        cfg.zero_eta = zero_eta;
        cfg.step_tau = parse_auto(tau_text, "step_tau");
        cfg.step_sigma = parse_auto(sigma_text, "step_sigma");
        cfg.theta = theta;
      }
      const std::vector<std::string> paths = solve(cfg);
      for (const std::string& p : paths) fmt::print("{}\n", p);
      return 0;
    }

    if (check_cmd->parsed()) {
      const ScheduleKind kind = parse_schedule(chk_schedule);
      ProblemConstants consts;
      BlockLaws laws;
      if (from_problem) {
        const ProblemSpec spec = build_problem(check_problem.config(check_cmd), chk_blocks, chk_blocks);
        consts = constants(spec);
        laws = block_laws(spec);
      } else {
        if (chk_m == 0 || chk_n == 0) throw ConfigError("--m", "block counts must be >= 1");
        laws = uniform_laws(chk_m, chk_n, chk_muf, chk_mug);
        consts.m = chk_m;
        consts.n = chk_n;
        consts.L_bar = chk_Lbar;
        consts.K_norm = std::sqrt(chk_Lbar);
        consts.L_h = chk_Lh;
        consts.mu_f = chk_muf;
        consts.mu_g = chk_mug;
        consts.tau0_primal = 1.0 / static_cast<double>(chk_n);
        consts.tau0 = std::min(1.0 / static_cast<double>(chk_m), consts.tau0_primal);
      }
      const Schedule sched = Schedule::make(kind, consts, parse_auto(chk_c, "--c"), parse_auto(chk_rho0, "--rho0"));
      const ConditionReport rep = check_conditions(sched, laws, horizon);
      fmt::print("{}\n", sched.describe());
      if (verbose) {
        fmt::print("{}", format_report(rep));
      } else {
        fmt::print("{} system, k = 1..{}: {}\n", rep.semi_randomized ? "semi-randomized" : "fully randomized",
                   rep.horizon, rep.pass ? "pass" : "FAIL");
        if (rep.first)
          fmt::print("  first violation: k={} condition {} block {} slack {:+.3e}\n", rep.first->k,
                     rep.first->condition, rep.first->block, rep.first->slack);
      }
      return rep.pass ? 0 : 1;
    }

    if (rate_cmd->parsed()) {
      std::vector<std::vector<TraceRecord>> traces;
      for (const std::string& p : csv_paths) traces.push_back(load_trace_csv(p));
      const std::vector<double> k = trace_column(traces.front(), "k");
      const std::vector<double> v =
          traces.size() == 1 ? trace_column(traces.front(), column) : median_column(traces, column);
      const RateFit fit = fit_rate(k, v, tail);
      fmt::print("column={} traces={} window=[{}, {}] points={} slope={:.6f} intercept={:.6f} residual={:.3e}\n",
                 column, traces.size(), fit.k_begin, fit.k_end, fit.points, fit.slope, fit.intercept,
                 fit.residual);
      return 0;
    }

    if (gen_cmd->parsed()) {
      const ProblemConfig pc = gen_problem.config(gen_cmd);
      if (pc.kind == "lad") {
        const LadInstance inst = gen_lad({pc.rows, pc.cols, pc.density, pc.noise, pc.support, pc.data_seed});
        save_instance(gen_out, inst);
        fmt::print("{}: {}x{} nnz={}\n", gen_out, inst.K.rows, inst.K.cols, inst.K.entries.size());
      } else {
        const Dataset data = gen_svm({pc.rows, pc.cols, pc.density, pc.flip, pc.data_seed});
        std::ofstream out(gen_out);
        if (!out) throw ConfigError("--out", fmt::format("cannot write '{}'", gen_out));
        write_libsvm(out, data);
        fmt::print("{}: {} samples, {} features\n", gen_out, data.n_samples(), data.n_features);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    return report_error(e);
  }
  return 0;
}
