#include "sdpkm/conic/problem.hpp"
#include "sdpkm/conic/solver.hpp"
#include "sdpkm/dataset.hpp"
#include "sdpkm/experiment.hpp"
#include "sdpkm/formulations.hpp"
#include "sdpkm/kmeans.hpp"
#include "sdpkm/rounding.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdpkm;

namespace {

/// Flag combinations CLI11 cannot validate on its own; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  double tol = 1e-5;
  int max_iters = 50'000;
  int threads = 1;
  std::string output_dir = ".";
  bool timings = false;

  conic::SolverConfig solver() const {
    conic::SolverConfig cfg;
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    return cfg;
  }
  fs::path out(const std::string& explicit_path, const std::string& fallback) const {
    return explicit_path.empty() ? fs::path(output_dir) / fallback : fs::path(explicit_path);
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double r12(double x) { return std::stod(fmt12(x)); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

void check_k(const DataSet& ds, int k) {
  if (k < 1 || k > ds.size()) {
    throw std::runtime_error("k = " + std::to_string(k) + " needs 1 <= k <= N = " +
                             std::to_string(ds.size()));
  }
}

json solve_report(const conic::ConicProblem& p, const conic::ConicSolution& sol) {
  return {{"status", conic::to_string(sol.status)},
          {"iterations", sol.iterations},
          {"primal_objective", r12(sol.primal_objective)},
          {"dual_objective", r12(sol.dual_objective)},
          {"primal_residual", r12(sol.primal_residual)},
          {"dual_residual", r12(sol.dual_residual)},
          {"gap", r12(sol.gap)},
          {"vars", p.num_vars()},
          {"rows", p.num_rows()}};
}

// gen ------------------------------------------------------------------------

struct GenArgs {
  BallConfig cfg;
  std::string out;
};

void add_gen(CLI::App& app, const Globals& g, GenArgs& a) {
  auto* cmd = app.add_subcommand("gen", "Generate a seeded ball-mixture dataset as CSV");
  cmd->add_option("--d", a.cfg.d, "Dimension")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--n", a.cfg.n, "Total points")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--k", a.cfg.k, "Balls")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--r", a.cfg.r, "Ball radius")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--c-min", a.cfg.c_min, "Lower end of the c interval")->capture_default_str();
  cmd->add_option("--c-max", a.cfg.c_max, "Upper end of the c interval")->capture_default_str();
  cmd->add_option("--out", a.out, "Output CSV (default <output-dir>/data.csv)");
  cmd->callback([&] {
    a.cfg.seed = g.seed;
    try {
      validate(a.cfg);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const Balls balls = generate_balls(a.cfg);
    const fs::path path = g.out(a.out, "data.csv");
    write_text(path, format_csv(balls.data));
    print({{"command", "gen"},
           {"d", a.cfg.d},
           {"n", a.cfg.n},
           {"k", a.cfg.k},
           {"r", r12(a.cfg.r)},
           {"c_min", r12(a.cfg.c_min)},
           {"c_max", r12(a.cfg.c_max)},
           {"seed", a.cfg.seed},
           {"c", r12(balls.c)},
           {"out", path.string()}});
  });
}

// cluster --------------------------------------------------------------------

struct ClusterArgs {
  std::string input;
  int k = 3;
  std::string method = "alg1";
  std::string labels;
  bool trace = false;
};

void add_cluster(CLI::App& app, const Globals& g, ClusterArgs& a) {
  auto* cmd = app.add_subcommand("cluster", "Cluster a CSV dataset and write labels");
  cmd->add_option("--input", a.input,
                  "Dataset CSV, one point per row. Row order matters: the first row is fixed to cluster 0")
      ->required();
  cmd->add_option("--k", a.k, "Clusters")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--method", a.method, "alg1, lloyd or r2-denoise")
      ->capture_default_str()
      ->check(CLI::IsMember({"alg1", "lloyd", "r2-denoise"}));
  cmd->add_option("--labels", a.labels, "Labels file (default <output-dir>/labels.txt)");
  cmd->add_flag("--trace", a.trace, "Include the full Algorithm 1 trace in the report");
  cmd->callback([&] {
    const DataSet ds = read_csv(a.input);
    check_k(ds, a.k);
    json report{{"command", "cluster"}, {"method", a.method}, {"n", ds.size()}, {"k", a.k}};
    const auto t0 = Clock::now();
    std::vector<int> labels;
    bool inexact = false;
    if (a.method == "alg1") {
      RoundingOptions ro;
      ro.solver = g.solver();
      const RoundingResult res = algorithm1(ds, a.k, ro);
      labels = res.assignment.labels();
      inexact = res.trace.inexact;
      json values = json::array();
      for (const auto& s : res.trace.steps) values.push_back(r12(s.value));
      report["relaxation"] = {{"r0", res.trace.steps.empty() ? json(nullptr) : values.front()},
                              {"values", values},
                              {"pins", res.trace.pins}};
      report["pre_lloyd_objective"] =
          r12(kmeans_objective(ds, repair_empty_clusters(ds, res.trace.pre_lloyd, a.k)));
      if (a.trace) report["trace"] = json::parse(trace_to_json(res.trace, g.timings));
    } else if (a.method == "lloyd") {
      labels = lloyd_full(ds, a.k, g.seed).labels();
    } else {
      const auto prob = build_r2(ds, a.k);
      const auto sol = conic::solve(prob, g.solver());
      inexact = sol.status != conic::SolveStatus::Optimal;
      const auto ex = extract(prob, sol, 10.0 * g.tol);
      const auto& y = std::get<R2Solution>(ex.solution).y;
      labels = denoise_round(ds, y, a.k, g.seed).labels();
      report["relaxation"] = {{"r2", r12(ex.value)},
                              {"exact_recovery", detect_exact_recovery(y).has_value()},
                              {"solver", solve_report(prob, sol)}};
      report["note"] = "denoising baseline is a simplified stand-in for the external pipeline";
    }
    const Assignment assignment(labels, a.k);
    std::ostringstream os;
    for (int l : labels) os << l << '\n';
    const fs::path path = g.out(a.labels, "labels.txt");
    write_text(path, os.str());
    report["objective"] = r12(kmeans_objective(ds, assignment));
    report["inexact"] = inexact;
    report["labels"] = path.string();
    if (g.timings) report["seconds"] = seconds_since(t0);
    print(report);
  });
}

// solve ----------------------------------------------------------------------

struct SolveArgs {
  std::string input;
  std::string problem;
  int k = 3;
  std::string relaxation = "r2";
  std::string encoding = "compact";
  std::string objective = "distance";
  std::string dump;
  bool no_solve = false;
};

void add_solve(CLI::App& app, const Globals& g, SolveArgs& a) {
  auto* cmd = app.add_subcommand("solve", "Build and solve one relaxation");
  auto* in = cmd->add_option("--input", a.input, "Dataset CSV, one point per row (the first row breaks symmetry)");
  auto* pr = cmd->add_option("--problem", a.problem, "Solve a problem JSON written by --dump");
  in->excludes(pr);
  cmd->add_option("--k", a.k, "Clusters")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--relaxation", a.relaxation, "r0, r0bar, r1 or r2")
      ->capture_default_str()
      ->check(CLI::IsMember({"r0", "r0bar", "r1", "r2"}));
  cmd->add_option("--encoding", a.encoding, "Lifted blocks of r0/r0bar: compact, reduced or full")
      ->capture_default_str()
      ->check(CLI::IsMember({"compact", "reduced", "full"}));
  cmd->add_option("--objective", a.objective, "distance or gram")
      ->capture_default_str()
      ->check(CLI::IsMember({"distance", "gram"}));
  cmd->add_option("--dump", a.dump, "Write the conic problem as JSON to this path");
  cmd->add_flag("--no-solve", a.no_solve, "Only build (and dump) the problem");
  cmd->callback([&] {
    if (a.input.empty() == a.problem.empty()) {
      throw UsageError("solve needs exactly one of --input or --problem");
    }
    json report{{"command", "solve"}};
    conic::ConicProblem prob;
    if (!a.input.empty()) {
      const DataSet ds = read_csv(a.input);
      check_k(ds, a.k);
      BuildOptions bo;
      bo.lifted = lifted_encoding_from_string(a.encoding);
      bo.objective = a.objective == "gram" ? ObjectiveForm::Gram : ObjectiveForm::Distance;
      prob = build_relaxation(relaxation_from_string(a.relaxation), ds, a.k, bo);
      report["relaxation"] = a.relaxation;
      if (a.relaxation == "r0" || a.relaxation == "r0bar") report["encoding"] = a.encoding;
      report["n"] = ds.size();
      report["k"] = a.k;
    } else {
      prob = conic::parse_problem_json(read_text(a.problem));
      report["problem"] = a.problem;
      report["label"] = prob.label;
    }
    if (!a.dump.empty()) {
      write_text(a.dump, conic::dump_problem_json(prob));
      report["dump"] = a.dump;
    }
    report["vars"] = prob.num_vars();
    report["rows"] = prob.num_rows();
    if (!a.no_solve) {
      const auto t0 = Clock::now();
      const auto sol = conic::solve(prob, g.solver());
      report["solver"] = solve_report(prob, sol);
      report["value"] = r12(sol.primal_objective);
      report["inexact"] = sol.status != conic::SolveStatus::Optimal;
      // Problems not produced by a known builder have no structured view.
      try {
        const auto ex = extract(prob, sol, 10.0 * g.tol);
        report["violations"] = ex.violations;
        report["max_violation"] = r12(ex.max_violation);
      } catch (const conic::ProblemError&) {
      }
      if (g.timings) report["seconds"] = seconds_since(t0);
    }
    print(report);
  });
}

// bench ----------------------------------------------------------------------

struct BenchArgs {
  BenchConfig cfg;
};

void add_bench(CLI::App& app, const Globals& g, BenchArgs& a) {
  auto* cmd = app.add_subcommand("bench", "Algorithm 1 vs Lloyd vs R2 denoising on ball mixtures");
  cmd->add_option("--d-list", a.cfg.dims, "Dimensions, comma separated")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--n", a.cfg.n, "Points per instance")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--k", a.cfg.k, "Clusters")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--r", a.cfg.r, "Ball radius")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--c-min", a.cfg.c_min, "Lower end of the c interval")->capture_default_str();
  cmd->add_option("--c-max", a.cfg.c_max, "Upper end of the c interval")->capture_default_str();
  cmd->add_option("--trials", a.cfg.trials, "Trials per dimension")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->callback([&] {
    a.cfg.master_seed = g.seed;
    a.cfg.solver = g.solver();
    a.cfg.threads = g.threads;
    try {
      for (int d : a.cfg.dims) {
        validate(BallConfig{d, a.cfg.n, a.cfg.k, a.cfg.r, a.cfg.c_min, a.cfg.c_max, 0});
      }
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const BenchResult res = run_benchmark(a.cfg);
    write_bench_outputs(res, a.cfg, g.output_dir, g.timings);
    json summary = json::parse(summary_json(res.summary, a.cfg));
    summary["command"] = "bench";
    summary["output_dir"] = g.output_dir;
    print(summary);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDP relaxations and rounding for k-means clustering"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--tol", g.tol, "Solver tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--max-iters", g.max_iters, "Solver iteration cap")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--threads", g.threads, "Worker threads (trial level)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--output-dir", g.output_dir, "Directory for output files")->capture_default_str();
  app.add_flag("--timings", g.timings, "Include wall-times in reports and files");

  GenArgs gen;
  ClusterArgs cluster;
  SolveArgs solve;
  BenchArgs bench;
  add_gen(app, g, gen);
  add_cluster(app, g, cluster);
  add_solve(app, g, solve);
  add_bench(app, g, bench);
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
