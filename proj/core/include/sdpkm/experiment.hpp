#pragma once

#include "sdpkm/conic/solver.hpp"
#include "sdpkm/dataset.hpp"
#include "sdpkm/rounding.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sdpkm {

/// K balls of radius r with N/K points each. Centers are 0, e/sqrt(D) and
/// c e/sqrt(D) with c ~ U[c_min, c_max]; for k > 3 the j-th center
/// (1-based, j >= 3) is (j-2) c e/sqrt(D), an extension of the three-ball
/// layout.
struct BallConfig {
  int d = 2;
  int n = 75;
  int k = 3;
  double r = 2.0;
  double c_min = 10.0;
  double c_max = 20.0;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument naming the first violated constraint.
void validate(const BallConfig& cfg);

struct Balls {
  DataSet data;
  Eigen::MatrixXd centers;
  double c;
  /// Generating ball of each point; points are grouped by ball, ball 0 first.
  std::vector<int> truth;
};

/// Uniform points in each ball: Gaussian direction scaled by r U^{1/D}.
Balls generate_balls(const BallConfig& cfg);

/// Center of ball j for the given c, D x 1.
Eigen::VectorXd ball_center(int j, int d, double c);

/// 100 (obj_m - obj_alg1) / obj_alg1; positive means Algorithm 1 is better.
/// Empty when obj_alg1 <= 0.
std::optional<double> improvement(double obj_method, double obj_alg1);

struct TrialRecord {
  BallConfig config;
  int trial = 0;
  double c = 0.0;
  double obj_alg1 = 0.0;
  double obj_lloyd = 0.0;
  double obj_denoise = 0.0;
  double time_alg1 = 0.0;
  double time_lloyd = 0.0;
  double time_denoise = 0.0;
  double val_r0 = 0.0;
  double val_r2 = 0.0;
  std::optional<double> imp_vs_lloyd;
  std::optional<double> imp_vs_denoise;
  bool recovered_r2 = false;
  bool inexact = false;
  /// Empty on success; otherwise the failure message and every number above
  /// is meaningless.
  std::string error;
};

struct Stats {
  int count = 0;
  double mean = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
};

/// Percentile p in [0, 100] by linear interpolation between order
/// statistics at rank p/100 (n-1). Input need not be sorted.
double percentile(std::vector<double> sample, double p);
Stats summarize(const std::vector<double>& sample);

struct SummaryRow {
  int d = 0;
  int trials = 0;
  int failed = 0;
  Stats vs_denoise;
  Stats vs_lloyd;
  /// Any failed trial or undefined improvement leaves the cell incomplete.
  bool complete = true;
};

struct BenchSummary {
  std::vector<SummaryRow> rows;
};

struct BenchConfig {
  std::vector<int> dims{2, 3, 4, 5, 6};
  int n = 75;
  int k = 3;
  double r = 2.0;
  double c_min = 10.0;
  double c_max = 20.0;
  int trials = 50;
  std::uint64_t master_seed = 0;
  conic::SolverConfig solver;
  /// Worker threads for independent trials; results do not depend on it.
  int threads = 1;
};

struct BenchResult {
  std::vector<TrialRecord> trials;
  BenchSummary summary;
};

/// Seed of trial `t` at dimension `d`: derive_seed(derive_seed(master, d), t).
std::uint64_t trial_seed(std::uint64_t master, int d, int t);

/// One trial: generate, run Algorithm 1, Lloyd and R2 + denoising, score all
/// with the same objective. Failures are recorded in `error`, never thrown.
TrialRecord run_trial(const BallConfig& cfg, int trial, const conic::SolverConfig& solver);

BenchResult run_benchmark(const BenchConfig& cfg);

/// Column order of trials.csv.
std::string trials_csv_header();
/// trials.csv text, one record per row; times only when `timings`.
std::string trials_csv(const std::vector<TrialRecord>& trials, bool timings = false);
std::string summary_csv(const BenchSummary& s);
std::string summary_json(const BenchSummary& s, const BenchConfig& cfg);

/// Writes trials.csv, summary.csv and summary.json into `dir`.
void write_bench_outputs(const BenchResult& r, const BenchConfig& cfg,
                         const std::filesystem::path& dir, bool timings = false);

/// %.12g formatting used by every output file.
std::string fmt12(double x);

}  // namespace sdpkm
