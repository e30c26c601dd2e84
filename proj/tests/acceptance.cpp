// Acceptance suite. Each criterion prints one PASS/FAIL line; the process
// exits nonzero if any requested criterion fails.
//   acceptance [criterion ...]     (default: all)

#include "helpers.hpp"

#include "sdpkm/conic/cones.hpp"
#include "sdpkm/experiment.hpp"
#include "sdpkm/formulations.hpp"
#include "sdpkm/oracle.hpp"
#include "sdpkm/random.hpp"
#include "sdpkm/rounding.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace sdpkm;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kSolverTol = 1e-5;
constexpr double kBoundSlack = 10.0;  // bounds compare with 10 tol max(1, |v|)
constexpr double kLiftTol = 1e-8;
constexpr double kGramRelTol = 1e-9;
constexpr double kDistanceTol = 1e-8;
constexpr double kCapabilityTol = 1e-4;
constexpr double kR1Seconds = 300.0;
constexpr double kR0Seconds = 900.0;
constexpr double kOrderingSeconds = 900.0;
constexpr double kDenoiseP5Floor = -5.0;
constexpr int kRecoveryNeeded = 18;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double slack(double v) { return kBoundSlack * kSolverTol * std::max(1.0, std::abs(v)); }

conic::SolverConfig solver_config(double tol = kSolverTol) {
  conic::SolverConfig cfg;
  cfg.tol = tol;
  return cfg;
}

BuildOptions compact() {
  BuildOptions bo;
  bo.lifted = LiftedEncoding::Compact;
  return bo;
}

double relaxation_value(Relaxation r, const DataSet& ds, int k, double tol = kSolverTol) {
  const auto sol = conic::solve(build_relaxation(r, ds, k, compact()), solver_config(tol));
  return sol.primal_objective;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Outcome relaxation_ordering() {
  Rng rng(101);
  const auto t0 = std::chrono::steady_clock::now();
  int bad = 0;
  double worst = -1e300;
  for (int i = 0; i < 20; ++i) {
    const int n = 8 + static_cast<int>(rng.below(23));
    const int d = 2 + static_cast<int>(rng.below(5));
    const int k = 2 + static_cast<int>(rng.below(2));
    const DataSet ds = test::random_data(rng, d, n);
    const double r0 = relaxation_value(Relaxation::R0, ds, k);
    const double r0bar = relaxation_value(Relaxation::R0Bar, ds, k);
    const double r1 = relaxation_value(Relaxation::R1, ds, k);
    const double r2 = relaxation_value(Relaxation::R2, ds, k);
    for (auto [hi, lo] : {std::pair{r0, r0bar}, {r0bar, r1}, {r1, r2}}) {
      worst = std::max(worst, lo - hi - slack(hi));
      if (hi < lo - slack(hi)) ++bad;
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < kOrderingSeconds,
          "20 instances, violations " + std::to_string(bad) + ", worst excess over slack " + fmt(worst) +
              ", " + fmt(secs) + " s"};
}

Outcome oracle_sandwich() {
  Rng rng(202);
  int instances = 0, bad = 0;
  double lift_err = 0.0;
  for (int i = 0; i < 12; ++i) {
    const int n = 6 + static_cast<int>(rng.below(7));
    const int k = 2 + static_cast<int>(rng.below(2));
    const int d = 2 + static_cast<int>(rng.below(3));
    if (stirling2(n, k) > kDefaultPartitionLimit) continue;
    ++instances;
    const DataSet ds = test::blob_data(rng, d, n, k, 2.0);
    const OracleResult o = solve_exact(ds, k);
    if (o.zstar < relaxation_value(Relaxation::R0, ds, k) - slack(o.zstar)) ++bad;

    const auto r2p = build_r2(ds, k);
    const auto r2 = std::get<R2Solution>(extract(r2p, conic::solve(r2p, solver_config())).solution);
    const std::uint64_t seed = static_cast<std::uint64_t>(i);
    for (const Assignment& a : {algorithm1(ds, k).assignment, lloyd_full(ds, k, seed),
                                denoise_round(ds, r2.y, k, seed)}) {
      if (o.zstar > kmeans_objective(ds, a) + 1e-12 * std::max(1.0, o.zstar)) ++bad;
    }
    const double lifted = objective_value(r2p, to_solver_vector(r2p, R2Solution{partition_matrix(o.best)}));
    lift_err = std::max(lift_err, std::abs(lifted - o.zstar));
  }
  return {bad == 0 && lift_err <= kLiftTol && instances >= 10,
          std::to_string(instances) + " instances, bound violations " + std::to_string(bad) +
              ", max lift error " + fmt(lift_err)};
}

Outcome r0_r0bar_equivalence() {
  Rng rng(303);
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < 10; ++i) {
    const int n = 8 + static_cast<int>(rng.below(13));
    const int k = 2 + static_cast<int>(rng.below(2));
    const DataSet ds = test::random_data(rng, 2 + static_cast<int>(rng.below(3)), n);
    const double a = relaxation_value(Relaxation::R0, ds, k);
    const double b = relaxation_value(Relaxation::R0Bar, ds, k);
    worst = std::max(worst, std::abs(a - b));
    ok = ok && std::abs(a - b) <= slack(a);
  }
  return {ok, "10 instances, max |R0 - R0bar| " + fmt(worst)};
}

Outcome objective_identities() {
  Rng rng(404);
  double gram_err = 0.0, dist_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = 3 + static_cast<int>(rng.below(20));
    const int k = 1 + static_cast<int>(rng.below(std::min(n, 5)));
    const DataSet ds = test::random_data(rng, 1 + static_cast<int>(rng.below(6)), n, 3.0);
    const Assignment a(test::random_labels(rng, n, k), k);
    const double direct = kmeans_objective(ds, a);
    gram_err = std::max(gram_err, std::abs(kmeans_objective_gram(ds, a) - direct) / std::max(1.0, direct));

    // Convex mixture of partition matrices: symmetric with Y e = e.
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
    double left = 1.0;
    for (int j = 0; j < 3; ++j) {
      const double w = j == 2 ? left : left * rng.uniform();
      left -= w;
      y += w * partition_matrix(Assignment(test::random_labels(rng, n, k), k));
    }
    const double g = gram_form(ds, y);
    dist_err = std::max(dist_err, std::abs(distance_form(ds, y) - g) / std::max(1.0, std::abs(g)));
  }
  return {gram_err <= kGramRelTol && dist_err <= kDistanceTol,
          "100 pairs each, gram form rel err " + fmt(gram_err) + ", distance form rel err " + fmt(dist_err)};
}

Outcome exact_recovery() {
  int matched = 0, below = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Balls b = generate_balls({2, 15, 3, 2.0, 15.0, 15.0, seed});
    const auto p = build_r2(b.data, 3);
    const auto sol = conic::solve(p, solver_config());
    const OracleResult o = solve_exact(b.data, 3);
    if (sol.dual_objective < o.zstar - slack(o.zstar)) ++below;
    const auto rec = detect_exact_recovery(std::get<R2Solution>(extract(p, sol).solution));
    if (rec && rec->same_partition(o.best)) ++matched;
  }
  return {matched >= kRecoveryNeeded, "recovered " + std::to_string(matched) + " of 20 (need " +
                                          std::to_string(kRecoveryNeeded) + "); R2 dual value below Z* on " +
                                          std::to_string(below) + " of 20"};
}

Outcome table_reproduction() {
  BenchConfig cfg;
  cfg.n = 30;
  cfg.trials = 20;
  cfg.master_seed = 1;
  cfg.solver = solver_config();
  const BenchResult r = run_benchmark(cfg);
  std::printf("  D | vs denoise: mean    p5     p95 | vs Lloyd: mean    p5     p95 | failed\n");
  bool ok = true;
  double min_p5 = 1e300;
  for (const SummaryRow& row : r.summary.rows) {
    min_p5 = std::min(min_p5, row.vs_denoise.p5);
    std::printf("  %d |        %7.2f %7.2f %7.2f |      %7.2f %7.2f %7.2f | %d\n", row.d, row.vs_denoise.mean,
                row.vs_denoise.p5, row.vs_denoise.p95, row.vs_lloyd.mean, row.vs_lloyd.p5, row.vs_lloyd.p95,
                row.failed);
    ok = ok && row.complete && row.vs_denoise.p5 >= kDenoiseP5Floor;
    if (row.d == 2) ok = ok && row.vs_denoise.mean >= 0.0 && row.vs_lloyd.mean >= 0.0;
  }
  std::printf("  published means at D=2: 47.4%% vs denoise, 26.6%% vs Lloyd (N=75, 50 trials)\n");
  const SummaryRow& d2 = r.summary.rows.front();
  return {ok, "D=2 means " + fmt(d2.vs_denoise.mean) + "% / " + fmt(d2.vs_lloyd.mean) +
                  "%, min p5 vs denoise " + fmt(min_p5) + "% (floor -5%)"};
}

Outcome solver_capability() {
  const auto check = [](Relaxation rel, int n, double limit, std::string& log) {
    Rng rng(7);
    const DataSet ds = test::blob_data(rng, 2, n, 3, 3.0);
    const auto p = build_relaxation(rel, ds, 3, compact());
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = conic::solve(p, solver_config(kCapabilityTol));
    const double secs = seconds_since(t0);
    log += to_string(rel) + " (compact) N=" + std::to_string(n) + " " + conic::to_string(sol.status) + " in " +
           std::to_string(sol.iterations) + " iters, " + fmt(secs) + " s; ";
    return sol.status == conic::SolveStatus::Optimal && secs < limit;
  };
  std::string log;
  const bool r1 = check(Relaxation::R1, 75, kR1Seconds, log);
  const bool r0 = check(Relaxation::R0, 40, kR0Seconds, log);
  return {r1 && r0, log + "limits 300 s / 900 s"};
}

#ifdef SDPKM_CLI
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

Outcome cli_determinism() {
  const std::vector<std::string> commands = {
      "gen --seed 3 --n 15 --out data.csv",
      "cluster --input data.csv --k 3 --method alg1 --trace --labels alg1.txt",
      "cluster --input data.csv --k 3 --method lloyd --labels lloyd.txt",
      "cluster --input data.csv --k 3 --method r2-denoise --labels denoise.txt",
      "solve --input data.csv --k 3 --relaxation r0 --dump r0.json",
      "solve --input data.csv --k 3 --relaxation r0bar",
      "solve --input data.csv --k 3 --relaxation r1",
      "solve --input data.csv --k 3 --relaxation r2",
      "solve --problem r0.json",
      "bench --d-list 2,3 --n 12 --trials 2 --output-dir bench",
  };
  const fs::path root = fs::temp_directory_path() / "sdpkm_acceptance_cli";
  std::vector<std::map<std::string, std::string>> runs;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = root / std::to_string(rep);
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < commands.size(); ++i) {
      const std::string cmd = "cd '" + dir.string() + "' && '" SDPKM_CLI "' --threads 1 " + commands[i] +
                              " > stdout_" + std::to_string(i) + ".txt 2>&1";
      if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + commands[i]};
    }
    runs.push_back(snapshot(dir));
  }
  fs::remove_all(root);
  std::string diff;
  for (const auto& [name, text] : runs[0]) {
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != text) diff += " " + name;
  }
  if (runs[0].size() != runs[1].size()) diff += " (file sets differ)";
  return {diff.empty(), std::to_string(commands.size()) + " commands, " + std::to_string(runs[0].size()) +
                            " files compared" + (diff.empty() ? "" : "; differing:" + diff)};
}
#endif

Outcome property_suites() {
  Rng rng(909);
  std::vector<std::string> failed;
  const auto expect = [&](bool ok, const char* name) {
    if (!ok) failed.emplace_back(name);
  };

  // Projections: idempotent and nonexpansive.
  double idem = 0.0, expand = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + static_cast<int>(rng.below(7));
    Eigen::MatrixXd a(n, n), b(n, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        a(r, c) = rng.normal();
        b(r, c) = rng.normal();
      }
    }
    a = (a + a.transpose()).eval() / 2;
    b = (b + b.transpose()).eval() / 2;
    const Eigen::MatrixXd pa = conic::project_psd(a);
    idem = std::max(idem, (conic::project_psd(pa) - pa).norm());
    expand = std::max(expand, (pa - conic::project_psd(b)).norm() - (a - b).norm());
    const Eigen::VectorXd va = conic::svec(a), vb = conic::svec(b);
    const Eigen::VectorXd sa = conic::project_soc(va);
    idem = std::max(idem, (conic::project_soc(sa) - sa).norm());
    expand = std::max(expand, (sa - conic::project_soc(vb)).norm() - (va - vb).norm());
  }
  expect(idem < 1e-10 && expand < 1e-10, "projections");

  // Stiefel round trip, Lloyd monotonicity, scaling covariance.
  double scale_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n = 4 + static_cast<int>(rng.below(10));
    const int k = 1 + static_cast<int>(rng.below(3));
    const DataSet ds = test::random_data(rng, 2, n);
    const Assignment a(test::random_labels(rng, n, k), k);
    expect(stiefel_to_assignment(assignment_to_stiefel(a)).same_partition(a), "stiefel round trip");
    expect(kmeans_objective(ds, lloyd_step(ds, a)) <= kmeans_objective(ds, a) + 1e-12, "lloyd monotone");
    if (i < 5) {
      const double lambda = 0.5 + 2.5 * rng.uniform();
      const double v = relaxation_value(Relaxation::R2, ds, k, 1e-7);
      const double vs = relaxation_value(Relaxation::R2, ds.scaled(lambda), k, 1e-7);
      scale_err = std::max(scale_err, std::abs(vs - lambda * lambda * v) / std::max(1.0, vs));
    }
  }
  expect(scale_err < 1e-4, "scaling covariance");

  // Pin monotonicity along Algorithm 1 traces.
  for (int i = 0; i < 3; ++i) {
    const DataSet ds = test::blob_data(rng, 2, 12, 3, 1.5);
    expect(algorithm1(ds, 3).trace.values_monotone(kBoundSlack * kSolverTol), "pin monotone");
  }

  std::string detail = "projections, Stiefel round trip, Lloyd and pin monotonicity, scaling covariance";
  for (const auto& f : failed) detail += "; FAILED " + f;
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
      {1, {"relaxation ordering", relaxation_ordering}},
      {2, {"oracle sandwich", oracle_sandwich}},
      {3, {"R0 / R0bar equivalence", r0_r0bar_equivalence}},
      {4, {"objective identities", objective_identities}},
      {5, {"exact recovery at desk scale", exact_recovery}},
      {6, {"benchmark table, qualitative", table_reproduction}},
      {7, {"solver capability", solver_capability}},
#ifdef SDPKM_CLI
      {8, {"CLI determinism", cli_determinism}},
#endif
      {9, {"property suites", property_suites}},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty()) {
    for (const auto& [id, _] : criteria) wanted.push_back(id);
  }
  int failures = 0;
  for (int id : wanted) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::printf("criterion %d: FAIL (not available in this build)\n", id);
      ++failures;
      continue;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d: %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", it->second.first, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
