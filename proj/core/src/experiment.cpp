#include "sdpkm/experiment.hpp"

#include "sdpkm/formulations.hpp"
#include "sdpkm/kmeans.hpp"
#include "sdpkm/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sdpkm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string opt12(const std::optional<double>& x) { return x ? fmt12(*x) : std::string(); }

// Keeps JSON numbers at the same 12 digits as the CSV files.
double round12(double x) { return std::stod(fmt12(x)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string fmt12(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void validate(const BallConfig& cfg) {
  if (cfg.d < 1) throw std::invalid_argument("d must be >= 1");
  if (cfg.k < 1) throw std::invalid_argument("k must be >= 1");
  if (cfg.n < cfg.k) throw std::invalid_argument("n must be >= k");
  if (cfg.n % cfg.k != 0) {
    throw std::invalid_argument("n = " + std::to_string(cfg.n) + " is not divisible by k = " +
                                std::to_string(cfg.k));
  }
  if (!(cfg.r >= 0.0) || !std::isfinite(cfg.r)) throw std::invalid_argument("r must be >= 0");
  if (!(cfg.c_min > 0.0) || !(cfg.c_max >= cfg.c_min) || !std::isfinite(cfg.c_max)) {
    throw std::invalid_argument("need 0 < c_min <= c_max");
  }
}

Eigen::VectorXd ball_center(int j, int d, double c) {
  const Eigen::VectorXd unit = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  if (j == 0) return Eigen::VectorXd::Zero(d);
  if (j == 1) return unit;
  return static_cast<double>(j - 1) * c * unit;
}

Balls generate_balls(const BallConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const double c = rng.uniform(cfg.c_min, cfg.c_max);
  const int per = cfg.n / cfg.k;
  Eigen::MatrixXd centers(cfg.d, cfg.k);
  for (int j = 0; j < cfg.k; ++j) centers.col(j) = ball_center(j, cfg.d, c);
  Eigen::MatrixXd x(cfg.d, cfg.n);
  std::vector<int> truth(static_cast<std::size_t>(cfg.n));
  for (int p = 0; p < cfg.n; ++p) {
    const int j = p / per;
    truth[static_cast<std::size_t>(p)] = j;
    Eigen::VectorXd dir(cfg.d);
    double norm = 0.0;
    do {
      for (int i = 0; i < cfg.d; ++i) dir(i) = rng.normal();
      norm = dir.norm();
    } while (norm == 0.0);
    const double radius = cfg.r * std::pow(rng.uniform(), 1.0 / cfg.d);
    x.col(p) = centers.col(j) + (radius / norm) * dir;
  }
  return {DataSet(std::move(x)), std::move(centers), c, std::move(truth)};
}

std::optional<double> improvement(double obj_method, double obj_alg1) {
  if (!(obj_alg1 > 0.0)) return std::nullopt;
  return 100.0 * (obj_method - obj_alg1) / obj_alg1;
}

double percentile(std::vector<double> sample, double p) {
  if (sample.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile outside [0, 100]");
  std::sort(sample.begin(), sample.end());
  const double rank = p / 100.0 * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sample.size() - 1);
  const double t = rank - static_cast<double>(lo);
  return sample[lo] + t * (sample[hi] - sample[lo]);
}

Stats summarize(const std::vector<double>& sample) {
  Stats s;
  s.count = static_cast<int>(sample.size());
  if (sample.empty()) return s;
  s.mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
  s.p5 = percentile(sample, 5.0);
  s.p95 = percentile(sample, 95.0);
  return s;
}

std::uint64_t trial_seed(std::uint64_t master, int d, int t) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(d)),
                     static_cast<std::uint64_t>(t));
}

TrialRecord run_trial(const BallConfig& cfg, int trial, const conic::SolverConfig& solver) {
  TrialRecord rec;
  rec.config = cfg;
  rec.trial = trial;
  try {
    const Balls balls = generate_balls(cfg);
    const DataSet& ds = balls.data;
    rec.c = balls.c;

    auto t0 = Clock::now();
    RoundingOptions ro;
    ro.solver = solver;
    const RoundingResult alg1 = algorithm1(ds, cfg.k, ro);
    rec.time_alg1 = seconds_since(t0);
    rec.obj_alg1 = kmeans_objective(ds, alg1.assignment);
    rec.val_r0 = alg1.trace.steps.empty() ? 0.0 : alg1.trace.steps.front().value;
    rec.inexact = alg1.trace.inexact;

    t0 = Clock::now();
    const Assignment lloyd = lloyd_full(ds, cfg.k, derive_seed(cfg.seed, 1));
    rec.time_lloyd = seconds_since(t0);
    rec.obj_lloyd = kmeans_objective(ds, lloyd);

    t0 = Clock::now();
    const auto prob = build_r2(ds, cfg.k);
    const auto sol = conic::solve(prob, solver);
    if (sol.status != conic::SolveStatus::Optimal) rec.inexact = true;
    const auto ex = extract(prob, sol, 10.0 * solver.tol);
    const Eigen::MatrixXd& y = std::get<R2Solution>(ex.solution).y;
    rec.val_r2 = ex.value;
    const Assignment den = denoise_round(ds, y, cfg.k, derive_seed(cfg.seed, 2));
    rec.time_denoise = seconds_since(t0);
    rec.obj_denoise = kmeans_objective(ds, den);
    rec.recovered_r2 = detect_exact_recovery(y).has_value();

    rec.imp_vs_lloyd = improvement(rec.obj_lloyd, rec.obj_alg1);
    rec.imp_vs_denoise = improvement(rec.obj_denoise, rec.obj_alg1);
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

BenchResult run_benchmark(const BenchConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (cfg.dims.empty()) throw std::invalid_argument("no dimensions given");
  struct Job {
    BallConfig ball;
    int trial;
  };
  std::vector<Job> jobs;
  for (int d : cfg.dims) {
    for (int t = 0; t < cfg.trials; ++t) {
      BallConfig b{d, cfg.n, cfg.k, cfg.r, cfg.c_min, cfg.c_max, trial_seed(cfg.master_seed, d, t)};
      validate(b);
      jobs.push_back({b, t});
    }
  }

  BenchResult out;
  out.trials.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      out.trials[i] = run_trial(jobs[i].ball, jobs[i].trial, cfg.solver);
    }
  };
  const int workers = std::clamp(cfg.threads, 1, static_cast<int>(jobs.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (int d : cfg.dims) {
    SummaryRow row;
    row.d = d;
    std::vector<double> vs_den, vs_lloyd;
    for (const auto& rec : out.trials) {
      if (rec.config.d != d) continue;
      ++row.trials;
      if (!rec.error.empty()) {
        ++row.failed;
        row.complete = false;
        continue;
      }
      if (rec.imp_vs_denoise) vs_den.push_back(*rec.imp_vs_denoise);
      else row.complete = false;
      if (rec.imp_vs_lloyd) vs_lloyd.push_back(*rec.imp_vs_lloyd);
      else row.complete = false;
    }
    row.vs_denoise = summarize(vs_den);
    row.vs_lloyd = summarize(vs_lloyd);
    out.summary.rows.push_back(row);
  }
  return out;
}

std::string trials_csv_header() {
  return "d,n,k,r,c_min,c_max,seed,trial,c,obj_alg1,obj_lloyd,obj_denoise,val_r0,val_r2,"
         "imp_vs_lloyd,imp_vs_denoise,recovered_r2,inexact,error";
}

std::string trials_csv(const std::vector<TrialRecord>& trials, bool timings) {
  std::ostringstream os;
  os << "# improvements in percent, positive = Algorithm 1 better; denoise is a simplified "
        "stand-in for the external SDP rounding pipeline\n";
  os << trials_csv_header();
  if (timings) os << ",time_alg1,time_lloyd,time_denoise";
  os << '\n';
  for (const auto& t : trials) {
    const auto& b = t.config;
    std::string err = t.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << b.d << ',' << b.n << ',' << b.k << ',' << fmt12(b.r) << ',' << fmt12(b.c_min) << ','
       << fmt12(b.c_max) << ',' << b.seed << ',' << t.trial << ',' << fmt12(t.c) << ','
       << fmt12(t.obj_alg1) << ',' << fmt12(t.obj_lloyd) << ',' << fmt12(t.obj_denoise) << ','
       << fmt12(t.val_r0) << ',' << fmt12(t.val_r2) << ',' << opt12(t.imp_vs_lloyd) << ','
       << opt12(t.imp_vs_denoise) << ',' << (t.recovered_r2 ? 1 : 0) << ',' << (t.inexact ? 1 : 0)
       << ',' << err;
    if (timings) {
      os << ',' << fmt12(t.time_alg1) << ',' << fmt12(t.time_lloyd) << ',' << fmt12(t.time_denoise);
    }
    os << '\n';
  }
  return os.str();
}

std::string summary_csv(const BenchSummary& s) {
  std::ostringstream os;
  os << "d,trials,failed,complete,denoise_mean,denoise_p5,denoise_p95,lloyd_mean,lloyd_p5,"
        "lloyd_p95\n";
  for (const auto& r : s.rows) {
    os << r.d << ',' << r.trials << ',' << r.failed << ',' << (r.complete ? 1 : 0) << ','
       << fmt12(r.vs_denoise.mean) << ',' << fmt12(r.vs_denoise.p5) << ','
       << fmt12(r.vs_denoise.p95) << ',' << fmt12(r.vs_lloyd.mean) << ','
       << fmt12(r.vs_lloyd.p5) << ',' << fmt12(r.vs_lloyd.p95) << '\n';
  }
  return os.str();
}

std::string summary_json(const BenchSummary& s, const BenchConfig& cfg) {
  auto stats = [](const Stats& st) {
    return nlohmann::json{{"count", st.count},
                          {"mean", round12(st.mean)},
                          {"p5", round12(st.p5)},
                          {"p95", round12(st.p95)}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"d", r.d},
                    {"trials", r.trials},
                    {"failed", r.failed},
                    {"complete", r.complete},
                    {"vs_denoise", stats(r.vs_denoise)},
                    {"vs_lloyd", stats(r.vs_lloyd)}});
  }
  nlohmann::json j{{"config",
                    {{"dims", cfg.dims},
                     {"n", cfg.n},
                     {"k", cfg.k},
                     {"r", round12(cfg.r)},
                     {"c_min", round12(cfg.c_min)},
                     {"c_max", round12(cfg.c_max)},
                     {"trials", cfg.trials},
                     {"seed", cfg.master_seed},
                     {"tol", round12(cfg.solver.tol)}}},
                   {"percentiles", "linear interpolation between order statistics"},
                   {"denoise_baseline", "simplified stand-in: Lloyd on the denoised points X Y"},
                   {"rows", std::move(rows)}};
  return j.dump(2) + "\n";
}

void write_bench_outputs(const BenchResult& r, const BenchConfig& cfg,
                         const std::filesystem::path& dir, bool timings) {
  std::filesystem::create_directories(dir);
  write_text(dir / "trials.csv", trials_csv(r.trials, timings));
  write_text(dir / "summary.csv", summary_csv(r.summary));
  write_text(dir / "summary.json", summary_json(r.summary, cfg));
}

}  // namespace sdpkm
