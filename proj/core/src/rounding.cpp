#include "sdpkm/rounding.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace sdpkm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

bool RoundingTrace::values_monotone(double slack) const {
  for (std::size_t i = 1; i < steps.size(); ++i) {
    const double prev = steps[i - 1].value;
    if (steps[i].value < prev - slack * std::max(1.0, std::abs(prev))) return false;
  }
  return true;
}

Eigen::MatrixXd memberships(const std::vector<Eigen::MatrixXd>& v) {
  if (v.empty()) throw std::invalid_argument("memberships: no blocks");
  Eigen::MatrixXd w(v.front().rows(), static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) w.col(static_cast<Eigen::Index>(i)) = v[i].rowwise().sum();
  return w;
}

std::vector<int> argmax_labels(const Eigen::MatrixXd& weights) {
  std::vector<int> labels(static_cast<std::size_t>(weights.rows()));
  for (Eigen::Index n = 0; n < weights.rows(); ++n) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < weights.cols(); ++i) {
      if (weights(n, i) > weights(n, best)) best = i;
    }
    labels[static_cast<std::size_t>(n)] = static_cast<int>(best);
  }
  return labels;
}

RoundingResult algorithm1(const DataSet& ds, int k, const RoundingOptions& opts) {
  const int n = ds.size();
  if (k < 1 || k > n) {
    throw std::invalid_argument("algorithm1: need 1 <= k <= N, got k = " + std::to_string(k));
  }
  const auto t0 = Clock::now();
  RoundingTrace trace;
  if (k == 1) {
    std::vector<int> zeros(static_cast<std::size_t>(n), 0);
    trace.pre_lloyd = zeros;
    trace.post_lloyd = zeros;
    trace.seconds = seconds_since(t0);
    return {Assignment(std::move(zeros), 1), std::move(trace)};
  }

  BuildOptions bo;
  bo.lifted = opts.encoding;
  std::vector<Pin> pins;
  std::vector<Eigen::MatrixXd> v;
  auto solve_step = [&] {
    const auto ts = Clock::now();
    const auto prob = build_r0(ds, k, pins, bo);
    const auto sol = conic::solve(prob, opts.solver);
    auto ex = extract(prob, sol, 10.0 * opts.solver.tol);
    v = std::get<R0Solution>(ex.solution).v;
    RoundingStep step;
    step.pins = pins;
    step.value = ex.value;
    step.status = sol.status;
    step.iterations = sol.iterations;
    step.estimate = argmax_labels(memberships(v));
    step.seconds = seconds_since(ts);
    if (sol.status != conic::SolveStatus::Optimal) trace.inexact = true;
    trace.steps.push_back(std::move(step));
  };

  solve_step();
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  taken[0] = true;
  for (int c = 1; c < k; ++c) {
    const Eigen::VectorXd score = v[static_cast<std::size_t>(c)].rowwise().sum();
    int best = -1;
    for (int p = 0; p < n; ++p) {
      if (taken[static_cast<std::size_t>(p)]) continue;
      if (best < 0 || score(p) > score(best)) best = p;
    }
    taken[static_cast<std::size_t>(best)] = true;
    trace.pins.push_back(best);
    pins.push_back({c, best});
    solve_step();
  }

  trace.pre_lloyd = trace.steps.back().estimate;
  const Assignment pre = repair_empty_clusters(ds, trace.pre_lloyd, k);
  Assignment post = lloyd_step(ds, pre);
  trace.post_lloyd = post.labels();
  trace.seconds = seconds_since(t0);
  return {std::move(post), std::move(trace)};
}

std::optional<Assignment> detect_exact_recovery(const Eigen::MatrixXd& y, double tol) {
  const Eigen::Index n = y.rows();
  if (n == 0 || y.cols() != n || !y.allFinite()) return std::nullopt;
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  int k = 0;
  for (Eigen::Index p = 0; p < n; ++p) {
    if (labels[static_cast<std::size_t>(p)] >= 0) continue;
    const double cut = 0.5 * y(p, p);
    if (cut <= 0.0) return std::nullopt;
    for (Eigen::Index q = p; q < n; ++q) {
      if (labels[static_cast<std::size_t>(q)] < 0 && y(p, q) > cut) {
        labels[static_cast<std::size_t>(q)] = k;
      }
    }
    ++k;
  }
  Assignment a(std::move(labels), k);
  if ((partition_matrix(a) - y).cwiseAbs().maxCoeff() > tol) return std::nullopt;
  return a;
}

std::optional<Assignment> detect_exact_recovery(const R2Solution& y, double tol) {
  return detect_exact_recovery(y.y, tol);
}

Assignment denoise_round(const DataSet& ds, const Eigen::MatrixXd& y, int k, std::uint64_t seed) {
  if (y.rows() != ds.size() || y.cols() != ds.size()) {
    throw std::invalid_argument("denoise_round: Y must be N x N");
  }
  const DataSet denoised(ds.points() * y);
  const Assignment a = lloyd_full(denoised, k, seed);
  const Eigen::MatrixXd centers = centroids(denoised, a);
  return repair_empty_clusters(ds, nearest_center(ds, centers), k);
}

std::string trace_to_json(const RoundingTrace& t, bool timings) {
  nlohmann::json j;
  j["pins"] = t.pins;
  j["inexact"] = t.inexact;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    nlohmann::json js;
    nlohmann::json pins = nlohmann::json::array();
    for (const auto& p : s.pins) pins.push_back({{"cluster", p.cluster}, {"point", p.point}});
    js["pins"] = std::move(pins);
    js["value"] = s.value;
    js["status"] = conic::to_string(s.status);
    js["iterations"] = s.iterations;
    js["estimate"] = s.estimate;
    if (timings) js["seconds"] = s.seconds;
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  j["pre_lloyd"] = t.pre_lloyd;
  j["post_lloyd"] = t.post_lloyd;
  if (timings) j["seconds"] = t.seconds;
  return j.dump(2);
}

}  // namespace sdpkm
