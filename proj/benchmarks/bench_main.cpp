#include "sdpkm/conic/cones.hpp"
#include "sdpkm/conic/solver.hpp"
#include "sdpkm/experiment.hpp"
#include "sdpkm/formulations.hpp"
#include "sdpkm/oracle.hpp"
#include "sdpkm/random.hpp"
#include "sdpkm/rounding.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

using namespace sdpkm;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  return (a + a.transpose()) / 2;
}

DataSet balls(int n, std::uint64_t seed) { return generate_balls({2, n, 3, 2.0, 10.0, 20.0, seed}).data; }

void BM_ProjectPsd(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::VectorXd v = conic::svec(random_symmetric(n, 1));
  for (auto _ : state) {
    Eigen::VectorXd w = v;
    conic::project_psd_svec_inplace(w, n);
    benchmark::DoNotOptimize(w.data());
  }
}
BENCHMARK(BM_ProjectPsd)->Arg(15)->Arg(30)->Arg(75)->Arg(153);

void BM_ProjectSoc(benchmark::State& state) {
  Rng rng(2);
  Eigen::VectorXd v(state.range(0));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  for (auto _ : state) {
    Eigen::VectorXd w = v;
    conic::project_soc_inplace(w);
    benchmark::DoNotOptimize(w.data());
  }
}
BENCHMARK(BM_ProjectSoc)->Arg(76)->Arg(1000);

void BM_SolveR2(benchmark::State& state) {
  const auto p = build_r2(balls(static_cast<int>(state.range(0)), 3), 3);
  for (auto _ : state) benchmark::DoNotOptimize(conic::solve(p).primal_objective);
}
BENCHMARK(BM_SolveR2)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_SolveR0Compact(benchmark::State& state) {
  BuildOptions bo;
  bo.lifted = LiftedEncoding::Compact;
  const auto p = build_r0(balls(static_cast<int>(state.range(0)), 4), 3, {}, bo);
  for (auto _ : state) benchmark::DoNotOptimize(conic::solve(p).primal_objective);
}
BENCHMARK(BM_SolveR0Compact)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_Algorithm1(benchmark::State& state) {
  const DataSet ds = balls(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(algorithm1(ds, 3).assignment.labels().data());
}
BENCHMARK(BM_Algorithm1)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  const DataSet ds = balls(static_cast<int>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(solve_exact(ds, 3).zstar);
}
BENCHMARK(BM_Oracle)->Arg(9)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
