#include <benchmark/benchmark.h>

#include "scorefeat/decomposition.hpp"
#include "scorefeat/density.hpp"
#include "scorefeat/moments.hpp"
#include "scorefeat/pipeline.hpp"

using namespace scorefeat;

namespace {

DensityModel standard_gaussian(int d) {
  return GaussianModel(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
}

void bm_score_tensor_m3(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto model = standard_gaussian(d);
  const Eigen::MatrixXd pts = sample(model, 64, 1);
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_tensor(model, pts.row(i % 64).transpose(), 3));
    ++i;
  }
}
BENCHMARK(bm_score_tensor_m3)->Arg(4)->Arg(8)->Arg(16);

void bm_cross_moment_m3(benchmark::State& state) {
  const int d = 6, n = 20000;
  const auto model = standard_gaussian(d);
  LabeledDataset data;
  data.inputs = sample(model, n, 2);
  data.labels = data.inputs.col(0).array().cube().matrix();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        cross_moment(data, model, 3, LabelTransform::kIdentity, threads));
  }
}
BENCHMARK(bm_cross_moment_m3)->Arg(1)->Arg(4);

void bm_power_method(benchmark::State& state) {
  const int d = 8, k = 4;
  const Eigen::MatrixXd u = random_orthonormal(d, k, 3);
  CpModel truth{3, d, k, Eigen::VectorXd::LinSpaced(k, 1.0, 2.0), u};
  const SymmetricTensor t = reconstruct(truth);
  PowerConfig config;
  config.seed = 4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tensor_power_method(t, k, config));
  }
}
BENCHMARK(bm_power_method);

}  // namespace

BENCHMARK_MAIN();
