// Parallel hot loops against their serial references.
//
//   OMP_NUM_THREADS=4 ./bench_kernels --benchmark_filter=Gram
#include <memory>

#include <benchmark/benchmark.h>

#include "epsts/kernels.hpp"
#include "epsts/reference.hpp"
#include "epsts/rff_sampler.hpp"

using namespace epsts;

namespace {

Eigen::MatrixXd points(Eigen::Index n, Eigen::Index d) {
  Rng rng(1);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = uniform01(rng);
  return X;
}

const KernelSpec kMatern = KernelSpec::isotropic(KernelFamily::Matern52, 1.0, 0.3);

void BM_Gram(benchmark::State& state) {
  const auto X = points(state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(gram_matrix(kMatern, X));
}

void BM_GramReference(benchmark::State& state) {
  const auto X = points(state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(reference::gram_matrix(kMatern, X));
}

FeatureMap bench_map(Eigen::Index n_points) {
  Rng rng(2);
  return build_feature_map(kMatern, 6, n_points, rng);
}

void BM_Features(benchmark::State& state) {
  const auto fm = bench_map(1000);
  const auto X = points(state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(feature_matrix(fm, X));
}

void BM_FeaturesReference(benchmark::State& state) {
  const auto fm = bench_map(1000);
  const auto X = points(state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(reference::feature_matrix(fm, X));
}

SamplePath bench_path() {
  auto fm = std::make_shared<const FeatureMap>(bench_map(1000));
  const auto X = points(60, 6);
  const Eigen::VectorXd y = X.rowwise().sum();
  const WeightPosterior wp = weight_posterior(*fm, X, y, 1e-3);
  Rng rng(3);
  return draw_path(fm, wp, rng);
}

void BM_PathValues(benchmark::State& state) {
  const SamplePath path = bench_path();
  const auto grid = points(state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(path.values(grid));
}

void BM_PathValuesReference(benchmark::State& state) {
  const SamplePath path = bench_path();
  const auto grid = points(state.range(0), 6);
  for (auto _ : state) benchmark::DoNotOptimize(reference::path_values(path, grid));
}

void BM_FeatureGram(benchmark::State& state) {
  const auto Phi = feature_matrix(bench_map(state.range(0)), points(200, 6));
  for (auto _ : state) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(Phi.cols(), Phi.cols());
    A.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose());
    benchmark::DoNotOptimize(A);
  }
}

void BM_FeatureGramReference(benchmark::State& state) {
  const auto Phi = feature_matrix(bench_map(state.range(0)), points(200, 6));
  for (auto _ : state) benchmark::DoNotOptimize(reference::feature_gram(Phi));
}

}  // namespace

BENCHMARK(BM_Gram)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GramReference)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Features)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FeaturesReference)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PathValues)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PathValuesReference)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FeatureGram)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FeatureGramReference)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
