// Serial reference vs OpenMP kernels: convolution, exhaustive knn and the psi table.

#include <benchmark/benchmark.h>

#include <numbers>
#include <random>
#include <vector>

#include "lc2/kernels.hpp"
#include "lc2/matchdb.hpp"
#include "lc2/similarity.hpp"

using namespace lc2;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// First encoder layer at the default input size.
kernels::ConvShape bench_shape() { return kernels::conv_shape(16, 32, 128, 32, 3, 2, 1); }

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const auto s = bench_shape();
  const auto in = random_values(s.in_ch * s.in_h * s.in_w, 1);
  const auto w = random_values(s.out_ch * s.in_ch * s.kernel * s.kernel, 2);
  const auto b = random_values(s.out_ch, 3);
  std::vector<double> out(s.out_ch * s.out_h * s.out_w);
  for (auto _ : state) {
    if constexpr (Parallel) kernels::conv2d_forward(s, in, w, b, out);
    else kernels::serial::conv2d_forward(s, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  const auto s = bench_shape();
  const auto in = random_values(s.in_ch * s.in_h * s.in_w, 1);
  const auto w = random_values(s.out_ch * s.in_ch * s.kernel * s.kernel, 2);
  const auto dout = random_values(s.out_ch * s.out_h * s.out_w, 4);
  std::vector<double> dw(w.size()), db(s.out_ch), din(in.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::conv2d_backward_params(s, in, dout, dw, db);
      kernels::conv2d_backward_input(s, w, dout, din);
    } else {
      kernels::serial::conv2d_backward_params(s, in, dout, dw, db);
      kernels::serial::conv2d_backward_input(s, w, dout, din);
    }
    benchmark::DoNotOptimize(din.data());
  }
}

DescriptorDb bench_db(std::size_t n, std::size_t dim) {
  DescriptorDb db(dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = random_values(dim, 100 + i);
    double s = 0.0;
    for (double x : v) s += x * x;
    for (double& x : v) x /= std::sqrt(s);
    db.insert({i, {0.0, 0.0}, Modality::Camera, v});
  }
  return db;
}

template <bool Parallel>
void BM_Knn(benchmark::State& state) {
  const DescriptorDb db = bench_db(static_cast<std::size_t>(state.range(0)), 256);
  const Descriptor q = db[0];
  for (auto _ : state) {
    MatchResult r = Parallel ? knn_query(db, q, 25) : serial::knn_query(db, q, 25);
    benchmark::DoNotOptimize(r.indices.data());
  }
}

template <bool Parallel>
void BM_PsiTable(benchmark::State& state) {
  std::vector<SensorView> views;
  const FrustumSpec camera{std::numbers::pi / 2, 30.0, 0.0};
  for (int i = 0; i < state.range(0); ++i) views.push_back({{3.0 * i, 0.0, 0.1 * i}, camera});
  for (auto _ : state) {
    auto t = Parallel ? pairwise_similarity_table(views, 0.5) : serial::pairwise_similarity_table(views, 0.5);
    benchmark::DoNotOptimize(t.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/serial");
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/openmp");
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/serial");
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/openmp");
BENCHMARK(BM_Knn<false>)->Name("knn/serial")->Arg(10000);
BENCHMARK(BM_Knn<true>)->Name("knn/openmp")->Arg(10000);
BENCHMARK(BM_PsiTable<false>)->Name("psi_table/serial")->Arg(100);
BENCHMARK(BM_PsiTable<true>)->Name("psi_table/openmp")->Arg(100);

BENCHMARK_MAIN();
