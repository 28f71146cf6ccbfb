// Microbenchmarks for the hot paths: top-k scans, loss/gradient evaluation,
// and the resize planner. Run with --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include <cstdio>
#include <string>
#include <vector>

#include "visret/index.hpp"
#include "visret/resize.hpp"
#include "visret/rng.hpp"
#include "visret/training.hpp"
#include "visret/vec.hpp"

namespace {

using namespace visret;

VectorIndex make_index(int count, int dim, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::string> ids;
  std::vector<float> matrix;
  matrix.reserve(static_cast<size_t>(count) * dim);
  for (int i = 0; i < count; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "v%06d", i);
    ids.emplace_back(id);
    std::vector<float> row(dim);
    for (float& x : row) x = static_cast<float>(rng.uniform_pm1());
    l2_normalize(row);
    l2_normalize(row);
    matrix.insert(matrix.end(), row.begin(), row.end());
  }
  return VectorIndex(std::move(ids), std::move(matrix), dim);
}

void BM_IndexTopK(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  VectorIndex index = make_index(count, 64, 7);
  EmbeddingVector query = index.vector_of("v000000");
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.top_k(query, k));
  }
  state.SetItemsProcessed(state.iterations() * count);
}
BENCHMARK(BM_IndexTopK)->Args({1000, 10})->Args({10000, 10})->Args({10000, 100});

Eigen::MatrixXd unit_rows(int rows, int cols, uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform_pm1();
    m.row(r).normalize();
  }
  return m;
}

void BM_ContrastiveLoss(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  Eigen::MatrixXd u = unit_rows(b, 128, 1);
  Eigen::MatrixXd v = unit_rows(b, 128, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(contrastive_loss(u, v, 0.05).loss);
  }
}
BENCHMARK(BM_ContrastiveLoss)->Arg(16)->Arg(64)->Arg(256);

void BM_LossGradients(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  TrainingBatch batch;
  batch.queries = unit_rows(b, 64, 3);
  batch.targets = unit_rows(b, 64, 4);
  batch.hard_negatives = unit_rows(b, 64, 5);
  DualEncoderParams params;
  params.temperature = 0.05;
  SplitMix64 rng(6);
  params.w_query.resize(64, 32);
  params.w_target.resize(64, 32);
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 32; ++c) {
      params.w_query(r, c) = 0.1 * rng.uniform_pm1();
      params.w_target(r, c) = 0.1 * rng.uniform_pm1();
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        loss_gradients(batch, params, 2, NegativeMode::kShared).loss);
  }
}
BENCHMARK(BM_LossGradients)->Arg(16)->Arg(64);

void BM_SmartResize(benchmark::State& state) {
  SplitMix64 rng(9);
  std::vector<ImageDims> dims;
  for (int i = 0; i < 1024; ++i) {
    dims.push_back({1 + static_cast<int64_t>(rng.uniform_below(20000)),
                    1 + static_cast<int64_t>(rng.uniform_below(20000))});
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(smart_resize(dims[i++ & 1023], 2500));
  }
}
BENCHMARK(BM_SmartResize);

}  // namespace

BENCHMARK_MAIN();
