#include <benchmark/benchmark.h>

#include <random>

#include "capeval/commands.hpp"
#include "fixture.hpp"

using namespace capeval;

namespace {

std::vector<Distribution> random_bags(std::size_t count, std::size_t support, std::size_t dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<Distribution> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> pts(support * dim);
    for (auto& x : pts) x = g(rng);
    out.emplace_back(dim, std::move(pts), std::vector<double>(support, 1.0 / static_cast<double>(support)));
  }
  return out;
}

void wmd_batch(benchmark::State& state, Execution exec) {
  const auto bags = random_bags(257, static_cast<std::size_t>(state.range(0)), 50);
  std::vector<DistributionPair> pairs;
  for (std::size_t i = 0; i + 1 < bags.size(); ++i) pairs.push_back({&bags[i], &bags[i + 1]});
  for (auto _ : state) benchmark::DoNotOptimize(wmd_distances(pairs, exec));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * pairs.size()));
}

void BM_WmdSerial(benchmark::State& state) { wmd_batch(state, Execution::serial); }
void BM_WmdParallel(benchmark::State& state) { wmd_batch(state, Execution::parallel); }
BENCHMARK(BM_WmdSerial)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WmdParallel)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void evaluate_fixture(benchmark::State& state, Execution exec) {
  fixture::ScratchDir dir("bench");
  fixture::Shape shape;
  shape.images = static_cast<int>(state.range(0));
  shape.dim = 64;
  shape.feature_dim = 256;
  const auto p = fixture::write(dir.path(), shape);
  const auto caps = load_captions(p.captions, {});
  const auto refs = load_references(p.references, {});
  const auto es = load_embeddings(p.emb_source, Language::source);
  const auto et = load_embeddings(p.emb_target, Language::target);
  const auto feats = load_features(p.features);
  const auto ps = load_projector(p.proj_source);
  const auto pt = load_projector(p.proj_target);
  EvalInputs in{&caps, &refs, &es, &et, &feats, &ps, &pt};
  EvalOptions o;
  o.execution = exec;
  o.average_refs = true;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(in, o));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * caps.size()));
}

void BM_EvaluateSerial(benchmark::State& state) { evaluate_fixture(state, Execution::serial); }
void BM_EvaluateParallel(benchmark::State& state) { evaluate_fixture(state, Execution::parallel); }
BENCHMARK(BM_EvaluateSerial)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
