#include <benchmark/benchmark.h>

#include <numeric>

#include "tdekws/analysis.hpp"
#include "tdekws/encoding.hpp"
#include "tdekws/kernels.hpp"

namespace {

using namespace tdekws;

const Dataset& corpus() {
  static const Dataset d = [] {
    SyntheticOptions opt;
    opt.seed = 1;
    opt.reps_per_class = 6;
    return generate_synthetic_dataset(opt).dataset;
  }();
  return d;
}

const Network& tde_net() {
  static const Network net = [] {
    const auto spec = NetworkSpec::tde(enumerate_tde_pairs(32));
    TrainConfig cfg;
    return Network(spec, init_parameters(spec, cfg, 1));
  }();
  return net;
}

template <bool Parallel>
void BM_BatchGradient(benchmark::State& state) {
  set_thread_count(static_cast<int>(state.range(0)));
  const auto& data = corpus();
  std::vector<int> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  const DropoutSampler sampler(2, 0.1);
  for (auto _ : state) {
    auto g = Parallel ? batch_gradient(tde_net(), data, idx, &sampler, 0, 5.0)
                      : batch_gradient_serial(tde_net(), data, idx, &sampler, 0, 5.0);
    benchmark::DoNotOptimize(g.loss);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(data.size()));
}

template <bool Parallel>
void BM_RankPairs(benchmark::State& state) {
  set_thread_count(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto r = Parallel ? rank_pairs(corpus()) : rank_pairs_serial(corpus());
    benchmark::DoNotOptimize(r.data());
  }
}

}  // namespace

BENCHMARK(BM_BatchGradient<false>)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient<true>)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RankPairs<false>)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RankPairs<true>)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
