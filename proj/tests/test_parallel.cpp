#include <doctest.h>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "tdekws/analysis.hpp"
#include "tdekws/encoding.hpp"
#include "tdekws/kernels.hpp"

using namespace tdekws;

namespace {

Dataset corpus() {
  SyntheticOptions opt;
  opt.seed = 2;
  opt.reps_per_class = 3;
  return generate_synthetic_dataset(opt).dataset;
}

Network net_for(ArchKind kind) {
  TrainConfig cfg;
  cfg.init_scale = 2.0;
  NetworkSpec spec;
  if (kind == ArchKind::Tde) {
    auto all = enumerate_tde_pairs(32);
    spec = NetworkSpec::tde({all.begin(), all.begin() + 60});
  } else {
    spec = kind == ArchKind::Lif ? NetworkSpec::lif(40) : NetworkSpec::lifrec(40);
  }
  std::vector<double> raw(kind == ArchKind::Tde ? 60 : 0, 0.5);
  return Network(spec, init_parameters(spec, cfg, 3, raw));
}

}  // namespace

TEST_CASE("batch gradient agrees with the serial kernel") {
  const auto data = corpus();
  std::vector<int> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  const DropoutSampler sampler(4, 0.1);
  for (ArchKind kind : {ArchKind::Tde, ArchKind::Lif, ArchKind::LifRec}) {
    const auto net = net_for(kind);
    for (int threads : {1, 2, 4}) {
      set_thread_count(threads);
      const auto par = batch_gradient(net, data, idx, &sampler, 9, 5.0);
      const auto ser = batch_gradient_serial(net, data, idx, &sampler, 9, 5.0);
      CHECK(par.grads == ser.grads);
      CHECK(par.loss == ser.loss);
      CHECK(par.correct == ser.correct);
    }
  }
  set_thread_count(0);
}

TEST_CASE("evaluation agrees with the serial kernel") {
  const auto data = corpus();
  for (ArchKind kind : {ArchKind::Tde, ArchKind::Lif, ArchKind::LifRec}) {
    const auto net = net_for(kind);
    const auto ser = evaluate_serial(net, data);
    for (int threads : {1, 3}) {
      set_thread_count(threads);
      const auto par = evaluate(net, data);
      CHECK(par.accuracy == ser.accuracy);
      CHECK(par.mean_loss == ser.mean_loss);
      CHECK(par.predictions == ser.predictions);
      for (int l = 0; l < EventLog::kLayers; ++l) {
        CHECK(par.events.layers[l].input_events == ser.events.layers[l].input_events);
        CHECK(par.events.layers[l].output_spikes == ser.events.layers[l].output_spikes);
      }
      CHECK(par.events.samples == data.size());
    }
  }
  set_thread_count(0);
}

TEST_CASE("ranking is independent of the thread count") {
  const auto data = corpus();
  const auto ser = rank_pairs_serial(data);
  for (int threads : {1, 2, 5}) {
    set_thread_count(threads);
    const auto par = rank_pairs(data);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CHECK(par[i].pair == ser[i].pair);
      CHECK(par[i].xcorr_value == ser[i].xcorr_value);
      CHECK(par[i].class_values == ser[i].class_values);
    }
  }
  set_thread_count(0);
}
