#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "tdekws/encoding.hpp"
#include "tdekws/error.hpp"
#include "tdekws/training.hpp"

using namespace tdekws;

namespace {

using gradcheck::small_spec;

Dataset tiny_corpus(int reps) {
  SyntheticOptions opt;
  opt.seed = 5;
  opt.reps_per_class = reps;
  return generate_synthetic_dataset(opt).dataset;
}

}  // namespace

TEST_CASE("cross entropy of silent outputs") {
  std::vector<double> eleven(11, 0.0), two(2, 0.0);
  CHECK(spike_count_cross_entropy(eleven, 3) == doctest::Approx(std::log(11.0)).epsilon(1e-12));
  CHECK(spike_count_cross_entropy(two, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(spike_count_cross_entropy(two, 2), DomainError);
  CHECK_THROWS_AS(spike_count_cross_entropy(two, -1), DomainError);
  std::vector<double> big{1000.0, 0.0};
  CHECK(std::isfinite(spike_count_cross_entropy(big, 1)));
  CHECK(predict_class(std::vector<double>{2, 5, 5}) == 1);
}

TEST_CASE("analytic gradient matches finite differences") {
  for (ArchKind kind : {ArchKind::Lif, ArchKind::LifRec, ArchKind::Tde}) {
    const auto cfgs = gradcheck::configs();
    for (std::size_t c = 0; c < cfgs.size(); ++c) {
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto r = gradcheck::check(kind, cfgs[c], 100 * c + seed);
        INFO(to_string(kind) << " config " << c << " seed " << seed);
        CHECK(r.entries > 0);
        CHECK(r.worst < 1e-4);
      }
    }
  }
}

TEST_CASE("longer tau_g helps a delayed coincidence") {
  const auto spec = NetworkSpec::tde({{0, 1}}, 2, 2);
  TrainConfig cfg;
  ParameterSet p = init_parameters(spec, cfg, 1);
  p.w2(0, 0) = 2.0;
  p.w2(1, 0) = -2.0;
  for (int k = 1; k <= 6; ++k) {
    SpikeRaster x(2, 20, 0.015);
    x.set(0, 2, true);
    for (int t = 2 + k; t < 2 + k + 4; ++t) x.set(1, t, true);
    const Network net(spec, p);
    RunOptions o;
    o.record_tape = true;
    const auto r = net.run(x, o);
    const auto g = backward(*r.tape, net, 0);
    INFO("delay " << k);
    CHECK(g.tau_g_raw[0] < 0.0);
  }
}

TEST_CASE("silent input gives zero gradient") {
  TrainConfig cfg;
  for (ArchKind kind : {ArchKind::Lif, ArchKind::LifRec, ArchKind::Tde}) {
    const auto spec = small_spec(kind);
    const Network net(spec, init_parameters(spec, cfg, 9));
    RunOptions o;
    o.record_tape = true;
    const auto r = net.run(SpikeRaster(4, 12, 0.015), o);
    const auto g = backward(*r.tape, net, 1);
    for (auto block : trainable_blocks(g, kind)) {
      for (double v : block) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("backward rejects a mismatched tape") {
  TrainConfig cfg;
  const auto spec = small_spec(ArchKind::Lif);
  const Network net(spec, init_parameters(spec, cfg, 9));
  RunOptions o;
  o.record_tape = true;
  auto r = net.run(SpikeRaster(4, 12, 0.015), o);
  CHECK_THROWS_AS(backward(*r.tape, net, 3), DomainError);
  r.tape->hidden.membrane.pop_back();
  CHECK_THROWS_AS(backward(*r.tape, net, 0), StructuralError);
}

TEST_CASE("Adam with a zero gradient only decays weights") {
  TrainConfig cfg;
  for (ArchKind kind : {ArchKind::Lif, ArchKind::LifRec, ArchKind::Tde}) {
    const auto spec = small_spec(kind);
    const ParameterSet start = init_parameters(spec, cfg, 4);
    ParameterSet p = start;
    Adam adam(spec, {0.01, 0.9, 0.999, 1e-8, 0.1});
    adam.step(p, Gradients::zeros_like(spec));
    CHECK(adam.steps() == 1);
    for (std::size_t i = 0; i < p.w2.size(); ++i) {
      CHECK(p.w2.data()[i] == start.w2.data()[i] * (1.0 - 0.01 * 0.1));
    }
    CHECK(p.tau_g_raw == start.tau_g_raw);

    ParameterSet q = start;
    Adam plain(spec, {0.01, 0.9, 0.999, 1e-8, 0.0});
    plain.step(q, Gradients::zeros_like(spec));
    CHECK(q == start);
  }
}

TEST_CASE("Adam first step moves by the learning rate") {
  const auto spec = small_spec(ArchKind::Lif);
  TrainConfig cfg;
  ParameterSet p = init_parameters(spec, cfg, 4);
  const ParameterSet start = p;
  Gradients g = Gradients::zeros_like(spec);
  g.w2(0, 0) = 3.0;
  g.w2(1, 2) = -0.5;
  Adam adam(spec, {0.01, 0.9, 0.999, 1e-8, 0.0});
  adam.step(p, g);
  CHECK(p.w2(0, 0) == doctest::Approx(start.w2(0, 0) - 0.01).epsilon(1e-6));
  CHECK(p.w2(1, 2) == doctest::Approx(start.w2(1, 2) + 0.01).epsilon(1e-6));
  CHECK(p.w1 == start.w1);
}

TEST_CASE("dropout keeps the expected share") {
  DropoutSampler s(11, 0.1);
  std::vector<std::uint8_t> mask(100000);
  s.fill(3, mask);
  const double kept = std::accumulate(mask.begin(), mask.end(), 0.0) / mask.size();
  CHECK(kept == doctest::Approx(0.9).epsilon(0.005));
  std::vector<std::uint8_t> again(100000);
  s.fill(3, again);
  CHECK(mask == again);
  s.fill(4, again);
  CHECK_FALSE(mask == again);
  DropoutSampler none(11, 0.0);
  none.fill(1, again);
  CHECK(std::all_of(again.begin(), again.end(), [](std::uint8_t v) { return v == 1; }));
  CHECK_THROWS_AS(DropoutSampler(1, 1.0), DomainError);
}

TEST_CASE("stratified split sizes") {
  const auto data = tiny_corpus(40);
  const auto s = split_dataset(data, 0.2, 1.0, 0);
  CHECK(s.test.size() == 88);
  CHECK(s.train.size() == 352);
  for (int c : s.test.class_counts()) CHECK(c == 8);
  const auto q = split_dataset(data, 0.2, 0.75, 0);
  CHECK(q.test.samples == s.test.samples);
  for (int c : q.train.class_counts()) CHECK(c == 24);
  for (const auto& t : q.test.samples) {
    CHECK(std::find(q.train.samples.begin(), q.train.samples.end(), t) == q.train.samples.end());
  }
  CHECK_THROWS_AS(split_dataset(data, 0.0, 1.0, 0), DomainError);
  CHECK_THROWS_AS(split_dataset(data, 0.2, 1.5, 0), DomainError);
  CHECK_THROWS_AS(split_dataset(tiny_corpus(2), 0.2, 1.0, 0), DomainError);
}

TEST_CASE("top-k mean") {
  std::vector<double> v{0.1, 0.9, 0.5, 0.7};
  CHECK(top_k_mean(v, 2) == doctest::Approx(0.8));
  CHECK(top_k_mean(v, 25) == doctest::Approx(0.55));
  CHECK(top_k_mean(std::vector<double>{}, 3) == 0.0);
}

TEST_CASE("training behaviour on a tiny corpus") {
  const auto data = tiny_corpus(4);
  const auto split = split_dataset(data, 0.25, 1.0, 0);
  auto all = enumerate_tde_pairs(32);
  std::vector<TdePair> pairs(all.begin(), all.begin() + 40);
  const auto spec = NetworkSpec::tde(pairs);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.top_k = 2;
  cfg.learning_rate = 0.05;
  std::vector<double> raw(40, softplus_inverse(0.2));
  const auto init = init_parameters(spec, cfg, 1, raw);

  const auto a = train(split.train, split.test, spec, init, cfg);
  const auto b = train(split.train, split.test, spec, init, cfg);
  CHECK(a.params == b.params);
  CHECK(a.report.epoch_loss == b.report.epoch_loss);
  CHECK(a.report.epoch_loss.size() == 3);
  CHECK(a.report.top_accuracy ==
        top_k_mean(a.report.epoch_test_accuracy, 2));
  for (double raw_tau : a.params.tau_g_raw) {
    const double g = gamma_from_raw(raw_tau, cfg.dt);
    CHECK(g > 0.0);
    CHECK(g < 1.0);
  }

  TrainConfig frozen = cfg;
  frozen.learning_rate = 0.0;
  CHECK(train(split.train, split.test, spec, init, frozen).params == init);

  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(split.train, split.test, spec, init, bad), DomainError);
}
