#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "oracles.hpp"
#include "tdekws/analysis.hpp"
#include "tdekws/error.hpp"
#include "tdekws/training.hpp"

using namespace tdekws;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> row_of(const SpikeRaster& r, int n) {
  std::vector<std::uint8_t> v(r.steps());
  for (int t = 0; t < r.steps(); ++t) v[t] = r.at(n, t);
  return v;
}

// Channel 0 fires at a random onset and channel 1 three steps later; the
// rest stay silent.
Dataset lagged_dataset(int n_channels, int per_class) {
  Dataset d;
  d.n_classes = 2;
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> onset(0, 80);
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < per_class; ++k) {
      Sample s{SpikeRaster(n_channels, 100, 0.015), c};
      const int t0 = onset(rng);
      for (int r = 0; r < 4; ++r) {
        s.raster.set(0, t0 + 2 * r, true);
        s.raster.set(1, t0 + 2 * r + 3, true);
      }
      d.samples.push_back(s);
    }
  }
  return d;
}

ParameterSet random_params(const NetworkSpec& spec, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.init_scale = 3.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tau(-4.0, 0.5);
  std::vector<double> raw(spec.kind == ArchKind::Tde ? spec.n_l1 : 0);
  for (auto& r : raw) r = tau(rng);
  return init_parameters(spec, cfg, seed, raw);
}

}  // namespace

TEST_CASE("cross-correlation matches the direct sum") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const auto r = oracle::random_raster(rng, 2, 100, 0.2);
    const auto a = row_of(r, 0), b = row_of(r, 1);
    const int max_lag = 1 + static_cast<int>(rng() % 40);
    const auto got = unbiased_xcorr(a, b, max_lag);
    const auto want = oracle::xcorr(a, b, max_lag);
    REQUIRE(got.values.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got.values[i] - want[i]) < 1e-12);
    const double peak = *std::max_element(want.begin(), want.end());
    CHECK(got.best_value == doctest::Approx(peak).epsilon(1e-12));
    CHECK(got.at(got.best_lag) == got.best_value);
  }
}

TEST_CASE("cross-correlation lag conventions") {
  std::vector<std::uint8_t> a(100, 0), b(100, 0), z(100, 0);
  for (int t : {10, 30, 50}) {
    a[t] = 1;
    b[t + 5] = 1;
  }
  CHECK(unbiased_xcorr(a, b, 33).best_lag == 5);
  CHECK(unbiased_xcorr(b, a, 33).best_lag == -5);
  CHECK(unbiased_xcorr(a, a, 33).best_lag == 0);
  const auto silent = unbiased_xcorr(a, z, 33);
  CHECK(silent.best_value == 0.0);
  CHECK(silent.best_lag == 0);
  CHECK_THROWS_AS(unbiased_xcorr(a, b, 100), DomainError);
  CHECK_THROWS_AS(unbiased_xcorr(a, b, -1), DomainError);
}

TEST_CASE("ranking finds the planted pair") {
  const auto data = lagged_dataset(4, 6);
  const auto ranked = rank_pairs(data);
  REQUIRE(ranked.size() == 12);
  CHECK(ranked[0].pair == TdePair{0, 1});
  CHECK(ranked[0].best_lag == 3);
  CHECK(ranked[1].pair == TdePair{1, 0});
  CHECK(ranked[1].best_lag == -3);
  CHECK(ranked[1].xcorr_value == ranked[0].xcorr_value);
  CHECK(ranked[0].class_values.size() == 2);
  // Silent pairs keep fac-major order behind the active ones.
  std::vector<TdePair> rest;
  for (std::size_t i = 2; i < ranked.size(); ++i) {
    if (ranked[i].xcorr_value == 0.0) rest.push_back(ranked[i].pair);
  }
  CHECK(std::is_sorted(rest.begin(), rest.end()));
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    CHECK(ranked[i - 1].xcorr_value >= ranked[i].xcorr_value);
  }
}

TEST_CASE("ranking covers every ordered pair and matches the serial path") {
  const auto data = lagged_dataset(32, 3);
  const auto par = rank_pairs(data);
  const auto ser = rank_pairs_serial(data);
  REQUIRE(par.size() == 992);
  std::set<TdePair> seen;
  for (std::size_t i = 0; i < par.size(); ++i) {
    seen.insert(par[i].pair);
    CHECK(par[i].pair.fac != par[i].pair.trig);
    CHECK(par[i].pair == ser[i].pair);
    CHECK(par[i].xcorr_value == ser[i].xcorr_value);
    CHECK(par[i].best_lag == ser[i].best_lag);
  }
  CHECK(seen.size() == 992);
}

TEST_CASE("pruning by threshold and count") {
  const auto data = lagged_dataset(4, 6);
  const auto ranked = rank_pairs(data);
  const auto top = prune_top(ranked, 1, 4, 2);
  REQUIRE(top.n_l1 == 1);
  CHECK(top.tde_pairs[0] == TdePair{0, 1});
  const auto two = prune(ranked, ranked[1].xcorr_value, 4, 2);
  CHECK(two.tde_pairs == std::vector<TdePair>{{0, 1}, {1, 0}});
  CHECK(prune(ranked, 0.0, 4, 2).n_l1 == 12);
  CHECK_THROWS_AS(prune(ranked, 1e9, 4, 2), DomainError);

  const auto r1 = random_prune(100, 7);
  const auto r2 = random_prune(100, 7);
  CHECK(r1 == r2);
  CHECK(r1.n_l1 == 100);
  CHECK(std::set<TdePair>(r1.tde_pairs.begin(), r1.tde_pairs.end()).size() == 100);
  CHECK_FALSE(random_prune(100, 8) == r1);
}

TEST_CASE("tau_g initialization from lags") {
  std::vector<PairCorrelation> ranked(3);
  ranked[0].pair = {0, 1};
  ranked[0].best_lag = 0;
  ranked[1].pair = {1, 0};
  ranked[1].best_lag = -4;
  ranked[2].pair = {2, 3};
  ranked[2].best_lag = 2;
  const auto spec = NetworkSpec::tde({{0, 1}, {1, 0}, {2, 3}});
  const auto raw = init_tau_from_lags(ranked, spec, 0.015);
  CHECK(softplus(raw[0]) == doctest::Approx(0.015).epsilon(1e-12));
  CHECK(softplus(raw[1]) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(softplus(raw[2]) == doctest::Approx(0.03).epsilon(1e-12));
  CHECK_THROWS_AS(init_tau_from_lags(ranked, NetworkSpec::tde({{5, 6}}), 0.015),
                  StructuralError);
}

TEST_CASE("SynOps equal the event replay") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const ArchKind kind = std::array{ArchKind::Tde, ArchKind::Lif, ArchKind::LifRec}[trial % 3];
    NetworkSpec spec;
    if (kind == ArchKind::Tde) {
      auto all = enumerate_tde_pairs(8);
      std::shuffle(all.begin(), all.end(), rng);
      all.resize(10);
      spec = NetworkSpec::tde(all, 8, 5);
    } else {
      spec = kind == ArchKind::Lif ? NetworkSpec::lif(10, 8, 5) : NetworkSpec::lifrec(10, 8, 5);
    }
    const auto params = random_params(spec, rng());
    const auto x = oracle::random_raster(rng, 8, 40, 0.25);
    const auto r = Network(spec, params).run(x);
    const auto ev = oracle::replay(spec, params, x);
    const auto rep = count_synops(r.events);
    std::uint64_t total = 0;
    for (int l = 0; l < 3; ++l) {
      INFO("trial " << trial << " layer " << l);
      CHECK(rep.per_layer[l] == ev.in[l] + ev.out[l]);
      CHECK(rep.spikes[l] == ev.out[l]);
      total += rep.per_layer[l];
    }
    CHECK(rep.total == total);
  }
}

TEST_CASE("SynOps with dropout count only delivered spikes") {
  std::mt19937_64 rng(5);
  const auto spec = NetworkSpec::lif(10, 8, 5);
  const auto params = random_params(spec, 2);
  const auto x = oracle::random_raster(rng, 8, 40, 0.3);
  std::vector<std::uint8_t> mask(40 * 10);
  for (auto& m : mask) m = rng() % 2;
  RunOptions o;
  o.dropout = &mask;
  const auto rep = count_synops(Network(spec, params).run(x, o).events);
  const auto ev = oracle::replay(spec, params, x, &mask);
  CHECK(rep.per_layer[2] == ev.in[2] + ev.out[2]);
}

TEST_CASE("per-keyword averages") {
  EventLog log;
  log.samples = 4;
  log.layers[1].input_events = 10;
  log.layers[1].output_spikes = 2;
  const auto r = count_synops(log);
  CHECK(r.per_keyword(1) == 3.0);
  CHECK(r.total_per_keyword() == 3.0);
  CHECK(r.spikes_per_keyword(1) == 0.5);
}

TEST_CASE("pair distances and matching") {
  CHECK(pair_distance({0, 1}, {3, 5}) == 5.0);
  const std::vector<TdePair> a{{0, 1}, {10, 12}};
  const std::vector<TdePair> b{{3, 5}, {20, 30}};
  const auto m = match_pair_sets(a, b, 5.0);
  REQUIRE(m.distances.size() == 2);
  CHECK(m.distances[0] == 5.0);
  CHECK(m.coincidences == 1);
  const auto same = match_pair_sets(a, a, 5.0);
  CHECK(same.coincidences == 2);
  CHECK(same.mean == 0.0);
  CHECK(same.stddev == 0.0);
  // Greedy takes the globally closest pair first.
  const std::vector<TdePair> c{{0, 0}, {0, 3}};
  const std::vector<TdePair> d{{0, 2}, {0, 10}};
  const auto g = match_pair_sets(c, d, 5.0);
  CHECK(g.distances == std::vector<double>{1.0, 10.0});
}

TEST_CASE("interpretability report") {
  const auto data = lagged_dataset(4, 6);
  const auto ranked = rank_pairs(data);
  const auto spec = prune(ranked, 0.0, 4, 2);
  ParameterSet p = random_params(spec, 1);
  for (int j = 0; j < spec.n_l1; ++j) {
    p.w2(0, j) = 0.01 * j;
    p.w2(1, j) = -0.01 * j;
  }
  const auto rep = interpretability_report(spec, p, ranked, 3);
  REQUIRE(rep.classes.size() == 2);
  REQUIRE(rep.classes[0].top_cells.size() == 3);
  CHECK(rep.classes[0].top_cells[0].cell == spec.n_l1 - 1);
  CHECK(rep.classes[0].top_cells[0].pair == spec.tde_pairs[spec.n_l1 - 1]);
  CHECK(rep.classes[0].top_cells[0].tau_g == doctest::Approx(softplus(p.tau_g_raw[spec.n_l1 - 1])));
  CHECK(rep.classes[0].xcorr_top.size() == 3);
  CHECK(rep.overall.distances.size() == 6);
  const auto big = interpretability_report(spec, p, ranked, 100);
  CHECK(big.classes[0].top_cells.size() == 12);
}

TEST_CASE("ranked CSV round trip") {
  const auto data = lagged_dataset(5, 3);
  const auto ranked = rank_pairs(data);
  const auto dir = fs::temp_directory_path() / "tdekws_test_analysis";
  fs::create_directories(dir);
  save_ranked_csv(dir / "ranked.csv", ranked);
  const auto back = load_ranked_csv(dir / "ranked.csv");
  REQUIRE(back.size() == ranked.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].pair == ranked[i].pair);
    CHECK(back[i].xcorr_value == ranked[i].xcorr_value);
    CHECK(back[i].best_lag == ranked[i].best_lag);
  }
  {
    std::ofstream out(dir / "bad.csv");
    out << "fac,trig,xcorr,lag\n0,1,0.5,2\n0,x,0.1,1\n";
  }
  try {
    load_ranked_csv(dir / "bad.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}
