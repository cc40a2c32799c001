#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tdekws/encoding.hpp"
#include "tdekws/error.hpp"
#include "tdekws/information.hpp"

using namespace tdekws;

namespace {

// One channel, three spikes per sample; the middle spike's offset encodes
// the class, so counts carry nothing and timing carries everything.
Dataset timing_dataset(int per_class) {
  Dataset d;
  d.n_classes = 4;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> onset(0, 60);
  for (int k = 0; k < per_class; ++k) {
    for (int c = 0; c < 4; ++c) {
      Sample s{SpikeRaster(1, 100, 0.015), c};
      const int t0 = onset(rng);
      s.raster.set(0, t0, true);
      s.raster.set(0, t0 + 2 + 2 * c, true);
      s.raster.set(0, t0 + 20, true);
      d.samples.push_back(s);
    }
  }
  return d;
}

Dataset synthetic(int reps) {
  SyntheticOptions opt;
  opt.seed = 12;
  opt.reps_per_class = reps;
  return generate_synthetic_dataset(opt).dataset;
}

}  // namespace

TEST_CASE("deterministic responses carry log2 C bits") {
  std::vector<int> cls;
  std::vector<long long> resp;
  for (int k = 0; k < 250; ++k) {
    for (int c = 0; c < 4; ++c) {
      cls.push_back(c);
      resp.push_back(10 * c + 7);
    }
  }
  CHECK(plugin_mutual_information(cls, resp) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(shuffle_corrected_mi(cls, resp, 20, 1) - 2.0) < 0.02);
}

TEST_CASE("independent responses carry nothing") {
  std::mt19937_64 rng(4);
  std::vector<int> cls;
  std::vector<long long> resp;
  for (int k = 0; k < 1000; ++k) {
    cls.push_back(static_cast<int>(rng() % 4));
    resp.push_back(static_cast<long long>(rng() % 4));
  }
  CHECK(std::abs(shuffle_corrected_mi(cls, resp, 20, 1)) < 0.05);
  CHECK(plugin_mutual_information(cls, resp) >= 0.0);
}

TEST_CASE("plug-in estimate is bounded by the class entropy") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int C = 2 + static_cast<int>(rng() % 6);
    std::vector<int> cls;
    std::vector<long long> resp;
    for (int k = 0; k < 200; ++k) {
      cls.push_back(static_cast<int>(rng() % C));
      resp.push_back(static_cast<long long>(rng() % 50));
    }
    CHECK(plugin_mutual_information(cls, resp) <= std::log2(static_cast<double>(C)) + 1e-12);
  }
}

TEST_CASE("shuffle correction is order invariant") {
  std::mt19937_64 rng(9);
  std::vector<int> cls;
  std::vector<long long> resp;
  for (int k = 0; k < 300; ++k) {
    cls.push_back(static_cast<int>(rng() % 3));
    resp.push_back(cls.back() + static_cast<long long>(rng() % 3));
  }
  const double a = shuffle_corrected_mi(cls, resp, 10, 5);
  std::vector<int> order(cls.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> c2;
  std::vector<long long> r2;
  for (int i : order) {
    c2.push_back(cls[i]);
    r2.push_back(resp[i]);
  }
  CHECK(shuffle_corrected_mi(c2, r2, 10, 5) == a);
}

TEST_CASE("timing code separates rate and pattern information") {
  const auto data = timing_dataset(100);
  const auto rate = info_rate(data);
  const auto pattern = info_pattern(data, 0.015);
  CHECK(rate.per_channel.size() == 1);
  CHECK(rate.mean < 0.05);
  CHECK(pattern.mean > 0.95 * 2.0);
}

TEST_CASE("pattern information is invariant to sample order") {
  auto data = synthetic(6);
  const auto a = info_pattern(data, 0.03);
  std::mt19937_64 rng(1);
  std::shuffle(data.samples.begin(), data.samples.end(), rng);
  const auto b = info_pattern(data, 0.03);
  CHECK(a.per_channel == b.per_channel);
}

TEST_CASE("coarser bins do not add information") {
  const auto data = synthetic(20);
  double prev = 1e9;
  for (double dt : {0.015, 0.03, 0.06, 0.12}) {
    const double m = info_pattern(data, dt).mean;
    CHECK(m <= prev + 0.05);
    prev = m;
  }
}

TEST_CASE("pattern at the raster step holds at least the rate information") {
  const auto data = synthetic(20);
  const auto rate = info_rate(data);
  const auto pattern = info_pattern(data, 0.015);
  CHECK(pattern.mean >= rate.mean - 0.01);
  CHECK(rate.per_channel.size() == 32);
}

TEST_CASE("invalid pattern resolutions") {
  const auto data = synthetic(2);
  CHECK_THROWS_AS(info_pattern(data, 0.01), DomainError);
  InfoOptions narrow;
  narrow.max_word_bins = 10;
  CHECK_THROWS_AS(info_pattern(data, 0.015, narrow), DomainError);
  CHECK_NOTHROW(info_pattern(data, 0.06, narrow));
  InfoOptions wide;
  wide.max_word_bins = 65;
  CHECK_THROWS_AS(info_pattern(data, 0.06, wide), DomainError);
}

TEST_CASE("information table has one row per channel and resolution") {
  const auto data = synthetic(2);
  const std::vector<double> dts{0.015, 0.03, 0.06};
  const auto rows = info_table(data, dts);
  CHECK(rows.size() == 96);
  CHECK(rows[0].channel == 0);
}
