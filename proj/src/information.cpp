#include "tdekws/information.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "tdekws/error.hpp"
#include "tdekws/format.hpp"
#include "tdekws/training.hpp"

namespace tdekws {

namespace {

constexpr long long kSilent = -1;
// Slack for window/dt ratios that are integers up to rounding.
constexpr double kRatioEps = 1e-9;

void check_pairs(std::span<const int> classes,
                 std::span<const long long> responses) {
  if (classes.size() != responses.size()) {
    throw StructuralError("class and response vectors differ in length");
  }
}

int window_steps(double window, double dt) {
  if (!(window > 0.0)) throw DomainError("window must be positive");
  return static_cast<int>(std::ceil(window / dt - kRatioEps));
}

ChannelInfo summarize(std::vector<double> values) {
  ChannelInfo info;
  info.per_channel = std::move(values);
  if (info.per_channel.empty()) return info;
  const double n = static_cast<double>(info.per_channel.size());
  info.mean = std::accumulate(info.per_channel.begin(), info.per_channel.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : info.per_channel) ss += (v - info.mean) * (v - info.mean);
  info.stddev = std::sqrt(ss / n);
  return info;
}

// Per-channel MI over responses produced by `response(sample, channel)`.
template <class F>
ChannelInfo per_channel_info(const Dataset& data, const InfoOptions& options,
                             F response) {
  if (data.empty()) throw DomainError("information: empty dataset");
  data.validate();
  const int n_channels = data.neurons();
  std::vector<int> classes;
  for (const auto& s : data.samples) classes.push_back(s.class_id);
  std::vector<double> values(n_channels, 0.0);
  std::vector<std::exception_ptr> errors(n_channels);
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < n_channels; ++c) {
    try {
      std::vector<long long> r(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        r[i] = response(data.samples[i].raster, c);
      }
      values[c] = shuffle_corrected_mi(classes, r, options.shuffles,
                                       mix_seed(options.seed, c));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return summarize(std::move(values));
}

int first_spike(std::span<const std::uint8_t> row) {
  for (std::size_t t = 0; t < row.size(); ++t) {
    if (row[t]) return static_cast<int>(t);
  }
  return -1;
}

}  // namespace

double plugin_mutual_information(std::span<const int> classes,
                                 std::span<const long long> responses) {
  check_pairs(classes, responses);
  if (classes.empty()) return 0.0;
  std::map<int, long> pc;
  std::map<long long, long> pr;
  std::map<std::pair<int, long long>, long> joint;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    ++pc[classes[i]];
    ++pr[responses[i]];
    ++joint[{classes[i], responses[i]}];
  }
  const double n = static_cast<double>(classes.size());
  double mi = 0.0;
  for (const auto& [key, count] : joint) {
    const double pxy = count / n;
    const double px = pc[key.first] / n;
    const double py = pr[key.second] / n;
    mi += pxy * std::log2(pxy / (px * py));
  }
  return mi;
}

double shuffle_corrected_mi(std::span<const int> classes,
                            std::span<const long long> responses, int shuffles,
                            std::uint64_t seed) {
  check_pairs(classes, responses);
  if (shuffles < 0) throw DomainError("shuffles must be >= 0");
  std::vector<std::pair<int, long long>> pairs;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    pairs.emplace_back(classes[i], responses[i]);
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<int> cls;
  std::vector<long long> resp;
  for (const auto& [c, r] : pairs) {
    cls.push_back(c);
    resp.push_back(r);
  }
  const double raw = plugin_mutual_information(cls, resp);
  if (shuffles == 0) return raw;
  std::mt19937_64 rng(seed);
  double bias = 0.0;
  for (int k = 0; k < shuffles; ++k) {
    std::shuffle(cls.begin(), cls.end(), rng);
    bias += plugin_mutual_information(cls, resp);
  }
  return raw - bias / shuffles;
}

ChannelInfo info_rate(const Dataset& data, const InfoOptions& options) {
  const int w = window_steps(options.window, data.empty() ? 1.0 : data.dt());
  return per_channel_info(data, options, [w](const SpikeRaster& r, int c) {
    const auto row = r.row(c);
    const int t0 = first_spike(row);
    if (t0 < 0) return kSilent;
    long long count = 0;
    const int end = std::min<int>(t0 + w, static_cast<int>(row.size()));
    for (int t = t0; t < end; ++t) count += row[t];
    return count;
  });
}

ChannelInfo info_pattern(const Dataset& data, double delta_t,
                         const InfoOptions& options) {
  if (data.empty()) throw DomainError("information: empty dataset");
  const double dt = data.dt();
  if (!(delta_t >= dt * (1.0 - kRatioEps))) {
    throw DomainError("delta_t " + format_double(delta_t) +
                      " is finer than the raster step " + format_double(dt));
  }
  if (options.max_word_bins < 1 || options.max_word_bins > 64) {
    throw DomainError("max_word_bins must lie in [1, 64]");
  }
  const int bins = window_steps(options.window, delta_t);
  if (bins > options.max_word_bins) {
    throw DomainError("window / delta_t needs " + std::to_string(bins) +
                      " bins, above max_word_bins " +
                      std::to_string(options.max_word_bins));
  }
  const int w = window_steps(options.window, dt);
  // Bin of each step offset from the first spike.
  std::vector<int> bin_of(w);
  for (int k = 0; k < w; ++k) {
    bin_of[k] = std::min(bins - 1, static_cast<int>(std::floor(k * dt / delta_t + kRatioEps)));
  }
  // A spiking channel always sets bit 0, so the empty word marks silence.
  return per_channel_info(data, options, [&](const SpikeRaster& r, int c) {
    const auto row = r.row(c);
    const int t0 = first_spike(row);
    if (t0 < 0) return 0LL;
    std::uint64_t word = 0;
    const int end = std::min<int>(t0 + w, static_cast<int>(row.size()));
    for (int t = t0; t < end; ++t) {
      if (row[t]) word |= std::uint64_t{1} << bin_of[t - t0];
    }
    return static_cast<long long>(word);
  });
}

std::vector<InfoRow> info_table(const Dataset& data,
                                std::span<const double> delta_ts,
                                const InfoOptions& options) {
  if (delta_ts.empty()) throw DomainError("info_table: no delta_t values");
  const ChannelInfo rate = info_rate(data, options);
  std::vector<InfoRow> rows;
  for (double d : delta_ts) {
    const ChannelInfo pattern = info_pattern(data, d, options);
    for (std::size_t c = 0; c < rate.per_channel.size(); ++c) {
      rows.push_back({static_cast<int>(c), d, rate.per_channel[c],
                      pattern.per_channel[c]});
    }
  }
  return rows;
}

void save_info_csv(const std::filesystem::path& path,
                   std::span<const InfoRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "channel,delta_t,i_rate,i_pattern\n";
  for (const auto& r : rows) {
    out << r.channel << ',' << format_double(r.delta_t) << ','
        << format_double(r.i_rate) << ',' << format_double(r.i_pattern) << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace tdekws
