#include "tdekws/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <omp.h>

#include "tdekws/dynamics.hpp"
#include "tdekws/error.hpp"
#include "tdekws/format.hpp"

namespace tdekws {

namespace {

std::vector<int> spike_times(std::span<const std::uint8_t> train) {
  std::vector<int> times;
  for (std::size_t t = 0; t < train.size(); ++t) {
    if (train[t]) times.push_back(static_cast<int>(t));
  }
  return times;
}

// Fills `out` (2 max_lag + 1 entries) by enumerating spike pairs, which is
// much cheaper than the dense sum for sparse trains.
void sparse_xcorr(std::span<const int> a, std::span<const int> b, int steps,
                  int max_lag, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int ta : a) {
    // b times are sorted: restrict to [ta - max_lag, ta + max_lag].
    auto lo = std::lower_bound(b.begin(), b.end(), ta - max_lag);
    for (auto it = lo; it != b.end() && *it <= ta + max_lag; ++it) {
      out[*it - ta + max_lag] += 1.0;
    }
  }
  for (int l = -max_lag; l <= max_lag; ++l) {
    out[l + max_lag] /= static_cast<double>(steps - std::abs(l));
  }
}

// Peak scan order 0, -1, +1, -2, +2, ...; a later lag must beat strictly.
std::pair<int, double> peak(std::span<const double> values, int max_lag) {
  int best = 0;
  double best_v = values[max_lag];
  for (int d = 1; d <= max_lag; ++d) {
    for (int l : {-d, d}) {
      if (values[l + max_lag] > best_v) {
        best_v = values[l + max_lag];
        best = l;
      }
    }
  }
  return {best, best_v};
}

void check_lag(int max_lag, int steps) {
  if (max_lag < 0 || max_lag >= steps) {
    throw DomainError("max_lag must lie in [0, T)");
  }
}

}  // namespace

XcorrResult unbiased_xcorr(std::span<const std::uint8_t> a,
                           std::span<const std::uint8_t> b, int max_lag) {
  if (a.size() != b.size()) {
    throw StructuralError("unbiased_xcorr: trains differ in length");
  }
  check_lag(max_lag, static_cast<int>(a.size()));
  XcorrResult r;
  r.max_lag = max_lag;
  r.values.resize(2 * max_lag + 1);
  const auto ta = spike_times(a);
  const auto tb = spike_times(b);
  sparse_xcorr(ta, tb, static_cast<int>(a.size()), max_lag, r.values);
  std::tie(r.best_lag, r.best_value) = peak(r.values, max_lag);
  return r;
}

namespace {

struct RankInput {
  int n_l0 = 0;
  int steps = 0;
  int n_classes = 0;
  std::vector<int> labels;
  std::vector<int> class_sizes;
  // times[sample][channel]
  std::vector<std::vector<std::vector<int>>> times;
};

RankInput prepare_rank(const Dataset& data, int max_lag) {
  if (data.empty()) throw DomainError("rank_pairs: empty dataset");
  data.validate();
  check_lag(max_lag, data.steps());
  RankInput in;
  in.n_l0 = data.neurons();
  in.steps = data.steps();
  in.n_classes = data.n_classes;
  in.class_sizes.assign(data.n_classes, 0);
  for (const auto& s : data.samples) {
    in.labels.push_back(s.class_id);
    ++in.class_sizes[s.class_id];
    std::vector<std::vector<int>> per_channel(in.n_l0);
    for (int c = 0; c < in.n_l0; ++c) per_channel[c] = spike_times(s.raster.row(c));
    in.times.push_back(std::move(per_channel));
  }
  return in;
}

PairCorrelation rank_one(const RankInput& in, TdePair pair, int max_lag,
                         std::vector<double>& buf) {
  PairCorrelation pc;
  pc.pair = pair;
  pc.class_values.assign(in.n_classes, 0.0);
  pc.class_lags.assign(in.n_classes, 0.0);
  for (std::size_t s = 0; s < in.times.size(); ++s) {
    sparse_xcorr(in.times[s][pair.fac], in.times[s][pair.trig], in.steps,
                 max_lag, buf);
    const auto [lag, value] = peak(buf, max_lag);
    pc.class_values[in.labels[s]] += value;
    pc.class_lags[in.labels[s]] += lag;
  }
  bool first = true;
  for (int c = 0; c < in.n_classes; ++c) {
    if (in.class_sizes[c] == 0) continue;
    pc.class_values[c] /= in.class_sizes[c];
    pc.class_lags[c] /= in.class_sizes[c];
    if (first || pc.class_values[c] > pc.xcorr_value) {
      pc.xcorr_value = pc.class_values[c];
      pc.best_class = c;
      first = false;
    }
  }
  pc.best_lag = static_cast<int>(std::lround(pc.class_lags[pc.best_class]));
  return pc;
}

void sort_ranked(std::vector<PairCorrelation>& ranked) {
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const PairCorrelation& a, const PairCorrelation& b) {
                     return a.xcorr_value > b.xcorr_value;
                   });
}

}  // namespace

std::vector<PairCorrelation> rank_pairs_serial(const Dataset& data,
                                               int max_lag) {
  const RankInput in = prepare_rank(data, max_lag);
  const auto pairs = enumerate_tde_pairs(in.n_l0);
  std::vector<PairCorrelation> ranked;
  ranked.reserve(pairs.size());
  std::vector<double> buf(2 * max_lag + 1);
  for (const auto& p : pairs) ranked.push_back(rank_one(in, p, max_lag, buf));
  sort_ranked(ranked);
  return ranked;
}

std::vector<PairCorrelation> rank_pairs(const Dataset& data, int max_lag) {
  const RankInput in = prepare_rank(data, max_lag);
  const auto pairs = enumerate_tde_pairs(in.n_l0);
  std::vector<PairCorrelation> ranked(pairs.size());
  const int n = static_cast<int>(pairs.size());
#pragma omp parallel
  {
    std::vector<double> buf(2 * max_lag + 1);
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) ranked[i] = rank_one(in, pairs[i], max_lag, buf);
  }
  sort_ranked(ranked);
  return ranked;
}

namespace {

NetworkSpec spec_from_pairs(std::vector<TdePair> pairs, int n_l0, int n_l2) {
  if (pairs.empty()) throw DomainError("pruning left no TDE cells");
  std::sort(pairs.begin(), pairs.end());
  return NetworkSpec::tde(std::move(pairs), n_l0, n_l2);
}

}  // namespace

NetworkSpec prune(std::span<const PairCorrelation> ranked, double threshold,
                  int n_l0, int n_l2) {
  if (ranked.empty()) throw DomainError("prune: empty ranking");
  std::vector<TdePair> keep;
  for (const auto& pc : ranked) {
    if (pc.xcorr_value >= threshold) keep.push_back(pc.pair);
  }
  return spec_from_pairs(std::move(keep), n_l0, n_l2);
}

NetworkSpec prune_top(std::span<const PairCorrelation> ranked, int keep_n,
                      int n_l0, int n_l2) {
  if (ranked.empty()) throw DomainError("prune: empty ranking");
  if (keep_n < 1) throw DomainError("prune: keep_n must be >= 1");
  const std::size_t n = std::min<std::size_t>(keep_n, ranked.size());
  std::vector<TdePair> keep;
  for (std::size_t i = 0; i < n; ++i) keep.push_back(ranked[i].pair);
  return spec_from_pairs(std::move(keep), n_l0, n_l2);
}

NetworkSpec random_prune(int n_keep, std::uint64_t seed, int n_l0, int n_l2) {
  auto all = enumerate_tde_pairs(n_l0);
  if (n_keep < 1 || n_keep > static_cast<int>(all.size())) {
    throw DomainError("random_prune: n_keep must lie in [1, " +
                      std::to_string(all.size()) + "]");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(n_keep);
  return spec_from_pairs(std::move(all), n_l0, n_l2);
}

std::vector<double> init_tau_from_lags(std::span<const PairCorrelation> ranked,
                                       const NetworkSpec& spec, double dt) {
  if (spec.kind != ArchKind::Tde) {
    throw DomainError("init_tau_from_lags needs a TDE spec");
  }
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  std::map<TdePair, int> lag_of;
  for (const auto& pc : ranked) lag_of[pc.pair] = pc.best_lag;
  std::vector<double> raw;
  raw.reserve(spec.tde_pairs.size());
  for (const auto& p : spec.tde_pairs) {
    auto it = lag_of.find(p);
    if (it == lag_of.end()) {
      throw StructuralError("pair (" + std::to_string(p.fac) + "," +
                            std::to_string(p.trig) + ") missing from ranking");
    }
    const double tau = std::max(std::abs(it->second), 1) * dt;
    raw.push_back(softplus_inverse(tau));
  }
  return raw;
}

double SynOpsReport::per_keyword(int layer) const {
  return samples ? static_cast<double>(per_layer[layer]) / samples : 0.0;
}
double SynOpsReport::total_per_keyword() const {
  return samples ? static_cast<double>(total) / samples : 0.0;
}
double SynOpsReport::spikes_per_keyword(int layer) const {
  return samples ? static_cast<double>(spikes[layer]) / samples : 0.0;
}
double SynOpsReport::spikes_total_per_keyword() const {
  return samples ? static_cast<double>(spikes_total) / samples : 0.0;
}

SynOpsReport count_synops(const EventLog& log) {
  SynOpsReport r;
  r.samples = log.samples;
  for (int l = 0; l < EventLog::kLayers; ++l) {
    r.per_layer[l] = log.layers[l].input_events + log.layers[l].output_spikes;
    r.total += r.per_layer[l];
    r.spikes[l] = log.layers[l].output_spikes;
    r.spikes_total += r.spikes[l];
  }
  return r;
}

double pair_distance(const TdePair& a, const TdePair& b) {
  const double df = a.fac - b.fac;
  const double dtg = a.trig - b.trig;
  return std::sqrt(df * df + dtg * dtg);
}

PairDistances match_pair_sets(std::span<const TdePair> a,
                              std::span<const TdePair> b,
                              double coincidence_threshold) {
  struct Candidate {
    double d;
    std::size_t i, j;
  };
  std::vector<Candidate> cand;
  cand.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cand.push_back({pair_distance(a[i], b[j]), i, j});
    }
  }
  std::sort(cand.begin(), cand.end(), [](const Candidate& x, const Candidate& y) {
    if (x.d != y.d) return x.d < y.d;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  PairDistances out;
  for (const auto& c : cand) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = 1;
    out.distances.push_back(c.d);
    if (c.d <= coincidence_threshold + 1e-12) ++out.coincidences;
  }
  if (!out.distances.empty()) {
    const double n = static_cast<double>(out.distances.size());
    out.mean = std::accumulate(out.distances.begin(), out.distances.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : out.distances) ss += (d - out.mean) * (d - out.mean);
    out.stddev = std::sqrt(ss / n);
  }
  return out;
}

InterpretabilityReport interpretability_report(
    const NetworkSpec& spec, const ParameterSet& params,
    std::span<const PairCorrelation> ranked, int top_k,
    double coincidence_threshold) {
  if (spec.kind != ArchKind::Tde) {
    throw DomainError("interpretability_report needs a TDE network");
  }
  if (top_k < 1) throw DomainError("top_k must be >= 1");
  params.validate_for(spec);
  InterpretabilityReport report;
  report.top_k = top_k;
  const int n_cells = std::min(top_k, spec.n_l1);
  std::vector<double> pooled;
  int pooled_coincidences = 0;
  for (int c = 0; c < spec.n_l2; ++c) {
    ClassInterpretation ci;
    ci.class_id = c;
    std::vector<int> cells(spec.n_l1);
    std::iota(cells.begin(), cells.end(), 0);
    std::stable_sort(cells.begin(), cells.end(), [&](int x, int y) {
      return std::abs(params.w2(c, x)) > std::abs(params.w2(c, y));
    });
    std::vector<TdePair> trained;
    for (int i = 0; i < n_cells; ++i) {
      const int cell = cells[i];
      ci.top_cells.push_back({cell, spec.tde_pairs[cell], params.w2(c, cell),
                              softplus(params.tau_g_raw[cell])});
      trained.push_back(spec.tde_pairs[cell]);
    }
    if (!ranked.empty()) {
      std::vector<std::size_t> order(ranked.size());
      std::iota(order.begin(), order.end(), 0);
      auto score = [&](std::size_t i) {
        const auto& cv = ranked[i].class_values;
        return c < static_cast<int>(cv.size()) ? cv[c] : ranked[i].xcorr_value;
      };
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t x, std::size_t y) {
                         if (score(x) != score(y)) return score(x) > score(y);
                         return ranked[x].pair < ranked[y].pair;
                       });
      const std::size_t nx = std::min<std::size_t>(top_k, order.size());
      for (std::size_t i = 0; i < nx; ++i) ci.xcorr_top.push_back(ranked[order[i]].pair);
      ci.vs_xcorr = match_pair_sets(trained, ci.xcorr_top, coincidence_threshold);
      pooled.insert(pooled.end(), ci.vs_xcorr.distances.begin(),
                    ci.vs_xcorr.distances.end());
      pooled_coincidences += ci.vs_xcorr.coincidences;
    }
    report.classes.push_back(std::move(ci));
  }
  report.overall.distances = pooled;
  report.overall.coincidences = pooled_coincidences;
  if (!pooled.empty()) {
    const double n = static_cast<double>(pooled.size());
    report.overall.mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : pooled) ss += (d - report.overall.mean) * (d - report.overall.mean);
    report.overall.stddev = std::sqrt(ss / n);
  }
  return report;
}

void save_ranked_csv(const std::filesystem::path& path,
                     std::span<const PairCorrelation> ranked) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "fac,trig,xcorr,lag\n";
  for (const auto& pc : ranked) {
    out << pc.pair.fac << ',' << pc.pair.trig << ','
        << format_double(pc.xcorr_value) << ',' << pc.best_lag << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::vector<PairCorrelation> load_ranked_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line) || line.rfind("fac,trig,xcorr,lag", 0) != 0) {
    throw ParseError(path.string(), 1, "expected header 'fac,trig,xcorr,lag'");
  }
  std::vector<PairCorrelation> ranked;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    PairCorrelation pc;
    std::string rest;
    if (!(row >> pc.pair.fac >> pc.pair.trig >> pc.xcorr_value >> pc.best_lag) ||
        (row >> rest)) {
      throw ParseError(path.string(), line_no, "expected fac,trig,xcorr,lag");
    }
    ranked.push_back(std::move(pc));
  }
  return ranked;
}

}  // namespace tdekws
