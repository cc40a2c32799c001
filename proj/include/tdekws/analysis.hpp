#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tdekws/events.hpp"
#include "tdekws/raster.hpp"
#include "tdekws/topology.hpp"

namespace tdekws {

inline constexpr int kDefaultMaxLag = 33;

struct XcorrResult {
  int max_lag = 0;
  std::vector<double> values;  // index lag + max_lag
  int best_lag = 0;
  double best_value = 0.0;

  double at(int lag) const { return values[lag + max_lag]; }
};

// Unbiased cross-correlation c(l) = sum_t a(t) b(t + l) / (T - |l|) for
// l in [-max_lag, max_lag]. Ties in the maximum go to the smallest |l|,
// negative lag first.
XcorrResult unbiased_xcorr(std::span<const std::uint8_t> a,
                           std::span<const std::uint8_t> b, int max_lag);

struct PairCorrelation {
  TdePair pair;
  double xcorr_value = 0.0;  // class-mean of per-sample peaks, max over classes
  int best_lag = 0;          // class-mean peak lag (rounded) at that class
  int best_class = 0;
  std::vector<double> class_values;
  std::vector<double> class_lags;
};

// Every ordered channel pair ranked by descending xcorr_value; equal values
// keep fac-major pair order. The parallel and serial variants agree exactly.
std::vector<PairCorrelation> rank_pairs(const Dataset& data,
                                        int max_lag = kDefaultMaxLag);
std::vector<PairCorrelation> rank_pairs_serial(const Dataset& data,
                                               int max_lag = kDefaultMaxLag);

// TDE spec from the ranked pairs with xcorr_value >= threshold, kept in
// fac-major order.
NetworkSpec prune(std::span<const PairCorrelation> ranked, double threshold,
                  int n_l0 = 32, int n_l2 = 11);
// Same, keeping the `keep_n` best-ranked pairs.
NetworkSpec prune_top(std::span<const PairCorrelation> ranked, int keep_n,
                      int n_l0 = 32, int n_l2 = 11);
// Control condition: a seeded uniform subset of all ordered pairs.
NetworkSpec random_prune(int n_keep, std::uint64_t seed, int n_l0 = 32,
                         int n_l2 = 11);

// tau_g_raw per TDE cell of `spec` from the lag of its pair:
// softplus^-1(max(|lag|, 1) * dt).
std::vector<double> init_tau_from_lags(std::span<const PairCorrelation> ranked,
                                       const NetworkSpec& spec, double dt);

struct SynOpsReport {
  std::array<std::uint64_t, EventLog::kLayers> per_layer{};
  std::uint64_t total = 0;
  std::array<std::uint64_t, EventLog::kLayers> spikes{};
  std::uint64_t spikes_total = 0;
  std::uint64_t samples = 0;

  // Averages per presented keyword.
  double per_keyword(int layer) const;
  double total_per_keyword() const;
  double spikes_per_keyword(int layer) const;
  double spikes_total_per_keyword() const;
};

// SynOps per layer = delivered input spikes + emitted output spikes.
SynOpsReport count_synops(const EventLog& log);

struct PairDistances {
  std::vector<double> distances;  // one per matched pair
  int coincidences = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

// Euclidean distance between (fac, trig) coordinates.
double pair_distance(const TdePair& a, const TdePair& b);

// Greedy one-to-one matching by ascending distance between two pair sets.
PairDistances match_pair_sets(std::span<const TdePair> a,
                              std::span<const TdePair> b,
                              double coincidence_threshold = 5.0);

struct CellContribution {
  int cell = 0;
  TdePair pair;
  double weight = 0.0;
  double tau_g = 0.0;
};

struct ClassInterpretation {
  int class_id = 0;
  std::vector<CellContribution> top_cells;  // by |W2[c, cell]|
  std::vector<TdePair> xcorr_top;           // this class's best-correlated pairs
  PairDistances vs_xcorr;
};

struct InterpretabilityReport {
  int top_k = 25;
  std::vector<ClassInterpretation> classes;
  PairDistances overall;  // all classes pooled
};

InterpretabilityReport interpretability_report(
    const NetworkSpec& spec, const ParameterSet& params,
    std::span<const PairCorrelation> ranked, int top_k = 25,
    double coincidence_threshold = 5.0);

// Ranked pairs CSV: `fac,trig,xcorr,lag`.
void save_ranked_csv(const std::filesystem::path& path,
                     std::span<const PairCorrelation> ranked);
std::vector<PairCorrelation> load_ranked_csv(const std::filesystem::path& path);

}  // namespace tdekws
