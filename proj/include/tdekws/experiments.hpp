#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tdekws/analysis.hpp"
#include "tdekws/raster.hpp"
#include "tdekws/topology.hpp"
#include "tdekws/training.hpp"

namespace tdekws {

using Progress = std::function<void(const std::string&)>;

// A TDE network and the LIF/LIFREC hidden sizes matched to its connection
// count.
struct MatchedSize {
  std::string label;
  NetworkSpec tde;
  std::vector<double> tde_tau_raw;  // empty: constant tau_g init
  int lifrec_n = 0;
  int lif_n = 0;
};

MatchedSize match_size(std::string label, NetworkSpec tde,
                       std::vector<double> tde_tau_raw);

struct RunRow {
  std::string size_label;
  // "tde", "lifrec", "lif" or "tde_random"
  std::string arch;
  int n_l1 = 0;
  long long connections = 0;
  long long trained_params = 0;
  std::uint64_t seed = 0;
  double train_fraction = 1.0;
  double top25_acc = 0.0;
  double spikes_total = 0.0;  // per keyword over the full dataset
  double synops_total = 0.0;  // per keyword over the full dataset
  double delta_vs_full = 0.0; // sweeps only
  SynOpsReport synops;
  TrainReport report;
  ParameterSet params;  // trained weights
};

// Trains `spec` on `split.train`, scores on `split.test` and then counts
// spikes and SynOps over `full` with the trained weights.
RunRow train_and_measure(const Split& split, const Dataset& full,
                         const NetworkSpec& spec,
                         std::span<const double> tau_raw,
                         const TrainConfig& cfg, std::uint64_t seed,
                         std::string arch_label = {});

// Every size x architecture x seed; seeds are cfg.seed + k while the split
// stays fixed at cfg.seed.
std::vector<RunRow> run_comparison(const Dataset& data,
                                   std::span<const MatchedSize> sizes,
                                   const TrainConfig& cfg, int n_seeds,
                                   std::span<const ArchKind> archs = {},
                                   const Progress& progress = {});

// Informed (top ranked) against random subsets of the same size.
std::vector<RunRow> run_pruning_comparison(
    const Dataset& data, std::span<const PairCorrelation> ranked,
    std::span<const int> keep_counts, const TrainConfig& cfg, int n_seeds,
    const Progress& progress = {});

struct SweepSpec {
  std::string arch;
  NetworkSpec spec;
  std::vector<double> tau_raw;
};

// Accuracy per fraction x spec x seed. Fraction 1.0 is always run first and
// delta_vs_full is measured against it for the same spec and seed.
std::vector<RunRow> run_training_fraction_sweep(
    const Dataset& data, std::span<const SweepSpec> specs,
    std::span<const double> fractions, const TrainConfig& cfg, int n_seeds,
    const Progress& progress = {});

struct GroupStats {
  std::string size_label;
  std::string arch;
  int n_l1 = 0;
  long long connections = 0;
  long long trained_params = 0;
  double train_fraction = 1.0;
  int runs = 0;
  double mean_acc = 0.0, std_acc = 0.0;
  double mean_delta = 0.0, std_delta = 0.0;
  double mean_spikes = 0.0, mean_synops = 0.0;
  std::array<double, EventLog::kLayers> layer_spikes{};
  std::array<double, EventLog::kLayers> layer_synops{};
};

// One-line description of a finished run.
std::string describe_run(const RunRow& row);

// Mean and sample standard deviation over seeds, grouped by
// (size_label, arch, train_fraction) in first-seen order.
std::vector<GroupStats> summarize_runs(std::span<const RunRow> rows);

struct SweepTrend {
  std::string arch;
  int n_l1 = 0;
  std::vector<double> fractions;  // descending
  std::vector<double> mean_acc;
  bool monotone_nonincreasing = true;
};

std::vector<SweepTrend> sweep_trends(std::span<const GroupStats> stats);

// `arch,n_l1,connections,seed,top25_acc,spikes_total,synops_total`
void save_comparison_csv(const std::filesystem::path& path,
                         std::span<const RunRow> rows);
// The comparison columns plus `train_fraction,delta_vs_full`.
void save_sweep_csv(const std::filesystem::path& path,
                    std::span<const RunRow> rows);
// Per group: size, arch, cells, connections, trained parameters,
// accuracy mean/std and per-layer spikes/SynOps per keyword.
void save_summary_csv(const std::filesystem::path& path,
                      std::span<const GroupStats> stats);

}  // namespace tdekws
