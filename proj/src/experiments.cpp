#include "tdekws/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "tdekws/error.hpp"
#include "tdekws/format.hpp"
#include "tdekws/kernels.hpp"

namespace tdekws {

namespace {

const ArchKind kAllArchs[] = {ArchKind::Tde, ArchKind::LifRec, ArchKind::Lif};

void report(const Progress& progress, const std::string& msg) {
  if (progress) progress(msg);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (v.size() - 1))};
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

void write_common(std::ostream& out, const RunRow& r) {
  out << r.arch << ',' << r.n_l1 << ',' << r.connections << ',' << r.seed << ','
      << format_double(r.top25_acc) << ',' << format_double(r.spikes_total)
      << ',' << format_double(r.synops_total);
}

}  // namespace

std::string describe_run(const RunRow& r) {
  return r.arch + " n_l1=" + std::to_string(r.n_l1) + " seed=" +
         std::to_string(r.seed) + " fraction=" + format_double(r.train_fraction) +
         " top25=" + format_double(r.top25_acc) +
         " synops/kw=" + format_double(r.synops_total);
}

MatchedSize match_size(std::string label, NetworkSpec tde,
                       std::vector<double> tde_tau_raw) {
  tde.validate();
  if (tde.kind != ArchKind::Tde) throw DomainError("match_size needs a TDE spec");
  const long long target = connection_count(tde);
  MatchedSize m;
  m.label = std::move(label);
  m.lifrec_n = balance_hidden_size(target, ArchKind::LifRec, tde.n_l0, tde.n_l2);
  m.lif_n = balance_hidden_size(target, ArchKind::Lif, tde.n_l0, tde.n_l2);
  m.tde = std::move(tde);
  m.tde_tau_raw = std::move(tde_tau_raw);
  return m;
}

RunRow train_and_measure(const Split& split, const Dataset& full,
                         const NetworkSpec& spec,
                         std::span<const double> tau_raw,
                         const TrainConfig& cfg, std::uint64_t seed,
                         std::string arch_label) {
  TrainConfig run_cfg = cfg;
  run_cfg.seed = seed;
  const ParameterSet init = init_parameters(spec, run_cfg, seed, tau_raw);
  TrainResult result = train(split.train, split.test, spec, init, run_cfg);
  const Evaluation ev = evaluate(Network(spec, result.params), full);
  RunRow row;
  row.arch = arch_label.empty() ? std::string(to_string(spec.kind)) : arch_label;
  row.n_l1 = spec.n_l1;
  row.connections = connection_count(spec);
  row.trained_params = trained_parameter_count(spec);
  row.seed = seed;
  row.train_fraction = cfg.train_fraction;
  row.top25_acc = result.report.top_accuracy;
  row.synops = count_synops(ev.events);
  row.spikes_total = row.synops.spikes_total_per_keyword();
  row.synops_total = row.synops.total_per_keyword();
  row.report = std::move(result.report);
  row.params = std::move(result.params);
  return row;
}

std::vector<RunRow> run_comparison(const Dataset& data,
                                   std::span<const MatchedSize> sizes,
                                   const TrainConfig& cfg, int n_seeds,
                                   std::span<const ArchKind> archs,
                                   const Progress& progress) {
  if (n_seeds < 1) throw DomainError("n_seeds must be >= 1");
  if (archs.empty()) archs = kAllArchs;
  const Split split = split_dataset(data, cfg.test_fraction, cfg.train_fraction, cfg.seed);
  std::vector<RunRow> rows;
  for (const auto& size : sizes) {
    for (ArchKind kind : archs) {
      NetworkSpec spec;
      std::span<const double> tau;
      switch (kind) {
        case ArchKind::Tde:
          spec = size.tde;
          tau = size.tde_tau_raw;
          break;
        case ArchKind::LifRec:
          spec = NetworkSpec::lifrec(size.lifrec_n, size.tde.n_l0, size.tde.n_l2);
          break;
        case ArchKind::Lif:
          spec = NetworkSpec::lif(size.lif_n, size.tde.n_l0, size.tde.n_l2);
          break;
      }
      for (int k = 0; k < n_seeds; ++k) {
        RunRow row = train_and_measure(split, data, spec, tau, cfg, cfg.seed + k);
        row.size_label = size.label;
        report(progress, "size=" + size.label + " " + describe_run(row));
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<RunRow> run_pruning_comparison(
    const Dataset& data, std::span<const PairCorrelation> ranked,
    std::span<const int> keep_counts, const TrainConfig& cfg, int n_seeds,
    const Progress& progress) {
  if (n_seeds < 1) throw DomainError("n_seeds must be >= 1");
  const Split split = split_dataset(data, cfg.test_fraction, cfg.train_fraction, cfg.seed);
  const int n_l0 = data.neurons();
  const int n_l2 = data.n_classes;
  const bool lags = cfg.tau_init == TauInit::Lags;
  std::vector<RunRow> rows;
  for (int keep : keep_counts) {
    const NetworkSpec informed = prune_top(ranked, keep, n_l0, n_l2);
    const auto informed_tau = lags ? init_tau_from_lags(ranked, informed, cfg.dt)
                                   : std::vector<double>{};
    for (int k = 0; k < n_seeds; ++k) {
      const std::uint64_t seed = cfg.seed + k;
      RunRow a = train_and_measure(split, data, informed, informed_tau, cfg, seed, "tde");
      a.size_label = std::to_string(keep);
      report(progress, "keep=" + a.size_label + " " + describe_run(a));
      rows.push_back(std::move(a));

      const NetworkSpec random = random_prune(keep, mix_seed(seed, keep), n_l0, n_l2);
      const auto random_tau = lags ? init_tau_from_lags(ranked, random, cfg.dt)
                                   : std::vector<double>{};
      RunRow b = train_and_measure(split, data, random, random_tau, cfg, seed, "tde_random");
      b.size_label = std::to_string(keep);
      report(progress, "keep=" + b.size_label + " " + describe_run(b));
      rows.push_back(std::move(b));
    }
  }
  return rows;
}

std::vector<RunRow> run_training_fraction_sweep(
    const Dataset& data, std::span<const SweepSpec> specs,
    std::span<const double> fractions, const TrainConfig& cfg, int n_seeds,
    const Progress& progress) {
  if (n_seeds < 1) throw DomainError("n_seeds must be >= 1");
  std::vector<double> fr{1.0};
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw DomainError("training fraction " + format_double(f) + " outside (0, 1]");
    }
    if (f != 1.0) fr.push_back(f);
  }
  std::vector<RunRow> rows;
  for (const auto& s : specs) {
    std::vector<double> full_acc(n_seeds, 0.0);
    for (double f : fr) {
      TrainConfig run_cfg = cfg;
      run_cfg.train_fraction = f;
      const Split split = split_dataset(data, cfg.test_fraction, f, cfg.seed);
      for (int k = 0; k < n_seeds; ++k) {
        RunRow row = train_and_measure(split, data, s.spec, s.tau_raw, run_cfg,
                                       cfg.seed + k, s.arch);
        row.size_label = s.arch + "-" + std::to_string(s.spec.n_l1);
        if (f == 1.0) full_acc[k] = row.top25_acc;
        row.delta_vs_full = row.top25_acc - full_acc[k];
        report(progress, describe_run(row));
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<GroupStats> summarize_runs(std::span<const RunRow> rows) {
  struct Acc {
    GroupStats stats;
    std::vector<double> acc, delta, spikes, synops;
    std::array<double, EventLog::kLayers> layer_spikes{}, layer_synops{};
  };
  std::vector<Acc> groups;
  std::map<std::tuple<std::string, std::string, double>, std::size_t> index;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.size_label, r.arch, r.train_fraction);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      Acc a;
      a.stats.size_label = r.size_label;
      a.stats.arch = r.arch;
      a.stats.n_l1 = r.n_l1;
      a.stats.connections = r.connections;
      a.stats.trained_params = r.trained_params;
      a.stats.train_fraction = r.train_fraction;
      groups.push_back(std::move(a));
    }
    Acc& a = groups[it->second];
    a.acc.push_back(r.top25_acc);
    a.delta.push_back(r.delta_vs_full);
    a.spikes.push_back(r.spikes_total);
    a.synops.push_back(r.synops_total);
    for (int l = 0; l < EventLog::kLayers; ++l) {
      a.layer_spikes[l] += r.synops.spikes_per_keyword(l);
      a.layer_synops[l] += r.synops.per_keyword(l);
    }
  }
  std::vector<GroupStats> out;
  for (auto& a : groups) {
    GroupStats s = a.stats;
    s.runs = static_cast<int>(a.acc.size());
    std::tie(s.mean_acc, s.std_acc) = mean_std(a.acc);
    std::tie(s.mean_delta, s.std_delta) = mean_std(a.delta);
    s.mean_spikes = mean_std(a.spikes).first;
    s.mean_synops = mean_std(a.synops).first;
    for (int l = 0; l < EventLog::kLayers; ++l) {
      s.layer_spikes[l] = a.layer_spikes[l] / s.runs;
      s.layer_synops[l] = a.layer_synops[l] / s.runs;
    }
    out.push_back(s);
  }
  return out;
}

std::vector<SweepTrend> sweep_trends(std::span<const GroupStats> stats) {
  std::vector<SweepTrend> trends;
  std::map<std::string, std::size_t> index;
  for (const auto& s : stats) {
    auto it = index.find(s.size_label);
    if (it == index.end()) {
      it = index.emplace(s.size_label, trends.size()).first;
      trends.push_back({s.arch, s.n_l1, {}, {}, true});
    }
    trends[it->second].fractions.push_back(s.train_fraction);
    trends[it->second].mean_acc.push_back(s.mean_acc);
  }
  for (auto& t : trends) {
    std::vector<std::size_t> order(t.fractions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return t.fractions[a] > t.fractions[b];
    });
    std::vector<double> f, m;
    for (auto i : order) {
      f.push_back(t.fractions[i]);
      m.push_back(t.mean_acc[i]);
    }
    t.fractions = f;
    t.mean_acc = m;
    for (std::size_t i = 1; i < m.size(); ++i) {
      if (m[i] > m[i - 1]) t.monotone_nonincreasing = false;
    }
  }
  return trends;
}

void save_comparison_csv(const std::filesystem::path& path,
                         std::span<const RunRow> rows) {
  auto out = open_csv(path);
  out << "arch,n_l1,connections,seed,top25_acc,spikes_total,synops_total\n";
  for (const auto& r : rows) {
    write_common(out, r);
    out << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void save_sweep_csv(const std::filesystem::path& path,
                    std::span<const RunRow> rows) {
  auto out = open_csv(path);
  out << "arch,n_l1,connections,seed,top25_acc,spikes_total,synops_total,"
         "train_fraction,delta_vs_full\n";
  for (const auto& r : rows) {
    write_common(out, r);
    out << ',' << format_double(r.train_fraction) << ','
        << format_double(r.delta_vs_full) << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void save_summary_csv(const std::filesystem::path& path,
                      std::span<const GroupStats> stats) {
  auto out = open_csv(path);
  out << "size,arch,n_l1,connections,trained_params,train_fraction,runs,"
         "mean_acc,std_acc,mean_delta,std_delta,spikes_l0,spikes_l1,spikes_l2,"
         "spikes_total,synops_l0,synops_l1,synops_l2,synops_total\n";
  for (const auto& s : stats) {
    out << s.size_label << ',' << s.arch << ',' << s.n_l1 << ',' << s.connections
        << ',' << s.trained_params << ',' << format_double(s.train_fraction)
        << ',' << s.runs << ',' << format_double(s.mean_acc) << ','
        << format_double(s.std_acc) << ',' << format_double(s.mean_delta) << ','
        << format_double(s.std_delta);
    for (double v : s.layer_spikes) out << ',' << format_double(v);
    out << ',' << format_double(s.mean_spikes);
    for (double v : s.layer_synops) out << ',' << format_double(v);
    out << ',' << format_double(s.mean_synops) << '\n';
  }
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace tdekws
