#include "tdekws/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdekws/analysis.hpp"
#include "tdekws/encoding.hpp"
#include "tdekws/error.hpp"
#include "tdekws/experiments.hpp"
#include "tdekws/format.hpp"
#include "tdekws/information.hpp"
#include "tdekws/kernels.hpp"
#include "tdekws/model_io.hpp"
#include "tdekws/plot.hpp"

namespace tdekws {

namespace fs = std::filesystem;

namespace {

constexpr double kClipSeconds = 1.5;

// Bad option values found after parsing; reported with exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct DataSource {
  std::string raster;
  std::string formants;
  std::uint64_t synthetic_seed = 0;
  int reps = 40;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> log;  // wall-clock lines for run.log

  void progress(const std::string& msg) {
    out << msg << '\n';
    out.flush();
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\t', ' ');
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + s + "' is not a number");
  }
}

std::vector<double> parse_numbers(const std::string& s, const std::string& what) {
  std::vector<double> v;
  for (const auto& item : split_list(s)) v.push_back(parse_number(item, what));
  if (v.empty()) throw UsageError(what + ": empty list");
  return v;
}

int parse_count(const std::string& s, const std::string& what) {
  const double v = parse_number(s, what);
  if (v < 1 || v != std::floor(v)) {
    throw UsageError(what + ": '" + s + "' is not a positive integer");
  }
  return static_cast<int>(v);
}

void add_data_options(CLI::App* sub, DataSource& src) {
  auto* raster = sub->add_option("--data", src.raster,
                                 "Encoded raster file (tdekws-raster-v1)");
  auto* formants = sub->add_option("--formants", src.formants,
                                   "Formant CSV (class_id,t_sec,f1,a1,f2,a2,f3,a3)");
  raster->excludes(formants);
  auto* seed = sub->add_option("--data-seed", src.synthetic_seed,
                               "Seed of the synthetic corpus used when no file is given");
  auto* reps = sub->add_option("--reps", src.reps, "Synthetic repetitions per class")
                   ->check(CLI::PositiveNumber);
  seed->excludes(raster)->excludes(formants);
  reps->excludes(raster)->excludes(formants);
}

void add_train_options(CLI::App* sub, TrainConfig& cfg) {
  sub->add_option("--lambda", cfg.lambda, "Surrogate gradient scale");
  sub->add_option("--dt", cfg.dt, "Simulation step (s)");
  sub->add_option("--tau-mem", cfg.tau_mem, "Membrane time constant (s)");
  sub->add_option("--tau-syn", cfg.tau_syn, "Synaptic time constant (s)");
  sub->add_option("--threshold", cfg.threshold, "Spike threshold");
  sub->add_option("--lr", cfg.learning_rate, "ADAM learning rate");
  sub->add_option("--weight-decay", cfg.weight_decay, "Decoupled weight decay");
  sub->add_option("--p-drop", cfg.p_drop, "Dropout probability on L1 outputs");
  sub->add_option("--batch-size", cfg.batch_size, "Minibatch size");
  sub->add_option("--epochs", cfg.epochs, "Training epochs");
  sub->add_option("--seed", cfg.seed, "Split and training seed");
  sub->add_option("--train-fraction", cfg.train_fraction,
                  "Fraction of the training side kept per class");
  sub->add_option("--test-fraction", cfg.test_fraction,
                  "Test share of the smallest class, applied to every class");
  sub->add_option("--input-gain", cfg.input_gain, "L0 drive per unit amplitude");
  sub->add_option("--init-scale", cfg.init_scale,
                  "Multiplier of the +-1/sqrt(fan_in) init bound");
  sub->add_option("--tau-g-init", cfg.tau_g_init,
                  "Constant TDE gain time constant (s) for --tau-init constant");
  sub->add_option("--tau-init", cfg.tau_init, "TDE tau_g init: lags or constant")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, TauInit>{{"lags", TauInit::Lags},
                                         {"constant", TauInit::Constant}},
          CLI::ignore_case));
  sub->add_option("--top-k", cfg.top_k, "Epochs averaged for the reported accuracy");
}

EncodingOptions encoding_for(const TrainConfig& cfg) {
  EncodingOptions enc;
  enc.dt = cfg.dt;
  enc.input_gain = cfg.input_gain;
  enc.l0 = LifParams::from_time_constants(cfg.tau_syn, cfg.tau_mem, cfg.dt,
                                          cfg.threshold);
  return enc;
}

Dataset load_dataset(const DataSource& src, const TrainConfig& cfg) {
  Dataset data;
  if (!src.raster.empty()) {
    data = load_raster_file(src.raster);
    if (std::abs(data.dt() - cfg.dt) > 1e-12) {
      throw UsageError("raster step " + format_double(data.dt()) +
                       " differs from --dt " + format_double(cfg.dt));
    }
  } else if (!src.formants.empty()) {
    data = encode_tracks(load_formant_csv(src.formants, kClipSeconds),
                         encoding_for(cfg));
  } else {
    SyntheticOptions so;
    so.seed = src.synthetic_seed;
    so.reps_per_class = src.reps;
    so.steps = steps_for(kClipSeconds, cfg.dt);
    so.encoding = encoding_for(cfg);
    data = generate_synthetic_dataset(so).dataset;
  }
  data.validate();
  return data;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
}

void write_run_log(const std::string& dir, const std::vector<std::string>& args,
                   const std::vector<std::string>& lines) {
  std::ostringstream log;
  log << "command:";
  for (const auto& a : args) log << ' ' << a;
  log << "\nthreads: " << thread_count() << '\n';
  for (const auto& l : lines) log << l << '\n';
  write_text_file(fs::path(dir) / "run.log", log.str());
}

// Ranking on the training side of the split, so test keywords never shape
// the network.
std::vector<PairCorrelation> ranking_for(const Dataset& data,
                                         const TrainConfig& cfg,
                                         const std::string& ranked_path,
                                         int max_lag) {
  if (!ranked_path.empty()) return load_ranked_csv(ranked_path);
  const Split split = split_dataset(data, cfg.test_fraction, 1.0, cfg.seed);
  return rank_pairs(split.train, max_lag);
}

std::vector<double> tau_for(const NetworkSpec& spec,
                            std::span<const PairCorrelation> ranked,
                            const TrainConfig& cfg) {
  if (spec.kind != ArchKind::Tde || cfg.tau_init != TauInit::Lags) return {};
  return init_tau_from_lags(ranked, spec, cfg.dt);
}

// "all", a cross-correlation threshold (has a '.' or exponent) or a cell count.
NetworkSpec tde_for_size(const std::string& token,
                         std::span<const PairCorrelation> ranked, int n_l0,
                         int n_l2) {
  if (token == "all") return NetworkSpec::tde(enumerate_tde_pairs(n_l0), n_l0, n_l2);
  if (token.find_first_of(".eE") != std::string::npos) {
    return prune(ranked, parse_number(token, "--sizes"), n_l0, n_l2);
  }
  return prune_top(ranked, parse_count(token, "--sizes"), n_l0, n_l2);
}

Series column_series(const std::string& label, const std::vector<GroupStats>& stats,
                     const std::vector<std::string>& sizes, const std::string& arch,
                     double GroupStats::*field, double GroupStats::*err = nullptr) {
  Series s{label, {}, {}, {}};
  for (const auto& size : sizes) {
    double v = 0.0, e = 0.0;
    for (const auto& g : stats) {
      if (g.size_label == size && g.arch == arch) {
        v = g.*field;
        if (err) e = g.*err;
      }
    }
    s.x.push_back(static_cast<double>(s.x.size()));
    s.y.push_back(v);
    if (err) s.err.push_back(e);
  }
  return s;
}

std::vector<std::string> unique_sizes(const std::vector<GroupStats>& stats) {
  std::vector<std::string> sizes;
  for (const auto& g : stats) {
    if (std::find(sizes.begin(), sizes.end(), g.size_label) == sizes.end()) {
      sizes.push_back(g.size_label);
    }
  }
  return sizes;
}

std::vector<std::string> unique_archs(const std::vector<GroupStats>& stats) {
  std::vector<std::string> archs;
  for (const auto& g : stats) {
    if (std::find(archs.begin(), archs.end(), g.arch) == archs.end()) {
      archs.push_back(g.arch);
    }
  }
  return archs;
}

void comparison_plots(const std::string& dir, const std::vector<GroupStats>& stats) {
  const auto sizes = unique_sizes(stats);
  const auto archs = unique_archs(stats);
  std::vector<Series> acc, spikes, synops;
  for (const auto& a : archs) {
    acc.push_back(column_series(a, stats, sizes, a, &GroupStats::mean_acc,
                                &GroupStats::std_acc));
    spikes.push_back(column_series(a, stats, sizes, a, &GroupStats::mean_spikes));
    synops.push_back(column_series(a, stats, sizes, a, &GroupStats::mean_synops));
  }
  save_svg(fs::path(dir) / "accuracy.svg",
           bar_chart({"Top-25 test accuracy", "size", "accuracy"}, sizes, acc));
  save_svg(fs::path(dir) / "spikes.svg",
           bar_chart({"Spikes per keyword", "size", "spikes"}, sizes, spikes));
  save_svg(fs::path(dir) / "synops.svg",
           bar_chart({"SynOps per keyword", "size", "SynOps"}, sizes, synops));
}

// ---------------------------------------------------------------- commands

int cmd_gen(Context& ctx, std::uint64_t seed, int reps, const std::string& dir) {
  SyntheticOptions so;
  so.seed = seed;
  so.reps_per_class = reps;
  const SyntheticCorpus corpus = generate_synthetic_dataset(so);
  ensure_dir(dir);
  save_raster_file(fs::path(dir) / "dataset.raster", corpus.dataset);
  save_formant_csv(fs::path(dir) / "formants.csv", corpus.tracks);
  ctx.progress("wrote " + std::to_string(corpus.dataset.size()) + " samples to " + dir);
  return 0;
}

int cmd_rank(Context& ctx, const Dataset& data, const TrainConfig& cfg,
             int max_lag, const std::string& dir) {
  const auto t0 = Clock::now();
  const auto ranked = ranking_for(data, cfg, "", max_lag);
  ensure_dir(dir);
  save_ranked_csv(fs::path(dir) / "ranked_pairs.csv", ranked);
  Series s{"xcorr", {}, {}, {}};
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    s.x.push_back(static_cast<double>(i + 1));
    s.y.push_back(ranked[i].xcorr_value);
  }
  save_svg(fs::path(dir) / "xcorr_ranking.svg",
           line_chart({"Ranked pair cross-correlation", "rank", "xcorr"}, {s}));
  Series lags{"pairs", {}, {}, {}};
  for (const auto& pc : ranked) {
    lags.x.push_back(pc.xcorr_value);
    lags.y.push_back(pc.best_lag);
  }
  save_svg(fs::path(dir) / "xcorr_lags.svg",
           scatter_chart({"Cross-correlation against lag", "xcorr", "lag (steps)"},
                         {lags}));
  ctx.log.push_back("rank_seconds: " + format_double(seconds_since(t0)));
  ctx.progress("ranked " + std::to_string(ranked.size()) + " pairs");
  return 0;
}

struct PruneArgs {
  std::string ranked;
  std::string thresholds;
  std::string keep;
  int seeds = 0;
  int max_lag = kDefaultMaxLag;
};

int cmd_prune(Context& ctx, const DataSource& src, const TrainConfig& cfg,
              const PruneArgs& a, const std::string& dir) {
  if (a.thresholds.empty() == a.keep.empty()) {
    throw UsageError("give exactly one of --thresholds or --keep");
  }
  const Dataset data = load_dataset(src, cfg);
  const auto ranked = ranking_for(data, cfg, a.ranked, a.max_lag);
  const int n_l0 = data.neurons();
  const int n_l2 = data.n_classes;
  const double total = static_cast<double>(n_l0) * (n_l0 - 1);
  std::vector<int> keep_counts;
  std::ostringstream table;
  table << "threshold,cells,connections,pruned_fraction\n";
  if (!a.thresholds.empty()) {
    for (double thr : parse_numbers(a.thresholds, "--thresholds")) {
      const NetworkSpec spec = prune(ranked, thr, n_l0, n_l2);
      keep_counts.push_back(spec.n_l1);
      table << format_double(thr) << ',' << spec.n_l1 << ','
            << connection_count(spec) << ',' << format_double(1.0 - spec.n_l1 / total)
            << '\n';
    }
  } else {
    for (const auto& tok : split_list(a.keep)) {
      const int keep = parse_count(tok, "--keep");
      const NetworkSpec spec = prune_top(ranked, keep, n_l0, n_l2);
      keep_counts.push_back(spec.n_l1);
      table << format_double(ranked[spec.n_l1 - 1].xcorr_value) << ',' << spec.n_l1
            << ',' << connection_count(spec) << ','
            << format_double(1.0 - spec.n_l1 / total) << '\n';
    }
  }
  ensure_dir(dir);
  write_text_file(fs::path(dir) / "pruning_levels.csv", table.str());
  if (a.seeds == 0) return 0;

  const auto t0 = Clock::now();
  const auto rows = run_pruning_comparison(
      data, ranked, keep_counts, cfg, a.seeds,
      [&](const std::string& m) { ctx.progress(m); });
  ctx.log.push_back("pruning_seconds: " + format_double(seconds_since(t0)));
  save_comparison_csv(fs::path(dir) / "pruning.csv", rows);
  const auto stats = summarize_runs(rows);
  save_summary_csv(fs::path(dir) / "pruning_summary.csv", stats);
  std::vector<Series> series;
  for (const std::string arch : {"tde", "tde_random"}) {
    Series s{arch == "tde" ? "informed" : "random", {}, {}, {}};
    for (const auto& g : stats) {
      if (g.arch != arch) continue;
      s.x.push_back(1.0 - g.n_l1 / total);
      s.y.push_back(g.mean_acc);
      s.err.push_back(g.std_acc);
    }
    series.push_back(s);
  }
  save_svg(fs::path(dir) / "accuracy_vs_pruning.svg",
           line_chart({"Informed against random pruning", "pruned fraction",
                       "top-25 accuracy"},
                      series));
  return 0;
}

struct TrainArgs {
  std::string arch = "tde";
  int n_l1 = 0;
  std::string ranked;
  double prune_threshold = -1.0;
  int keep = 0;
  int max_lag = kDefaultMaxLag;
};

int cmd_train(Context& ctx, const DataSource& src, const TrainConfig& cfg,
              const TrainArgs& a, const std::string& dir) {
  const ArchKind kind = parse_arch(a.arch);
  const Dataset data = load_dataset(src, cfg);
  const int n_l0 = data.neurons();
  const int n_l2 = data.n_classes;
  NetworkSpec spec;
  std::vector<double> tau;
  if (kind == ArchKind::Tde) {
    if (a.prune_threshold >= 0.0 && a.keep > 0) {
      throw UsageError("--prune-threshold and --keep are exclusive");
    }
    const bool pruned = a.prune_threshold >= 0.0 || a.keep > 0;
    std::vector<PairCorrelation> ranked;
    if (pruned || cfg.tau_init == TauInit::Lags) {
      ranked = ranking_for(data, cfg, a.ranked, a.max_lag);
    }
    if (a.prune_threshold >= 0.0) {
      spec = prune(ranked, a.prune_threshold, n_l0, n_l2);
    } else if (a.keep > 0) {
      spec = prune_top(ranked, a.keep, n_l0, n_l2);
    } else {
      spec = NetworkSpec::tde(enumerate_tde_pairs(n_l0), n_l0, n_l2);
    }
    tau = tau_for(spec, ranked, cfg);
  } else {
    if (a.n_l1 < 1) throw UsageError("--n-l1 is required for " + a.arch);
    spec = kind == ArchKind::Lif ? NetworkSpec::lif(a.n_l1, n_l0, n_l2)
                                 : NetworkSpec::lifrec(a.n_l1, n_l0, n_l2);
  }
  const Split split = split_dataset(data, cfg.test_fraction, cfg.train_fraction, cfg.seed);
  const auto t0 = Clock::now();
  const RunRow row = train_and_measure(split, data, spec, tau, cfg, cfg.seed);
  ctx.log.push_back("train_seconds: " + format_double(seconds_since(t0)));

  ensure_dir(dir);
  save_model(fs::path(dir) / "model.json", {spec, row.params, cfg});
  save_report(fs::path(dir) / "report.json", row.report);
  save_comparison_csv(fs::path(dir) / "metrics.csv", std::span<const RunRow>(&row, 1));

  Series loss{"train loss", {}, row.report.epoch_loss, {}};
  Series acc{"test accuracy", {}, row.report.epoch_test_accuracy, {}};
  for (std::size_t e = 0; e < loss.y.size(); ++e) {
    loss.x.push_back(static_cast<double>(e + 1));
    acc.x.push_back(static_cast<double>(e + 1));
  }
  save_svg(fs::path(dir) / "loss.svg", line_chart({"Training loss", "epoch", "loss"}, {loss}));
  save_svg(fs::path(dir) / "accuracy.svg",
           line_chart({"Test accuracy", "epoch", "accuracy"}, {acc}));
  ctx.progress(describe_run(row));
  return 0;
}

struct CompareArgs {
  std::string sizes = "all,0.007,0.011";
  std::string archs = "tde,lifrec,lif";
  std::string ranked;
  int seeds = 3;
  bool pruning_control = false;
  int max_lag = kDefaultMaxLag;
};

std::vector<ArchKind> parse_archs(const std::string& list) {
  std::vector<ArchKind> archs;
  for (const auto& tok : split_list(list)) {
    try {
      archs.push_back(parse_arch(tok));
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
  if (archs.empty()) throw UsageError("--archs: empty list");
  return archs;
}

int cmd_compare(Context& ctx, const DataSource& src, const TrainConfig& cfg,
                const CompareArgs& a, const std::string& dir) {
  const auto archs = parse_archs(a.archs);
  const Dataset data = load_dataset(src, cfg);
  const auto ranked = ranking_for(data, cfg, a.ranked, a.max_lag);
  std::vector<MatchedSize> sizes;
  std::ostringstream table;
  table << "size,tde_n,lifrec_n,lif_n,connections_tde,connections_lifrec,"
           "connections_lif\n";
  for (const auto& tok : split_list(a.sizes)) {
    NetworkSpec tde = tde_for_size(tok, ranked, data.neurons(), data.n_classes);
    auto tau = tau_for(tde, ranked, cfg);
    MatchedSize m = match_size(tok, std::move(tde), std::move(tau));
    table << tok << ',' << m.tde.n_l1 << ',' << m.lifrec_n << ',' << m.lif_n << ','
          << connection_count(m.tde) << ','
          << connection_count(ArchKind::LifRec, m.lifrec_n, m.tde.n_l0, m.tde.n_l2)
          << ','
          << connection_count(ArchKind::Lif, m.lif_n, m.tde.n_l0, m.tde.n_l2)
          << '\n';
    sizes.push_back(std::move(m));
  }
  if (sizes.empty()) throw UsageError("--sizes: empty list");
  ensure_dir(dir);
  write_text_file(fs::path(dir) / "sizes.csv", table.str());

  const auto t0 = Clock::now();
  auto progress = [&](const std::string& m) { ctx.progress(m); };
  auto rows = run_comparison(data, sizes, cfg, a.seeds, archs, progress);
  if (a.pruning_control) {
    std::vector<int> keep;
    for (const auto& m : sizes) {
      if (m.tde.n_l1 < data.neurons() * (data.neurons() - 1)) keep.push_back(m.tde.n_l1);
    }
    auto control = run_pruning_comparison(data, ranked, keep, cfg, a.seeds, progress);
    for (auto& r : control) {
      if (r.arch != "tde_random") continue;
      for (const auto& m : sizes) {
        if (m.tde.n_l1 == r.n_l1) r.size_label = m.label;
      }
      rows.push_back(std::move(r));
    }
  }
  ctx.log.push_back("compare_seconds: " + format_double(seconds_since(t0)));
  save_comparison_csv(fs::path(dir) / "comparison.csv", rows);
  const auto stats = summarize_runs(rows);
  save_summary_csv(fs::path(dir) / "summary.csv", stats);
  comparison_plots(dir, stats);
  return 0;
}

struct SweepArgs {
  std::string size = "0.007";
  std::string archs = "tde,lifrec,lif";
  std::string fractions = "1,0.75,0.5,0.25";
  std::string ranked;
  int seeds = 3;
  int max_lag = kDefaultMaxLag;
};

int cmd_sweep(Context& ctx, const DataSource& src, const TrainConfig& cfg,
              const SweepArgs& a, const std::string& dir) {
  const auto archs = parse_archs(a.archs);
  const auto fractions = parse_numbers(a.fractions, "--fractions");
  const Dataset data = load_dataset(src, cfg);
  const auto ranked = ranking_for(data, cfg, a.ranked, a.max_lag);
  NetworkSpec tde = tde_for_size(a.size, ranked, data.neurons(), data.n_classes);
  auto tde_tau = tau_for(tde, ranked, cfg);
  const MatchedSize m = match_size(a.size, std::move(tde), std::move(tde_tau));
  std::vector<SweepSpec> specs;
  for (ArchKind k : archs) {
    switch (k) {
      case ArchKind::Tde:
        specs.push_back({"tde", m.tde, m.tde_tau_raw});
        break;
      case ArchKind::LifRec:
        specs.push_back({"lifrec", NetworkSpec::lifrec(m.lifrec_n, m.tde.n_l0, m.tde.n_l2), {}});
        break;
      case ArchKind::Lif:
        specs.push_back({"lif", NetworkSpec::lif(m.lif_n, m.tde.n_l0, m.tde.n_l2), {}});
        break;
    }
  }
  ensure_dir(dir);
  const auto t0 = Clock::now();
  const auto rows = run_training_fraction_sweep(
      data, specs, fractions, cfg, a.seeds, [&](const std::string& msg) { ctx.progress(msg); });
  ctx.log.push_back("sweep_seconds: " + format_double(seconds_since(t0)));
  save_sweep_csv(fs::path(dir) / "sweep.csv", rows);
  const auto stats = summarize_runs(rows);
  save_summary_csv(fs::path(dir) / "sweep_summary.csv", stats);

  nlohmann::json trends = nlohmann::json::array();
  std::vector<Series> curves;
  for (const auto& t : sweep_trends(stats)) {
    trends.push_back({{"arch", t.arch},
                      {"n_l1", t.n_l1},
                      {"fractions", t.fractions},
                      {"mean_acc", t.mean_acc},
                      {"monotone_nonincreasing", t.monotone_nonincreasing}});
    Series s{t.arch, t.fractions, t.mean_acc, {}};
    for (double f : t.fractions) {
      for (const auto& g : stats) {
        if (g.arch == t.arch && g.train_fraction == f) s.err.push_back(g.std_acc);
      }
    }
    curves.push_back(s);
  }
  write_text_file(fs::path(dir) / "sweep_trend.json",
                  nlohmann::json{{"format", "tdekws-sweep-v1"}, {"trends", trends}}.dump(1) +
                      "\n");
  save_svg(fs::path(dir) / "training_fraction.svg",
           line_chart({"Accuracy against training fraction", "training fraction",
                       "top-25 accuracy"},
                      curves));
  return 0;
}

struct InfoArgs {
  std::string delta_t = "0.015,0.03,0.06";
  InfoOptions options;
};

int cmd_info(Context& ctx, const DataSource& src, const TrainConfig& cfg,
             const InfoArgs& a, const std::string& dir) {
  const auto deltas = parse_numbers(a.delta_t, "--delta-t");
  const Dataset data = load_dataset(src, cfg);
  const auto rows = info_table(data, deltas, a.options);
  ensure_dir(dir);
  save_info_csv(fs::path(dir) / "info.csv", rows);
  Series pattern{"I_pattern", {}, {}, {}}, rate{"I_rate", {}, {}, {}};
  const std::size_t channels = static_cast<std::size_t>(data.neurons());
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    std::vector<double> v;
    for (std::size_t c = 0; c < channels; ++c) v.push_back(rows[d * channels + c].i_pattern);
    double mean = 0.0, ss = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    for (double x : v) ss += (x - mean) * (x - mean);
    pattern.x.push_back(deltas[d]);
    pattern.y.push_back(mean);
    pattern.err.push_back(std::sqrt(ss / v.size()));
  }
  const ChannelInfo r = info_rate(data, a.options);
  for (double d : deltas) {
    rate.x.push_back(d);
    rate.y.push_back(r.mean);
    rate.err.push_back(r.stddev);
  }
  save_svg(fs::path(dir) / "information.svg",
           line_chart({"Information per channel", "delta t (s)", "bits"}, {rate, pattern}));
  ctx.progress("I_rate mean " + format_double(r.mean) + " bits over " +
               std::to_string(channels) + " channels");
  return 0;
}

struct InterpretArgs {
  std::string model;
  std::string ranked;
  int top_k = 25;
  double coincidence = 5.0;
  int max_lag = kDefaultMaxLag;
};

int cmd_interpret(Context& ctx, const DataSource& src, const InterpretArgs& a,
                  const std::string& dir) {
  const ModelFile model = load_model(a.model);
  std::vector<PairCorrelation> ranked;
  if (!a.ranked.empty()) {
    ranked = load_ranked_csv(a.ranked);
  } else {
    ranked = ranking_for(load_dataset(src, model.config), model.config, "", a.max_lag);
  }
  const auto report = interpretability_report(model.spec, model.params, ranked,
                                              a.top_k, a.coincidence);
  ensure_dir(dir);
  save_interpretability(fs::path(dir) / "interpretability.json", report);
  std::vector<Series> pairs, taus;
  for (const auto& c : report.classes) {
    Series p{"class " + std::to_string(c.class_id), {}, {}, {}};
    Series t{"class " + std::to_string(c.class_id), {}, {}, {}};
    for (const auto& cell : c.top_cells) {
      p.x.push_back(cell.pair.fac);
      p.y.push_back(cell.pair.trig);
      t.x.push_back(c.class_id);
      t.y.push_back(cell.tau_g);
    }
    pairs.push_back(p);
    taus.push_back(t);
  }
  save_svg(fs::path(dir) / "pairs.svg",
           scatter_chart({"Top cells by output weight", "fac channel", "trig channel"}, pairs));
  save_svg(fs::path(dir) / "tau_g.svg",
           scatter_chart({"Trained tau_g of top cells", "class", "tau_g (s)"}, taus));
  ctx.progress("mean distance to cross-correlation pairs " +
               format_double(report.overall.mean) + ", coincidences " +
               std::to_string(report.overall.coincidences));
  return 0;
}

// Pulls `--config FILE` out of `args` and splices the file's `key = value`
// lines in right after the subcommand, so explicit flags win.
void expand_config(std::vector<std::string>& args,
                   const std::vector<std::string>& subcommands) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + i);
      break;
    }
  }
  if (path.empty()) return;
  if (!fs::exists(path)) throw UsageError("config file '" + path + "' not found");
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::ParseError& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
  std::vector<std::string> flags;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty()) {
      throw UsageError("config file '" + path + "': sections are not supported ('" +
                       item.parents.front() + "')");
    }
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    std::string value;
    for (std::size_t k = 0; k < item.inputs.size(); ++k) {
      value += (k ? "," : "") + item.inputs[k];
    }
    flags.push_back("--" + name + "=" + value);
  }
  auto sub = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
    return std::find(subcommands.begin(), subcommands.end(), a) != subcommands.end();
  });
  if (sub == args.end()) throw UsageError("--config needs a subcommand");
  args.insert(sub + 1, flags.begin(), flags.end());
}

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("TDEKWS_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("TDEKWS_THREADS='") + env + "' is not a positive integer");
  }
  return 0;
}

int fail(std::ostream& err, const char* kind, const std::string& msg, int code) {
  err << "tdekws-error\t" << kind << '\t' << one_line(msg) << '\n';
  return code;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app("Spiking keyword spotting with time difference encoders", "tdekws");
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  std::string config_path;
  app.add_option("--threads", threads,
                 "Worker threads (0: TDEKWS_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--config", config_path, "Flat `key = value` file of option defaults");

  Context ctx{out, err, {}};
  DataSource src;
  TrainConfig cfg;
  std::string out_dir = "out";

  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset (raster + formant CSV)");
  std::uint64_t gen_seed = 0;
  int gen_reps = 40;
  gen->add_option("--seed", gen_seed, "Corpus seed");
  gen->add_option("--reps", gen_reps, "Repetitions per class")->check(CLI::PositiveNumber);
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* rank = app.add_subcommand("rank", "Rank channel pairs by cross-correlation");
  int rank_lag = kDefaultMaxLag;
  add_data_options(rank, src);
  add_train_options(rank, cfg);
  rank->add_option("--max-lag", rank_lag, "Largest lag in steps")->check(CLI::NonNegativeNumber);
  rank->add_option("--out", out_dir, "Output directory");

  auto* prune_cmd = app.add_subcommand("prune", "Pruning levels and informed/random control");
  PruneArgs prune_args;
  add_data_options(prune_cmd, src);
  add_train_options(prune_cmd, cfg);
  prune_cmd->add_option("--ranked", prune_args.ranked, "Ranked pairs CSV from `rank`");
  prune_cmd->add_option("--thresholds", prune_args.thresholds,
                        "Comma-separated cross-correlation thresholds");
  prune_cmd->add_option("--keep", prune_args.keep, "Comma-separated cell counts");
  prune_cmd->add_option("--seeds", prune_args.seeds,
                        "Seeds per level for informed vs random training (0: table only)")
      ->check(CLI::NonNegativeNumber);
  prune_cmd->add_option("--max-lag", prune_args.max_lag, "Largest lag in steps");
  prune_cmd->add_option("--out", out_dir, "Output directory");

  auto* train_cmd = app.add_subcommand("train", "Train one network");
  TrainArgs train_args;
  add_data_options(train_cmd, src);
  add_train_options(train_cmd, cfg);
  train_cmd->add_option("--arch", train_args.arch, "tde, lif or lifrec");
  train_cmd->add_option("--n-l1", train_args.n_l1, "Hidden size for lif/lifrec");
  train_cmd->add_option("--ranked", train_args.ranked, "Ranked pairs CSV from `rank`");
  train_cmd->add_option("--prune-threshold", train_args.prune_threshold,
                        "Keep TDE pairs with xcorr >= X (negative: no pruning)");
  train_cmd->add_option("--keep", train_args.keep, "Keep the N best-ranked TDE pairs (0: all)");
  train_cmd->add_option("--max-lag", train_args.max_lag, "Largest lag in steps");
  train_cmd->add_option("--out", out_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Matched-connection architecture comparison");
  CompareArgs compare_args;
  add_data_options(compare, src);
  add_train_options(compare, cfg);
  compare->add_option("--sizes", compare_args.sizes,
                      "TDE sizes: all, thresholds (with a '.') or cell counts");
  compare->add_option("--archs", compare_args.archs, "Architectures to train");
  compare->add_option("--seeds", compare_args.seeds, "Seeds per configuration")
      ->check(CLI::PositiveNumber);
  compare->add_option("--ranked", compare_args.ranked, "Ranked pairs CSV from `rank`");
  compare->add_flag("--pruning-control", compare_args.pruning_control,
                    "Add randomly pruned TDE rows (tde_random)");
  compare->add_option("--max-lag", compare_args.max_lag, "Largest lag in steps");
  compare->add_option("--out", out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Accuracy against training-set fraction");
  SweepArgs sweep_args;
  add_data_options(sweep, src);
  add_train_options(sweep, cfg);
  sweep->add_option("--size", sweep_args.size, "TDE size (as in compare --sizes)");
  sweep->add_option("--archs", sweep_args.archs, "Architectures to train");
  sweep->add_option("--fractions", sweep_args.fractions, "Training fractions");
  sweep->add_option("--seeds", sweep_args.seeds, "Seeds per configuration")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--ranked", sweep_args.ranked, "Ranked pairs CSV from `rank`");
  sweep->add_option("--max-lag", sweep_args.max_lag, "Largest lag in steps");
  sweep->add_option("--out", out_dir, "Output directory");

  auto* info = app.add_subcommand("info", "Rate and spike-pattern information per channel");
  InfoArgs info_args;
  add_data_options(info, src);
  add_train_options(info, cfg);
  info->add_option("--delta-t", info_args.delta_t, "Comma-separated pattern bin widths (s)");
  info->add_option("--window", info_args.options.window, "Window after the first spike (s)");
  info->add_option("--max-word-bins", info_args.options.max_word_bins, "Largest word length");
  info->add_option("--shuffles", info_args.options.shuffles, "Label permutations for bias");
  info->add_option("--info-seed", info_args.options.seed, "Permutation seed");
  info->add_option("--out", out_dir, "Output directory");

  auto* interpret = app.add_subcommand("interpret", "Top output-weight cells of a TDE model");
  InterpretArgs interp_args;
  add_data_options(interpret, src);
  interpret->add_option("--model", interp_args.model, "model.json from `train`")->required();
  interpret->add_option("--ranked", interp_args.ranked,
                        "Ranked pairs CSV (default: rank the model's training split)");
  interpret->add_option("--top-k", interp_args.top_k, "Cells and pairs per class")
      ->check(CLI::PositiveNumber);
  interpret->add_option("--coincidence", interp_args.coincidence,
                        "Largest pair distance counted as a coincidence");
  interpret->add_option("--max-lag", interp_args.max_lag, "Largest lag in steps");
  interpret->add_option("--out", out_dir, "Output directory");

  const std::vector<std::string> original = args;
  try {
    std::vector<std::string> names;
    for (const auto* sub : app.get_subcommands({})) names.push_back(sub->get_name());
    expand_config(args, names);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    return fail(err, "usage", e.what(), 2);
  } catch (const UsageError& e) {
    return fail(err, "usage", e.what(), 2);
  }

  try {
    set_thread_count(resolve_threads(threads));
    cfg.validate();
    const auto t0 = Clock::now();
    int rc = 0;
    if (gen->parsed()) {
      rc = cmd_gen(ctx, gen_seed, gen_reps, out_dir);
    } else if (rank->parsed()) {
      rc = cmd_rank(ctx, load_dataset(src, cfg), cfg, rank_lag, out_dir);
    } else if (prune_cmd->parsed()) {
      rc = cmd_prune(ctx, src, cfg, prune_args, out_dir);
    } else if (train_cmd->parsed()) {
      rc = cmd_train(ctx, src, cfg, train_args, out_dir);
    } else if (compare->parsed()) {
      rc = cmd_compare(ctx, src, cfg, compare_args, out_dir);
    } else if (sweep->parsed()) {
      rc = cmd_sweep(ctx, src, cfg, sweep_args, out_dir);
    } else if (info->parsed()) {
      rc = cmd_info(ctx, src, cfg, info_args, out_dir);
    } else if (interpret->parsed()) {
      rc = cmd_interpret(ctx, src, interp_args, out_dir);
    }
    ctx.log.push_back("total_seconds: " + format_double(seconds_since(t0)));
    if (!gen->parsed()) write_run_log(out_dir, original, ctx.log);
    return rc;
  } catch (const UsageError& e) {
    return fail(err, "usage", e.what(), 2);
  } catch (const ParseError& e) {
    return fail(err, "parse", e.what(), 1);
  } catch (const NumericError& e) {
    return fail(err, "numeric", e.what(), 1);
  } catch (const StructuralError& e) {
    return fail(err, "structural", e.what(), 1);
  } catch (const DomainError& e) {
    return fail(err, "domain", e.what(), 1);
  } catch (const std::exception& e) {
    return fail(err, "runtime", e.what(), 1);
  }
}

}  // namespace tdekws
