#include "tdekws/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tdekws/error.hpp"

namespace tdekws {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from(const json& j) {
  Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) {
    throw StructuralError("matrix data has " + std::to_string(data.size()) +
                          " entries, expected rows*cols = " +
                          std::to_string(m.size()));
  }
  m.data() = std::move(data);
  return m;
}

json lif_json(const LifParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"threshold", p.threshold},
          {"dt", p.dt}};
}

LifParams lif_from(const json& j) {
  LifParams p;
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.threshold = j.at("threshold").get<double>();
  p.dt = j.at("dt").get<double>();
  return p;
}

json config_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"dt", c.dt},
          {"tau_mem", c.tau_mem},
          {"tau_syn", c.tau_syn},
          {"threshold", c.threshold},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"p_drop", c.p_drop},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"train_fraction", c.train_fraction},
          {"test_fraction", c.test_fraction},
          {"input_gain", c.input_gain},
          {"init_scale", c.init_scale},
          {"tau_g_init", c.tau_g_init},
          {"tau_init", c.tau_init == TauInit::Lags ? "lags" : "constant"},
          {"top_k", c.top_k}};
}

TrainConfig config_from(const json& j) {
  TrainConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.dt = j.at("dt").get<double>();
  c.tau_mem = j.at("tau_mem").get<double>();
  c.tau_syn = j.at("tau_syn").get<double>();
  c.threshold = j.at("threshold").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.p_drop = j.at("p_drop").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.train_fraction = j.at("train_fraction").get<double>();
  c.test_fraction = j.at("test_fraction").get<double>();
  c.input_gain = j.at("input_gain").get<double>();
  c.init_scale = j.at("init_scale").get<double>();
  c.tau_g_init = j.at("tau_g_init").get<double>();
  const auto tau = j.at("tau_init").get<std::string>();
  if (tau == "lags") {
    c.tau_init = TauInit::Lags;
  } else if (tau == "constant") {
    c.tau_init = TauInit::Constant;
  } else {
    throw StructuralError("unknown tau_init '" + tau + "'");
  }
  c.top_k = j.at("top_k").get<int>();
  return c;
}

json spec_json(const NetworkSpec& s) {
  json pairs = json::array();
  for (const auto& p : s.tde_pairs) pairs.push_back({p.fac, p.trig});
  return {{"kind", std::string(to_string(s.kind))},
          {"n_l0", s.n_l0},
          {"n_l1", s.n_l1},
          {"n_l2", s.n_l2},
          {"tde_pairs", pairs}};
}

NetworkSpec spec_from(const json& j) {
  NetworkSpec s;
  s.kind = parse_arch(j.at("kind").get<std::string>());
  s.n_l0 = j.at("n_l0").get<int>();
  s.n_l1 = j.at("n_l1").get<int>();
  s.n_l2 = j.at("n_l2").get<int>();
  for (const auto& p : j.at("tde_pairs")) {
    s.tde_pairs.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  }
  s.validate();
  return s;
}

json pair_distances_json(const PairDistances& d) {
  return {{"distances", d.distances},
          {"coincidences", d.coincidences},
          {"mean", d.mean},
          {"std", d.stddev}};
}

json parse(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what), 0, e.what());
  }
}

void check_format(const json& j, std::string_view expected) {
  const auto format = j.value("format", std::string());
  if (format != expected) {
    throw StructuralError("expected format '" + std::string(expected) +
                          "', found '" + format + "'");
  }
}

}  // namespace

std::string model_to_json(const ModelFile& model) {
  model.spec.validate();
  model.params.validate_for(model.spec);
  const auto& p = model.params;
  json j = {{"format", kModelFormat},
            {"spec", spec_json(model.spec)},
            {"params",
             {{"w1", matrix_json(p.w1)},
              {"w_rec", matrix_json(p.w_rec)},
              {"w2", matrix_json(p.w2)},
              {"tau_g_raw", p.tau_g_raw},
              {"encoder", lif_json(p.encoder)},
              {"hidden", lif_json(p.hidden)},
              {"output", lif_json(p.output)},
              {"input_gain", p.input_gain}}},
            {"config", config_json(model.config)}};
  return j.dump(1) + "\n";
}

ModelFile model_from_json(std::string_view text) {
  const json j = parse(text, "model");
  check_format(j, kModelFormat);
  try {
    ModelFile m;
    m.spec = spec_from(j.at("spec"));
    const json& p = j.at("params");
    m.params.w1 = matrix_from(p.at("w1"));
    m.params.w_rec = matrix_from(p.at("w_rec"));
    m.params.w2 = matrix_from(p.at("w2"));
    m.params.tau_g_raw = p.at("tau_g_raw").get<std::vector<double>>();
    m.params.encoder = lif_from(p.at("encoder"));
    m.params.hidden = lif_from(p.at("hidden"));
    m.params.output = lif_from(p.at("output"));
    m.params.input_gain = p.at("input_gain").get<double>();
    m.params.validate_for(m.spec);
    m.config = config_from(j.at("config"));
    return m;
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  write_text_file(path, model_to_json(model));
}

ModelFile load_model(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path));
}

std::string report_to_json(const TrainReport& r) {
  json j = {{"format", kReportFormat},
            {"arch", std::string(to_string(r.arch))},
            {"n_l1", r.n_l1},
            {"seed", r.seed},
            {"top_k", r.top_k},
            {"top_accuracy", r.top_accuracy},
            {"epoch_loss", r.epoch_loss},
            {"epoch_test_accuracy", r.epoch_test_accuracy}};
  return j.dump(1) + "\n";
}

TrainReport report_from_json(std::string_view text) {
  const json j = parse(text, "report");
  check_format(j, kReportFormat);
  try {
    TrainReport r;
    r.arch = parse_arch(j.at("arch").get<std::string>());
    r.n_l1 = j.at("n_l1").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.top_k = j.at("top_k").get<int>();
    r.top_accuracy = j.at("top_accuracy").get<double>();
    r.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    r.epoch_test_accuracy = j.at("epoch_test_accuracy").get<std::vector<double>>();
    return r;
  } catch (const json::exception& e) {
    throw StructuralError(std::string("malformed report file: ") + e.what());
  }
}

void save_report(const std::filesystem::path& path, const TrainReport& report) {
  write_text_file(path, report_to_json(report));
}

std::string interpretability_to_json(const InterpretabilityReport& report) {
  json classes = json::array();
  for (const auto& c : report.classes) {
    json cells = json::array();
    for (const auto& cell : c.top_cells) {
      cells.push_back({{"cell", cell.cell},
                       {"fac", cell.pair.fac},
                       {"trig", cell.pair.trig},
                       {"weight", cell.weight},
                       {"tau_g", cell.tau_g}});
    }
    json xc = json::array();
    for (const auto& p : c.xcorr_top) xc.push_back({{"fac", p.fac}, {"trig", p.trig}});
    classes.push_back({{"class", c.class_id},
                       {"top_cells", cells},
                       {"xcorr_top", xc},
                       {"vs_xcorr", pair_distances_json(c.vs_xcorr)}});
  }
  json j = {{"format", kInterpretFormat},
            {"top_k", report.top_k},
            {"classes", classes},
            {"overall", pair_distances_json(report.overall)}};
  return j.dump(1) + "\n";
}

void save_interpretability(const std::filesystem::path& path,
                           const InterpretabilityReport& report) {
  write_text_file(path, interpretability_to_json(report));
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace tdekws
