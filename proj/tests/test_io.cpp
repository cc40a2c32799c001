#include <doctest.h>

#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

#include "tdekws/error.hpp"
#include "tdekws/model_io.hpp"

using namespace tdekws;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto d = fs::temp_directory_path() / "tdekws_test_io";
  fs::create_directories(d);
  return d;
}

ModelFile sample_model(ArchKind kind) {
  ModelFile m;
  m.spec = kind == ArchKind::Tde   ? NetworkSpec::tde({{0, 1}, {5, 2}, {31, 30}})
           : kind == ArchKind::Lif ? NetworkSpec::lif(7)
                                   : NetworkSpec::lifrec(7);
  m.config.seed = 12345678901234ULL;
  m.config.learning_rate = 0.1 / 3.0;
  m.config.tau_init = TauInit::Constant;
  std::vector<double> raw;
  if (kind == ArchKind::Tde) raw = {-1.0 / 3.0, 0.7, std::nextafter(2.0, 3.0)};
  m.params = init_parameters(m.spec, m.config, 77, raw);
  return m;
}

}  // namespace

TEST_CASE("model files round-trip bit for bit") {
  for (ArchKind kind : {ArchKind::Tde, ArchKind::Lif, ArchKind::LifRec}) {
    const auto m = sample_model(kind);
    const auto path = temp_dir() / "model.json";
    save_model(path, m);
    const auto back = load_model(path);
    CHECK(back.spec == m.spec);
    CHECK(back.params == m.params);
    CHECK(back.config.seed == m.config.seed);
    CHECK(back.config.learning_rate == m.config.learning_rate);
    CHECK(back.config.tau_init == TauInit::Constant);
    CHECK(model_to_json(back) == model_to_json(m));
  }
}

TEST_CASE("model files are checked on load") {
  auto j = nlohmann::json::parse(model_to_json(sample_model(ArchKind::Lif)));
  j["format"] = "something-else";
  CHECK_THROWS_AS(model_from_json(j.dump()), StructuralError);
  CHECK_THROWS_AS(model_from_json("{not json"), ParseError);
  auto k = nlohmann::json::parse(model_to_json(sample_model(ArchKind::Lif)));
  k["params"]["w2"]["rows"] = 3;
  CHECK_THROWS_AS(model_from_json(k.dump()), StructuralError);
  CHECK_THROWS(load_model(temp_dir() / "missing.json"));
}

TEST_CASE("reports round-trip without the wall clock") {
  TrainReport r;
  r.arch = ArchKind::LifRec;
  r.n_l1 = 65;
  r.seed = 3;
  r.epoch_loss = {2.3, 1.0 / 7.0};
  r.epoch_test_accuracy = {0.1, 0.25};
  r.top_accuracy = 0.175;
  r.top_k = 2;
  r.wall_clock_sec = 12.5;
  const auto text = report_to_json(r);
  CHECK(text.find("wall") == std::string::npos);
  const auto back = report_from_json(text);
  CHECK(back.arch == r.arch);
  CHECK(back.epoch_loss == r.epoch_loss);
  CHECK(back.epoch_test_accuracy == r.epoch_test_accuracy);
  CHECK(back.top_accuracy == r.top_accuracy);
  CHECK(back.wall_clock_sec == 0.0);
  CHECK(report_to_json(back) == text);
}

TEST_CASE("interpretability JSON layout") {
  InterpretabilityReport rep;
  rep.top_k = 1;
  ClassInterpretation c;
  c.class_id = 0;
  c.top_cells.push_back({4, {1, 2}, -0.5, 0.03});
  c.xcorr_top.push_back({1, 3});
  c.vs_xcorr.distances = {1.0};
  c.vs_xcorr.coincidences = 1;
  c.vs_xcorr.mean = 1.0;
  rep.classes.push_back(c);
  rep.overall = c.vs_xcorr;
  const auto j = nlohmann::json::parse(interpretability_to_json(rep));
  CHECK(j["format"] == std::string(kInterpretFormat));
  CHECK(j["classes"][0]["top_cells"][0]["cell"] == 4);
  CHECK(j["classes"][0]["top_cells"][0]["fac"] == 1);
  CHECK(j["classes"][0]["xcorr_top"][0]["trig"] == 3);
  CHECK(j["overall"]["coincidences"] == 1);
}
