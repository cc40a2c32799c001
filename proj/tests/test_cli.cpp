#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tdekws/cli.hpp"
#include "tdekws/model_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = tdekws::run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "tdekws_test_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string slurp(const fs::path& p) { return tdekws::read_text_file(p); }

const std::vector<std::string> kTiny{"--reps", "2", "--epochs", "1", "--test-fraction",
                                     "0.5", "--batch-size", "11"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("gen is deterministic") {
  const auto a = scratch("gen_a"), b = scratch("gen_b");
  REQUIRE(run({"gen", "--seed", "3", "--reps", "2", "--out", a.string()}).code == 0);
  REQUIRE(run({"gen", "--seed", "3", "--reps", "2", "--out", b.string()}).code == 0);
  CHECK(slurp(a / "dataset.raster") == slurp(b / "dataset.raster"));
  CHECK(slurp(a / "formants.csv") == slurp(b / "formants.csv"));
  const auto lines = lines_of(a / "dataset.raster");
  REQUIRE(lines.size() == 23);
  CHECK(lines[0].rfind("tdekws-raster-v1 32 100 0.015", 0) == 0);
  CHECK(lines_of(a / "formants.csv")[0] == "class_id,t_sec,f1,a1,f2,a2,f3,a3");
}

TEST_CASE("usage errors exit with 2 and one error line") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"gen", "--reps", "0", "--out", "x"},
           {"gen"},
           {},
           {"bogus"},
           {"train", "--arch", "tde", "--no-such-flag"},
           {"info", "--config", "/nonexistent/file.ini"}}) {
    const auto r = run(args);
    CHECK(r.code == 2);
    CHECK(r.err.rfind("tdekws-error\tusage\t", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  }
}

TEST_CASE("runtime errors exit with 1 and name their kind") {
  const auto d = scratch("errors");
  const auto r = run({"info", "--delta-t", "0.001", "--reps", "2", "--out", d.string()});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("tdekws-error\tdomain\t", 0) == 0);
  {
    std::ofstream bad(d / "bad.raster");
    bad << "tdekws-raster-v1 32 100 0.015\n0 0:1 5:x\n";
  }
  const auto p = run({"info", "--data", (d / "bad.raster").string(), "--out", d.string()});
  CHECK(p.code == 1);
  CHECK(p.err.rfind("tdekws-error\tparse\t", 0) == 0);
}

TEST_CASE("help lists defaults") {
  const auto r = run({"train", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--lr") != std::string::npos);
  CHECK(r.out.find("0.0015") != std::string::npos);
  CHECK(r.out.find("--epochs") != std::string::npos);
}

TEST_CASE("info writes one row per channel and bin width") {
  const auto d = scratch("info");
  const auto r = run({"info", "--reps", "2", "--out", d.string(), "--threads", "2"});
  REQUIRE(r.code == 0);
  const auto lines = lines_of(d / "info.csv");
  CHECK(lines[0] == "channel,delta_t,i_rate,i_pattern");
  CHECK(lines.size() == 97);
  CHECK(fs::exists(d / "information.svg"));
  const auto log = slurp(d / "run.log");
  CHECK(log.find("threads") != std::string::npos);
}

TEST_CASE("compare trains every size, architecture and seed") {
  const auto d = scratch("compare");
  const auto r = run(with({"compare", "--out", d.string()}, kTiny));
  REQUIRE(r.code == 0);
  const auto rows = lines_of(d / "comparison.csv");
  CHECK(rows[0] == "arch,n_l1,connections,seed,top25_acc,spikes_total,synops_total");
  CHECK(rows.size() == 28);
  CHECK(lines_of(d / "sizes.csv").size() == 4);
  for (const char* f : {"summary.csv", "accuracy.svg", "spikes.svg", "synops.svg", "run.log"}) {
    CHECK(fs::exists(d / f));
  }
}

TEST_CASE("train, rank and interpret chain together") {
  const auto d = scratch("chain");
  REQUIRE(run({"rank", "--reps", "2", "--test-fraction", "0.5", "--out", d.string()}).code == 0);
  CHECK(lines_of(d / "ranked_pairs.csv").size() == 993);
  const auto t = run(with({"train", "--arch", "tde", "--keep", "50", "--ranked",
                           (d / "ranked_pairs.csv").string(), "--out", d.string()},
                          kTiny));
  REQUIRE(t.code == 0);
  const auto model = tdekws::load_model(d / "model.json");
  CHECK(model.spec.n_l1 == 50);
  const auto i = run({"interpret", "--model", (d / "model.json").string(), "--ranked",
                      (d / "ranked_pairs.csv").string(), "--top-k", "5", "--out", d.string()});
  REQUIRE(i.code == 0);
  CHECK(fs::exists(d / "interpretability.json"));
  CHECK(fs::exists(d / "pairs.svg"));
}

TEST_CASE("config file supplies defaults and flags override it") {
  const auto d = scratch("config");
  {
    std::ofstream cfg(d / "run.ini");
    cfg << "reps = 2\nepochs = 1\ntest_fraction = 0.5\nlr = 0.01\n";
  }
  const auto a = run({"train", "--config", (d / "run.ini").string(), "--arch", "lif",
                      "--n-l1", "8", "--out", (d / "a").string()});
  REQUIRE(a.code == 0);
  CHECK(tdekws::load_model(d / "a" / "model.json").config.learning_rate == 0.01);
  const auto b = run({"train", "--config", (d / "run.ini").string(), "--arch", "lif",
                      "--n-l1", "8", "--lr", "0.02", "--out", (d / "b").string()});
  REQUIRE(b.code == 0);
  CHECK(tdekws::load_model(d / "b" / "model.json").config.learning_rate == 0.02);
  {
    std::ofstream cfg(d / "section.ini");
    cfg << "[train]\nlr = 0.01\n";
  }
  CHECK(run({"train", "--config", (d / "section.ini").string(), "--out", d.string()}).code == 2);
}

TEST_CASE("reruns reproduce their outputs") {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  const std::vector<std::string> base{"train", "--arch", "lifrec", "--n-l1", "10"};
  REQUIRE(run(with(with(base, {"--out", a.string()}), kTiny)).code == 0);
  REQUIRE(run(with(with(base, {"--out", b.string(), "--threads", "3"}), kTiny)).code == 0);
  for (const char* f : {"model.json", "report.json", "metrics.csv", "loss.svg"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("installed binary reports usage errors by exit code") {
  const std::string cmd = std::string(TDEKWS_BINARY) + " gen --reps 0 --out x 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
}
