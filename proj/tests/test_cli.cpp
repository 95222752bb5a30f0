#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "hjbpinn/cli.hpp"
#include "hjbpinn/io.hpp"

using namespace hjbpinn;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hjbpinn_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "cfg.toml";
  std::ofstream(p) << text;
  return p;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(cli::Options o) {
  std::ostringstream out, err;
  const int code = cli::run(o, out, err);
  return {code, out.str(), err.str()};
}

cli::Options opts(const std::string& command, const fs::path& out, std::vector<std::string> sets = {}) {
  cli::Options o;
  o.command = command;
  o.out = out;
  o.overrides = std::move(sets);
  return o;
}

int shell(const std::string& args) {
  const std::string cmd = std::string(HJBPINN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json manifest(const fs::path& dir) { return json::parse(read_file(dir / "manifest.json")); }

const std::vector<std::string> kTinyTrain{"k=3", "steps=20", "record_every=5", "N_r=16", "N_0=8", "N_s=16"};

}  // namespace

TEST_CASE("bounds at the benchmark sizes are vacuous") {
  const auto dir = scratch("bounds");
  const auto r = run(opts("bounds", dir,
                          {"n=2", "k=1", "W=1", "C1=1", "C2=0.25", "C3=0.0962250448649376", "M=2", "lambdas=0.5",
                           "lambda0=1", "eta=0.1", "N_s=3276", "activation=sigmoid"}));
  REQUIRE(r.code == cli::kExitOk);
  const auto j = json::parse(r.out);
  CHECK(j["supervised"]["vacuous"] == true);
  CHECK(j["supervised"]["min_d_N"] == 0);
  CHECK(j["supervised"]["perturbation"]["V"].get<double>() == doctest::Approx(std::sqrt(2.0) + 1.0).epsilon(1e-15));
  CHECK(j["manifest"] == "manifest.json");
  CHECK(read_file(dir / "bounds.json") == r.out);
  const auto m = manifest(dir);
  CHECK(m["status"] == "ok");
  CHECK(m["command"] == "bounds");
  CHECK(m["outputs"] == json::array({"bounds.json"}));
  CHECK(m["config"]["N_s"] == "3276");
  CHECK(m.contains("kernel"));
  CHECK(m.contains("version"));
}

TEST_CASE("bounds constants default to the drawn outer vector") {
  const auto r = run(opts("bounds", scratch("bounds_default"), {"k=5", "seed=3"}));
  REQUIRE(r.code == cli::kExitOk);
  const auto in = json::parse(r.out)["inputs"];
  CHECK(in["C1"].get<double>() > 0.0);
  CHECK(in["C2"].get<double>() < in["C1"].get<double>());
}

TEST_CASE("config errors exit 2 and still leave a manifest") {
  const auto dir = scratch("bad");
  const auto cfg = write_config(dir, "steps = \n");
  CHECK(shell("train --config " + cfg.string() + " --out " + (dir / "o").string()) == cli::kExitConfig);
  const auto m = manifest(dir / "o");
  CHECK(m["status"] == "failed");
  CHECK(m["error"].get<std::string>().find("empty value") != std::string::npos);

  CHECK(run(opts("train", dir / "p", {"stpes=3"})).code == cli::kExitConfig);
  CHECK(run(opts("bounds", dir / "q", {"C1=1"})).code == cli::kExitConfig);
  CHECK(run(opts("sweep", dir / "r", {"widths=[4, 2]"})).code == cli::kExitConfig);
  CHECK(run(opts("train", dir / "s", {"kernel=neon"})).code == cli::kExitConfig);
  CHECK(shell("nosuchcommand") == cli::kExitConfig);
  CHECK(shell("train --bogus-flag") == cli::kExitConfig);
  CHECK(shell("train --config " + (dir / "missing.toml").string()) == cli::kExitConfig);
}

TEST_CASE("training with zero learning rate keeps the risk") {
  auto sets = kTinyTrain;
  sets.push_back("lr=0");
  const auto dir = scratch("train_lr0");
  const auto r = run(opts("train", dir, sets));
  REQUIRE(r.code == cli::kExitOk);
  const std::string trace = read_file(dir / "trace.csv");
  std::istringstream is(trace);
  std::string line, first_total;
  std::getline(is, line);
  int rows = 0;
  while (std::getline(is, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (rows++ == 0) first_total = cols.at(4);
    CHECK(cols.at(4) == first_total);
  }
  CHECK(rows == 5);
  const auto res = json::parse(read_file(dir / "result.json"));
  CHECK(res["status"] == "ok");
  CHECK(res["d_N"] == 9);
  CHECK(fs::exists(dir / "dataset.jsonl"));
  CHECK(read_file(dir / "network_init.json") == read_file(dir / "network_final.json"));
}

TEST_CASE("rerun from a manifest reproduces the outputs") {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  auto sets = kTinyTrain;
  sets.push_back("lr=0.01");
  sets.push_back("activation=sigmoid");
  REQUIRE(run(opts("train", a, sets)).code == cli::kExitOk);
  cli::Options o;
  o.command = "rerun";
  o.manifest = a / "manifest.json";
  o.out = b;
  REQUIRE(run(o).code == cli::kExitOk);
  for (const char* f : {"trace.csv", "result.json", "dataset.jsonl", "network_final.json"}) {
    CHECK(read_file(a / f) == read_file(b / f));
  }
  const auto m = manifest(b);
  CHECK(m["command"] == "train");
  CHECK(m["rerun_of"] == (a / "manifest.json").string());
  CHECK(m["config"] == manifest(a)["config"]);
}

TEST_CASE("sweep then figure data") {
  const auto sw = scratch("sweep");
  const auto fig = scratch("fig");
  const auto r = run(opts("sweep", sw,
                          {"widths=[1, 2]", "seeds=[4, 5]", "steps=20", "record_every=10", "N_r=16", "N_0=8",
                           "N_s=16", "sigma2=0.4", "jobs=2"}));
  REQUIRE(r.code == cli::kExitOk);
  const auto summary = json::parse(read_file(sw / "summary.json"));
  CHECK(summary["records"] == 4);
  CHECK(fs::exists(sw / "traces" / "k2_seed5.csv"));
  const auto m = manifest(sw);
  CHECK(m["seeds"] == json::array({4, 5, 1}));
  CHECK(m["outputs"].size() == 6);

  cli::Options o;
  o.command = "fig1";
  o.sweep_dir = sw;
  o.out = fig;
  REQUIRE(run(o).code == cli::kExitOk);
  const std::string csv = read_file(fig / "fig1.csv");
  // sigma2 is taken from the sweep manifest: reference 1 - 0.4.
  CHECK(csv.find(",0.6\n") != std::string::npos);
  CHECK(read_file(fig / "fig1.svg").find("<svg") == 0);
  CHECK(shell("fig1 --sweep " + sw.string() + " --out " + (fig / "again").string()) == cli::kExitOk);
  CHECK(read_file(fig / "again" / "fig1.csv") == csv);
}

TEST_CASE("runtime failure exits 1 with a manifest") {
  const auto dir = scratch("diverge");
  auto sets = kTinyTrain;
  sets.push_back("lr=1e300");
  sets.push_back("k=2");
  const auto r = run(opts("train", dir, sets));
  CHECK(r.code == cli::kExitError);
  const auto m = manifest(dir);
  CHECK(m["status"] == "failed");
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(json::parse(read_file(dir / "result.json"))["status"] == "failed");

  cli::Options o;
  o.command = "fig1";
  o.sweep_dir = dir / "nothing_here";
  o.out = dir / "fig";
  CHECK(run(o).code == cli::kExitError);
  CHECK(manifest(dir / "fig")["status"] == "failed");
}

TEST_CASE("verify exit code reflects the checks") {
  const auto dir = scratch("verify");
  const auto r = run(opts("verify", dir,
                          {"trials=200", "adversarial_trials=20", "adversarial_steps=2", "residual_points=100",
                           "gradient_instances=5"}));
  std::istringstream is(read_file(dir / "verify.jsonl"));
  bool all = true;
  int rows = 0;
  for (std::string line; std::getline(is, line); ++rows) all = all && json::parse(line)["pass"].get<bool>();
  CHECK(rows == 22);
  CHECK(r.code == (all ? cli::kExitOk : cli::kExitChecksFailed));
  CHECK(manifest(dir)["status"] == (all ? "ok" : "checks_failed"));
}
