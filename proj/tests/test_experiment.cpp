#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "hjbpinn/experiment.hpp"
#include "hjbpinn/io.hpp"

using namespace hjbpinn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hjbpinn_test_experiment_" + name);
  fs::remove_all(dir);
  return dir;
}

SweepRecord planted(int k, std::uint64_t seed, double accuracy, double sigma2 = 0.5) {
  SweepRecord r;
  r.k = k;
  r.d_N = 3 * k;
  r.seed = seed;
  r.accuracy = accuracy;
  r.final_risk = {0.0, 0.0, 0.0, 1.0 - accuracy};
  r.crossed_sigma2 = r.final_risk.total < sigma2;
  return r;
}

SweepConfig tiny_sweep() {
  SweepConfig c = desk_preset();
  c.widths = {1, 2, 3};
  c.seeds = {1, 2};
  c.train.steps = 40;
  c.train.record_every = 10;
  c.train.lr = 1e-2;
  c.N_r = 32;
  c.N_0 = 16;
  c.N_s = 32;
  return c;
}

}  // namespace

TEST_CASE("presets") {
  CHECK(desk_preset().train.steps == 5000);
  CHECK(paper_preset().train.steps == 20000);
  const auto d = desk_preset();
  CHECK(d.widths == std::vector<int>{1, 2, 4, 8, 16, 32, 64, 128, 256});
  CHECK(d.seeds.size() == 3);
  CHECK(d.N_s == 3276);
  CHECK(d.weights.lambdas == 0.5);
  CHECK(d.weights.lambda0 == 0.3);
  CHECK(d.sigma2 == 0.5);
  CHECK(d.train.lr == 1e-3);
  CHECK(d.train.record_every == 100);
  CHECK(d.problem.n == 2);
}

TEST_CASE("config validation") {
  auto c = tiny_sweep();
  c.widths = {2, 2};
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c.widths = {};
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = tiny_sweep();
  c.seeds.clear();
  CHECK_THROWS_AS(validate(c), InvalidArgument);
}

TEST_CASE("planted square-root law is recovered") {
  std::vector<SweepRecord> recs;
  for (int k : {1, 2, 4, 8, 16}) recs.push_back(planted(k, 1, 0.1 * std::sqrt(3.0 * k)));
  const auto s = analyze_sweep(recs, 0.5);
  // Strictly increasing, so the plateau starts at the last width.
  CHECK(s.plateau_d_N == 48);
  CHECK(std::abs(s.sqrt_fit.slope - 0.1) < 1e-9);
  CHECK(std::abs(s.sqrt_fit.intercept) < 1e-9);
  CHECK(s.sqrt_fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.spearman == doctest::Approx(1.0));
}

TEST_CASE("no crossing is reported as none") {
  std::vector<SweepRecord> recs{planted(1, 1, 0.1), planted(2, 1, 0.2), planted(4, 1, 0.3)};
  const auto s = analyze_sweep(recs, 0.5);
  CHECK_FALSE(s.smallest_crossing_d_N);
  CHECK(to_json(s)["smallest_crossing_d_N"] == "none");
  recs.push_back(planted(8, 1, 0.6));
  CHECK(*analyze_sweep(recs, 0.5).smallest_crossing_d_N == 24);
}

TEST_CASE("plateau boundary and per-width aggregation") {
  std::vector<SweepRecord> recs;
  const double acc[] = {0.1, 0.3, 0.8, 0.995, 1.0, 0.97};
  int k = 1;
  for (double a : acc) {
    recs.push_back(planted(k, 1, a - 0.01));
    recs.push_back(planted(k, 2, a + 0.01));
    k *= 2;
  }
  const auto s = analyze_sweep(recs, 0.5);
  REQUIRE(s.widths.size() == 6);
  CHECK(s.widths[2].mean_accuracy == doctest::Approx(0.8));
  CHECK(s.widths[2].median_accuracy == doctest::Approx(0.8));
  CHECK(s.widths[2].runs == 2);
  // 0.995 is within 1% of the best mean 1.0.
  CHECK(s.plateau_d_N == 3 * 8);
  CHECK(s.sqrt_fit.points == 4);
  CHECK(s.spearman == doctest::Approx(1.0));
}

TEST_CASE("failed runs are counted and excluded") {
  std::vector<SweepRecord> recs{planted(1, 1, 0.1), planted(2, 1, 0.2), planted(4, 1, 0.3)};
  SweepRecord bad = planted(4, 2, 0.0);
  bad.failed = true;
  bad.accuracy = NAN;
  recs.push_back(bad);
  const auto s = analyze_sweep(recs, 0.5);
  CHECK(s.failed == 1);
  CHECK(s.widths.back().runs == 1);
  CHECK_THROWS_AS(analyze_sweep({planted(1, 1, 0.1)}, 0.5), InvalidArgument);
}

TEST_CASE("rank correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  // Ties take average ranks: ranks of y are (1.5, 1.5, 3), of x (1, 2, 3).
  CHECK(spearman({1, 2, 3}, {5, 5, 7}) == doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK(std::isnan(spearman({1}, {1})));
  CHECK(std::isnan(spearman({1, 2}, {3, 3})));
}

TEST_CASE("sweep of one equals a direct training run") {
  auto c = tiny_sweep();
  c.widths = {3};
  c.seeds = {5};
  const auto recs = run_sweep(c);
  REQUIRE(recs.size() == 1);
  const auto d = sample_dataset(c.problem, c.N_r, c.N_0, c.N_s, c.sigma2, c.noise, c.data_seed);
  const auto tr = train(init_network(3, 2, run_seed(5, 3), c.activation), d, c.weights, c.train);
  CHECK(recs[0].final_risk.total == tr.points.back().risk.total);
  CHECK(recs[0].accuracy == tr.points.back().accuracy);
  CHECK(recs[0].d_N == 9);
  CHECK(recs[0].crossed_sigma2 == (recs[0].final_risk.total < c.sigma2));
  CHECK(recs[0].trace.size() == tr.points.size());
}

TEST_CASE("sweep files are identical for any worker count") {
  auto c = tiny_sweep();
  const auto d1 = scratch_dir("jobs1");
  const auto d4 = scratch_dir("jobs4");
  c.out_dir = d1;
  c.jobs = 1;
  const auto r1 = run_sweep(c);
  c.out_dir = d4;
  c.jobs = 4;
  const auto r4 = run_sweep(c);
  REQUIRE(r1.size() == 6);
  CHECK(read_file(d1 / "sweep.csv") == read_file(d4 / "sweep.csv"));
  for (const auto& r : r1) CHECK(read_file(d1 / r.trace_path) == read_file(d4 / r.trace_path));
  // Width-major order.
  CHECK(r4[0].k == 1);
  CHECK(r4[1].k == 1);
  CHECK(r4[2].k == 2);

  const auto back = read_sweep_dir(d1);
  REQUIRE(back.size() == r1.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].k == r1[i].k);
    CHECK(back[i].seed == r1[i].seed);
    CHECK(back[i].final_risk.total == r1[i].final_risk.total);
    CHECK(back[i].accuracy == r1[i].accuracy);
    CHECK(back[i].crossed_sigma2 == r1[i].crossed_sigma2);
    REQUIRE(back[i].trace.size() == r1[i].trace.size());
    for (std::size_t j = 0; j < back[i].trace.size(); ++j) {
      CHECK(back[i].trace[j].risk.pde == r1[i].trace[j].risk.pde);
      CHECK(back[i].trace[j].accuracy == r1[i].trace[j].accuracy);
    }
  }
  fs::remove_all(d1);
  fs::remove_all(d4);
}

TEST_CASE("independent datasets per run") {
  auto c = tiny_sweep();
  c.widths = {2};
  c.seeds = {1, 2};
  c.shared_dataset = false;
  const auto recs = run_sweep(c);
  const auto d = sample_dataset(c.problem, c.N_r, c.N_0, c.N_s, c.sigma2, c.noise, run_seed(2, 2));
  const auto tr = train(init_network(2, 2, run_seed(2, 2), c.activation), d, c.weights, c.train);
  CHECK(recs[1].final_risk.total == tr.points.back().risk.total);
}

TEST_CASE("figure data") {
  auto c = tiny_sweep();
  c.widths = {2};
  c.seeds = {1};
  const auto recs = run_sweep(c);
  const auto dir = scratch_dir("fig1");
  emit_fig1_data(recs, 0.5, dir / "fig1.csv", dir / "fig1.svg");
  CHECK(fs::exists(dir / "fig1.svg"));
  CHECK(read_file(dir / "fig1.svg").find("<svg") == 0);
  const auto pts = read_fig1_csv(dir / "fig1.csv");
  // Trace at steps 0, 10, 20, 30 plus the final point at step 40.
  REQUIRE(pts.size() == 5);
  int finals = 0;
  for (const auto& p : pts) finals += p.is_final ? 1 : 0;
  CHECK(finals == 1);
  CHECK(pts.back().is_final);
  CHECK(pts.back().step == 40);
  CHECK(pts.back().accuracy == recs[0].accuracy);
  const auto expected = fig1_points(recs);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].d_N == expected[i].d_N);
    CHECK(pts[i].accuracy == expected[i].accuracy);
    CHECK(pts[i].step == expected[i].step);
  }
  const std::string csv = read_file(dir / "fig1.csv");
  CHECK(csv.rfind("d_N,accuracy,is_final,step,k,seed,reference\n", 0) == 0);
  CHECK(csv.find(",0.5\n") != std::string::npos);
  CHECK_THROWS_AS(emit_fig1_data({}, 0.5, dir / "x.csv"), InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("sweep csv schema") {
  std::ostringstream os;
  write_sweep_csv({planted(2, 7, 0.75)}, os);
  CHECK(os.str() == "k,d_N,seed,pde_term,init_term,sup_term,total,accuracy,crossed_sigma2,status,trace_path\n"
                    "2,6,7,0,0,0,0.25,0.75,1,ok,\n");
}
