#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "hjbpinn/data.hpp"
#include "hjbpinn/error.hpp"
#include "hjbpinn/rng.hpp"

using namespace hjbpinn;

namespace {

bool same(const Dataset& a, const Dataset& b) {
  return a.n == b.n && a.colloc_x == b.colloc_x && a.colloc_t == b.colloc_t && a.init_x == b.init_x &&
         a.init_g == b.init_g && a.init_y == b.init_y && a.sup_x == b.sup_x && a.sup_t == b.sup_t &&
         a.sup_y == b.sup_y && a.sup_clean == b.sup_clean && a.sup_noise == b.sup_noise && a.sigma2 == b.sigma2 &&
         a.noise == b.noise && a.M == b.M && a.G == b.G && a.seed == b.seed;
}

double sample_variance(NoiseKind kind, double sigma2, int draws, std::uint64_t seed) {
  Rng rng(seed);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double z = sample_noise(kind, sigma2, rng);
    s += z;
    s2 += z * z;
  }
  const double m = s / draws;
  return s2 / draws - m * m;
}

}  // namespace

TEST_CASE("noiseless labels equal the exact solution") {
  const auto prob = unit_cube_problem(2);
  const auto d = sample_dataset(prob, 10, 10, 100, 0.0, NoiseKind::Uniform, 3);
  for (std::size_t i = 0; i < d.n_sup(); ++i) {
    CHECK(d.sup_noise[i] == 0.0);
    CHECK(d.sup_y[i] == prob.exact(d.sup_point(i), d.sup_t[i]));
  }
}

TEST_CASE("noise variance") {
  CHECK(noise_bound(NoiseKind::Uniform, 0.5) == doctest::Approx(std::sqrt(1.5)));
  const double vu = sample_variance(NoiseKind::Uniform, 0.5, 1000000, 1);
  CHECK(std::abs(vu - 0.5) <= 0.005);
  const double vg = sample_variance(NoiseKind::TruncatedGaussian, 0.5, 1000000, 2);
  CHECK(std::abs(vg - 0.5) <= 0.005);
  Rng rng(3);
  for (int i = 0; i < 100000; ++i) {
    CHECK(std::abs(sample_noise(NoiseKind::Uniform, 0.5, rng)) <= noise_bound(NoiseKind::Uniform, 0.5));
    CHECK(std::abs(sample_noise(NoiseKind::TruncatedGaussian, 0.5, rng)) <=
          noise_bound(NoiseKind::TruncatedGaussian, 0.5));
  }
}

TEST_CASE("dataset invariants") {
  const auto prob = unit_cube_problem(2);
  for (auto kind : {NoiseKind::Uniform, NoiseKind::TruncatedGaussian}) {
    const auto d = sample_dataset(prob, 50, 40, 500, 0.5, kind, 9);
    CHECK(d.n_colloc() == 50);
    CHECK(d.n_init() == 40);
    CHECK(d.n_sup() == 500);
    CHECK(d.M == std::ceil(d.M));
    for (std::size_t i = 0; i < d.n_sup(); ++i) {
      CHECK(d.sup_y[i] == d.sup_clean[i] + d.sup_noise[i]);
      CHECK(std::abs(d.sup_y[i]) <= d.M);
      CHECK(std::abs(d.sup_noise[i]) <= 2.0 * d.M);
      for (double v : d.sup_point(i)) CHECK((v >= 0.0 && v <= 1.0));
      CHECK((d.sup_t[i] >= 0.0 && d.sup_t[i] <= 1.0));
    }
    for (std::size_t j = 0; j < d.n_init(); ++j) CHECK(std::abs(d.init_g[j]) <= d.G);
  }
}

TEST_CASE("same seed gives the same dataset") {
  const auto prob = symmetric_problem(3, 1.0, 1.0);
  const auto a = sample_dataset(prob, 20, 20, 20, 0.5, NoiseKind::Uniform, 42);
  const auto b = sample_dataset(prob, 20, 20, 20, 0.5, NoiseKind::Uniform, 42);
  CHECK(same(a, b));
  const auto c = sample_dataset(prob, 20, 20, 20, 0.5, NoiseKind::Uniform, 43);
  CHECK_FALSE(same(a, c));
  // Streams are independent: changing N_s leaves collocation points untouched.
  const auto e = sample_dataset(prob, 20, 20, 5, 0.5, NoiseKind::Uniform, 42);
  CHECK(e.colloc_x == a.colloc_x);
  CHECK(e.init_x == a.init_x);
}

TEST_CASE("noisy initial data") {
  const auto prob = unit_cube_problem(2);
  const auto d = noisy_initial_dataset(prob, 10, 200, 0.5, NoiseKind::Uniform, 1);
  CHECK(d.n_sup() == 0);
  REQUIRE(d.init_labeled());
  for (std::size_t j = 0; j < d.n_init(); ++j) {
    CHECK(std::abs(d.init_y[j] - d.init_g[j]) <= noise_bound(NoiseKind::Uniform, 0.5) + 1e-15);
    CHECK(std::abs(d.init_y[j]) <= d.G);
  }
}

TEST_CASE("jsonl round trip") {
  const auto prob = unit_cube_problem(2);
  for (const auto& d : {sample_dataset(prob, 7, 5, 9, 0.5, NoiseKind::TruncatedGaussian, 4),
                        noisy_initial_dataset(prob, 3, 4, 0.25, NoiseKind::Uniform, 5)}) {
    std::stringstream ss;
    write_jsonl(d, ss);
    const auto back = read_jsonl(ss);
    CHECK(same(d, back));
  }
  std::stringstream bad("{\"kind\": \"colloc\"}\n");
  CHECK_THROWS_AS(read_jsonl(bad), InvalidArgument);
  std::stringstream junk("not json\n");
  CHECK_THROWS_AS(read_jsonl(junk), InvalidArgument);
}

TEST_CASE("argument errors") {
  auto prob = unit_cube_problem(2);
  CHECK_THROWS_AS(sample_dataset(prob, 1, 1, 1, -0.1, NoiseKind::Uniform, 0), InvalidArgument);
  prob.has_exact = false;
  CHECK_THROWS_AS(sample_dataset(prob, 1, 1, 1, 0.5, NoiseKind::Uniform, 0), InvalidArgument);
  CHECK_NOTHROW(sample_dataset(prob, 1, 1, 0, 0.5, NoiseKind::Uniform, 0));
  CHECK_THROWS_AS(parse_noise_kind("laplace"), InvalidArgument);
}
