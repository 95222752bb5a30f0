#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "hjbpinn/bounds.hpp"
#include "hjbpinn/error.hpp"
#include "hjbpinn/verify.hpp"

using namespace hjbpinn;

TEST_CASE("Hoeffding bound arithmetic") {
  CHECK(hoeffding_event_bound(288.0, 1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(hoeffding_event_bound(100.0, 0.6, 2.0) == doctest::Approx(std::exp(-36.0 / 4608.0)).epsilon(1e-15));
  CHECK(hoeffding_ci99(10000) == doctest::Approx(std::sqrt(std::log(100.0) / 20000.0)));
}

TEST_CASE("first Hoeffding event") {
  // sigma2 - eta/6 < 0 cannot be reached by a mean of squares.
  const auto impossible = check_hoeffding_e1(100, 0.5, 6.0, 3.0, NoiseKind::Uniform, 10000, 1);
  CHECK(impossible.hits == 0);
  CHECK(impossible.pass());
  const auto e = check_hoeffding_e1(100, 0.5, 0.6, 3.0, NoiseKind::Uniform, 100000, 2);
  CHECK(e.trials == 100000);
  CHECK(e.freq == static_cast<double>(e.hits) / 100000.0);
  CHECK(e.bound == doctest::Approx(hoeffding_event_bound(100, 0.6, 3.0)));
  CHECK(e.pass());
  const auto g = check_hoeffding_e1(100, 0.5, 0.6, 3.0, NoiseKind::TruncatedGaussian, 20000, 3);
  CHECK(g.pass());
}

TEST_CASE("second Hoeffding event") {
  const auto prob = unit_cube_problem(2);
  const auto quiet = check_hoeffding_e2(prob, 100, 0.0, 0.3, 5.0, NoiseKind::Uniform, 10000, 1);
  CHECK(quiet.hits == 0);
  const auto e = check_hoeffding_e2(prob, 50, 0.5, 0.3, 5.0, NoiseKind::Uniform, 20000, 2);
  CHECK(e.pass());
  // Symmetric noise: the statistic is centered, so the event sits near probability 1/2 at most.
  CHECK(e.freq < 0.5);
}

TEST_CASE("estimates are reproducible per seed") {
  const auto a = check_hoeffding_e1(50, 0.5, 0.3, 3.0, NoiseKind::Uniform, 10000, 9);
  const auto b = check_hoeffding_e1(50, 0.5, 0.3, 3.0, NoiseKind::Uniform, 10000, 9);
  CHECK(a.hits == b.hits);
  const auto c = check_hoeffding_e1(50, 0.5, 0.3, 3.0, NoiseKind::Uniform, 10000, 10);
  CHECK(to_json(c)["trials"] == 10000);
}

TEST_CASE("cover event") {
  const auto prob = unit_cube_problem(1);
  CoverEventConfig cfg;
  cfg.seed = 4;
  const auto e = check_cover_event(prob, cfg);
  CHECK(e.trials == 10000);
  CHECK(e.pass());
  cfg.sigma2 = 0.0;
  cfg.trials = 2000;
  const auto quiet = check_cover_event(prob, cfg);
  CHECK(quiet.hits == 0);
  cfg.k = 4;
  cfg.eta = 0.01;
  CHECK_THROWS_AS(check_cover_event(prob, cfg), InvalidArgument);
}

TEST_CASE("perturbation bound on random draws") {
  const auto prob = unit_cube_problem(2);
  const auto d = sample_dataset(prob, 32, 32, 32, 0.5, NoiseKind::Uniform, 5);
  PerturbationCheckConfig cfg;
  cfg.draws.trials = 1000;
  cfg.draws.seed = 6;
  const auto e = check_perturbation_bound(prob, d, LossWeights{}, cfg);
  CHECK(e.hits == 0);
  CHECK(e.bound == 0.0);
  CHECK(e.worst_ratio < 1.0);
  cfg.adversarial_steps = 5;
  cfg.draws.trials = 100;
  const auto adv = check_perturbation_bound(prob, d, LossWeights{}, cfg);
  CHECK(adv.hits == 0);
}

TEST_CASE("perturbed pairs respect the ball and the radius") {
  PerturbationDraws law;
  law.seed = 3;
  for (std::int64_t i = 0; i < 2000; ++i) {
    const auto pair = draw_perturbed_pair(law, i);
    CHECK(weight_norm(pair.p) <= pair.p.radius * (1 + 1e-12));
    const auto a = flatten_weights(pair.p), b = flatten_weights(pair.shifted);
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    CHECK(std::sqrt(s) <= pair.eta / 2.0 * (1 + 1e-12));
    CHECK((pair.p.k >= law.k_min && pair.p.k <= law.k_max));
    CHECK((pair.p.radius >= law.W_min && pair.p.radius <= law.W_max));
  }
}

TEST_CASE("derivative inequalities at zero perturbation") {
  auto p = make_network(1, 1, ActivationKind::Sigmoid, {1.0}, 1.0);
  p.W1 = {0.6};
  p.w2 = {-0.3};
  const std::vector<double> x{0.4};
  const auto res = check_derivative_inequalities(p, p, x, 0.5, 0.0);
  CHECK(res[0].lhs == 0.0);
  CHECK(res[0].ok);
  const double C3 = 1.0 / (6.0 * std::sqrt(3.0));
  CHECK(res[5].rhs == doctest::Approx(C3 * 1 * 1 * 2.0 * 1.0).epsilon(1e-15));
  for (const auto& r : res) CHECK(r.ok);
}

TEST_CASE("Laplacian-difference inequality fails on a saturated sigmoid unit") {
  // One unit at the edge of the ball, shifted along the time weight.
  auto p = make_network(1, 1, ActivationKind::Sigmoid, {1.0}, 10.0);
  p.W1 = {10.0};
  p.w2 = {0.0};
  auto q = p;
  q.w2 = {0.05};
  const std::vector<double> x{0.2292};
  const double t = 1.0, eta = 0.1;

  auto sig2 = [](double z) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 - s) * (1.0 - 2.0 * s);
  };
  const double lhs = 100.0 * (sig2(10.0 * 0.2292 + 0.05) - sig2(10.0 * 0.2292));
  const double rhs = 1.0 / (6.0 * std::sqrt(3.0)) * (eta * 10.0 + 0.05 * 0.05);
  CHECK(lhs > rhs);

  const auto res = check_derivative_inequalities(p, q, x, t, eta);
  CHECK(res[4].name == "p5_laplacian_difference");
  CHECK(res[4].lhs == doctest::Approx(lhs).epsilon(1e-10));
  CHECK(res[4].rhs == doctest::Approx(rhs).epsilon(1e-14));
  CHECK_FALSE(res[4].ok);
  CHECK(res[5].ok);
}

TEST_CASE("derivative inequalities reject out-of-range inputs") {
  auto p = make_network(1, 1, ActivationKind::Sigmoid, {1.0}, 1.0);
  p.W1 = {2.0};
  const std::vector<double> x{0.1};
  CHECK_THROWS_AS(check_derivative_inequalities(p, p, x, 0.1, 0.1), InvalidArgument);
  p.W1 = {0.5};
  auto q = p;
  q.W1 = {0.7};
  CHECK_THROWS_AS(check_derivative_inequalities(p, q, x, 0.1, 0.1), InvalidArgument);
}

TEST_CASE("random derivative-inequality suite reports every inequality") {
  PerturbationDraws law;
  law.trials = 2000;
  law.seed = 7;
  const auto all = check_derivative_inequalities_random(unit_cube_problem(2), law);
  CHECK(all[0].name == "p1_dt_difference");
  CHECK(all[5].name == "p6_laplacian_sum");
  for (std::size_t j : {0u, 1u, 2u, 3u, 5u}) CHECK(all[j].hits == 0);
}

TEST_CASE("gradient audit and closed-form residual") {
  const auto g = check_gradients(30, 1);
  CHECK(g.instances == 30);
  CHECK(g.max_rel() < 1e-4);
  CHECK(g.max_exact_residual <= 1e-8);
  CHECK(to_json(g)["pass"] == true);
  for (int n : {1, 2, 10}) {
    const auto e = check_exact_residual(n, 1.0, 1.0, 10000, 3);
    CHECK(e.hits == 0);
    CHECK(e.worst_ratio <= 1e-8);
  }
  CHECK(relative_error(1.0, 1.0 + 1e-9) == doctest::Approx(1e-9).epsilon(1e-6));
  CHECK(relative_error(0.0, 1e-12, 1e-8) == doctest::Approx(1e-4));
}
