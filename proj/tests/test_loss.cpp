#include <cmath>
#include <vector>

#include "doctest.h"
#include "hjbpinn/error.hpp"
#include "hjbpinn/loss.hpp"
#include "hjbpinn/rng.hpp"

using namespace hjbpinn;

namespace {

NetworkParams random_net(Rng& rng, int k, int n, ActivationKind act) {
  std::vector<double> a(static_cast<std::size_t>(k));
  for (double& v : a) v = rng.normal(3.0, 1.0);
  NetworkParams p = make_network(k, n, act, a, 100.0);
  for (double& v : p.W1) v = rng.normal();
  for (double& v : p.w2) v = rng.normal();
  return p;
}

// Plain scalar-path model for the reference risk.
struct NetModel {
  const NetworkParams& p;
  NetDerivatives operator()(std::span<const double> x, double t) const { return input_derivatives(p, x, t); }
};

}  // namespace

TEST_CASE("zero-weight tanh network") {
  const auto prob = unit_cube_problem(2);
  const auto d = sample_dataset(prob, 30, 20, 40, 0.5, NoiseKind::Uniform, 1);
  const auto p = make_network(4, 2, ActivationKind::Tanh, {1.0, 2.0, 3.0, 4.0}, 1.0);
  const LossWeights w;
  const auto r = empirical_risk(p, d, w);
  double g2 = 0.0, y2 = 0.0;
  for (double g : d.init_g) g2 += g * g;
  for (double y : d.sup_y) y2 += y * y;
  CHECK(r.pde == 0.0);
  CHECK(r.init == doctest::Approx(g2 / 20.0).epsilon(1e-14));
  CHECK(r.sup == doctest::Approx(y2 / 40.0).epsilon(1e-14));
  CHECK(r.total == doctest::Approx(w.lambda0 * r.init + w.lambdas * r.sup).epsilon(1e-14));
}

TEST_CASE("exact solution has zero noiseless risk") {
  const auto prob = unit_cube_problem(2);
  const auto d = sample_dataset(prob, 100, 100, 100, 0.0, NoiseKind::Uniform, 2);
  const auto r = empirical_risk_of(ExactSolutionModel{}, d, LossWeights{});
  CHECK(r.pde < 1e-28);
  CHECK(r.init == 0.0);
  CHECK(r.sup == 0.0);
}

TEST_CASE("risk under noise centers on lambdas sigma2 for the exact solution") {
  const auto prob = unit_cube_problem(2);
  const auto d = sample_dataset(prob, 10, 10, 100000, 0.5, NoiseKind::Uniform, 3);
  const auto r = empirical_risk_of(ExactSolutionModel{}, d, LossWeights{});
  CHECK(r.sup == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("batched risk agrees with the scalar reference") {
  Rng rng(4);
  const auto prob = unit_cube_problem(2);
  const auto d = sample_dataset(prob, 64, 32, 48, 0.5, NoiseKind::Uniform, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_net(rng, 1 + trial % 9, 2, trial % 2 ? ActivationKind::Tanh : ActivationKind::Sigmoid);
    const auto a = empirical_risk(p, d, LossWeights{});
    const auto b = empirical_risk_of(NetModel{p}, d, LossWeights{});
    CHECK(a.pde == doctest::Approx(b.pde).epsilon(1e-12));
    CHECK(a.init == doctest::Approx(b.init).epsilon(1e-12));
    CHECK(a.sup == doctest::Approx(b.sup).epsilon(1e-12));
    CHECK(a.total == doctest::Approx(b.total).epsilon(1e-12));
  }
}

TEST_CASE("risk gradient matches finite differences") {
  Rng rng(6);
  const auto prob = unit_cube_problem(2);
  const auto d = sample_dataset(prob, 16, 8, 12, 0.5, NoiseKind::Uniform, 7);
  const LossWeights w;
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_net(rng, 1 + trial % 4, 2, trial % 2 ? ActivationKind::Tanh : ActivationKind::Sigmoid);
    const auto rg = risk_and_gradient(p, d, w);
    CHECK(rg.risk.total == empirical_risk(p, d, w).total);
    const auto g = risk_gradient(p, d, w);
    CHECK(g == rg.grad);
    const auto flat = flatten_weights(p);
    for (std::size_t j = 0; j < flat.size(); ++j) {
      auto q = p;
      auto wp = flat, wm = flat;
      wp[j] += h;
      wm[j] -= h;
      assign_weights(q, wp);
      const double fp = empirical_risk(q, d, w).total;
      assign_weights(q, wm);
      const double fd = (fp - empirical_risk(q, d, w).total) / (2 * h);
      CHECK(std::abs(fd - g[j]) <= 1e-4 * std::max({std::abs(fd), std::abs(g[j]), 1e-3}));
    }
  }
}

TEST_CASE("unsupervised form") {
  Rng rng(8);
  const auto prob = unit_cube_problem(2);
  const auto d = noisy_initial_dataset(prob, 16, 12, 0.5, NoiseKind::Uniform, 9);
  const LossWeights w{0.3, 0.0};
  auto p = random_net(rng, 3, 2, ActivationKind::Tanh);
  const auto r = empirical_risk_unsupervised(p, d, w);
  const auto ref = empirical_risk_of(NetModel{p}, d, w, RiskForm::Unsupervised);
  CHECK(r.total == doctest::Approx(ref.total).epsilon(1e-12));
  CHECK(r.sup == 0.0);
  const auto rg = risk_and_gradient(p, d, w, RiskForm::Unsupervised);
  const auto flat = flatten_weights(p);
  const double h = 1e-5;
  for (std::size_t j = 0; j < flat.size(); ++j) {
    auto q = p;
    auto wp = flat, wm = flat;
    wp[j] += h;
    wm[j] -= h;
    assign_weights(q, wp);
    const double fp = empirical_risk_unsupervised(q, d, w).total;
    assign_weights(q, wm);
    const double fd = (fp - empirical_risk_unsupervised(q, d, w).total) / (2 * h);
    CHECK(std::abs(fd - rg.grad[j]) <= 1e-4 * std::max({std::abs(fd), std::abs(rg.grad[j]), 1e-3}));
  }
  const auto labeled = sample_dataset(prob, 4, 4, 4, 0.5, NoiseKind::Uniform, 1);
  CHECK_THROWS_AS(empirical_risk_unsupervised(p, labeled, w), InvalidArgument);
}

TEST_CASE("input validation") {
  const auto prob = unit_cube_problem(2);
  const auto d = sample_dataset(prob, 4, 4, 4, 0.5, NoiseKind::Uniform, 1);
  const auto p3 = make_network(1, 3, ActivationKind::Tanh, {1.0}, 1.0);
  CHECK_THROWS_AS(empirical_risk(p3, d, LossWeights{}), DimensionError);
  CHECK_THROWS_AS(validate(LossWeights{0.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(validate(LossWeights{0.3, -1.0}), InvalidArgument);
  const auto empty = sample_dataset(prob, 0, 4, 4, 0.5, NoiseKind::Uniform, 1);
  const auto p2 = make_network(1, 2, ActivationKind::Tanh, {1.0}, 1.0);
  CHECK_THROWS_AS(empirical_risk(p2, empty, LossWeights{}), InvalidArgument);
}
