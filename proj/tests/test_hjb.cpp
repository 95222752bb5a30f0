#include <cmath>
#include <vector>

#include "doctest.h"
#include "hjbpinn/error.hpp"
#include "hjbpinn/hjb.hpp"
#include "hjbpinn/rng.hpp"

using namespace hjbpinn;

TEST_CASE("exact solution values") {
  const std::vector<double> x{1.0, 2.0};
  CHECK(exact_solution(x, 0.0) == 5.0);
  // 5 / 5 + (2/2) log 5
  CHECK(exact_solution(x, 1.0) == doctest::Approx(1.0 + std::log(5.0)).epsilon(1e-15));
  const std::vector<double> zero{0.0, 0.0, 0.0};
  CHECK(exact_solution(zero, 0.0) == 0.0);
  CHECK_THROWS_AS(exact_solution(x, -0.1), InvalidArgument);
}

TEST_CASE("exact derivatives match finite differences") {
  Rng rng(1);
  const double h = 1e-5;
  for (int n : {1, 2, 5}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (double& v : x) v = rng.uniform(-2.0, 2.0);
      const double t = rng.uniform(0.1, 1.0);
      const auto d = exact_derivatives(x, t);
      CHECK(std::abs((exact_solution(x, t + h) - exact_solution(x, t - h)) / (2 * h) - d.dt) < 1e-7);
      for (int i = 0; i < n; ++i) {
        auto xp = x, xm = x;
        xp[static_cast<std::size_t>(i)] += h;
        xm[static_cast<std::size_t>(i)] -= h;
        const double fd = (exact_solution(xp, t) - exact_solution(xm, t)) / (2 * h);
        CHECK(std::abs(fd - d.grad_x[static_cast<std::size_t>(i)]) < 1e-7);
      }
    }
  }
}

TEST_CASE("closed form solves the equation") {
  Rng rng(2);
  for (int n : {1, 2, 10}) {
    for (int trial = 0; trial < 10000; ++trial) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      const auto d = exact_derivatives(x, rng.uniform());
      double g2 = 0.0;
      for (double v : d.grad_x) g2 += v * v;
      const double scale = std::abs(d.dt) + std::abs(d.laplacian) + g2;
      CHECK(std::abs(pde_residual(d)) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("problem boxes") {
  const auto cube = unit_cube_problem(2);
  CHECK(cube.B() == 1.0);
  CHECK(cube.max_spatial_norm() == doctest::Approx(std::sqrt(2.0)));
  CHECK(cube.T == 1.0);
  const std::vector<double> x{0.5, 0.5};
  CHECK(cube.initial_value(x) == 0.5);
  CHECK(cube.exact(x, 0.0) == cube.initial_value(x));
  CHECK(cube.exact_sup_bound() == doctest::Approx(2.0 + std::log(5.0)));

  const auto sym = symmetric_problem(3, 2.0, 0.5);
  CHECK(sym.B() == 2.0);
  CHECK(sym.lower == std::vector<double>{-2.0, -2.0, -2.0});

  CHECK_THROWS_AS(symmetric_problem(2, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(symmetric_problem(2, 1.0, 0.0), InvalidArgument);
  CHECK_THROWS_AS(unit_cube_problem(0), InvalidArgument);
  CHECK_THROWS_AS(cube.exact(std::vector<double>{1.0}, 0.0), DimensionError);

  auto no_exact = cube;
  no_exact.has_exact = false;
  CHECK_THROWS_AS(no_exact.exact(x, 0.0), InvalidArgument);
}
