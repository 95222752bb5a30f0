#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjbpinn/network.hpp"

namespace hjbpinn {

enum class InitialCondition { Quadratic };  // g(x) = ||x||^2

/// HJB problem  d_t u - lap u + ||grad u||^2 = 0  on a spatial box x [0, T],
/// with u(x, 0) = g(x).
///
/// The box has independent lower/upper bounds per axis, so both [-B, B]^n and
/// [0, 1]^n are representable. Bound formulas read B as the largest absolute
/// coordinate bound.
struct HjbProblem {
  int n = 2;
  std::vector<double> lower;
  std::vector<double> upper;
  double T = 1.0;
  InitialCondition g = InitialCondition::Quadratic;
  /// Closed-form solution available (only for the quadratic initial condition).
  bool has_exact = true;

  double B() const;
  /// max ||x|| over the box.
  double max_spatial_norm() const;
  double initial_value(std::span<const double> x) const;
  /// Throws InvalidArgument when has_exact is false or t < 0.
  double exact(std::span<const double> x, double t) const;
  NetDerivatives exact_derivs(std::span<const double> x, double t) const;
  /// An upper bound on |u| over the box x [0, T] (exact solution required).
  double exact_sup_bound() const;
};

void validate(const HjbProblem& problem);

/// [-B, B]^n x [0, T].
HjbProblem symmetric_problem(int n, double B, double T);
/// [0, 1]^n x [0, 1], the benchmark setting of the width sweep.
HjbProblem unit_cube_problem(int n);

/// d_t u - lap u + ||grad u||^2.
double pde_residual(const NetDerivatives& d);

/// u(x, t) = ||x||^2 / (1 + 4t) + (n/2) log(1 + 4t); n is taken from x.size().
double exact_solution(std::span<const double> x, double t);

/// Analytic derivatives of exact_solution.
NetDerivatives exact_derivatives(std::span<const double> x, double t);

}  // namespace hjbpinn
