#include "hjbpinn/hjb.hpp"

#include <algorithm>
#include <cmath>

#include "hjbpinn/error.hpp"

namespace hjbpinn {

namespace {

double norm_sq(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void check_time(double t) {
  if (!(t >= 0.0)) throw InvalidArgument("exact solution requires t >= 0");
}

}  // namespace

void validate(const HjbProblem& problem) {
  if (problem.n < 1) throw InvalidArgument("problem dimension n must be >= 1");
  if (static_cast<int>(problem.lower.size()) != problem.n || static_cast<int>(problem.upper.size()) != problem.n) {
    throw DimensionError("box bounds must have n entries");
  }
  for (int i = 0; i < problem.n; ++i) {
    const auto is = static_cast<std::size_t>(i);
    if (!(problem.upper[is] > problem.lower[is])) throw InvalidArgument("box upper bound must exceed lower bound");
  }
  if (!(problem.T > 0.0)) throw InvalidArgument("time horizon T must be positive");
  if (!(problem.B() > 0.0)) throw InvalidArgument("box half-width B must be positive");
}

HjbProblem symmetric_problem(int n, double B, double T) {
  HjbProblem p;
  p.n = n;
  p.lower.assign(static_cast<std::size_t>(std::max(n, 0)), -B);
  p.upper.assign(static_cast<std::size_t>(std::max(n, 0)), B);
  p.T = T;
  validate(p);
  return p;
}

HjbProblem unit_cube_problem(int n) {
  HjbProblem p;
  p.n = n;
  p.lower.assign(static_cast<std::size_t>(std::max(n, 0)), 0.0);
  p.upper.assign(static_cast<std::size_t>(std::max(n, 0)), 1.0);
  p.T = 1.0;
  validate(p);
  return p;
}

double HjbProblem::B() const {
  double b = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) b = std::max({b, std::abs(lower[i]), std::abs(upper[i])});
  return b;
}

double HjbProblem::max_spatial_norm() const {
  double s = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const double m = std::max(std::abs(lower[i]), std::abs(upper[i]));
    s += m * m;
  }
  return std::sqrt(s);
}

double HjbProblem::initial_value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n) throw DimensionError("initial condition evaluated at wrong dimension");
  return norm_sq(x);
}

double HjbProblem::exact(std::span<const double> x, double t) const {
  if (!has_exact) throw InvalidArgument("problem has no closed-form solution");
  if (static_cast<int>(x.size()) != n) throw DimensionError("exact solution evaluated at wrong dimension");
  return exact_solution(x, t);
}

NetDerivatives HjbProblem::exact_derivs(std::span<const double> x, double t) const {
  if (!has_exact) throw InvalidArgument("problem has no closed-form solution");
  if (static_cast<int>(x.size()) != n) throw DimensionError("exact solution evaluated at wrong dimension");
  return exact_derivatives(x, t);
}

double HjbProblem::exact_sup_bound() const {
  if (!has_exact) throw InvalidArgument("problem has no closed-form solution");
  // Both terms of the solution are nonnegative and bounded separately.
  const double r = max_spatial_norm();
  return r * r + 0.5 * static_cast<double>(n) * std::log1p(4.0 * T);
}

double pde_residual(const NetDerivatives& d) {
  double g2 = 0.0;
  for (double v : d.grad_x) g2 += v * v;
  return d.dt - d.laplacian + g2;
}

double exact_solution(std::span<const double> x, double t) {
  check_time(t);
  const double s = 1.0 + 4.0 * t;
  return norm_sq(x) / s + 0.5 * static_cast<double>(x.size()) * std::log1p(4.0 * t);
}

NetDerivatives exact_derivatives(std::span<const double> x, double t) {
  check_time(t);
  const double s = 1.0 + 4.0 * t;
  const double n = static_cast<double>(x.size());
  NetDerivatives d;
  d.value = exact_solution(x, t);
  d.dt = -4.0 * norm_sq(x) / (s * s) + 2.0 * n / s;
  d.grad_x.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d.grad_x[i] = 2.0 * x[i] / s;
  d.laplacian = 2.0 * n / s;
  return d;
}

}  // namespace hjbpinn
