#pragma once

#include <span>
#include <string>
#include <string_view>

namespace hjbpinn {

enum class ActivationKind { Sigmoid, Tanh };

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation(std::string_view name);

/// sigma and its first three derivatives at one point.
struct ActivationDerivs {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

/// Closed-form evaluation. Accurate in the saturated tails: the complementary
/// quantities (1 - sigmoid, 1 - tanh^2) are formed from exp(-|x|) directly.
ActivationDerivs eval_derivatives(ActivationKind kind, double x);

/// Bounds for f(z) = <a, sigma(z)>: |f| <= c1, ||grad f|| <= c2, ||Hess f||_F <= c3.
struct BoundConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

/// sup |sigma'| and sup |sigma''| over the real line.
struct ActivationSlopeSup {
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Sigmoid: closed form (1/4, 1/(6 sqrt 3)). Tanh: maximized on a grid of
/// spacing 1e-4 over [-20, 20]; the analytic values are 1 and 4/(3 sqrt 3).
ActivationSlopeSup slope_sup(ActivationKind kind);

/// Throws InvalidArgument for an empty or non-finite outer vector.
BoundConstants bound_constants(ActivationKind kind, std::span<const double> a);

}  // namespace hjbpinn
