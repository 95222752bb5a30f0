#include "hjbpinn/activation.hpp"

#include <algorithm>
#include <cmath>

#include "hjbpinn/error.hpp"

namespace hjbpinn {

std::string_view to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Sigmoid:
      return "sigmoid";
    case ActivationKind::Tanh:
      return "tanh";
  }
  return "unknown";
}

ActivationKind parse_activation(std::string_view name) {
  if (name == "sigmoid") return ActivationKind::Sigmoid;
  if (name == "tanh") return ActivationKind::Tanh;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

namespace {

ActivationDerivs sigmoid_derivs(double x) {
  const double e = std::exp(-std::abs(x));
  const double inv = 1.0 / (1.0 + e);
  // s = sigma(x), c = 1 - sigma(x), both without cancellation.
  const double s = x >= 0.0 ? inv : e * inv;
  const double c = x >= 0.0 ? e * inv : inv;
  const double d1 = s * c;
  return {s, d1, d1 * (c - s), d1 * (1.0 - 6.0 * d1)};
}

ActivationDerivs tanh_derivs(double x) {
  const double ax = std::abs(x);
  const double e = std::exp(-2.0 * ax);
  const double inv = 1.0 / (1.0 + e);
  const double mag = -std::expm1(-2.0 * ax) * inv;
  const double t = x < 0.0 ? -mag : mag;
  const double d1 = 4.0 * e * inv * inv;  // sech^2
  return {t, d1, -2.0 * t * d1, d1 * (6.0 * t * t - 2.0)};
}

ActivationSlopeSup grid_sup(ActivationKind kind) {
  ActivationSlopeSup sup;
  constexpr long steps = 400000;  // spacing 1e-4 on [-20, 20]
  for (long i = 0; i <= steps; ++i) {
    const double x = -20.0 + 40.0 * static_cast<double>(i) / static_cast<double>(steps);
    const auto d = eval_derivatives(kind, x);
    sup.d1 = std::max(sup.d1, std::abs(d.d1));
    sup.d2 = std::max(sup.d2, std::abs(d.d2));
  }
  return sup;
}

}  // namespace

ActivationDerivs eval_derivatives(ActivationKind kind, double x) {
  return kind == ActivationKind::Sigmoid ? sigmoid_derivs(x) : tanh_derivs(x);
}

ActivationSlopeSup slope_sup(ActivationKind kind) {
  if (kind == ActivationKind::Sigmoid) {
    return {0.25, 1.0 / (6.0 * std::sqrt(3.0))};
  }
  static const ActivationSlopeSup tanh_sup = grid_sup(ActivationKind::Tanh);
  return tanh_sup;
}

BoundConstants bound_constants(ActivationKind kind, std::span<const double> a) {
  if (a.empty()) throw InvalidArgument("bound_constants: outer vector a is empty");
  double l1 = 0.0;
  double l2sq = 0.0;
  for (double v : a) {
    if (!std::isfinite(v)) throw InvalidArgument("bound_constants: non-finite entry in a");
    l1 += std::abs(v);
    l2sq += v * v;
  }
  const double l2 = std::sqrt(l2sq);
  const auto sup = slope_sup(kind);
  return {l1, sup.d1 * l2, sup.d2 * l2};
}

}  // namespace hjbpinn
