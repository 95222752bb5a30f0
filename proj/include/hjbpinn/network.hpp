#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hjbpinn/activation.hpp"

namespace hjbpinn {

/// h_w(x, t) = <a, sigma(W1 x + w2 t)> with trainable (W1, w2) and frozen a.
///
/// Trainable weights flatten as W1 row-major followed by w2; every gradient,
/// cover and projection in the library uses that order.
struct NetworkParams {
  int k = 0;
  int n = 0;
  ActivationKind activation = ActivationKind::Tanh;
  std::vector<double> W1;  // k x n, row-major
  std::vector<double> w2;  // k
  std::vector<double> a;   // k, frozen
  double radius = 1.0;     // weight-ball radius W

  std::size_t d_N() const { return static_cast<std::size_t>(k) * static_cast<std::size_t>(n + 1); }

  double& w1(int p, int i) { return W1[static_cast<std::size_t>(p * n + i)]; }
  double w1(int p, int i) const { return W1[static_cast<std::size_t>(p * n + i)]; }
};

/// Zero trainable weights; validates shapes and a.
NetworkParams make_network(int k, int n, ActivationKind activation, std::vector<double> a, double radius);

void validate(const NetworkParams& p);

std::vector<double> flatten_weights(const NetworkParams& p);
void assign_weights(NetworkParams& p, std::span<const double> flat);
double weight_norm(const NetworkParams& p);

struct NetDerivatives {
  double value = 0.0;
  double dt = 0.0;
  std::vector<double> grad_x;
  double laplacian = 0.0;
};

/// dL/d(value), dL/d(dt), dL/d(grad_x), dL/d(laplacian) at one point.
struct DerivAdjoints {
  double value = 0.0;
  double dt = 0.0;
  std::vector<double> grad_x;
  double laplacian = 0.0;
};

struct PointAdjoint {
  std::vector<double> x;
  double t = 0.0;
  DerivAdjoints adj;
};

// Scalar reference evaluation. The batched fast path lives in kernels.hpp.

double forward(const NetworkParams& p, std::span<const double> x, double t);

/// With z = W1 x + w2 t and g = a * sigma'(z):
///   dt = <w2, g>, grad_x = W1^T g, laplacian = sum_p a_p sigma''(z_p) ||W1 row p||^2.
NetDerivatives input_derivatives(const NetworkParams& p, std::span<const double> x, double t);

/// Gradient w.r.t. the flattened trainable weights of sum over points of
/// adj . (value, dt, grad_x, laplacian).
std::vector<double> parameter_gradient(const NetworkParams& p, std::span<const PointAdjoint> points);

/// Adds one point's contribution to grad (length d_N).
void accumulate_parameter_gradient(const NetworkParams& p, std::span<const double> x, double t,
                                   const DerivAdjoints& adj, std::span<double> grad);

/// Radial projection onto {||w||_2 <= radius}.
NetworkParams project_to_ball(NetworkParams p);

/// Axis-aligned eta-cover of the d-dimensional weight ball of radius W.
///
/// Each axis of [-W, W] is split into m = ceil(2 W sqrt(d) / eta) equal cells
/// and a cell center is emitted when its cell meets the ball, so every w with
/// ||w|| <= W lies within eta/2 of an emitted point. When 2 W sqrt(d) / eta
/// is an integer the count is at most (2 W sqrt(d) / eta)^d; in general it
/// is at most m^d. Throws InvalidArgument when m^d exceeds cap.
std::vector<std::vector<double>> enumerate_cover_weights(std::size_t d, double W, double eta,
                                                         double cap = 1e7);

/// Cells per axis used by enumerate_cover_weights.
std::size_t cover_cells_per_axis(std::size_t d, double W, double eta);

std::vector<NetworkParams> enumerate_cover(int k, int n, double W, double eta, ActivationKind activation,
                                           const std::vector<double>& a, double cap = 1e7);

// Snapshot: {k, n, W, activation, a, W1: [[...]], w2}. Doubles are written in
// shortest round-trip form, so a read-back is bit-exact.
nlohmann::json to_json(const NetworkParams& p);
NetworkParams network_from_json(const nlohmann::json& j);

}  // namespace hjbpinn
