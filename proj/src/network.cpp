#include "hjbpinn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "hjbpinn/error.hpp"

namespace hjbpinn {

namespace {

void check_point(const NetworkParams& p, std::span<const double> x) {
  if (static_cast<int>(x.size()) != p.n) {
    throw DimensionError("point has dimension " + std::to_string(x.size()) + ", network expects " +
                         std::to_string(p.n));
  }
}

double sum_squares(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

}  // namespace

void validate(const NetworkParams& p) {
  if (p.k < 1) throw InvalidArgument("network width k must be >= 1");
  if (p.n < 0) throw InvalidArgument("network input dimension n must be >= 0");
  const auto k = static_cast<std::size_t>(p.k);
  if (p.W1.size() != k * static_cast<std::size_t>(p.n) || p.w2.size() != k || p.a.size() != k) {
    throw DimensionError("network weight arrays do not match k=" + std::to_string(p.k) +
                         ", n=" + std::to_string(p.n));
  }
  if (!(p.radius > 0.0)) throw InvalidArgument("weight-ball radius must be positive");
  for (double v : p.a) {
    if (!std::isfinite(v)) throw InvalidArgument("outer vector a has a non-finite entry");
  }
}

NetworkParams make_network(int k, int n, ActivationKind activation, std::vector<double> a, double radius) {
  NetworkParams p;
  p.k = k;
  p.n = n;
  p.activation = activation;
  p.a = std::move(a);
  p.radius = radius;
  if (k >= 1 && n >= 0) {
    p.W1.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(n), 0.0);
    p.w2.assign(static_cast<std::size_t>(k), 0.0);
  }
  validate(p);
  return p;
}

std::vector<double> flatten_weights(const NetworkParams& p) {
  std::vector<double> flat;
  flat.reserve(p.d_N());
  flat.insert(flat.end(), p.W1.begin(), p.W1.end());
  flat.insert(flat.end(), p.w2.begin(), p.w2.end());
  return flat;
}

void assign_weights(NetworkParams& p, std::span<const double> flat) {
  if (flat.size() != p.d_N()) {
    throw DimensionError("flat weight vector has length " + std::to_string(flat.size()) + ", expected " +
                         std::to_string(p.d_N()));
  }
  std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(p.W1.size()), p.W1.begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(p.W1.size()), flat.end(), p.w2.begin());
}

double weight_norm(const NetworkParams& p) { return std::sqrt(sum_squares(p.W1) + sum_squares(p.w2)); }

double forward(const NetworkParams& p, std::span<const double> x, double t) {
  check_point(p, x);
  double h = 0.0;
  for (int q = 0; q < p.k; ++q) {
    double z = p.w2[static_cast<std::size_t>(q)] * t;
    for (int i = 0; i < p.n; ++i) z += p.w1(q, i) * x[static_cast<std::size_t>(i)];
    h += p.a[static_cast<std::size_t>(q)] * eval_derivatives(p.activation, z).value;
  }
  return h;
}

NetDerivatives input_derivatives(const NetworkParams& p, std::span<const double> x, double t) {
  check_point(p, x);
  NetDerivatives d;
  d.grad_x.assign(static_cast<std::size_t>(p.n), 0.0);
  for (int q = 0; q < p.k; ++q) {
    const auto qs = static_cast<std::size_t>(q);
    double z = p.w2[qs] * t;
    double rowsq = 0.0;
    for (int i = 0; i < p.n; ++i) {
      z += p.w1(q, i) * x[static_cast<std::size_t>(i)];
      rowsq += p.w1(q, i) * p.w1(q, i);
    }
    const auto s = eval_derivatives(p.activation, z);
    const double g = p.a[qs] * s.d1;
    d.value += p.a[qs] * s.value;
    d.dt += p.w2[qs] * g;
    for (int i = 0; i < p.n; ++i) d.grad_x[static_cast<std::size_t>(i)] += p.w1(q, i) * g;
    d.laplacian += p.a[qs] * s.d2 * rowsq;
  }
  return d;
}

void accumulate_parameter_gradient(const NetworkParams& p, std::span<const double> x, double t,
                                   const DerivAdjoints& adj, std::span<double> grad) {
  check_point(p, x);
  if (grad.size() != p.d_N()) throw DimensionError("gradient buffer does not have length d_N");
  const bool has_gx = !adj.grad_x.empty();
  if (has_gx && static_cast<int>(adj.grad_x.size()) != p.n) {
    throw DimensionError("grad_x adjoint has the wrong dimension");
  }
  const std::size_t w2_offset = p.W1.size();
  for (int q = 0; q < p.k; ++q) {
    const auto qs = static_cast<std::size_t>(q);
    double z = p.w2[qs] * t;
    double rowsq = 0.0;
    double proj = 0.0;  // sum_i adj.grad_x[i] * W1[q][i]
    for (int i = 0; i < p.n; ++i) {
      const double w = p.w1(q, i);
      z += w * x[static_cast<std::size_t>(i)];
      rowsq += w * w;
      if (has_gx) proj += adj.grad_x[static_cast<std::size_t>(i)] * w;
    }
    const auto s = eval_derivatives(p.activation, z);
    const double a1 = p.a[qs] * s.d1;
    const double a2 = p.a[qs] * s.d2;
    const double a3 = p.a[qs] * s.d3;
    // Sensitivity of the loss to the pre-activation z_q.
    const double dz = adj.value * a1 + adj.dt * a2 * p.w2[qs] + a2 * proj + adj.laplacian * a3 * rowsq;
    for (int i = 0; i < p.n; ++i) {
      const double gxi = has_gx ? adj.grad_x[static_cast<std::size_t>(i)] : 0.0;
      grad[qs * static_cast<std::size_t>(p.n) + static_cast<std::size_t>(i)] +=
          dz * x[static_cast<std::size_t>(i)] + gxi * a1 + 2.0 * adj.laplacian * a2 * p.w1(q, i);
    }
    grad[w2_offset + qs] += dz * t + adj.dt * a1;
  }
}

std::vector<double> parameter_gradient(const NetworkParams& p, std::span<const PointAdjoint> points) {
  std::vector<double> grad(p.d_N(), 0.0);
  for (const auto& pt : points) accumulate_parameter_gradient(p, pt.x, pt.t, pt.adj, grad);
  return grad;
}

NetworkParams project_to_ball(NetworkParams p) {
  const double norm = weight_norm(p);
  if (norm <= p.radius) return p;
  const double scale = p.radius / norm;
  for (double& v : p.W1) v *= scale;
  for (double& v : p.w2) v *= scale;
  return p;
}

std::size_t cover_cells_per_axis(std::size_t d, double W, double eta) {
  if (d == 0) throw InvalidArgument("cover dimension must be >= 1");
  if (!(W > 0.0) || !(eta > 0.0)) throw InvalidArgument("cover requires W > 0 and eta > 0");
  const double ratio = 2.0 * W * std::sqrt(static_cast<double>(d)) / eta;
  // Tolerate representation error when the ratio is mathematically an integer.
  const double rounded = std::round(ratio);
  const double m = std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, rounded) ? rounded : std::ceil(ratio);
  return static_cast<std::size_t>(std::max(1.0, m));
}

std::vector<std::vector<double>> enumerate_cover_weights(std::size_t d, double W, double eta, double cap) {
  const std::size_t m = cover_cells_per_axis(d, W, eta);
  const double grid_count = std::pow(static_cast<double>(m), static_cast<double>(d));
  if (grid_count > cap) {
    throw InvalidArgument("cover enumeration needs " + std::to_string(grid_count) +
                          " grid cells, above the cap of " + std::to_string(cap));
  }
  const double h = 2.0 * W / static_cast<double>(m);
  std::vector<double> centers(m);
  for (std::size_t j = 0; j < m; ++j) centers[j] = -W + (static_cast<double>(j) + 0.5) * h;
  // Squared distance from the origin to the nearest point of the cell around a center.
  auto near_sq = [h](double c) {
    const double gap = std::max(0.0, std::abs(c) - 0.5 * h);
    return gap * gap;
  };

  std::vector<std::vector<double>> out;
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> w(d);
  const double w_sq = W * W * (1.0 + 1e-12);
  while (true) {
    double dist_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      w[i] = centers[idx[i]];
      dist_sq += near_sq(w[i]);
    }
    if (dist_sq <= w_sq) out.push_back(w);
    std::size_t axis = 0;
    while (axis < d && ++idx[axis] == m) idx[axis++] = 0;
    if (axis == d) break;
  }
  return out;
}

std::vector<NetworkParams> enumerate_cover(int k, int n, double W, double eta, ActivationKind activation,
                                           const std::vector<double>& a, double cap) {
  const NetworkParams base = make_network(k, n, activation, a, W);
  const auto flats = enumerate_cover_weights(base.d_N(), W, eta, cap);
  std::vector<NetworkParams> out;
  out.reserve(flats.size());
  for (const auto& f : flats) {
    NetworkParams p = base;
    assign_weights(p, f);
    out.push_back(std::move(p));
  }
  return out;
}

nlohmann::json to_json(const NetworkParams& p) {
  nlohmann::json rows = nlohmann::json::array();
  for (int q = 0; q < p.k; ++q) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < p.n; ++i) row.push_back(p.w1(q, i));
    rows.push_back(std::move(row));
  }
  return {{"k", p.k},   {"n", p.n},   {"W", p.radius}, {"activation", std::string(to_string(p.activation))},
          {"a", p.a},   {"W1", rows}, {"w2", p.w2}};
}

NetworkParams network_from_json(const nlohmann::json& j) {
  try {
    NetworkParams p;
    p.k = j.at("k").get<int>();
    p.n = j.at("n").get<int>();
    p.radius = j.at("W").get<double>();
    p.activation = parse_activation(j.value("activation", std::string("tanh")));
    p.a = j.at("a").get<std::vector<double>>();
    p.w2 = j.at("w2").get<std::vector<double>>();
    const auto& rows = j.at("W1");
    if (!rows.is_array() || static_cast<int>(rows.size()) != p.k) {
      throw DimensionError("W1 must have k rows");
    }
    for (const auto& row : rows) {
      auto r = row.get<std::vector<double>>();
      if (static_cast<int>(r.size()) != p.n) throw DimensionError("W1 row has wrong length");
      p.W1.insert(p.W1.end(), r.begin(), r.end());
    }
    validate(p);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed network snapshot: ") + e.what());
  }
}

}  // namespace hjbpinn
