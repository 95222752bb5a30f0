#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hjbpinn/hjb.hpp"

namespace hjbpinn {

class Rng;

enum class NoiseKind { Uniform, TruncatedGaussian };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

/// Largest |z| the generator can produce at variance sigma2.
/// Uniform: sqrt(3 sigma2). Truncated Gaussian: 3 scale units, with the scale
/// chosen so the truncated variance equals sigma2.
double noise_bound(NoiseKind kind, double sigma2);

/// Zero-mean noise with variance exactly sigma2.
double sample_noise(NoiseKind kind, double sigma2, Rng& rng);

/// Collocation, initial-condition and supervision samples.
///
/// Coordinates are stored flat (point-major, n per point). Labels satisfy
/// sup_y[i] == sup_clean[i] + sup_noise[i] exactly; init_y is non-empty only
/// for noisy initial-condition data.
struct Dataset {
  int n = 0;
  std::vector<double> colloc_x, colloc_t;
  std::vector<double> init_x, init_g, init_y;
  std::vector<double> sup_x, sup_t, sup_y, sup_clean, sup_noise;
  double sigma2 = 0.0;
  NoiseKind noise = NoiseKind::Uniform;
  /// ceil of the largest |label| or |clean label|; bounds every |z_i| by 2M.
  double M = 0.0;
  /// Largest |g(x_0j)| (and |y_0j| for noisy initial data) over sampled points.
  double G = 0.0;
  std::uint64_t seed = 0;

  std::size_t n_colloc() const { return colloc_t.size(); }
  std::size_t n_init() const { return init_g.size(); }
  std::size_t n_sup() const { return sup_y.size(); }
  bool init_labeled() const { return !init_y.empty(); }

  std::span<const double> colloc_point(std::size_t i) const { return row(colloc_x, i); }
  std::span<const double> init_point(std::size_t i) const { return row(init_x, i); }
  std::span<const double> sup_point(std::size_t i) const { return row(sup_x, i); }

 private:
  std::span<const double> row(const std::vector<double>& v, std::size_t i) const {
    return {v.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
  }
};

/// Supervision labels come from the exact solution plus noise, so a problem
/// without one is rejected when n_sup > 0. Every point set is uniform over
/// the box and drawn from its own seeded stream.
Dataset sample_dataset(const HjbProblem& problem, std::size_t n_colloc, std::size_t n_init, std::size_t n_sup,
                       double sigma2, NoiseKind noise, std::uint64_t seed);

/// Data for the unsupervised risk: initial points carry y_0j = g(x_0j) + z_j;
/// no supervision samples.
Dataset noisy_initial_dataset(const HjbProblem& problem, std::size_t n_colloc, std::size_t n_init, double sigma2,
                              NoiseKind noise, std::uint64_t seed);

/// JSON lines: a "meta" record followed by one record per point.
void write_jsonl(const Dataset& d, std::ostream& os);
Dataset read_jsonl(std::istream& is);

}  // namespace hjbpinn
