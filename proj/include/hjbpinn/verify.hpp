#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hjbpinn/data.hpp"
#include "hjbpinn/hjb.hpp"
#include "hjbpinn/loss.hpp"
#include "hjbpinn/network.hpp"

namespace hjbpinn {

/// Monte Carlo frequency of an event against a claimed upper bound on its
/// probability. For deterministic inequalities, hits counts violations and
/// bound is 0.
struct EventEstimate {
  std::string name;
  std::int64_t trials = 0;
  std::int64_t hits = 0;
  double freq = 0.0;
  double bound = 0.0;
  double ci_halfwidth = 0.0;
  /// Largest observed lhs / rhs for inequality checks; unused otherwise.
  double worst_ratio = 0.0;

  /// One-sided: the data must not certify freq > bound beyond CI noise.
  bool pass() const { return freq - ci_halfwidth <= bound; }
};

/// Hoeffding one-sided 99% half-width: sqrt(ln(100) / (2 trials)).
double hoeffding_ci99(std::int64_t trials);

/// exp(-N eta^2 / (288 M^4)), the common tail bound of the two Hoeffding events.
double hoeffding_event_bound(double N, double eta, double M);

/// Frequency of (1/N) sum z_i^2 <= sigma2 - eta/6 over fresh noise vectors.
EventEstimate check_hoeffding_e1(std::size_t N_s, double sigma2, double eta, double M, NoiseKind noise,
                                 std::int64_t trials, std::uint64_t seed);

/// Frequency of (1/N) sum z_i u(x_i, t_i) <= -eta/6 with fresh locations and noise.
EventEstimate check_hoeffding_e2(const HjbProblem& problem, std::size_t N_s, double sigma2, double eta, double M,
                                 NoiseKind noise, std::int64_t trials, std::uint64_t seed);

struct CoverEventConfig {
  int k = 1;
  int n = 1;
  double W = 1.0;
  double eta = 1.0;
  std::size_t N_s = 50;
  double sigma2 = 0.5;
  double lambdas = 0.5;
  double mu = 1.0;
  NoiseKind noise = NoiseKind::Uniform;
  ActivationKind activation = ActivationKind::Tanh;
  std::int64_t trials = 10000;
  std::uint64_t seed = 0;
};

/// Frequency of "some cover element h has (1/N) sum h(x_i, t_i) z_i >= S"
/// against 2 (2W sqrt(d)/eta)^d exp(-N S^2 / (2 (8 M C1)^2)) + 2 exp(-N S^2 / (32 M^2 C1^2)).
/// The outer weights are drawn once from N(3, 1); M bounds every label.
EventEstimate check_cover_event(const HjbProblem& problem, const CoverEventConfig& cfg);

/// Sampling law for the randomized perturbation checks. Trial i uses the
/// stream (seed, i): sigmoid on even trials, tanh on odd; k uniform in
/// [k_min, k_max]; a ~ N(3, 1); W log-uniform in [W_min, W_max]; w uniform in
/// the ball; eta = etas[i mod size]; perturbation direction uniform with norm
/// uniform in [0, eta/2]; (x, t) uniform in the problem box.
struct PerturbationDraws {
  int n = 2;
  int k_min = 1;
  int k_max = 8;
  double W_min = 0.1;
  double W_max = 10.0;
  std::vector<double> etas{0.01, 0.1, 0.5};
  std::int64_t trials = 10000;
  std::uint64_t seed = 0;
};

/// One random configuration of the perturbation checks.
struct PerturbedPair {
  NetworkParams p;        // ||w|| <= W = p.radius
  NetworkParams shifted;  // ||w' - w|| <= eta / 2
  double eta = 0.0;
};

PerturbedPair draw_perturbed_pair(const PerturbationDraws& law, std::int64_t trial);

struct PerturbationCheckConfig {
  PerturbationDraws draws;
  /// Projected gradient-ascent steps on R(w + delta) over ||delta|| <= eta/2 (0 disables).
  int adversarial_steps = 0;
};

/// Counts violations of R(w') <= R(w) + a1 eta + a2 eta^2 + a3 eta^3 + a4 eta^4
/// with the constants of perturbation_constants at each trial's (k, W, a).
EventEstimate check_perturbation_bound(const HjbProblem& problem, const Dataset& d, const LossWeights& w,
                                       const PerturbationCheckConfig& cfg);

struct InequalityValue {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

/// The six derivative inequalities at one point, with W = p.radius and the
/// Lipschitz constant of grad f taken as C3. Throws when ||w|| > W or
/// ||w - w'|| > eta / 2.
std::array<InequalityValue, 6> check_derivative_inequalities(const NetworkParams& p, const NetworkParams& shifted,
                                                      std::span<const double> x, double t, double eta);

/// Violation counts per inequality over the random law; (x, t) uniform in the box.
std::array<EventEstimate, 6> check_derivative_inequalities_random(const HjbProblem& problem, const PerturbationDraws& law);

struct GradientAudit {
  std::int64_t instances = 0;
  double max_rel_input = 0.0;   // dt, grad_x, laplacian vs finite differences of forward
  double max_rel_param = 0.0;   // parameter gradient of forward
  double max_rel_risk = 0.0;    // risk_gradient vs finite differences of the total
  double max_exact_residual = 0.0;  // |residual| of the closed-form solution, scaled
  double max_rel() const;
};

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-8);

/// Residual of the closed-form solution scaled by its term magnitudes.
double scaled_exact_residual(std::span<const double> x, double t);

/// Scaled closed-form residual at `points` uniform draws from [-B, B]^n x [0, T];
/// hits counts points above tol and worst_ratio is the largest scaled residual.
EventEstimate check_exact_residual(int n, double B, double T, std::int64_t points, std::uint64_t seed,
                                   double tol = 1e-8);

/// Finite-difference audit over `instances` random small configurations.
GradientAudit check_gradients(std::int64_t instances = 100, std::uint64_t seed = 0);

nlohmann::json to_json(const EventEstimate& e);
nlohmann::json to_json(const GradientAudit& g);

}  // namespace hjbpinn
