#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "hjbpinn/activation.hpp"

namespace hjbpinn {

/// Everything the sample-size lower bounds and the perturbation constants
/// depend on. d_N is always k (n + 1).
struct BoundInputs {
  int n = 2;
  std::int64_t k = 1;
  double W = 1.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double B = 1.0;
  double T = 1.0;
  double M = 2.0;
  double G = 2.0;
  double lambda0 = 0.3;
  double lambdas = 0.5;
  double sigma2 = 0.5;
  double eta = 0.1;
  double delta = 0.5;
  /// Regime parameter; default_regime_parameter() when unset.
  std::optional<double> s;
  double N_s = 3276;
  double N_0 = 256;

  double d_N() const { return static_cast<double>(k) * static_cast<double>(n + 1); }
};

/// Fills C1, C2, C3 from the activation and outer weights.
BoundInputs with_constants(BoundInputs in, const BoundConstants& c);

struct PerturbConstants {
  double V = 0.0;
  double b1 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
};

/// V = sqrt(n) B + T and the coefficients b1, a1..a4 of the risk change under
/// an eta/2 weight perturbation.
PerturbConstants perturbation_constants(const BoundInputs& in);

/// base + a1 eta + a2 eta^2 + a3 eta^3 + a4 eta^4.
double perturbed_risk_bound(double base_risk, const PerturbConstants& pc, double eta);

/// S = (mu eta - sigma^2) / (2 lambdas) + sigma^2 / 2 - eta / 4. Throws for lambdas = 0.
double s_threshold(const BoundInputs& in, double mu);

struct CoverCount {
  double log_value = 0.0;
  std::optional<double> value;  // set when exp(log_value) is finite
};

/// (2 W sqrt(d) / eta)^d, evaluated in log space.
CoverCount covering_count_bound(double d_N, double W, double eta);

enum class Regime { LambdaBelowOne, LambdaEqualOne, LambdaAboveOne };

std::string_view to_string(Regime r);

/// lambda < 1: s in (0, lambda/2); lambda > 1: s > lambda/2; lambda = 1: s >= 2 C1 / 3 + 1/2.
Regime regime_of(double lambda);
double default_regime_parameter(double lambda, double C1);
/// Throws InvalidArgument naming the violated condition.
void check_regime(double lambda, double s, double C1);

struct BoundReport {
  Regime regime = Regime::LambdaBelowOne;
  double s = 0.0;
  /// Label bound used in the formulas (M, or G for the unsupervised bound) after clamping to > 1.
  double label_bound = 0.0;
  bool label_bound_clamped = false;
  double samples = 0.0;  // N_s, or N_0 for the unsupervised bound
  double lambda = 0.0;   // lambdas, or lambda0 for the unsupervised bound
  double S_eta = 0.0;
  double N_c = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;  // lhs >= rhs
  bool vacuous = false;    // rhs <= 0
  bool outside_derivation_regime = false;  // d_N < 3
  /// Right-hand side of the general sample-size inequality before the small-eta simplification.
  double general_sample_bound = 0.0;
  bool general_sample_bound_holds = false;  // samples <= general_sample_bound
  CoverCount cover;
  PerturbConstants perturb;
  /// s + a1 + a2 eta + a3 eta^2 + a4 eta^3: proof-derived, eta-dependent witness for the constant a.
  double proof_constant = 0.0;
  std::int64_t min_d_N = 0;
  std::int64_t min_k = 0;
};

BoundReport supervised_report(const BoundInputs& in);

/// The unsupervised variant: (N_0, G, lambda0) take the roles of
/// (N_s, M, lambdas) and the supervised term is absent from a1.
BoundReport unsupervised_report(const BoundInputs& in);

/// d (ln d + ln(4 W^2 / eta^2)).
double width_lhs(double d_N, double W, double eta);
/// samples eta^2 / (144 bound^4) - 2 ln(4 / (1 - delta)).
double width_rhs(double samples, double label_bound, double eta, double delta);

/// Smallest integer d with width_lhs(d) >= rhs; 0 when rhs <= 0.
std::int64_t min_width_for(double rhs, double W, double eta);

nlohmann::json to_json(const BoundInputs& in);
nlohmann::json to_json(const PerturbConstants& pc);
nlohmann::json to_json(const BoundReport& r);

}  // namespace hjbpinn
