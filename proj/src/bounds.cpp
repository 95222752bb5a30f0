#include "hjbpinn/bounds.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "hjbpinn/error.hpp"

namespace hjbpinn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

void check_inputs(const BoundInputs& in) {
  require(in.n >= 1, "n must be >= 1");
  require(in.k >= 1, "k must be >= 1");
  for (double v : {in.W, in.C1, in.C2, in.C3, in.B, in.T, in.M, in.G, in.lambda0, in.lambdas, in.sigma2, in.N_s,
                   in.N_0}) {
    require(std::isfinite(v) && v >= 0.0, "bound inputs must be finite and nonnegative");
  }
  require(std::isfinite(in.eta) && in.eta > 0.0, "eta must be > 0");
  require(in.delta > 0.0 && in.delta < 1.0, "delta must lie in (0, 1)");
}

// log(exp(x) + exp(y)).
double log_add(double x, double y) {
  const double hi = std::max(x, y);
  const double lo = std::min(x, y);
  return hi + std::log1p(std::exp(lo - hi));
}

double clamp_label_bound(double v, bool& clamped) {
  clamped = !(v > 1.0);
  return clamped ? std::nextafter(1.0, 2.0) : v;
}

BoundReport make_report(const BoundInputs& in, double samples, double label_bound, double lambda,
                        const PerturbConstants& pc) {
  check_inputs(in);
  require(lambda > 0.0, "the regime weight must be > 0");
  BoundReport r;
  r.regime = regime_of(lambda);
  r.s = in.s.value_or(default_regime_parameter(lambda, in.C1));
  check_regime(lambda, r.s, in.C1);
  r.lambda = lambda;
  r.samples = samples;
  r.label_bound = clamp_label_bound(label_bound, r.label_bound_clamped);

  const double eta = in.eta;
  const double d = in.d_N();
  const double L = r.label_bound;
  r.S_eta = (r.s * eta - in.sigma2) / (2.0 * lambda) + 0.5 * in.sigma2 - 0.25 * eta;
  r.N_c = 288.0 * std::pow(L, 4) / (eta * eta);
  r.lhs = width_lhs(d, in.W, eta);
  r.rhs = width_rhs(samples, L, eta, in.delta);
  r.satisfied = r.lhs >= r.rhs;
  r.vacuous = r.rhs <= 0.0;
  r.outside_derivation_regime = d < 3.0;

  r.cover = covering_count_bound(d, in.W, eta);
  const double denom = std::min(eta * eta / 9.0, r.S_eta * r.S_eta / (in.C1 * in.C1));
  const double log_term = std::log(2.0 / (1.0 - in.delta)) + log_add(std::log(2.0), r.cover.log_value);
  r.general_sample_bound = denom > 0.0 ? 32.0 * std::pow(L, 4) / denom * log_term
                                       : std::numeric_limits<double>::infinity();
  r.general_sample_bound_holds = samples <= r.general_sample_bound;

  r.perturb = pc;
  r.proof_constant = r.s + pc.a1 + pc.a2 * eta + pc.a3 * eta * eta + pc.a4 * eta * eta * eta;
  r.min_d_N = min_width_for(r.rhs, in.W, eta);
  const auto per_unit = static_cast<std::int64_t>(in.n + 1);
  r.min_k = (r.min_d_N + per_unit - 1) / per_unit;
  return r;
}

}  // namespace

BoundInputs with_constants(BoundInputs in, const BoundConstants& c) {
  in.C1 = c.c1;
  in.C2 = c.c2;
  in.C3 = c.c3;
  return in;
}

PerturbConstants perturbation_constants(const BoundInputs& in) {
  check_inputs(in);
  const double n = in.n;
  const double k = static_cast<double>(in.k);
  const double W = in.W;
  const double C1 = in.C1, C2 = in.C2, C3 = in.C3;
  PerturbConstants pc;
  pc.V = std::sqrt(n) * in.B + in.T;
  const double V = pc.V;
  const double u = W * C3 * V + C2;  // recurring W C3 V + C2
  const double c3nk = C3 * n * k;
  const double q = W * C2 * (1.0 + W * C2) + c3nk * W * W;
  const double r = u * (0.5 + W * C2) + c3nk * W;
  const double v = C2 * (0.5 + W * (C3 * V + C2 * C2 + 1.0)) + W * (0.5 * C3 * V + c3nk);
  const double e = c3nk + u * u;
  pc.b1 = 2.0 * (u * (1.0 + 2.0 * W * C2) + c3nk * W) * q;
  pc.a1 = in.lambdas * C2 * V * (C1 + in.M) + in.lambda0 * C2 * std::sqrt(n) * in.B * (C1 + in.G) + pc.b1;
  pc.a2 = 0.25 * e * q + r * v;
  pc.a3 = 0.25 * (c3nk + u) * r + 0.25 * e * v;
  pc.a4 = (1.0 / 16.0) * (c3nk + u) * e;
  return pc;
}

double perturbed_risk_bound(double base_risk, const PerturbConstants& pc, double eta) {
  return base_risk + eta * (pc.a1 + eta * (pc.a2 + eta * (pc.a3 + eta * pc.a4)));
}

double s_threshold(const BoundInputs& in, double mu) {
  require(in.lambdas > 0.0, "S threshold needs lambdas > 0");
  return (mu * in.eta - in.sigma2) / (2.0 * in.lambdas) + 0.5 * in.sigma2 - 0.25 * in.eta;
}

CoverCount covering_count_bound(double d_N, double W, double eta) {
  require(eta > 0.0, "eta must be > 0");
  require(d_N >= 1.0 && W > 0.0, "cover needs d_N >= 1 and W > 0");
  CoverCount c;
  c.log_value = d_N * std::log(2.0 * W * std::sqrt(d_N) / eta);
  const double v = std::exp(c.log_value);
  if (std::isfinite(v)) c.value = v;
  return c;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::LambdaBelowOne: return "lambda<1";
    case Regime::LambdaEqualOne: return "lambda=1";
    case Regime::LambdaAboveOne: return "lambda>1";
  }
  return "?";
}

Regime regime_of(double lambda) {
  if (lambda < 1.0) return Regime::LambdaBelowOne;
  if (lambda > 1.0) return Regime::LambdaAboveOne;
  return Regime::LambdaEqualOne;
}

double default_regime_parameter(double lambda, double C1) {
  switch (regime_of(lambda)) {
    case Regime::LambdaBelowOne: return lambda / 4.0;
    case Regime::LambdaAboveOne: return lambda;
    case Regime::LambdaEqualOne: return 2.0 * C1 / 3.0 + 0.5;
  }
  return 0.0;
}

void check_regime(double lambda, double s, double C1) {
  const std::string sv = std::to_string(s);
  switch (regime_of(lambda)) {
    case Regime::LambdaBelowOne:
      if (!(s > 0.0 && s < lambda / 2.0)) throw InvalidArgument("lambda < 1 requires s in (0, lambda/2); got s = " + sv);
      break;
    case Regime::LambdaAboveOne:
      if (!(s > lambda / 2.0)) throw InvalidArgument("lambda > 1 requires s > lambda/2; got s = " + sv);
      break;
    case Regime::LambdaEqualOne:
      if (!(s >= 2.0 * C1 / 3.0 + 0.5)) throw InvalidArgument("lambda = 1 requires s >= 2 C1/3 + 1/2; got s = " + sv);
      break;
  }
}

double width_lhs(double d_N, double W, double eta) {
  return d_N * (std::log(d_N) + std::log(4.0 * W * W / (eta * eta)));
}

double width_rhs(double samples, double label_bound, double eta, double delta) {
  return samples * eta * eta / (144.0 * std::pow(label_bound, 4)) - 2.0 * std::log(4.0 / (1.0 - delta));
}

std::int64_t min_width_for(double rhs, double W, double eta) {
  require(eta > 0.0 && W > 0.0, "min width needs W > 0 and eta > 0");
  if (!(rhs > 0.0)) return 0;
  auto ok = [&](std::int64_t d) { return width_lhs(static_cast<double>(d), W, eta) >= rhs; };
  // lhs decreases until d = exp(-1) eta^2 / (4 W^2) and increases after it.
  const double turn = std::exp(-1.0) * eta * eta / (4.0 * W * W);
  require(turn < 1e7, "eta/W too large for the width search");
  const auto start = static_cast<std::int64_t>(std::ceil(std::max(turn, 1.0)));
  for (std::int64_t d = 1; d < start; ++d) {
    if (ok(d)) return d;
  }
  std::int64_t hi = start;
  while (!ok(hi)) {
    require(hi < (std::int64_t{1} << 60), "width search overflow");
    hi *= 2;
  }
  std::int64_t lo = hi / 2 >= start ? hi / 2 : start - 1;  // ok(lo) is false or lo < start
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

BoundReport supervised_report(const BoundInputs& in) {
  return make_report(in, in.N_s, in.M, in.lambdas, perturbation_constants(in));
}

BoundReport unsupervised_report(const BoundInputs& in) {
  BoundInputs unsup = in;
  unsup.lambdas = 0.0;
  return make_report(in, in.N_0, in.G, in.lambda0, perturbation_constants(unsup));
}

nlohmann::json to_json(const BoundInputs& in) {
  nlohmann::json j{{"n", in.n},           {"k", in.k},       {"d_N", in.d_N()},         {"W", in.W},
                   {"C1", in.C1},         {"C2", in.C2},     {"C3", in.C3},             {"B", in.B},
                   {"T", in.T},           {"M", in.M},       {"G", in.G},               {"lambda0", in.lambda0},
                   {"lambdas", in.lambdas}, {"sigma2", in.sigma2}, {"eta", in.eta},     {"delta", in.delta},
                   {"N_s", in.N_s},       {"N_0", in.N_0}};
  j["s"] = in.s ? nlohmann::json(*in.s) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const PerturbConstants& pc) {
  return {{"V", pc.V}, {"b1", pc.b1}, {"a1", pc.a1}, {"a2", pc.a2}, {"a3", pc.a3}, {"a4", pc.a4}};
}

nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j;
  j["regime"] = std::string(to_string(r.regime));
  j["s"] = r.s;
  j["lambda"] = r.lambda;
  j["samples"] = r.samples;
  j["label_bound"] = r.label_bound;
  j["label_bound_clamped"] = r.label_bound_clamped;
  j["S_eta"] = r.S_eta;
  j["N_c"] = r.N_c;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["satisfied"] = r.satisfied;
  j["vacuous"] = r.vacuous;
  j["outside_derivation_regime"] = r.outside_derivation_regime;
  if (std::isfinite(r.general_sample_bound)) {
    j["general_sample_bound"] = r.general_sample_bound;
  } else {
    j["general_sample_bound"] = nullptr;
  }
  j["general_sample_bound_holds"] = r.general_sample_bound_holds;
  j["cover_log_count"] = r.cover.log_value;
  j["cover_count"] = r.cover.value ? nlohmann::json(*r.cover.value) : nlohmann::json(nullptr);
  j["perturbation"] = to_json(r.perturb);
  j["proof_constant"] = r.proof_constant;
  j["proof_constant_note"] = "proof-derived, eta-dependent";
  j["min_d_N"] = r.min_d_N;
  j["min_k"] = r.min_k;
  return j;
}

}  // namespace hjbpinn
