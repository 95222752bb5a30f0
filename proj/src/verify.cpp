#include "hjbpinn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "hjbpinn/bounds.hpp"
#include "hjbpinn/error.hpp"
#include "hjbpinn/rng.hpp"

namespace hjbpinn {

namespace {

EventEstimate finish(std::string name, std::int64_t trials, std::int64_t hits, double bound) {
  EventEstimate e;
  e.name = std::move(name);
  e.trials = trials;
  e.hits = hits;
  e.freq = trials > 0 ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
  e.bound = bound;
  e.ci_halfwidth = hoeffding_ci99(trials);
  return e;
}

std::vector<double> uniform_in_ball(Rng& rng, std::size_t d, double radius) {
  std::vector<double> v(d);
  double s = 0.0;
  do {
    s = 0.0;
    for (double& x : v) {
      x = rng.normal();
      s += x * x;
    }
  } while (s == 0.0);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(s);
  for (double& x : v) x *= r;
  return v;
}

std::vector<double> random_direction(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double s = 0.0;
  do {
    s = 0.0;
    for (double& x : v) {
      x = rng.normal();
      s += x * x;
    }
  } while (s == 0.0);
  const double inv = 1.0 / std::sqrt(s);
  for (double& x : v) x *= inv;
  return v;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> sample_point(const HjbProblem& problem, Rng& rng, double& t) {
  std::vector<double> x(static_cast<std::size_t>(problem.n));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(problem.lower[i], problem.upper[i]);
  t = rng.uniform(0.0, problem.T);
  return x;
}

constexpr std::uint64_t kOuterStream = 0xa11ce;

// Five-point central difference.
double fd5(const std::function<double(double)>& f, double h) {
  return (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
}

double fd5_second(const std::function<double(double)>& f, double h) {
  return (-f(-2.0 * h) + 16.0 * f(-h) - 30.0 * f(0.0) + 16.0 * f(h) - f(2.0 * h)) / (12.0 * h * h);
}

}  // namespace

double hoeffding_ci99(std::int64_t trials) {
  if (trials <= 0) return 1.0;
  return std::sqrt(std::log(100.0) / (2.0 * static_cast<double>(trials)));
}

double hoeffding_event_bound(double N, double eta, double M) {
  return std::exp(-N * eta * eta / (288.0 * std::pow(M, 4)));
}

EventEstimate check_hoeffding_e1(std::size_t N_s, double sigma2, double eta, double M, NoiseKind noise,
                                 std::int64_t trials, std::uint64_t seed) {
  if (N_s == 0 || trials <= 0) throw InvalidArgument("E1 check needs N_s >= 1 and trials >= 1");
  std::int64_t hits = 0;
  const double threshold = sigma2 - eta / 6.0;
  std::vector<double> sq(N_s);
  for (std::int64_t i = 0; i < trials; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    for (double& v : sq) {
      const double z = sample_noise(noise, sigma2, rng);
      v = z * z;
    }
    if (mean(sq) <= threshold) ++hits;
  }
  return finish("hoeffding_e1", trials, hits, hoeffding_event_bound(static_cast<double>(N_s), eta, M));
}

EventEstimate check_hoeffding_e2(const HjbProblem& problem, std::size_t N_s, double sigma2, double eta, double M,
                                 NoiseKind noise, std::int64_t trials, std::uint64_t seed) {
  validate(problem);
  if (N_s == 0 || trials <= 0) throw InvalidArgument("E2 check needs N_s >= 1 and trials >= 1");
  std::int64_t hits = 0;
  std::vector<double> prod(N_s);
  for (std::int64_t i = 0; i < trials; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    for (double& v : prod) {
      double t = 0.0;
      const auto x = sample_point(problem, rng, t);
      v = sample_noise(noise, sigma2, rng) * problem.exact(x, t);
    }
    if (mean(prod) <= -eta / 6.0) ++hits;
  }
  return finish("hoeffding_e2", trials, hits, hoeffding_event_bound(static_cast<double>(N_s), eta, M));
}

EventEstimate check_cover_event(const HjbProblem& problem, const CoverEventConfig& cfg) {
  validate(problem);
  if (problem.n != cfg.n) throw DimensionError("cover check dimension differs from the problem");
  if (cfg.N_s == 0 || cfg.trials <= 0) throw InvalidArgument("cover check needs N_s >= 1 and trials >= 1");
  Rng outer(cfg.seed, kOuterStream);
  std::vector<double> a(static_cast<std::size_t>(cfg.k));
  for (double& v : a) v = outer.normal(3.0, 1.0);
  const auto cover = enumerate_cover(cfg.k, cfg.n, cfg.W, cfg.eta, cfg.activation, a);
  const BoundConstants c = bound_constants(cfg.activation, a);
  const double M = std::max(std::ceil(problem.exact_sup_bound() + noise_bound(cfg.noise, cfg.sigma2)), 1.0);

  BoundInputs in;
  in.lambdas = cfg.lambdas;
  in.eta = cfg.eta;
  in.sigma2 = cfg.sigma2;
  const double S = s_threshold(in, cfg.mu);
  const double d = static_cast<double>(cfg.k) * static_cast<double>(cfg.n + 1);
  const double Nn = static_cast<double>(cfg.N_s);
  const double log_first = std::log(2.0) + covering_count_bound(d, cfg.W, cfg.eta).log_value -
                           Nn * S * S / (2.0 * std::pow(8.0 * M * c.c1, 2));
  const double second = 2.0 * std::exp(-Nn * S * S / (32.0 * M * M * c.c1 * c.c1));
  const double bound = std::exp(log_first) + second;

  std::int64_t hits = 0;
  std::vector<double> xs(cfg.N_s * static_cast<std::size_t>(cfg.n)), ts(cfg.N_s), zs(cfg.N_s), prod(cfg.N_s);
  for (std::int64_t i = 0; i < cfg.trials; ++i) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
    for (std::size_t j = 0; j < cfg.N_s; ++j) {
      double t = 0.0;
      const auto x = sample_point(problem, rng, t);
      std::copy(x.begin(), x.end(), xs.begin() + static_cast<std::ptrdiff_t>(j * x.size()));
      ts[j] = t;
      zs[j] = sample_noise(cfg.noise, cfg.sigma2, rng);
    }
    for (const auto& h : cover) {
      for (std::size_t j = 0; j < cfg.N_s; ++j) {
        const std::span<const double> x(xs.data() + j * static_cast<std::size_t>(cfg.n),
                                        static_cast<std::size_t>(cfg.n));
        prod[j] = forward(h, x, ts[j]) * zs[j];
      }
      if (mean(prod) >= S) {
        ++hits;
        break;
      }
    }
  }
  auto e = finish("cover_event_dN" + std::to_string(static_cast<int>(d)), cfg.trials, hits, bound);
  return e;
}

PerturbedPair draw_perturbed_pair(const PerturbationDraws& law, std::int64_t trial) {
  if (law.etas.empty()) throw InvalidArgument("perturbation law needs at least one eta");
  if (law.k_min < 1 || law.k_max < law.k_min) throw InvalidArgument("perturbation law needs 1 <= k_min <= k_max");
  if (!(law.W_min > 0.0 && law.W_max >= law.W_min)) throw InvalidArgument("perturbation law needs 0 < W_min <= W_max");
  Rng rng(law.seed, static_cast<std::uint64_t>(trial));
  const ActivationKind act = trial % 2 == 0 ? ActivationKind::Sigmoid : ActivationKind::Tanh;
  const int span = law.k_max - law.k_min + 1;
  const int k = law.k_min + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(span));
  const double W = std::exp(rng.uniform(std::log(law.W_min), std::log(law.W_max)));
  std::vector<double> a(static_cast<std::size_t>(k));
  for (double& v : a) v = rng.normal(3.0, 1.0);
  PerturbedPair out;
  out.eta = law.etas[static_cast<std::size_t>(trial) % law.etas.size()];
  out.p = make_network(k, law.n, act, std::move(a), W);
  const std::size_t d = out.p.d_N();
  const auto w = uniform_in_ball(rng, d, W);
  assign_weights(out.p, w);
  const auto dir = random_direction(rng, d);
  const double len = rng.uniform() * out.eta / 2.0;
  std::vector<double> ws(d);
  for (std::size_t i = 0; i < d; ++i) ws[i] = w[i] + len * dir[i];
  out.shifted = out.p;
  out.shifted.radius = W + out.eta / 2.0;
  assign_weights(out.shifted, ws);
  return out;
}

EventEstimate check_perturbation_bound(const HjbProblem& problem, const Dataset& d, const LossWeights& w,
                                       const PerturbationCheckConfig& cfg) {
  validate(problem);
  if (problem.n != cfg.draws.n || d.n != problem.n) throw DimensionError("perturbation check dimensions differ");
  std::int64_t violations = 0;
  double worst = 0.0;
  for (std::int64_t i = 0; i < cfg.draws.trials; ++i) {
    PerturbedPair pair = draw_perturbed_pair(cfg.draws, i);
    BoundInputs in;
    in.n = problem.n;
    in.k = pair.p.k;
    in.W = pair.p.radius;
    in = with_constants(in, bound_constants(pair.p.activation, pair.p.a));
    in.B = problem.B();
    in.T = problem.T;
    in.M = d.M;
    in.G = d.G;
    in.lambda0 = w.lambda0;
    in.lambdas = w.lambdas;
    in.eta = pair.eta;
    const PerturbConstants pc = perturbation_constants(in);
    const double base = empirical_risk(pair.p, d, w).total;
    const double limit = perturbed_risk_bound(base, pc, pair.eta);

    double shifted = empirical_risk(pair.shifted, d, w).total;
    if (cfg.adversarial_steps > 0) {
      const auto w0 = flatten_weights(pair.p);
      auto ws = flatten_weights(pair.shifted);
      const double half = pair.eta / 2.0;
      for (int s = 0; s < cfg.adversarial_steps; ++s) {
        const auto g = risk_gradient(pair.shifted, d, w);
        const double gn = norm2(g);
        if (!(gn > 0.0) || !std::isfinite(gn)) break;
        std::vector<double> delta(ws.size());
        for (std::size_t j = 0; j < ws.size(); ++j) delta[j] = ws[j] - w0[j] + 0.5 * half * g[j] / gn;
        const double dn = norm2(delta);
        const double scale = dn > half ? half / dn : 1.0;
        for (std::size_t j = 0; j < ws.size(); ++j) ws[j] = w0[j] + scale * delta[j];
        assign_weights(pair.shifted, ws);
        shifted = std::max(shifted, empirical_risk(pair.shifted, d, w).total);
      }
    }
    if (!(shifted <= limit)) ++violations;
    const double slack = limit - base;
    if (slack > 0.0) worst = std::max(worst, (shifted - base) / slack);
  }
  auto e = finish(cfg.adversarial_steps > 0 ? "perturbation_bound_adversarial" : "perturbation_bound_random",
                  cfg.draws.trials, violations, 0.0);
  e.worst_ratio = worst;
  e.ci_halfwidth = 0.0;
  return e;
}

std::array<InequalityValue, 6> check_derivative_inequalities(const NetworkParams& p, const NetworkParams& shifted,
                                                      std::span<const double> x, double t, double eta) {
  validate(p);
  validate(shifted);
  if (p.k != shifted.k || p.n != shifted.n || p.a != shifted.a || p.activation != shifted.activation) {
    throw DimensionError("perturbed network must share shape, activation and outer weights");
  }
  if (!(eta >= 0.0)) throw InvalidArgument("eta must be >= 0");
  const double W = p.radius;
  const auto w0 = flatten_weights(p);
  const auto w1 = flatten_weights(shifted);
  std::vector<double> diff(w0.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = w1[i] - w0[i];
  const double tol = 1e-12 * (1.0 + eta);
  if (norm2(w0) > W * (1.0 + 1e-12)) throw InvalidArgument("base weights lie outside the ball");
  if (norm2(diff) > eta / 2.0 + tol) throw InvalidArgument("perturbation exceeds eta/2");

  const BoundConstants c = bound_constants(p.activation, p.a);
  const double C2 = c.c2;
  const double L2 = c.c3;
  const double nk = static_cast<double>(p.n) * static_cast<double>(p.k);
  const double r = norm2(x) + std::abs(t);
  const double h = eta / 2.0;

  const NetDerivatives d0 = input_derivatives(p, x, t);
  const NetDerivatives d1 = input_derivatives(shifted, x, t);
  double g0 = 0.0, g1 = 0.0;
  for (double v : d0.grad_x) g0 += v * v;
  for (double v : d1.grad_x) g1 += v * v;

  const double q = W * L2 * r + C2;
  std::array<InequalityValue, 6> out;
  out[0] = {"p1_dt_difference", d0.dt - d1.dt, h * (C2 + W * L2 * r), false};
  out[1] = {"p2_dt_sum", d0.dt + d1.dt, h * (C2 + W * L2 * r) + 2.0 * W * C2, false};
  out[2] = {"p3_grad_sq_difference", g0 - g1, h * q * (h * q + 2.0 * W * C2), false};
  out[3] = {"p4_grad_sq_sum", g0 + g1,
            W * C2 * eta * q + 2.0 * (W * C2) * (W * C2) + h * (W * L2 * h * r + (2.0 * W + h) * C2), false};
  out[4] = {"p5_laplacian_difference", d1.laplacian - d0.laplacian, c.c3 * nk * (eta * W + h * h), false};
  out[5] = {"p6_laplacian_sum", d1.laplacian + d0.laplacian, c.c3 * nk * (2.0 * W * W + eta * W + h * h), false};
  for (auto& v : out) v.ok = v.lhs <= v.rhs;
  return out;
}

std::array<EventEstimate, 6> check_derivative_inequalities_random(const HjbProblem& problem, const PerturbationDraws& law) {
  validate(problem);
  if (problem.n != law.n) throw DimensionError("derivative-inequality check dimension differs from the problem");
  std::array<std::int64_t, 6> violations{};
  std::array<double, 6> worst{};
  std::array<std::string, 6> names;
  for (std::int64_t i = 0; i < law.trials; ++i) {
    const PerturbedPair pair = draw_perturbed_pair(law, i);
    // Evaluation points come from a stream disjoint from the weight draws.
    Rng rng(law.seed ^ 0x5eed5eed5eed5eedULL, static_cast<std::uint64_t>(i));
    double t = 0.0;
    const auto x = sample_point(problem, rng, t);
    const auto res = check_derivative_inequalities(pair.p, pair.shifted, x, t, pair.eta);
    for (std::size_t j = 0; j < 6; ++j) {
      names[j] = res[j].name;
      if (!res[j].ok) ++violations[j];
      if (res[j].rhs > 0.0) worst[j] = std::max(worst[j], res[j].lhs / res[j].rhs);
    }
  }
  std::array<EventEstimate, 6> out;
  for (std::size_t j = 0; j < 6; ++j) {
    out[j] = finish(names[j], law.trials, violations[j], 0.0);
    out[j].ci_halfwidth = 0.0;
    out[j].worst_ratio = worst[j];
  }
  return out;
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double scaled_exact_residual(std::span<const double> x, double t) {
  const NetDerivatives d = exact_derivatives(x, t);
  double g2 = 0.0;
  for (double v : d.grad_x) g2 += v * v;
  const double scale = std::abs(d.dt) + std::abs(d.laplacian) + g2;
  const double r = pde_residual(d);
  return scale > 0.0 ? std::abs(r) / scale : std::abs(r);
}

EventEstimate check_exact_residual(int n, double B, double T, std::int64_t points, std::uint64_t seed,
                                   double tol) {
  if (n < 1 || points < 1 || !(B > 0.0) || !(T >= 0.0)) throw InvalidArgument("bad residual check arguments");
  EventEstimate e;
  e.name = "exact_residual_n" + std::to_string(n);
  e.trials = points;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < points; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    for (double& v : x) v = rng.uniform(-B, B);
    const double r = scaled_exact_residual(x, rng.uniform(0.0, T));
    e.worst_ratio = std::max(e.worst_ratio, r);
    if (r > tol) ++e.hits;
  }
  e.freq = static_cast<double>(e.hits) / static_cast<double>(points);
  return e;
}

double GradientAudit::max_rel() const { return std::max({max_rel_input, max_rel_param, max_rel_risk}); }

GradientAudit check_gradients(std::int64_t instances, std::uint64_t seed) {
  GradientAudit audit;
  audit.instances = instances;
  for (std::int64_t inst = 0; inst < instances; ++inst) {
    Rng rng(seed, static_cast<std::uint64_t>(inst));
    const ActivationKind act = inst % 2 == 0 ? ActivationKind::Tanh : ActivationKind::Sigmoid;
    const int k = 1 + static_cast<int>(rng.next_u64() % 4);
    const int n = inst % 3 == 2 ? 1 + static_cast<int>(rng.next_u64() % 3) : 2;
    std::vector<double> a(static_cast<std::size_t>(k));
    for (double& v : a) v = rng.normal(3.0, 1.0);
    NetworkParams p = make_network(k, n, act, std::move(a), 100.0);
    for (double& v : p.W1) v = rng.normal();
    for (double& v : p.w2) v = rng.normal();
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const double t = rng.uniform(0.0, 1.0);

    // Input derivatives against differences of forward.
    const NetDerivatives d = input_derivatives(p, x, t);
    const double hin = 1e-3;
    const double floor = 1e-7 * (1.0 + std::abs(d.value));
    const double fd_dt = fd5([&](double e) { return forward(p, x, t + e); }, hin);
    audit.max_rel_input = std::max(audit.max_rel_input, relative_error(d.dt, fd_dt, floor));
    double fd_lap = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto along = [&](double e) {
        auto xe = x;
        xe[i] += e;
        return forward(p, xe, t);
      };
      audit.max_rel_input = std::max(audit.max_rel_input, relative_error(d.grad_x[i], fd5(along, hin), floor));
      fd_lap += fd5_second(along, hin);
    }
    audit.max_rel_input = std::max(audit.max_rel_input, relative_error(d.laplacian, fd_lap, floor));

    // Parameter gradient of forward.
    DerivAdjoints adj;
    adj.value = 1.0;
    adj.grad_x.assign(x.size(), 0.0);
    std::vector<double> grad(p.d_N(), 0.0);
    accumulate_parameter_gradient(p, x, t, adj, grad);
    const auto w0 = flatten_weights(p);
    for (std::size_t j = 0; j < w0.size(); ++j) {
      auto along = [&](double e) {
        auto we = w0;
        we[j] += e;
        NetworkParams q = p;
        assign_weights(q, we);
        return forward(q, x, t);
      };
      audit.max_rel_param = std::max(audit.max_rel_param, relative_error(grad[j], fd5(along, 1e-4), floor));
    }

    // Full risk gradient on a tiny dataset.
    HjbProblem prob = symmetric_problem(n, 1.0, 1.0);
    const std::size_t pts = 5 + static_cast<std::size_t>(rng.next_u64() % 16);
    const Dataset data = sample_dataset(prob, pts, pts, pts, 0.5, NoiseKind::Uniform, seed + static_cast<std::uint64_t>(inst));
    LossWeights lw{rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)};
    const auto rg = risk_and_gradient(p, data, lw);
    const double rfloor = 1e-7 * (1.0 + rg.risk.total);
    for (std::size_t j = 0; j < w0.size(); ++j) {
      auto along = [&](double e) {
        auto we = w0;
        we[j] += e;
        NetworkParams q = p;
        assign_weights(q, we);
        return empirical_risk(q, data, lw).total;
      };
      audit.max_rel_risk = std::max(audit.max_rel_risk, relative_error(rg.grad[j], fd5(along, 1e-5), rfloor));
    }

    // Closed-form solution residual.
    for (int dim : {1, 2, 10}) {
      std::vector<double> xe(static_cast<std::size_t>(dim));
      for (double& v : xe) v = rng.uniform(-1.0, 1.0);
      audit.max_exact_residual = std::max(audit.max_exact_residual, scaled_exact_residual(xe, rng.uniform(0.0, 1.0)));
    }
  }
  return audit;
}

nlohmann::json to_json(const EventEstimate& e) {
  return {{"name", e.name}, {"trials", e.trials}, {"hits", e.hits},       {"freq", e.freq},
          {"bound", e.bound}, {"ci", e.ci_halfwidth}, {"worst_ratio", e.worst_ratio}, {"pass", e.pass()}};
}

nlohmann::json to_json(const GradientAudit& g) {
  return {{"name", "gradients"},
          {"instances", g.instances},
          {"max_rel_input", g.max_rel_input},
          {"max_rel_param", g.max_rel_param},
          {"max_rel_risk", g.max_rel_risk},
          {"max_exact_residual", g.max_exact_residual},
          {"pass", g.max_rel() < 1e-4 && g.max_exact_residual <= 1e-8}};
}

}  // namespace hjbpinn
