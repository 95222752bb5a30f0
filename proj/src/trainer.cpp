#include "hjbpinn/trainer.hpp"

#include <cmath>
#include <ostream>

#include "hjbpinn/io.hpp"
#include "hjbpinn/rng.hpp"

namespace hjbpinn {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;

TracePoint make_point(int step, const RiskBreakdown& r) { return {step, r, 1.0 - r.total}; }

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.steps < 1) throw InvalidArgument("steps must be >= 1");
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw InvalidArgument("lr must be finite and >= 0");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0)) throw InvalidArgument("adam_beta1 must lie in [0, 1)");
  if (!(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) throw InvalidArgument("adam_beta2 must lie in [0, 1)");
  if (!(cfg.adam_eps > 0.0)) throw InvalidArgument("adam_eps must be > 0");
  if (cfg.record_every < 1) throw InvalidArgument("record_every must be >= 1");
}

NetworkParams init_network(int k, int n, std::uint64_t seed, ActivationKind activation, double radius) {
  if (k < 1 || n < 1) throw InvalidArgument("k and n must be >= 1");
  Rng rng(seed, kInitStream);
  std::vector<double> a(static_cast<std::size_t>(k));
  for (double& v : a) v = rng.normal(3.0, 1.0);
  const double d_N = static_cast<double>(k) * static_cast<double>(n + 1);
  NetworkParams p = make_network(k, n, activation, std::move(a), radius > 0.0 ? radius : 10.0 * std::sqrt(d_N));
  const double sd = 1.0 / std::sqrt(static_cast<double>(n + 1));
  for (double& v : p.W1) v = rng.normal(0.0, sd);
  for (double& v : p.w2) v = rng.normal(0.0, sd);
  return p;
}

void adam_step(std::span<double> w, std::span<const double> grad, AdamState& s, const TrainConfig& cfg) {
  if (grad.size() != w.size()) throw DimensionError("gradient and weights differ in length");
  if (s.m.size() != w.size()) {
    s.m.assign(w.size(), 0.0);
    s.v.assign(w.size(), 0.0);
    s.t = 0;
  }
  ++s.t;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, s.t);
  const double c2 = 1.0 - std::pow(b2, s.t);
  for (std::size_t i = 0; i < w.size(); ++i) {
    s.m[i] = b1 * s.m[i] + (1.0 - b1) * grad[i];
    s.v[i] = b2 * s.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

TrainTrace train(const NetworkParams& p0, const Dataset& d, const LossWeights& w, const TrainConfig& cfg) {
  validate(cfg);
  validate(p0);
  check_risk_inputs(p0.n, d, w, cfg.form);
  TrainTrace trace;
  NetworkParams p = p0;
  std::vector<double> flat = flatten_weights(p);
  AdamState adam;
  for (int step = 0;; ++step) {
    const RiskAndGradient rg = risk_and_gradient(p, d, w, cfg.form);
    const bool finite = std::isfinite(rg.risk.total);
    if (!finite || step % cfg.record_every == 0 || step == cfg.steps) {
      trace.points.push_back(make_point(step, rg.risk));
    }
    if (!finite) {
      trace.final_params = p;
      throw TrainingDiverged("non-finite risk at step " + std::to_string(step), std::move(trace));
    }
    if (step == cfg.steps) break;
    adam_step(flat, rg.grad, adam, cfg);
    assign_weights(p, flat);
    if (cfg.project_ball) {
      p = project_to_ball(std::move(p));
      flat = flatten_weights(p);
    }
  }
  trace.final_params = std::move(p);
  return trace;
}

void write_trace_csv(const TrainTrace& trace, std::ostream& os) {
  os << "step,pde_term,init_term,sup_term,total,accuracy\n";
  for (const auto& pt : trace.points) {
    os << pt.step << ',' << fmt_double(pt.risk.pde) << ',' << fmt_double(pt.risk.init) << ','
       << fmt_double(pt.risk.sup) << ',' << fmt_double(pt.risk.total) << ',' << fmt_double(pt.accuracy) << '\n';
  }
}

}  // namespace hjbpinn
