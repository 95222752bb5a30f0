#include "hjbpinn/loss.hpp"

#include <cmath>

#include "hjbpinn/error.hpp"
#include "hjbpinn/kernels.hpp"

namespace hjbpinn {

namespace {

RiskAndGradient evaluate(const NetworkParams& p, const Dataset& d, const LossWeights& w, RiskForm form,
                         bool want_grad) {
  validate(p);
  check_risk_inputs(p.n, d, w, form);
  const auto& kt = kernels::active();
  kernels::PackedNet packed(p);
  const auto& net = packed.view();
  const auto& ws = packed.scratch();
  std::vector<double> gbuf;
  kernels::GradView gv;
  if (want_grad) gv = packed.grad_view(gbuf);

  const bool noisy = form == RiskForm::Unsupervised;
  const auto n = static_cast<std::size_t>(p.n);
  std::vector<double> sq;
  std::vector<double> gx(n), g_gx(n);
  kernels::PointOut po;

  RiskAndGradient out;
  sq.reserve(d.n_colloc());
  const double cr = 2.0 / static_cast<double>(d.n_colloc());
  for (std::size_t i = 0; i < d.n_colloc(); ++i) {
    const double* x = d.colloc_x.data() + i * n;
    const double t = d.colloc_t[i];
    kt.derivs(net, x, t, ws, po, gx.data());
    double g2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) g2 += gx[j] * gx[j];
    const double r = po.dt - po.laplacian + g2;
    sq.push_back(r * r);
    if (want_grad) {
      const double c = cr * r;
      for (std::size_t j = 0; j < n; ++j) g_gx[j] = 2.0 * c * gx[j];
      kt.backprop(net, x, t, ws, 0.0, c, g_gx.data(), -c, gv);
    }
  }
  out.risk.pde = mean(sq);
  sq.clear();

  const double ci = 2.0 * w.lambda0 / static_cast<double>(d.n_init());
  for (std::size_t j = 0; j < d.n_init(); ++j) {
    const double* x = d.init_x.data() + j * n;
    const double r = kt.value(net, x, 0.0, ws) - (noisy ? d.init_y[j] : d.init_g[j]);
    sq.push_back(r * r);
    if (want_grad) kt.backprop_value(net, x, 0.0, ws, ci * r, gv);
  }
  out.risk.init = mean(sq);
  sq.clear();

  if (!noisy && d.n_sup() > 0) {
    const double cs = 2.0 * w.lambdas / static_cast<double>(d.n_sup());
    for (std::size_t i = 0; i < d.n_sup(); ++i) {
      const double* x = d.sup_x.data() + i * n;
      const double t = d.sup_t[i];
      const double r = kt.value(net, x, t, ws) - d.sup_y[i];
      sq.push_back(r * r);
      if (want_grad && cs != 0.0) kt.backprop_value(net, x, t, ws, cs * r, gv);
    }
    out.risk.sup = mean(sq);
  }
  out.risk.total = out.risk.pde + w.lambda0 * out.risk.init + (noisy ? 0.0 : w.lambdas * out.risk.sup);

  if (want_grad) {
    out.grad.assign(p.d_N(), 0.0);
    packed.add_to_flat(gbuf, out.grad);
  }
  return out;
}

}  // namespace

void validate(const LossWeights& w) {
  if (!(w.lambda0 > 0.0) || !std::isfinite(w.lambda0)) throw InvalidArgument("lambda0 must be finite and > 0");
  if (!(w.lambdas >= 0.0) || !std::isfinite(w.lambdas)) throw InvalidArgument("lambdas must be finite and >= 0");
}

void check_risk_inputs(int n, const Dataset& d, const LossWeights& w, RiskForm form) {
  validate(w);
  if (d.n != n) throw DimensionError("dataset dimension does not match the network");
  if (d.n_colloc() == 0) throw InvalidArgument("risk needs at least one collocation point");
  if (d.n_init() == 0) throw InvalidArgument("risk needs at least one initial-condition point");
  if (form == RiskForm::Supervised && w.lambdas > 0.0 && d.n_sup() == 0) {
    throw InvalidArgument("lambdas > 0 needs at least one supervision sample");
  }
  if (form == RiskForm::Unsupervised && !d.init_labeled()) {
    throw InvalidArgument("unsupervised risk needs labeled initial-condition points");
  }
}

RiskBreakdown empirical_risk(const NetworkParams& p, const Dataset& d, const LossWeights& w) {
  return evaluate(p, d, w, RiskForm::Supervised, false).risk;
}

RiskBreakdown empirical_risk_unsupervised(const NetworkParams& p, const Dataset& d, const LossWeights& w) {
  return evaluate(p, d, w, RiskForm::Unsupervised, false).risk;
}

std::vector<double> risk_gradient(const NetworkParams& p, const Dataset& d, const LossWeights& w) {
  return evaluate(p, d, w, RiskForm::Supervised, true).grad;
}

RiskAndGradient risk_and_gradient(const NetworkParams& p, const Dataset& d, const LossWeights& w, RiskForm form) {
  return evaluate(p, d, w, form, true);
}

}  // namespace hjbpinn
