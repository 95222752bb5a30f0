#pragma once

#include <span>
#include <vector>

#include "hjbpinn/data.hpp"
#include "hjbpinn/hjb.hpp"
#include "hjbpinn/network.hpp"
#include "hjbpinn/numeric.hpp"

namespace hjbpinn {

/// lambda0 > 0, lambdas >= 0; lambdas = 0 drops the supervised term.
struct LossWeights {
  double lambda0 = 0.3;
  double lambdas = 0.5;
};

void validate(const LossWeights& w);

/// Unweighted per-term means; total = pde + lambda0 * init + lambdas * sup.
struct RiskBreakdown {
  double pde = 0.0;
  double init = 0.0;
  double sup = 0.0;
  double total = 0.0;
};

enum class RiskForm {
  Supervised,    // initial term against g(x_0j), plus noisy supervision
  Unsupervised,  // initial term against noisy labels y_0j, no supervision
};

RiskBreakdown empirical_risk(const NetworkParams& p, const Dataset& d, const LossWeights& w);

/// Throws InvalidArgument when the initial points carry no labels.
RiskBreakdown empirical_risk_unsupervised(const NetworkParams& p, const Dataset& d, const LossWeights& w);

std::vector<double> risk_gradient(const NetworkParams& p, const Dataset& d, const LossWeights& w);

struct RiskAndGradient {
  RiskBreakdown risk;
  std::vector<double> grad;  // d total / d weights, flat order
};

RiskAndGradient risk_and_gradient(const NetworkParams& p, const Dataset& d, const LossWeights& w,
                                  RiskForm form = RiskForm::Supervised);

/// Throws when a term required by the form and weights is empty or the
/// dataset dimension differs from n.
void check_risk_inputs(int n, const Dataset& d, const LossWeights& w, RiskForm form);

/// Risk of an arbitrary model given as a callable (x, t) -> NetDerivatives.
/// Uses the same reduction order as empirical_risk.
template <class Model>
RiskBreakdown empirical_risk_of(const Model& model, const Dataset& d, const LossWeights& w,
                                RiskForm form = RiskForm::Supervised) {
  check_risk_inputs(d.n, d, w, form);
  std::vector<double> sq;
  sq.reserve(d.n_colloc());
  for (std::size_t i = 0; i < d.n_colloc(); ++i) {
    const double r = pde_residual(model(d.colloc_point(i), d.colloc_t[i]));
    sq.push_back(r * r);
  }
  RiskBreakdown out;
  out.pde = mean(sq);
  sq.clear();
  const bool noisy = form == RiskForm::Unsupervised;
  for (std::size_t j = 0; j < d.n_init(); ++j) {
    const double r = model(d.init_point(j), 0.0).value - (noisy ? d.init_y[j] : d.init_g[j]);
    sq.push_back(r * r);
  }
  out.init = mean(sq);
  sq.clear();
  if (!noisy) {
    for (std::size_t i = 0; i < d.n_sup(); ++i) {
      const double r = model(d.sup_point(i), d.sup_t[i]).value - d.sup_y[i];
      sq.push_back(r * r);
    }
    out.sup = mean(sq);
  }
  out.total = out.pde + w.lambda0 * out.init + (noisy ? 0.0 : w.lambdas * out.sup);
  return out;
}

/// The closed-form solution viewed as a model.
struct ExactSolutionModel {
  NetDerivatives operator()(std::span<const double> x, double t) const { return exact_derivatives(x, t); }
};

}  // namespace hjbpinn
