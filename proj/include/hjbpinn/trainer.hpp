#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hjbpinn/data.hpp"
#include "hjbpinn/error.hpp"
#include "hjbpinn/loss.hpp"
#include "hjbpinn/network.hpp"

namespace hjbpinn {

struct TrainConfig {
  int steps = 20000;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int record_every = 100;
  bool project_ball = false;
  RiskForm form = RiskForm::Supervised;
};

void validate(const TrainConfig& cfg);

struct TracePoint {
  int step = 0;
  RiskBreakdown risk;
  double accuracy = 0.0;  // 1 - risk.total
};

struct TrainTrace {
  std::vector<TracePoint> points;
  NetworkParams final_params;
};

/// Thrown when the risk becomes non-finite. Carries the trace up to and
/// including the offending step.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, TrainTrace trace) : Error(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const { return trace_; }

 private:
  TrainTrace trace_;
};

/// a ~ N(3, 1); W1, w2 entries ~ N(0, 1/(n+1)). radius <= 0 selects 10 sqrt(d_N).
NetworkParams init_network(int k, int n, std::uint64_t seed, ActivationKind activation = ActivationKind::Tanh,
                           double radius = 0.0);

/// Adam moments for one parameter vector.
struct AdamState {
  std::vector<double> m, v;
  int t = 0;
};

/// One bias-corrected Adam update of w in place.
void adam_step(std::span<double> w, std::span<const double> grad, AdamState& state, const TrainConfig& cfg);

/// Full-batch Adam on the empirical risk. The trace holds the risk before
/// the first update (step 0), every record_every updates and after the last.
TrainTrace train(const NetworkParams& p0, const Dataset& d, const LossWeights& w, const TrainConfig& cfg);

/// CSV with header step,pde_term,init_term,sup_term,total,accuracy.
void write_trace_csv(const TrainTrace& trace, std::ostream& os);

}  // namespace hjbpinn
