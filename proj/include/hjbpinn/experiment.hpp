#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hjbpinn/data.hpp"
#include "hjbpinn/hjb.hpp"
#include "hjbpinn/loss.hpp"
#include "hjbpinn/trainer.hpp"

namespace hjbpinn {

struct SweepConfig {
  std::vector<int> widths{1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  /// One dataset (drawn from data_seed) for every run; otherwise each run draws its own.
  bool shared_dataset = true;
  std::uint64_t data_seed = 0;
  TrainConfig train;
  HjbProblem problem = unit_cube_problem(2);
  LossWeights weights;
  double sigma2 = 0.5;
  NoiseKind noise = NoiseKind::Uniform;
  ActivationKind activation = ActivationKind::Tanh;
  std::size_t N_r = 512;
  std::size_t N_0 = 256;
  std::size_t N_s = 3276;
  int jobs = 1;
  /// When set, records and traces are written here as runs finish.
  std::filesystem::path out_dir;
};

/// Desk scale: 5000 steps. Full scale: 20000 steps. Both record every 100.
SweepConfig desk_preset();
SweepConfig paper_preset();

void validate(const SweepConfig& cfg);

/// Seed of the network initialization for one (seed, width) run.
std::uint64_t run_seed(std::uint64_t seed, int k);

struct SweepRecord {
  int k = 0;
  std::int64_t d_N = 0;
  std::uint64_t seed = 0;
  RiskBreakdown final_risk;
  double accuracy = 0.0;
  bool crossed_sigma2 = false;  // final total < sigma2
  bool failed = false;
  std::string error;
  std::string trace_path;  // relative to the sweep directory
  std::vector<TracePoint> trace;
};

/// One trained run per (width, seed), ordered width-major. A diverged run is
/// kept as a failed record. Output files are byte-identical for any jobs value.
std::vector<SweepRecord> run_sweep(const SweepConfig& cfg);

struct WidthAggregate {
  int k = 0;
  std::int64_t d_N = 0;
  int runs = 0;  // successful runs
  double mean_accuracy = 0.0;
  double median_accuracy = 0.0;
  int crossed = 0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

struct SweepSummary {
  int records = 0;
  int failed = 0;
  double sigma2 = 0.0;
  std::vector<WidthAggregate> widths;
  /// Smallest d_N with at least one run whose final total is below sigma2.
  std::optional<std::int64_t> smallest_crossing_d_N;
  double plateau_tolerance = 0.01;
  /// First width whose mean accuracy is within plateau_tolerance (relative) of the best.
  std::int64_t plateau_d_N = 0;
  /// Mean accuracy against sqrt(d_N) over widths up to the plateau.
  LinearFit sqrt_fit;
  /// Spearman of mean accuracy against d_N over widths up to the plateau.
  double spearman = 0.0;
  /// Diagnostics: the same statistic on per-width medians and on individual runs.
  double spearman_median = 0.0;
  double spearman_runs = 0.0;
};

/// Throws InvalidArgument for fewer than 3 records or no successful run.
SweepSummary analyze_sweep(const std::vector<SweepRecord>& records, double sigma2);

/// Spearman rank correlation with average ranks for ties; NaN for fewer than 2 points or zero variance.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::json to_json(const SweepSummary& s);

/// Columns k,d_N,seed,pde_term,init_term,sup_term,total,accuracy,crossed_sigma2,status,trace_path.
void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& os);
/// Reads sweep.csv and, when present, each run's trace file from dir.
std::vector<SweepRecord> read_sweep_dir(const std::filesystem::path& dir);

struct Fig1Point {
  std::int64_t d_N = 0;
  double accuracy = 0.0;
  bool is_final = false;
  int step = 0;
  int k = 0;
  std::uint64_t seed = 0;
};

std::vector<Fig1Point> fig1_points(const std::vector<SweepRecord>& records);

/// Writes fig1.csv (d_N,accuracy,is_final,step,k,seed,reference with
/// reference = 1 - sigma2) and, when svg is set, a scatter plot.
void emit_fig1_data(const std::vector<SweepRecord>& records, double sigma2, const std::filesystem::path& csv_path,
                    const std::optional<std::filesystem::path>& svg_path = std::nullopt);

std::vector<Fig1Point> read_fig1_csv(const std::filesystem::path& csv_path);

}  // namespace hjbpinn
