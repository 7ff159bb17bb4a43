#pragma once

#include <algorithm>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "litsilicon/analysis.hpp"

namespace lit {

enum class Agg { kMin, kMed, kMax };
std::string_view to_string(Agg agg);
Agg parse_agg(std::string_view text);

enum class UseCase { kGpuRed, kGpuRealloc, kCpuSlosh };
std::string_view to_string(UseCase use_case);
UseCase parse_use_case(std::string_view text);

// GPU-Red aligns leaders down to the straggler (max), GPU-Realloc to the
// middle of the node (med), CPU-Slosh up to the fastest GPU (min).
Agg aggregation_for(UseCase use_case);

// Aggregate of one column. Median of an even count is the mean of the two
// central values.
template <typename Derived>
typename Derived::Scalar aggregate_column(const Eigen::MatrixBase<Derived>& column, Agg agg) {
  using Scalar = typename Derived::Scalar;
  switch (agg) {
    case Agg::kMin:
      return column.minCoeff();
    case Agg::kMax:
      return column.maxCoeff();
    case Agg::kMed: {
      std::vector<Scalar> v(static_cast<std::size_t>(column.size()));
      for (Eigen::Index i = 0; i < column.size(); ++i) v[static_cast<std::size_t>(i)] = column(i);
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / Scalar(2);
    }
  }
  return column.maxCoeff();
}

// GPU x kernel durations plus the constant/varying partition of the columns.
struct PerfModelInput {
  Eigen::MatrixXd durations;
  std::vector<bool> constant;

  void check() const;
  std::vector<Eigen::Index> columns(bool constant_set) const;
};

// Sum over the kernels in `cols` of the aggregate across GPUs.
template <typename Derived>
typename Derived::Scalar t_agg(const Eigen::MatrixBase<Derived>& durations,
                               std::span<const Eigen::Index> cols, Agg agg) {
  if (cols.empty()) throw std::invalid_argument("t_agg over an empty kernel set");
  typename Derived::Scalar total(0);
  for (Eigen::Index c : cols) total += aggregate_column(durations.col(c), agg);
  return total;
}

double baseline_runtime(const PerfModelInput& input);

// Per-rank runtimes: every constant kernel's column is sorted ascending and
// rank r receives the r-th smallest duration. Result is non-decreasing.
Eigen::VectorXd rank_runtimes(const PerfModelInput& input);

struct PowerModelInput {
  double p_baseline_w = 0.0;
  double p_idle_w = 0.0;
  Eigen::VectorXd rank_runtimes;
  double t_agg_constant = 0.0;
  int gpu_count = 0;
};

struct ModelPrediction {
  Agg agg = Agg::kMax;
  double power_ratio = 1.0;
  double throughput_ratio = 1.0;
  double s_c = 1.0;
  double s_v = 1.0;
  double r_c = 0.0;
  double r_v = 0.0;
  double t_baseline = 0.0;
  Eigen::VectorXd delta;
  Eigen::VectorXd rank_power_w;
};

// Performance fields only.
ModelPrediction speedup(const PerfModelInput& input, Agg agg);

// Power fields only.
ModelPrediction power_ratio(const PowerModelInput& input);

PowerModelInput power_input(const PerfModelInput& input, Agg agg, double p_baseline_w,
                            double p_idle_w);

ModelPrediction predict(const PerfModelInput& input, Agg agg, double p_baseline_w,
                        double p_idle_w);

// Durations averaged over iterations; kernels partitioned by classify_overlap.
PerfModelInput model_input(std::span<const IterationTrace> traces,
                           double tau = kDefaultVaryingThreshold);

struct UseCasePrediction {
  UseCase use_case = UseCase::kGpuRed;
  ModelPrediction prediction;
  // Relative power saved (GPU-Red) or spent (otherwise), and relative
  // throughput gained, both as signed fractions.
  double power_benefit = 0.0;
  double throughput_benefit = 0.0;
};

UseCasePrediction predict_use_case(std::span<const IterationTrace> traces, UseCase use_case,
                                   double p_baseline_w, double p_idle_w,
                                   double tau = kDefaultVaryingThreshold);

void write_prediction_csv(std::ostream& out, std::span<const UseCasePrediction> rows);

// Dollars per year.
double cost_savings(double capacity_gw, double gpu_energy_fraction, double price_per_kwh,
                    double saving_fraction);

}  // namespace lit
