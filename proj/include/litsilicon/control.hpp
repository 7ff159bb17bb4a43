#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "litsilicon/analysis.hpp"
#include "litsilicon/models.hpp"
#include "litsilicon/sim.hpp"

namespace lit {

// Caps are integral watts.
inline constexpr int kSteadyWindows = 3;

struct CapVector {
  Eigen::VectorXd caps_w;
  std::optional<double> node_cap_w;
  double tdp_w = 750.0;

  double total() const { return caps_w.sum(); }
};

enum class Scale { kGlobal, kLocal };
std::string_view to_string(Scale scale);
Scale parse_scale(std::string_view text);

struct ControllerConfig {
  int iterations = 1000;
  int sampling_period = 10;
  int warm_up = 50;
  int window_size = 3;
  LeadAggregation aggregation = LeadAggregation::kSum;
  double max_adjustment_w = 15.0;
  Scale scale = Scale::kGlobal;
  UseCase use_case = UseCase::kGpuRed;
  double initial_cap_w = 700.0;
  // Added to every GPU's share of the node cap under CPU-Slosh.
  double slosh_budget_w = 20.0;
  double tdp_w = 750.0;
  double min_cap_w = 200.0;
  int max_retries = 3;
  // Stop adjusting once caps hold within 1 W for kSteadyWindows windows.
  bool hold_on_convergence = true;

  void validate() const;
  int samples() const { return iterations / sampling_period; }
};

class InfeasibleCaps : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PowerIncrease {
  Eigen::VectorXd increase_w;
  double global_max = 0.0;
};

// Increase per GPU proportional to how far it trails the leaders. Degenerate
// leads count as fully trailing.
PowerIncrease inc_power_gpu(const Eigen::VectorXd& leads, double max_inc_w, double global_max,
                            Scale scale);

// Adds the increase, then lowers every cap by the same amount until the node
// cap and TDP hold. Throws InfeasibleCaps, leaving nothing applied, when the
// node cap cannot cover min_cap_w on every GPU.
CapVector adj_power_node(const Eigen::VectorXd& increase_w, const CapVector& caps,
                         double min_cap_w = 0.0);

// Cap change per GPU: the increase minus the largest increase.
Eigen::VectorXd gpu_red_deltas(const Eigen::VectorXd& increase_w);

struct RedResult {
  CapVector caps;
  double global_max = 0.0;
};

// Leaders give up power in proportion to their lead; the GPU with the largest
// increase keeps its cap. Increases are rounded to whole watts first.
RedResult apply_gpu_red(const Eigen::VectorXd& leads, const CapVector& caps, double max_inc_w,
                        double global_max, Scale scale);

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PowerBackend {
 public:
  virtual ~PowerBackend() = default;
  virtual int gpu_count() const = 0;
  // Advances the workload by one sampling period and returns its last
  // iteration.
  virtual IterationTrace sample_iteration() = 0;
  virtual void set_caps(const CapVector& caps) = 0;
  // Mean power per GPU over the most recent sampling period.
  virtual Eigen::VectorXd read_power() = 0;
};

class SimulatedBackend : public PowerBackend {
 public:
  SimulatedBackend(NodeConfig config, double initial_cap_w, int sampling_period);

  int gpu_count() const override { return sim_.config().gpu_count; }
  IterationTrace sample_iteration() override;
  void set_caps(const CapVector& caps) override;
  Eigen::VectorXd read_power() override { return power_; }

  // Mean core frequency over the most recent sampling period.
  const Eigen::VectorXd& read_frequency() const { return freq_; }
  const NodeSimulator& simulator() const { return sim_; }

 private:
  NodeSimulator sim_;
  int period_;
  Eigen::VectorXd power_;
  Eigen::VectorXd freq_;
};

struct RunLogRow {
  int sample = 0;
  int iteration = 0;
  Eigen::VectorXd caps_w;
  Eigen::VectorXd leads_ns;
  Eigen::VectorXd power_w;
  Eigen::VectorXd freq_ghz;
  double node_power_w = 0.0;
  double throughput = 0.0;
  bool adjusted = false;
  bool converged = false;
};

struct RunLog {
  int gpu_count = 0;
  UseCase use_case = UseCase::kGpuRed;
  std::vector<RunLogRow> rows;
  CapVector final_caps;
  std::optional<int> first_adjustment;
  std::optional<int> converged_at;
};

RunLog control_loop(PowerBackend& backend, const ControllerConfig& config);

struct ConvergenceReport {
  // Samples counted from the first adjustment (from the first sample when
  // no adjustment happened). Empty when the series never settles.
  std::optional<int> power_convergence;
  std::optional<int> throughput_convergence;
  double power_cv = 0.0;
  double throughput_cv = 0.0;
  double power_change = 0.0;
  double throughput_change = 0.0;
  double baseline_power_w = 0.0;
  double final_power_w = 0.0;
  double baseline_throughput = 0.0;
  double final_throughput = 0.0;
};

inline constexpr int kSettleSamples = 5;
inline constexpr double kPowerBand = 0.005;
inline constexpr double kThroughputFraction = 0.995;

// First index from which every sample stays within kPowerBand of the mean of
// the last kSettleSamples samples.
std::optional<int> power_convergence(std::span<const double> series);
// First index reaching kThroughputFraction of the peak.
std::optional<int> throughput_convergence(std::span<const double> series);
double coefficient_of_variation(std::span<const double> series);
std::vector<double> rolling_mean(std::span<const double> series, int window);

ConvergenceReport convergence_metrics(const RunLog& log, int rolling_window = 1);

void write_run_log_csv(std::ostream& out, const RunLog& log);

}  // namespace lit
