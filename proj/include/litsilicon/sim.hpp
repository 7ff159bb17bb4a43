#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "litsilicon/trace.hpp"

namespace lit {

struct GpuModel {
  double idle_power_w = 150.0;
  // Active power per GHz.
  double power_coeff_m = 200.0;
  double thermal_resistance_k_per_w = 0.057;
  double thermal_tau_s = 20.0;
  double ambient_c = 30.0;
  double throttle_start_c = 95.0;
  double throttle_slope_ghz_per_c = 0.02;
  double f_min_ghz = 0.5;
  double f_max_ghz = 2.1;
  // Static power that grows with temperature above ambient.
  double leakage_w_per_c = 0.0;

  void validate() const;
};

struct GpuState {
  double temperature_c = 0.0;
  double frequency_ghz = 0.0;
  double power_w = 0.0;
  double power_cap_w = 0.0;
  double clock_ns = 0.0;
};

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double leakage_power(const GpuModel& model, double temperature_c);
double active_power(const GpuModel& model, double frequency_ghz, double temperature_c);

// Highest frequency allowed by the cap and by thermal throttling.
double step_frequency(const GpuModel& model, double cap_w, double temperature_c);

// First-order thermal plant, exact over dt_s for constant power.
double step_thermal(const GpuModel& model, double temperature_c, double power_w, double dt_s);

struct OpSpec {
  std::string name;
  KernelKind kind = KernelKind::kCompute;
  double giga_cycles = 0.0;
};

struct WorkloadSpec {
  std::string model = "llama3.1-8b";
  std::string fsdp = "v2";
  std::string precision = "bf16";
  std::string batch_seq = "b2s4";
  int layers = 32;
  std::vector<OpSpec> forward_ops;
  std::vector<OpSpec> backward_ops;
  // Per-layer all-gather and reduce-scatter durations.
  std::int64_t ag_ns = 0;
  std::int64_t rs_ns = 0;
  // Exposed all-gather at iteration start and reduce-scatter at its end.
  std::int64_t head_ag_ns = 0;
  std::int64_t tail_rs_ns = 0;
  double beta = 0.19;
  // Relative standard deviation of per-kernel work.
  double jitter = 0.005;

  void validate() const;
};

// Transformer layer sharded with FSDP. Unknown knob values throw std::invalid_argument.
WorkloadSpec make_workload(const std::string& model, const std::string& fsdp,
                           const std::string& precision, const std::string& batch_seq);

struct ProgramKernel {
  std::string name;
  int layer = 0;
  Phase phase = Phase::kForward;
  KernelKind kind = KernelKind::kCompute;
  double giga_cycles = 0.0;
  int kernel_index = 0;
  // Collective that must end before this kernel starts, or -1.
  int gate = -1;
  // Collectives issued when this kernel completes.
  std::vector<int> issues;
};

struct ProgramCollective {
  std::string name;
  int layer = 0;
  Phase phase = Phase::kForward;
  std::int64_t duration_ns = 0;
  int kernel_index = 0;
  // Position in the kernel list of the anchor kernel; -1 issues at start.
  int anchor = -1;
};

// One iteration's kernel sequence, identical on every GPU. Collectives run
// in id order on a single communication lane per GPU.
struct Program {
  std::vector<ProgramKernel> kernels;
  std::vector<ProgramCollective> collectives;
  std::vector<int> start_issues;

  int kernel_count() const {
    return static_cast<int>(kernels.size() + collectives.size());
  }
};

Program build_program(const WorkloadSpec& workload);

struct NodeConfig {
  int gpu_count = 8;
  std::vector<GpuModel> gpus;
  WorkloadSpec workload;
  int iterations = 1000;
  std::uint64_t seed = 1;
  std::int64_t telemetry_interval_ns = 50'000'000;
  double temp_noise_c = 0.2;
  double power_noise_w = 2.0;

  void validate() const;
};

// Thermal layout of a node, expressed through the targets it must meet at
// the reference cap. Thermal resistances are solved from these.
struct NodeRecipe {
  // Steady-state frequency of each GPU relative to the slowest one.
  std::vector<double> freq_ratio;
  // Temperature above ambient of the hottest GPU relative to the coolest.
  double temp_ratio = 1.155;
  double reference_cap_w = 700.0;
  double coolest_resistance_k_per_w = 0.057;
  // f_max relative to the fastest GPU's steady-state frequency.
  double f_max_headroom = 0.014;
  GpuModel base;
  WorkloadSpec workload;
};

NodeRecipe default_recipe();
// Hottest GPUs nearly tied.
NodeRecipe node0_recipe();
NodeConfig build_node(const NodeRecipe& recipe);

// Shipped 8-GPU node with a single thermally induced straggler.
NodeConfig calibrate_default_node();
// Node whose hottest GPUs are nearly tied and take turns straggling.
NodeConfig node0_preset();
// Scales power_coeff_m by 1 + spread * h, h in [0, 1] the GPU's relative
// thermal resistance, so hotter GPUs cost more power per GHz.
void apply_m_spread(NodeConfig& config, double spread);

struct IterationResult {
  IterationTrace trace;
  std::int64_t start_ns = 0;
  std::int64_t wall_ns = 0;
  // Time-averaged power per GPU over the iteration.
  Eigen::VectorXd mean_power_w;
  Eigen::VectorXd mean_freq_ghz;
};

// Deterministic node simulator. Caps persist across iterations; thermal and
// DVFS state evolves on the telemetry grid.
class NodeSimulator {
 public:
  NodeSimulator(NodeConfig config, double initial_cap_w);
  NodeSimulator(NodeConfig config, std::vector<double> initial_caps);

  // Runs the next iteration. Kernel events are recorded only when
  // record_events is set; telemetry is always recorded.
  IterationResult run_iteration(bool record_events = true);

  void set_caps(std::span<const double> caps_w);
  std::span<const double> caps() const { return caps_; }
  const std::vector<GpuState>& states() const { return states_; }
  const NodeConfig& config() const { return config_; }
  const Program& program() const { return program_; }
  int next_iteration() const { return iteration_; }
  double now_ns() const { return now_ns_; }

 private:
  void refresh(int g);
  void accumulate(int g, double t_ns);
  void advance_plant(int g, double t_ns, int iteration, std::vector<TelemetrySample>& out);
  double tick_time(int g) const;

  NodeConfig config_;
  Program program_;
  std::vector<double> caps_;
  std::vector<GpuState> states_;
  // Energy accumulated in the current telemetry window and when it was last
  // brought up to date.
  std::vector<double> window_energy_j_;
  std::vector<double> window_mark_ns_;
  std::vector<double> iteration_energy_j_;
  std::vector<double> iteration_freq_ns_;
  std::vector<std::int64_t> next_tick_;
  std::vector<std::mt19937_64> sensor_rng_;
  double now_ns_ = 0.0;
  int iteration_ = 0;
};

// Runs config.iterations iterations at a fixed cap and returns every
// `stride`-th iteration, starting after `skip` iterations.
std::vector<IterationTrace> simulate(const NodeConfig& config, double cap_w, int skip = 0,
                                     int stride = 1);

}  // namespace lit
