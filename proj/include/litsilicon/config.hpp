#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "litsilicon/control.hpp"
#include "litsilicon/sim.hpp"

namespace lit {

inline constexpr std::string_view kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// Flat key set shared by every subcommand. Key names follow the evaluation
// knobs; see docs/config.md.
struct ExperimentConfig {
  // 1 is the calibrated single-straggler node, 0 the node whose hot GPUs
  // take turns straggling.
  int node = 1;
  std::string model = "llama3.1-8b";
  std::string fsdp = "v2";
  std::string precision = "bf16";
  std::string batch_seq = "b2s4";
  int iterations = 1000;
  int sampling_period = 10;
  int warm_up = 50;
  int window_size = 3;
  std::string aggregation = "sum";
  double max_adjustment = 15.0;
  std::string scale = "global";
  double power_cap = 700.0;
  double power_budget = 20.0;

  std::string use_case = "GPU-Red";
  std::uint64_t seed = 1;
  double tdp = 750.0;
  double min_cap = 200.0;
  int max_retries = 3;
  bool hold_on_convergence = true;
  double m_spread = 0.0;
  // Negative keeps the node's calibrated value.
  double overlap_penalty = -1.0;
  double jitter = 0.005;
  double telemetry_interval_ms = 50.0;
  double temp_noise_c = 0.2;
  double power_noise_w = 2.0;
  // Iterations dropped before a simulated trace is written, then every
  // trace_stride-th iteration is kept.
  int trace_skip = 0;
  int trace_stride = 1;
  double idle_power = 150.0;
  double overlap_tau = 0.10;

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// key=value; the value is parsed as JSON, falling back to a bare string.
void apply_knob(ExperimentConfig& config, std::string_view assignment);
std::vector<std::string> config_keys();

NodeConfig node_config(const ExperimentConfig& config);
ControllerConfig controller_config(const ExperimentConfig& config);
nlohmann::ordered_json knob_snapshot(const ExperimentConfig& config);
nlohmann::ordered_json workload_descriptor(const ExperimentConfig& config);

nlohmann::ordered_json manifest(const ExperimentConfig& config, std::string_view command);

}  // namespace lit
