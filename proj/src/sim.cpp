#include "litsilicon/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace lit {

namespace {

constexpr double kUnknown = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool known(double t) { return !std::isnan(t); }

}  // namespace

void GpuModel::validate() const {
  if (!(idle_power_w > 0 && power_coeff_m > 0 && thermal_resistance_k_per_w > 0 &&
        thermal_tau_s > 0 && ambient_c > 0 && throttle_start_c > 0 &&
        throttle_slope_ghz_per_c > 0 && f_min_ghz > 0 && f_max_ghz > 0)) {
    throw std::invalid_argument("gpu model parameters must be positive");
  }
  if (!(f_min_ghz < f_max_ghz)) throw std::invalid_argument("gpu model needs f_min < f_max");
  if (!(throttle_start_c > ambient_c)) {
    throw std::invalid_argument("gpu model needs throttle_start > ambient");
  }
  if (leakage_w_per_c < 0) throw std::invalid_argument("leakage must be non-negative");
}

double leakage_power(const GpuModel& model, double temperature_c) {
  return model.leakage_w_per_c * std::max(0.0, temperature_c - model.ambient_c);
}

double active_power(const GpuModel& model, double frequency_ghz, double temperature_c) {
  return model.power_coeff_m * frequency_ghz + model.idle_power_w +
         leakage_power(model, temperature_c);
}

double step_frequency(const GpuModel& model, double cap_w, double temperature_c) {
  if (!(cap_w > model.idle_power_w)) {
    throw std::invalid_argument("power cap " + std::to_string(cap_w) +
                                " W does not exceed idle power");
  }
  const double f_cap =
      (cap_w - model.idle_power_w - leakage_power(model, temperature_c)) / model.power_coeff_m;
  const double f_thermal =
      model.f_max_ghz -
      model.throttle_slope_ghz_per_c * std::max(0.0, temperature_c - model.throttle_start_c);
  return std::clamp(std::min(f_cap, f_thermal), model.f_min_ghz, model.f_max_ghz);
}

double step_thermal(const GpuModel& model, double temperature_c, double power_w, double dt_s) {
  if (!(dt_s > 0)) throw std::invalid_argument("thermal step needs dt > 0");
  const double target = model.ambient_c + model.thermal_resistance_k_per_w * power_w;
  return temperature_c + (target - temperature_c) * -std::expm1(-dt_s / model.thermal_tau_s);
}

void WorkloadSpec::validate() const {
  if (layers < 1) throw std::invalid_argument("workload needs at least one layer");
  if (forward_ops.empty() || backward_ops.empty()) {
    throw std::invalid_argument("workload needs forward and backward ops");
  }
  for (const auto* ops : {&forward_ops, &backward_ops}) {
    for (const auto& op : *ops) {
      if (!(op.giga_cycles > 0)) throw std::invalid_argument("op " + op.name + " needs work > 0");
      if (op.kind == KernelKind::kCommunication) {
        throw std::invalid_argument("op " + op.name + " must be compute or vector");
      }
    }
  }
  if (ag_ns <= 0 || rs_ns <= 0 || head_ag_ns <= 0 || tail_rs_ns <= 0) {
    throw std::invalid_argument("collective durations must be positive");
  }
  if (beta < 0 || beta > 1) throw std::invalid_argument("beta must lie in [0, 1]");
  if (jitter < 0 || jitter > 0.1) throw std::invalid_argument("jitter must lie in [0, 0.1]");
}

WorkloadSpec make_workload(const std::string& model, const std::string& fsdp,
                           const std::string& precision, const std::string& batch_seq) {
  struct Shape {
    double hidden, ffn, heads, kv_heads, vocab, window;
    int layers;
  };
  Shape shape{};
  if (model == "llama3.1-8b") {
    shape = {4096, 14336, 32, 8, 128256, 0, 32};
  } else if (model == "mistral-7b") {
    shape = {4096, 14336, 32, 8, 32000, 4096, 32};
  } else {
    throw std::invalid_argument("unknown model '" + model + "'");
  }
  if (fsdp != "v1" && fsdp != "v2") throw std::invalid_argument("unknown fsdp '" + fsdp + "'");
  if (precision != "bf16" && precision != "fp8") {
    throw std::invalid_argument("unknown precision '" + precision + "'");
  }
  static const std::map<std::string, std::pair<double, double>> kBatchSeq = {
      {"b1s4", {1, 4096}}, {"b2s4", {2, 4096}}, {"b4s4", {4, 4096}},
      {"b1s8", {1, 8192}}, {"b2s8", {2, 8192}}};
  const auto bs = kBatchSeq.find(batch_seq);
  if (bs == kBatchSeq.end()) throw std::invalid_argument("unknown batch_seq '" + batch_seq + "'");
  const auto [batch, seq] = bs->second;

  const double h = shape.hidden;
  const double tokens = batch * seq;
  const double head_dim = h / shape.heads;
  const double kv = 2 * shape.kv_heads * head_dim;
  const double attended = shape.window > 0 ? std::min(seq, shape.window) : seq;

  // Sustained GEMM throughput per cycle; fp8 doubles it for the projections.
  constexpr double kGflopPerGcycle = 2.0e5;
  const double gemm_speed = precision == "fp8" ? 2.0 : 1.0;
  auto gemm = [&](double gflop) { return gflop / (kGflopPerGcycle * gemm_speed); };
  auto attn = [&](double gflop) { return gflop / kGflopPerGcycle; };
  // Memory-bound element-wise kernels.
  constexpr double kGcyclePerElement = 9e-12;
  auto vec = [&](double elements) { return elements * kGcyclePerElement; };

  const double qkv = 2 * tokens * h * (h + kv) / 1e9;
  const double fa = 2 * batch * seq * attended * h / 1e9;
  const double op = 2 * tokens * h * h / 1e9;
  const double mlp = 2 * tokens * h * shape.ffn / 1e9;

  WorkloadSpec w;
  w.model = model;
  w.fsdp = fsdp;
  w.precision = precision;
  w.batch_seq = batch_seq;
  w.layers = shape.layers;
  w.forward_ops = {
      {"f_norm1", KernelKind::kVector, vec(tokens * h)},
      {"f_qkv_ip", KernelKind::kCompute, gemm(qkv)},
      {"f_attn_fa", KernelKind::kCompute, attn(fa)},
      {"f_attn_op", KernelKind::kCompute, gemm(op)},
      {"f_norm2", KernelKind::kVector, vec(tokens * h)},
      {"f_mlp_gp", KernelKind::kCompute, gemm(mlp)},
      {"f_mlp_up", KernelKind::kCompute, gemm(mlp)},
      {"f_act", KernelKind::kVector, vec(tokens * shape.ffn)},
      {"f_mlp_dp", KernelKind::kCompute, gemm(mlp)},
  };
  w.backward_ops = {
      {"b_mlp_dp", KernelKind::kCompute, 2 * gemm(mlp)},
      {"b_act", KernelKind::kVector, 2 * vec(tokens * shape.ffn)},
      {"b_mlp_up", KernelKind::kCompute, 2 * gemm(mlp)},
      {"b_mlp_gp", KernelKind::kCompute, 2 * gemm(mlp)},
      {"b_norm2", KernelKind::kVector, 2 * vec(tokens * h)},
      {"b_attn_op", KernelKind::kCompute, 2 * gemm(op)},
      {"b_attn_fa", KernelKind::kCompute, 2.5 * attn(fa)},
      {"b_qkv_ip", KernelKind::kCompute, 2 * gemm(qkv)},
      {"b_norm1", KernelKind::kVector, 2 * vec(tokens * h)},
  };

  // Collective durations follow parameter bytes; FSDP v1 moves padded flat
  // parameters through an extra copy.
  const double layer_params = h * (h + kv) + h * h + 3 * h * shape.ffn;
  const double bytes_per_ns = fsdp == "v1" ? 100.0 : 110.0;
  constexpr double kShard = 7.0 / 8.0;
  const double ag = layer_params * 2 * kShard / bytes_per_ns;
  w.ag_ns = static_cast<std::int64_t>(std::llround(ag));
  w.rs_ns = static_cast<std::int64_t>(std::llround(ag * 1.1));
  // Embedding and optimizer-state collectives at the iteration boundary,
  // serialized with the step's host synchronization.
  const double embed = shape.vocab * h * 2 * kShard / bytes_per_ns;
  w.head_ag_ns = static_cast<std::int64_t>(std::llround(embed + 150e6));
  w.tail_rs_ns = static_cast<std::int64_t>(std::llround(embed + 250e6));
  w.beta = 0.19;
  return w;
}

Program build_program(const WorkloadSpec& workload) {
  workload.validate();
  Program p;
  const int layers = workload.layers;
  auto add_collective = [&](const std::string& name, int layer, Phase phase,
                            std::int64_t duration, int anchor) {
    p.collectives.push_back({name, layer, phase, duration, 0, anchor});
    return static_cast<int>(p.collectives.size()) - 1;
  };
  auto add_kernel = [&](const OpSpec& op, int layer, Phase phase, int gate) {
    p.kernels.push_back({op.name, layer, phase, op.kind, op.giga_cycles, 0, gate, {}});
    return static_cast<int>(p.kernels.size()) - 1;
  };

  // Forward: all-gather of layer l+1 is prefetched once layer l starts.
  std::vector<int> fwd_ag(static_cast<std::size_t>(layers), -1);
  fwd_ag[0] = add_collective("f_ag", 0, Phase::kForward, workload.head_ag_ns, -1);
  p.start_issues.push_back(fwd_ag[0]);
  for (int l = 0; l < layers; ++l) {
    for (std::size_t i = 0; i < workload.forward_ops.size(); ++i) {
      const auto& op = workload.forward_ops[i];
      const int gate = (i == 1) ? fwd_ag[static_cast<std::size_t>(l)] : -1;
      const int k = add_kernel(op, l, Phase::kForward, gate);
      if (i == 0 && l + 1 < layers) {
        const int c = add_collective("f_ag", l + 1, Phase::kForward, workload.ag_ns, k);
        fwd_ag[static_cast<std::size_t>(l + 1)] = c;
        p.kernels[static_cast<std::size_t>(k)].issues.push_back(c);
      }
    }
  }

  // Backward runs layers in reverse. The last layer keeps its parameters;
  // every other layer's all-gather is prefetched one layer ahead and queued
  // behind the previous layer's gradient reduce-scatter.
  std::vector<int> bwd_ag(static_cast<std::size_t>(layers), -1);
  int anchor = static_cast<int>(p.kernels.size()) - 1;
  if (layers >= 2) {
    const int c = add_collective("b_ag", layers - 2, Phase::kBackward, workload.ag_ns, anchor);
    bwd_ag[static_cast<std::size_t>(layers - 2)] = c;
    p.kernels[static_cast<std::size_t>(anchor)].issues.push_back(c);
  }
  for (int l = layers - 1; l >= 0; --l) {
    int last = -1;
    for (std::size_t i = 0; i < workload.backward_ops.size(); ++i) {
      const int gate = (i == 0) ? bwd_ag[static_cast<std::size_t>(l)] : -1;
      last = add_kernel(workload.backward_ops[i], l, Phase::kBackward, gate);
    }
    auto& tail = p.kernels[static_cast<std::size_t>(last)];
    const std::int64_t rs = l == 0 ? workload.tail_rs_ns : workload.rs_ns;
    tail.issues.push_back(add_collective("b_rs", l, Phase::kBackward, rs, last));
    if (l >= 2) {
      const int c = add_collective("b_ag", l - 2, Phase::kBackward, workload.ag_ns, last);
      bwd_ag[static_cast<std::size_t>(l - 2)] = c;
      tail.issues.push_back(c);
    }
  }

  // Positional kernel indices: start collectives, then each kernel followed
  // by the collectives it issues.
  int index = 0;
  for (int c : p.start_issues) p.collectives[static_cast<std::size_t>(c)].kernel_index = index++;
  for (auto& k : p.kernels) {
    k.kernel_index = index++;
    for (int c : k.issues) p.collectives[static_cast<std::size_t>(c)].kernel_index = index++;
  }
  return p;
}

namespace {

// Issue order must match the communication lane's FIFO order.
void check_program(const Program& p) {
  int expected = 0;
  for (int c : p.start_issues) {
    if (c != expected++) throw SimError("deadlock: start collectives out of lane order");
  }
  for (const auto& k : p.kernels) {
    for (int c : k.issues) {
      if (c != expected++) throw SimError("deadlock: collective " + std::to_string(c) +
                                          " issued out of lane order");
    }
  }
  if (expected != static_cast<int>(p.collectives.size())) {
    throw SimError("deadlock: a collective is never issued");
  }
  int issued = static_cast<int>(p.start_issues.size());
  for (const auto& k : p.kernels) {
    if (k.gate >= issued) {
      throw SimError("deadlock: kernel " + k.name + " waits for collective " +
                     std::to_string(k.gate) + " issued after it");
    }
    issued += static_cast<int>(k.issues.size());
  }
}

}  // namespace

void NodeConfig::validate() const {
  if (gpu_count < 2) throw std::invalid_argument("gpu_count must be at least 2");
  if (static_cast<int>(gpus.size()) != gpu_count) {
    throw std::invalid_argument("one gpu model per GPU is required");
  }
  for (const auto& g : gpus) g.validate();
  workload.validate();
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (telemetry_interval_ns <= 0) throw std::invalid_argument("telemetry interval must be > 0");
  if (temp_noise_c < 0 || power_noise_w < 0) throw std::invalid_argument("noise must be >= 0");
}

NodeRecipe default_recipe() {
  NodeRecipe r;
  // GPU 5 is the straggler; GPU 2 runs coolest.
  r.freq_ratio = {1.053, 1.046, 1.062, 1.050, 1.059, 1.000, 1.056, 1.042};
  r.base.idle_power_w = 150.0;
  r.base.power_coeff_m = 200.0;
  r.base.thermal_tau_s = 20.0;
  r.base.ambient_c = 30.0;
  r.base.throttle_start_c = 95.0;
  r.base.throttle_slope_ghz_per_c = 0.02;
  r.base.f_min_ghz = 0.5;
  r.workload = make_workload("llama3.1-8b", "v2", "bf16", "b2s4");
  r.workload.beta = 0.28;
  return r;
}

NodeConfig build_node(const NodeRecipe& recipe) {
  if (recipe.freq_ratio.size() < 2) throw std::invalid_argument("recipe needs two GPUs");
  const double slowest = *std::min_element(recipe.freq_ratio.begin(), recipe.freq_ratio.end());
  const double fastest =
      *std::max_element(recipe.freq_ratio.begin(), recipe.freq_ratio.end()) / slowest;
  const double cap = recipe.reference_cap_w;
  const double t = recipe.temp_ratio;
  const double a = cap - recipe.base.idle_power_w;
  // Leakage of the coolest GPU that yields the requested frequency spread
  // when every GPU draws exactly the reference cap.
  const double x = fastest > 1.0 ? a * (fastest - 1.0) / (fastest * t - 1.0) : 0.0;
  const double r_min = recipe.coolest_resistance_k_per_w;
  const double k = x / (r_min * cap);
  const double f_slow = (a - t * x) / recipe.base.power_coeff_m;

  NodeConfig config;
  config.gpu_count = static_cast<int>(recipe.freq_ratio.size());
  config.workload = recipe.workload;
  for (double ratio : recipe.freq_ratio) {
    GpuModel m = recipe.base;
    const double f = f_slow * ratio / slowest;
    m.leakage_w_per_c = k;
    m.thermal_resistance_k_per_w =
        k > 0 ? (a - recipe.base.power_coeff_m * f) / (k * cap) : r_min;
    m.f_max_ghz = f_slow * fastest * (1.0 + recipe.f_max_headroom);
    config.gpus.push_back(m);
  }
  config.validate();
  return config;
}

NodeConfig calibrate_default_node() { return build_node(default_recipe()); }

NodeRecipe node0_recipe() {
  NodeRecipe r = default_recipe();
  r.freq_ratio = {1.048, 1.0001, 1.0002, 1.000, 1.055, 1.041, 1.0002, 1.060};
  return r;
}

NodeConfig node0_preset() { return build_node(node0_recipe()); }

void apply_m_spread(NodeConfig& config, double spread) {
  if (spread < 0) throw std::invalid_argument("m spread must be non-negative");
  double lo = kInf;
  double hi = -kInf;
  for (const auto& g : config.gpus) {
    lo = std::min(lo, g.thermal_resistance_k_per_w);
    hi = std::max(hi, g.thermal_resistance_k_per_w);
  }
  for (auto& g : config.gpus) {
    const double h = hi > lo ? (g.thermal_resistance_k_per_w - lo) / (hi - lo) : 0.0;
    g.power_coeff_m *= 1.0 + spread * h;
  }
}

NodeSimulator::NodeSimulator(NodeConfig config, double initial_cap_w)
    : NodeSimulator(config, std::vector<double>(static_cast<std::size_t>(config.gpu_count),
                                                initial_cap_w)) {}

NodeSimulator::NodeSimulator(NodeConfig config, std::vector<double> initial_caps)
    : config_(std::move(config)), program_(build_program(config_.workload)) {
  config_.validate();
  check_program(program_);
  const auto g_count = static_cast<std::size_t>(config_.gpu_count);
  if (initial_caps.size() != g_count) throw std::invalid_argument("one cap per GPU is required");
  caps_ = std::move(initial_caps);
  states_.resize(g_count);
  window_energy_j_.assign(g_count, 0.0);
  window_mark_ns_.assign(g_count, 0.0);
  iteration_energy_j_.assign(g_count, 0.0);
  iteration_freq_ns_.assign(g_count, 0.0);
  next_tick_.assign(g_count, 1);
  for (std::size_t g = 0; g < g_count; ++g) {
    states_[g].temperature_c = config_.gpus[g].ambient_c;
    states_[g].power_cap_w = caps_[g];
    std::seed_seq seq{static_cast<std::uint32_t>(config_.seed),
                      static_cast<std::uint32_t>(config_.seed >> 32),
                      static_cast<std::uint32_t>(g), 0x5e45u};
    sensor_rng_.emplace_back(seq);
    refresh(static_cast<int>(g));
  }
}

void NodeSimulator::refresh(int g) {
  auto& s = states_[static_cast<std::size_t>(g)];
  const auto& m = config_.gpus[static_cast<std::size_t>(g)];
  s.frequency_ghz = step_frequency(m, s.power_cap_w, s.temperature_c);
  s.power_w = active_power(m, s.frequency_ghz, s.temperature_c);
}

double NodeSimulator::tick_time(int g) const {
  return static_cast<double>(next_tick_[static_cast<std::size_t>(g)] *
                             config_.telemetry_interval_ns);
}

void NodeSimulator::accumulate(int g, double t_ns) {
  const auto i = static_cast<std::size_t>(g);
  const double dt = t_ns - window_mark_ns_[i];
  if (dt <= 0) return;
  window_energy_j_[i] += states_[i].power_w * dt * 1e-9;
  iteration_energy_j_[i] += states_[i].power_w * dt * 1e-9;
  iteration_freq_ns_[i] += states_[i].frequency_ghz * dt;
  window_mark_ns_[i] = t_ns;
}

void NodeSimulator::advance_plant(int g, double t_ns, int iteration,
                                  std::vector<TelemetrySample>& out) {
  const auto i = static_cast<std::size_t>(g);
  const auto& m = config_.gpus[i];
  const double window_s = static_cast<double>(config_.telemetry_interval_ns) * 1e-9;
  while (tick_time(g) <= t_ns) {
    const double tick = tick_time(g);
    accumulate(g, tick);
    const double avg_power = window_energy_j_[i] / window_s;
    window_energy_j_[i] = 0.0;
    auto& s = states_[i];
    s.temperature_c = step_thermal(m, s.temperature_c, avg_power, window_s);
    refresh(g);

    double temp_reading = s.temperature_c;
    double power_reading = avg_power;
    if (config_.temp_noise_c > 0) {
      temp_reading += std::normal_distribution<double>(0.0, config_.temp_noise_c)(sensor_rng_[i]);
    }
    if (config_.power_noise_w > 0) {
      power_reading += std::normal_distribution<double>(0.0, config_.power_noise_w)(sensor_rng_[i]);
    }
    out.push_back({g, iteration, static_cast<std::int64_t>(tick),
                   std::llround(temp_reading * 1000.0), std::llround(s.frequency_ghz * 1e6),
                   std::llround(power_reading * 1000.0), std::llround(s.power_cap_w * 1000.0)});
    ++next_tick_[i];
  }
  accumulate(g, t_ns);
  states_[i].clock_ns = t_ns;
}

void NodeSimulator::set_caps(std::span<const double> caps_w) {
  if (caps_w.size() != caps_.size()) throw std::invalid_argument("one cap per GPU is required");
  for (std::size_t g = 0; g < caps_.size(); ++g) {
    if (!(caps_w[g] > config_.gpus[g].idle_power_w)) {
      throw std::invalid_argument("cap for gpu " + std::to_string(g) +
                                  " does not exceed idle power");
    }
  }
  for (std::size_t g = 0; g < caps_.size(); ++g) {
    accumulate(static_cast<int>(g), now_ns_);
    caps_[g] = caps_w[g];
    states_[g].power_cap_w = caps_w[g];
    refresh(static_cast<int>(g));
  }
}

IterationResult NodeSimulator::run_iteration(bool record_events) {
  const int g_count = config_.gpu_count;
  const auto gs = static_cast<std::size_t>(g_count);
  const int iteration = iteration_;
  const auto& kernels = program_.kernels;
  const auto& colls = program_.collectives;
  const std::size_t k_count = kernels.size();
  const std::size_t c_count = colls.size();
  const double beta = config_.workload.beta;
  const double t0 = now_ns_;

  // Per-kernel and per-collective jitter; drawn up front so results do not
  // depend on the order in which GPUs are advanced.
  std::vector<std::vector<double>> work(gs, std::vector<double>(k_count));
  for (std::size_t g = 0; g < gs; ++g) {
    std::seed_seq seq{static_cast<std::uint32_t>(config_.seed),
                      static_cast<std::uint32_t>(config_.seed >> 32),
                      static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(g)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t k = 0; k < k_count; ++k) {
      work[g][k] = kernels[k].giga_cycles * 1e9 *
                   std::max(0.5, 1.0 + config_.workload.jitter * noise(rng));
    }
  }
  std::vector<double> comm_ns(c_count);
  {
    std::seed_seq seq{static_cast<std::uint32_t>(config_.seed),
                      static_cast<std::uint32_t>(config_.seed >> 32),
                      static_cast<std::uint32_t>(iteration), 0xc0117u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t c = 0; c < c_count; ++c) {
      comm_ns[c] = static_cast<double>(colls[c].duration_ns) *
                   std::max(0.5, 1.0 + config_.workload.jitter * noise(rng));
    }
  }

  struct Lane {
    std::size_t pos = 0;
    double cur = 0;
    bool in_kernel = false;
    double remaining = 0;
    double k_start = 0;
    double k_overlap = 0;
    std::size_t head = 0;
    std::vector<double> issue;
  };
  std::vector<Lane> lanes(gs);
  std::vector<double> end(c_count, kUnknown);
  std::vector<int> issued_count(c_count, 0);
  std::vector<std::vector<double>> k_start(gs), k_end(gs), k_overlap(gs);
  for (std::size_t g = 0; g < gs; ++g) {
    lanes[g].cur = t0;
    lanes[g].issue.assign(c_count, kUnknown);
    for (int c : program_.start_issues) {
      lanes[g].issue[static_cast<std::size_t>(c)] = t0;
      ++issued_count[static_cast<std::size_t>(c)];
    }
    k_start[g].resize(k_count);
    k_end[g].resize(k_count);
    k_overlap[g].resize(k_count);
  }

  std::vector<TelemetrySample> telemetry;

  struct LaneState {
    bool active = false;
    double until = kInf;
    bool blocked = false;
  };
  auto lane_state = [&](Lane& lane) {
    for (std::size_t c = lane.head; c < c_count && known(lane.issue[c]); ++c) {
      const double prev_end = c == 0 ? -kInf : end[c - 1];
      if (!known(prev_end)) return LaneState{false, 0, true};
      const double s = std::max(lane.issue[c], prev_end);
      if (lane.cur < s) return LaneState{false, s, false};
      if (known(end[c])) {
        if (lane.cur < end[c]) return LaneState{true, end[c], false};
        lane.head = c + 1;
        continue;
      }
      const double lower = s + comm_ns[c];
      if (lane.cur < lower) return LaneState{true, lower, false};
      return LaneState{true, 0, true};
    }
    return LaneState{};
  };

  auto advance = [&](int g) {
    Lane& lane = lanes[static_cast<std::size_t>(g)];
    bool progress = false;
    while (lane.pos < k_count) {
      const auto& kernel = kernels[lane.pos];
      if (!lane.in_kernel) {
        double start = lane.cur;
        if (kernel.gate >= 0) {
          const double gate_end = end[static_cast<std::size_t>(kernel.gate)];
          if (!known(gate_end)) return progress;
          start = std::max(start, gate_end);
        }
        lane.cur = start;
        lane.in_kernel = true;
        lane.remaining = work[static_cast<std::size_t>(g)][lane.pos];
        lane.k_start = start;
        lane.k_overlap = 0;
        progress = true;
      }
      while (lane.remaining > 0) {
        advance_plant(g, lane.cur, iteration, telemetry);
        const LaneState ls = lane_state(lane);
        if (ls.blocked) return progress;
        const double f = states_[static_cast<std::size_t>(g)].frequency_ghz;
        const double rate = ls.active ? f / (1.0 + beta) : f;
        const double seg_end = std::min(tick_time(g), ls.until);
        const double need = lane.remaining / rate;
        if (lane.cur + need <= seg_end) {
          lane.cur += need;
          if (ls.active) lane.k_overlap += need;
          lane.remaining = 0;
        } else {
          const double dt = seg_end - lane.cur;
          lane.remaining -= dt * rate;
          if (ls.active) lane.k_overlap += dt;
          lane.cur = seg_end;
        }
        progress = true;
      }
      const auto gi = static_cast<std::size_t>(g);
      k_start[gi][lane.pos] = lane.k_start;
      k_end[gi][lane.pos] = lane.cur;
      k_overlap[gi][lane.pos] = lane.k_overlap;
      for (int c : kernel.issues) {
        lane.issue[static_cast<std::size_t>(c)] = lane.cur;
        ++issued_count[static_cast<std::size_t>(c)];
      }
      lane.in_kernel = false;
      ++lane.pos;
    }
    return progress;
  };

  std::size_t resolved = 0;
  auto resolve = [&] {
    bool progress = false;
    while (resolved < c_count && issued_count[resolved] == g_count) {
      double latest = resolved == 0 ? -kInf : end[resolved - 1];
      for (const auto& lane : lanes) latest = std::max(latest, lane.issue[resolved]);
      end[resolved] = latest + comm_ns[resolved];
      ++resolved;
      progress = true;
    }
    return progress;
  };

  for (;;) {
    bool progress = false;
    for (int g = 0; g < g_count; ++g) progress |= advance(g);
    progress |= resolve();
    bool done = resolved == c_count;
    for (const auto& lane : lanes) done = done && lane.pos == k_count;
    if (done) break;
    if (!progress) {
      throw SimError("deadlock in iteration " + std::to_string(iteration) +
                     ": collective " + std::to_string(resolved) + " never completes");
    }
  }

  double t_end = t0;
  for (const auto& lane : lanes) t_end = std::max(t_end, lane.cur);
  for (double e : end) t_end = std::max(t_end, e);
  for (int g = 0; g < g_count; ++g) advance_plant(g, t_end, iteration, telemetry);

  IterationResult result;
  result.start_ns = std::llround(t0);
  result.wall_ns = std::llround(t_end) - std::llround(t0);
  result.mean_power_w.resize(g_count);
  result.mean_freq_ghz.resize(g_count);
  const double wall = t_end - t0;
  for (std::size_t g = 0; g < gs; ++g) {
    result.mean_power_w[static_cast<Eigen::Index>(g)] = iteration_energy_j_[g] / (wall * 1e-9);
    result.mean_freq_ghz[static_cast<Eigen::Index>(g)] = iteration_freq_ns_[g] / wall;
    iteration_energy_j_[g] = 0.0;
    iteration_freq_ns_[g] = 0.0;
  }

  IterationTrace& trace = result.trace;
  trace.gpu_count = g_count;
  trace.iteration = iteration;
  std::stable_sort(telemetry.begin(), telemetry.end(),
                   [](const TelemetrySample& a, const TelemetrySample& b) {
                     return a.gpu < b.gpu;
                   });
  trace.telemetry = std::move(telemetry);
  if (record_events) {
    trace.events.reserve(gs * (k_count + c_count));
    for (std::size_t g = 0; g < gs; ++g) {
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto& kernel = kernels[k];
        KernelEvent e;
        e.gpu_id = static_cast<int>(g);
        e.iteration = iteration;
        e.kernel_index = kernel.kernel_index;
        e.name = kernel.name;
        e.layer = kernel.layer;
        e.phase = kernel.phase;
        e.kind = kernel.kind;
        e.start_ns = std::llround(k_start[g][k]);
        e.end_ns = std::llround(k_end[g][k]);
        e.overlap_ns = std::clamp<std::int64_t>(std::llround(k_overlap[g][k]), 0,
                                                e.end_ns - e.start_ns);
        trace.events.push_back(std::move(e));
      }
      for (std::size_t c = 0; c < c_count; ++c) {
        const auto& coll = colls[c];
        KernelEvent e;
        e.gpu_id = static_cast<int>(g);
        e.iteration = iteration;
        e.kernel_index = coll.kernel_index;
        e.name = coll.name;
        e.layer = coll.layer;
        e.phase = coll.phase;
        e.kind = KernelKind::kCommunication;
        const double prev_end = c == 0 ? -kInf : end[c - 1];
        e.start_ns = std::llround(std::max(lanes[g].issue[c], prev_end));
        e.end_ns = std::llround(end[c]);
        trace.events.push_back(std::move(e));
      }
    }
    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const KernelEvent& a, const KernelEvent& b) {
                       return a.gpu_id != b.gpu_id ? a.gpu_id < b.gpu_id
                                                   : a.kernel_index < b.kernel_index;
                     });
  }

  now_ns_ = t_end;
  ++iteration_;
  return result;
}

std::vector<IterationTrace> simulate(const NodeConfig& config, double cap_w, int skip,
                                     int stride) {
  if (stride < 1) throw std::invalid_argument("stride must be positive");
  NodeSimulator sim(config, cap_w);
  std::vector<IterationTrace> out;
  for (int i = 0; i < config.iterations; ++i) {
    const bool keep = i >= skip && (i - skip) % stride == 0;
    IterationResult r = sim.run_iteration(keep);
    if (keep) out.push_back(std::move(r.trace));
  }
  return out;
}

}  // namespace lit
