#include "litsilicon/control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace lit {

std::string_view to_string(Scale scale) { return scale == Scale::kGlobal ? "global" : "local"; }

Scale parse_scale(std::string_view text) {
  if (text == "global") return Scale::kGlobal;
  if (text == "local") return Scale::kLocal;
  throw std::invalid_argument("unknown scale '" + std::string(text) + "'");
}

void ControllerConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (sampling_period < 1) throw std::invalid_argument("sampling_period must be positive");
  if (warm_up < 0) throw std::invalid_argument("warm_up must be non-negative");
  if (window_size < 1) throw std::invalid_argument("window_size must be positive");
  if (!(max_adjustment_w > 0)) throw std::invalid_argument("max_adjustment must be positive");
  if (!(initial_cap_w > 0) || initial_cap_w > tdp_w) {
    throw std::invalid_argument("power_cap must lie in (0, tdp]");
  }
  if (slosh_budget_w < 0) throw std::invalid_argument("power_budget must be non-negative");
  if (!(min_cap_w > 0) || min_cap_w > initial_cap_w) {
    throw std::invalid_argument("min_cap must lie in (0, power_cap]");
  }
  if (max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
}

PowerIncrease inc_power_gpu(const Eigen::VectorXd& leads, double max_inc_w, double global_max,
                            Scale scale) {
  if (leads.size() < 2) throw std::invalid_argument("lead vector needs at least two GPUs");
  if (max_inc_w < 0) throw std::invalid_argument("max increase must be non-negative");
  const double max_lead = leads.maxCoeff();
  const double min_lead = leads.minCoeff();
  PowerIncrease out;
  out.global_max = std::max(global_max, max_lead);
  Eigen::VectorXd norm = Eigen::VectorXd::Ones(leads.size());
  if (max_lead > min_lead) {
    norm = 1.0 - (leads.array() - min_lead) / (max_lead - min_lead);
  }
  double factor = 1.0;
  if (scale == Scale::kGlobal) factor = out.global_max > 0 ? max_lead / out.global_max : 0.0;
  out.increase_w = norm * (factor * max_inc_w);
  return out;
}

namespace {

Eigen::VectorXd round_watts(const Eigen::VectorXd& w) {
  return w.unaryExpr([](double x) { return static_cast<double>(std::llround(x)); });
}

}  // namespace

CapVector adj_power_node(const Eigen::VectorXd& increase_w, const CapVector& caps,
                         double min_cap_w) {
  if (!caps.node_cap_w) throw std::invalid_argument("node cap required");
  const auto g = caps.caps_w.size();
  if (increase_w.size() != g) throw std::invalid_argument("one increase per GPU is required");
  const double node_cap = *caps.node_cap_w;
  if (node_cap < static_cast<double>(g) * min_cap_w) {
    throw InfeasibleCaps("node cap " + std::to_string(node_cap) + " W cannot hold " +
                         std::to_string(g) + " GPUs at " + std::to_string(min_cap_w) + " W");
  }
  CapVector out = caps;
  out.caps_w = caps.caps_w + round_watts(increase_w);
  const double delta_max = std::ceil((out.total() - node_cap) / static_cast<double>(g));
  out.caps_w.array() -= delta_max;
  const double gpu_delta = std::max(0.0, std::ceil(out.caps_w.maxCoeff() - caps.tdp_w));
  out.caps_w.array() -= gpu_delta;
  if (out.caps_w.minCoeff() < min_cap_w) {
    throw InfeasibleCaps("adjustment would push a cap below " + std::to_string(min_cap_w) + " W");
  }
  return out;
}

Eigen::VectorXd gpu_red_deltas(const Eigen::VectorXd& increase_w) {
  return increase_w.array() - increase_w.maxCoeff();
}

RedResult apply_gpu_red(const Eigen::VectorXd& leads, const CapVector& caps, double max_inc_w,
                        double global_max, Scale scale) {
  const PowerIncrease inc = inc_power_gpu(leads, max_inc_w, global_max, scale);
  RedResult out{caps, inc.global_max};
  if (leads.maxCoeff() == leads.minCoeff()) return out;
  out.caps.caps_w = caps.caps_w + gpu_red_deltas(round_watts(inc.increase_w));
  return out;
}

SimulatedBackend::SimulatedBackend(NodeConfig config, double initial_cap_w, int sampling_period)
    : sim_(std::move(config), initial_cap_w), period_(sampling_period) {
  if (period_ < 1) throw std::invalid_argument("sampling period must be positive");
  power_ = Eigen::VectorXd::Zero(sim_.config().gpu_count);
  freq_ = Eigen::VectorXd::Zero(sim_.config().gpu_count);
}

IterationTrace SimulatedBackend::sample_iteration() {
  const int g_count = gpu_count();
  Eigen::VectorXd power_sum = Eigen::VectorXd::Zero(g_count);
  Eigen::VectorXi readings = Eigen::VectorXi::Zero(g_count);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(g_count);
  double wall = 0.0;
  IterationTrace last;
  try {
    for (int i = 0; i < period_; ++i) {
      IterationResult r = sim_.run_iteration(i + 1 == period_);
      for (const auto& s : r.trace.telemetry) {
        power_sum[s.gpu] += static_cast<double>(s.power_mW) / 1000.0;
        ++readings[s.gpu];
      }
      freq += r.mean_freq_ghz * static_cast<double>(r.wall_ns);
      wall += static_cast<double>(r.wall_ns);
      if (i + 1 == period_) last = std::move(r.trace);
    }
  } catch (const SimError& e) {
    throw BackendError(e.what());
  }
  for (int g = 0; g < g_count; ++g) {
    power_[g] = readings[g] > 0 ? power_sum[g] / readings[g] : 0.0;
  }
  freq_ = freq / wall;
  return last;
}

void SimulatedBackend::set_caps(const CapVector& caps) {
  std::vector<double> c(caps.caps_w.data(), caps.caps_w.data() + caps.caps_w.size());
  try {
    sim_.set_caps(c);
  } catch (const std::invalid_argument& e) {
    throw BackendError(std::string("cap rejected: ") + e.what());
  }
}

namespace {

template <typename F>
auto with_retries(int retries, F&& f) {
  for (int attempt = 0;; ++attempt) {
    try {
      return f();
    } catch (const BackendError&) {
      if (attempt >= retries) throw;
    }
  }
}

}  // namespace

RunLog control_loop(PowerBackend& backend, const ControllerConfig& config) {
  config.validate();
  const int g_count = backend.gpu_count();
  RunLog log;
  log.gpu_count = g_count;
  log.use_case = config.use_case;

  CapVector caps;
  caps.caps_w = Eigen::VectorXd::Constant(g_count, config.initial_cap_w);
  caps.tdp_w = config.tdp_w;
  if (config.use_case == UseCase::kGpuRealloc) {
    caps.node_cap_w = caps.total();
  } else if (config.use_case == UseCase::kCpuSlosh) {
    caps.node_cap_w = caps.total() + g_count * config.slosh_budget_w;
  }
  with_retries(config.max_retries, [&] {
    backend.set_caps(caps);
    return 0;
  });

  double global_max = 0.0;
  std::vector<Eigen::VectorXd> window;
  int steady_windows = 0;
  for (int s = 0; s < config.samples(); ++s) {
    IterationTrace trace = with_retries(config.max_retries, [&] { return backend.sample_iteration(); });
    RunLogRow row;
    row.sample = s;
    row.iteration = trace.iteration;
    row.caps_w = caps.caps_w;
    row.power_w = with_retries(config.max_retries, [&] { return backend.read_power(); });
    if (auto* sim = dynamic_cast<SimulatedBackend*>(&backend)) row.freq_ghz = sim->read_frequency();
    row.node_power_w = row.power_w.sum();
    row.throughput = 1e9 / static_cast<double>(trace.wall_ns());
    row.leads_ns = lead_values(trace, config.aggregation).values.cast<double>();

    const bool holding = config.hold_on_convergence && log.converged_at.has_value();
    if (s >= config.warm_up && !holding) window.push_back(row.leads_ns);
    if (static_cast<int>(window.size()) == config.window_size) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(g_count);
      for (const auto& v : window) mean += v;
      mean /= static_cast<double>(window.size());
      window.clear();

      CapVector next = caps;
      if (config.use_case == UseCase::kGpuRed) {
        RedResult red = apply_gpu_red(mean, caps, config.max_adjustment_w, global_max, config.scale);
        next = red.caps;
        global_max = red.global_max;
        next.caps_w = next.caps_w.cwiseMax(config.min_cap_w);
      } else {
        const PowerIncrease inc =
            inc_power_gpu(mean, config.max_adjustment_w, global_max, config.scale);
        global_max = inc.global_max;
        try {
          next = adj_power_node(inc.increase_w, caps, config.min_cap_w);
        } catch (const InfeasibleCaps&) {
          next = caps;
        }
      }
      const bool changed = (next.caps_w - caps.caps_w).cwiseAbs().maxCoeff() > 1.0;
      steady_windows = changed ? 0 : steady_windows + 1;
      if (steady_windows >= kSteadyWindows && !log.converged_at) log.converged_at = s;
      if (next.caps_w != caps.caps_w) {
        with_retries(config.max_retries, [&] {
          backend.set_caps(next);
          return 0;
        });
      }
      caps = next;
      row.adjusted = true;
      if (!log.first_adjustment) log.first_adjustment = s;
    }
    row.converged = log.converged_at.has_value();
    log.rows.push_back(std::move(row));
  }
  log.final_caps = caps;
  return log;
}

std::optional<int> power_convergence(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("empty series");
  const std::size_t n = series.size();
  const std::size_t tail = std::min<std::size_t>(kSettleSamples, n);
  const double settled =
      std::accumulate(series.end() - static_cast<std::ptrdiff_t>(tail), series.end(), 0.0) /
      static_cast<double>(tail);
  const double lo = settled * (1.0 - kPowerBand);
  const double hi = settled * (1.0 + kPowerBand);
  std::size_t first = n;
  for (std::size_t i = n; i-- > 0;) {
    if (series[i] < lo || series[i] > hi) break;
    first = i;
  }
  if (first == n) return std::nullopt;
  return static_cast<int>(first);
}

std::optional<int> throughput_convergence(std::span<const double> series) {
  if (series.empty()) throw std::invalid_argument("empty series");
  const double peak = *std::max_element(series.begin(), series.end());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] >= kThroughputFraction * peak) return static_cast<int>(i);
  }
  return std::nullopt;
}

double coefficient_of_variation(std::span<const double> series) {
  if (series.empty()) return 0.0;
  const Eigen::Map<const Eigen::VectorXd> v(series.data(), static_cast<Eigen::Index>(series.size()));
  const double mean = v.mean();
  if (mean == 0.0) return 0.0;
  return std::sqrt((v.array() - mean).square().mean()) / std::abs(mean);
}

std::vector<double> rolling_mean(std::span<const double> series, int window) {
  if (window < 1) throw std::invalid_argument("rolling window must be positive");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= static_cast<std::size_t>(window)) sum -= series[i - static_cast<std::size_t>(window)];
    out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
  }
  return out;
}

namespace {

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ConvergenceReport convergence_metrics(const RunLog& log, int rolling_window) {
  if (log.rows.empty()) throw std::invalid_argument("empty run log");
  std::vector<double> power, throughput;
  for (const auto& r : log.rows) {
    power.push_back(r.node_power_w);
    throughput.push_back(r.throughput);
  }
  const std::size_t origin = static_cast<std::size_t>(log.first_adjustment.value_or(0));
  const std::span<const double> power_after(power.data() + origin, power.size() - origin);
  const std::span<const double> tput_after(throughput.data() + origin, throughput.size() - origin);

  ConvergenceReport rep;
  rep.power_convergence = power_convergence(rolling_mean(power_after, rolling_window));
  rep.throughput_convergence = throughput_convergence(rolling_mean(tput_after, rolling_window));
  if (rep.power_convergence) {
    rep.power_cv = coefficient_of_variation(power_after.subspan(
        static_cast<std::size_t>(*rep.power_convergence)));
  }
  if (rep.throughput_convergence) {
    rep.throughput_cv = coefficient_of_variation(tput_after.subspan(
        static_cast<std::size_t>(*rep.throughput_convergence)));
  }

  const std::size_t n = power.size();
  const std::size_t tail = std::min<std::size_t>(kSettleSamples, n);
  const std::size_t base_end = origin > 0 ? origin : n;
  const std::size_t base_begin = base_end >= static_cast<std::size_t>(kSettleSamples)
                                     ? base_end - kSettleSamples
                                     : 0;
  rep.baseline_power_w = mean_of(std::span(power).subspan(base_begin, base_end - base_begin));
  rep.baseline_throughput =
      mean_of(std::span(throughput).subspan(base_begin, base_end - base_begin));
  rep.final_power_w = mean_of(std::span(power).subspan(n - tail));
  rep.final_throughput = mean_of(std::span(throughput).subspan(n - tail));
  rep.power_change = rep.final_power_w / rep.baseline_power_w - 1.0;
  rep.throughput_change = rep.final_throughput / rep.baseline_throughput - 1.0;
  return rep;
}

void write_run_log_csv(std::ostream& out, const RunLog& log) {
  out << "sample_idx,iteration";
  for (int g = 0; g < log.gpu_count; ++g) out << ",cap_w_" << g;
  for (int g = 0; g < log.gpu_count; ++g) out << ",lead_ns_" << g;
  for (int g = 0; g < log.gpu_count; ++g) out << ",power_w_" << g;
  out << ",node_power_w,throughput,adjusted,converged\n";
  for (const auto& r : log.rows) {
    out << r.sample << ',' << r.iteration;
    for (int g = 0; g < log.gpu_count; ++g) out << ',' << r.caps_w[g];
    for (int g = 0; g < log.gpu_count; ++g) out << ',' << static_cast<std::int64_t>(r.leads_ns[g]);
    for (int g = 0; g < log.gpu_count; ++g) out << ',' << r.power_w[g];
    out << ',' << r.node_power_w << ',' << r.throughput << ',' << (r.adjusted ? 1 : 0) << ','
        << (r.converged ? 1 : 0) << '\n';
  }
}

}  // namespace lit
