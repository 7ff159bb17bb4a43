#include "litsilicon/config.hpp"

#include <fstream>
#include <functional>

namespace lit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Field {
  const char* key;
  std::function<ordered_json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const json&)> set;
};

template <typename T>
Field field(const char* key, T ExperimentConfig::*member) {
  return Field{
      key,
      [member](const ExperimentConfig& c) { return ordered_json(c.*member); },
      [key, member](ExperimentConfig& c, const json& v) {
        if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) throw ConfigError(key, "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
          if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
              throw ConfigError(key, "expected a non-negative integer");
            }
          }
        } else if constexpr (std::is_floating_point_v<T>) {
          if (!v.is_number()) throw ConfigError(key, "expected a number");
        } else {
          if (!v.is_string()) throw ConfigError(key, "expected a string");
        }
        c.*member = v.get<T>();
      }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("node", &ExperimentConfig::node),
      field("model", &ExperimentConfig::model),
      field("fsdp", &ExperimentConfig::fsdp),
      field("precision", &ExperimentConfig::precision),
      field("batch_seq", &ExperimentConfig::batch_seq),
      field("iterations", &ExperimentConfig::iterations),
      field("sampling_period", &ExperimentConfig::sampling_period),
      field("warm_up", &ExperimentConfig::warm_up),
      field("window_size", &ExperimentConfig::window_size),
      field("aggregation", &ExperimentConfig::aggregation),
      field("max_adjustment", &ExperimentConfig::max_adjustment),
      field("scale", &ExperimentConfig::scale),
      field("power_cap", &ExperimentConfig::power_cap),
      field("power_budget", &ExperimentConfig::power_budget),
      field("use_case", &ExperimentConfig::use_case),
      field("seed", &ExperimentConfig::seed),
      field("tdp", &ExperimentConfig::tdp),
      field("min_cap", &ExperimentConfig::min_cap),
      field("max_retries", &ExperimentConfig::max_retries),
      field("hold_on_convergence", &ExperimentConfig::hold_on_convergence),
      field("m_spread", &ExperimentConfig::m_spread),
      field("overlap_penalty", &ExperimentConfig::overlap_penalty),
      field("jitter", &ExperimentConfig::jitter),
      field("telemetry_interval_ms", &ExperimentConfig::telemetry_interval_ms),
      field("temp_noise_c", &ExperimentConfig::temp_noise_c),
      field("power_noise_w", &ExperimentConfig::power_noise_w),
      field("trace_skip", &ExperimentConfig::trace_skip),
      field("trace_stride", &ExperimentConfig::trace_stride),
      field("idle_power", &ExperimentConfig::idle_power),
      field("overlap_tau", &ExperimentConfig::overlap_tau),
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError(std::string(key), "unknown key");
}

template <typename Fn>
void check(const char* key, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, e.what());
  }
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace

ConfigError::ConfigError(std::string key, const std::string& what)
    : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}

void ExperimentConfig::validate() const {
  require(node == 0 || node == 1, "node", "must be 0 or 1");
  check("model", [&] { make_workload(model, fsdp, precision, batch_seq); });
  require(iterations > 0, "iterations", "must be positive");
  require(sampling_period > 0, "sampling_period", "must be positive");
  require(warm_up >= 0, "warm_up", "must be non-negative");
  require(window_size > 0, "window_size", "must be positive");
  check("aggregation", [&] { parse_lead_aggregation(aggregation); });
  require(max_adjustment > 0, "max_adjustment", "must be positive");
  check("scale", [&] { parse_scale(scale); });
  require(power_cap > idle_power, "power_cap", "must exceed idle_power");
  require(power_cap <= tdp, "power_cap", "must not exceed tdp");
  require(power_budget >= 0, "power_budget", "must be non-negative");
  check("use_case", [&] { parse_use_case(use_case); });
  require(min_cap > idle_power, "min_cap", "must exceed idle_power");
  require(min_cap <= power_cap, "min_cap", "must not exceed power_cap");
  require(max_retries >= 0, "max_retries", "must be non-negative");
  require(m_spread >= 0, "m_spread", "must be non-negative");
  require(overlap_penalty < 0 || overlap_penalty <= 1.0, "overlap_penalty",
          "must be at most 1 (negative keeps the node default)");
  require(jitter >= 0 && jitter < 0.2, "jitter", "must be in [0, 0.2)");
  require(telemetry_interval_ms > 0, "telemetry_interval_ms", "must be positive");
  require(temp_noise_c >= 0, "temp_noise_c", "must be non-negative");
  require(power_noise_w >= 0, "power_noise_w", "must be non-negative");
  require(trace_skip >= 0 && trace_skip < iterations, "trace_skip",
          "must be in [0, iterations)");
  require(trace_stride > 0, "trace_stride", "must be positive");
  require(idle_power > 0, "idle_power", "must be positive");
  require(overlap_tau >= 0 && overlap_tau <= 1, "overlap_tau", "must be in [0, 1]");
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) find_field(key).set(c, value);
  c.validate();
  return c;
}

ordered_json to_json(const ExperimentConfig& config) {
  ordered_json j = ordered_json::object();
  for (const auto& f : fields()) j[f.key] = f.get(config);
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_knob(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(std::string(assignment), "knob must be key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  find_field(key).set(config, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

NodeConfig node_config(const ExperimentConfig& config) {
  config.validate();
  NodeRecipe recipe = config.node == 0 ? node0_recipe() : default_recipe();
  const double beta = recipe.workload.beta;
  recipe.workload = make_workload(config.model, config.fsdp, config.precision, config.batch_seq);
  recipe.workload.beta = config.overlap_penalty >= 0 ? config.overlap_penalty : beta;
  recipe.workload.jitter = config.jitter;
  recipe.base.idle_power_w = config.idle_power;
  NodeConfig node = build_node(recipe);
  if (config.m_spread > 0) apply_m_spread(node, config.m_spread);
  node.iterations = config.iterations;
  node.seed = config.seed;
  node.telemetry_interval_ns = static_cast<std::int64_t>(config.telemetry_interval_ms * 1e6);
  node.temp_noise_c = config.temp_noise_c;
  node.power_noise_w = config.power_noise_w;
  node.validate();
  return node;
}

ControllerConfig controller_config(const ExperimentConfig& config) {
  config.validate();
  ControllerConfig c;
  c.iterations = config.iterations;
  c.sampling_period = config.sampling_period;
  c.warm_up = config.warm_up;
  c.window_size = config.window_size;
  c.aggregation = parse_lead_aggregation(config.aggregation);
  c.max_adjustment_w = config.max_adjustment;
  c.scale = parse_scale(config.scale);
  c.use_case = parse_use_case(config.use_case);
  c.initial_cap_w = config.power_cap;
  c.slosh_budget_w = config.power_budget;
  c.tdp_w = config.tdp;
  c.min_cap_w = config.min_cap;
  c.max_retries = config.max_retries;
  c.hold_on_convergence = config.hold_on_convergence;
  c.validate();
  return c;
}

ordered_json knob_snapshot(const ExperimentConfig& config) { return to_json(config); }

ordered_json workload_descriptor(const ExperimentConfig& config) {
  return ordered_json{{"model", config.model},
                      {"fsdp", config.fsdp},
                      {"precision", config.precision},
                      {"batch_seq", config.batch_seq}};
}

ordered_json manifest(const ExperimentConfig& config, std::string_view command) {
  return ordered_json{{"tool", "litsilicon"},
                      {"version", std::string(kToolVersion)},
                      {"command", std::string(command)},
                      {"seed", config.seed},
                      {"config", to_json(config)}};
}

}  // namespace lit
