#include "litsilicon/cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "litsilicon/analysis.hpp"
#include "litsilicon/models.hpp"
#include "litsilicon/plot.hpp"

namespace lit {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw TraceIoError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const ordered_json& j) { open_out(path) << j.dump(2) << '\n'; }

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  auto out = open_out(path);
  fn(out);
  if (!out) throw TraceIoError("write failed: " + path.string());
}

std::string gpu_label(int g) { return "GPU " + std::to_string(g); }

void plot_run_log(const RunLog& log, const fs::path& dir) {
  std::vector<Series> caps(static_cast<std::size_t>(log.gpu_count));
  Series power{"node", {}, {}};
  Series throughput{"node", {}, {}};
  for (int g = 0; g < log.gpu_count; ++g) caps[static_cast<std::size_t>(g)].label = gpu_label(g);
  for (const auto& r : log.rows) {
    for (int g = 0; g < log.gpu_count; ++g) {
      caps[static_cast<std::size_t>(g)].x.push_back(r.sample);
      caps[static_cast<std::size_t>(g)].y.push_back(r.caps_w[g]);
    }
    power.x.push_back(r.sample);
    power.y.push_back(r.node_power_w);
    throughput.x.push_back(r.sample);
    throughput.y.push_back(r.throughput);
  }
  write_file(dir / "caps.svg", [&](std::ostream& o) {
    write_line_svg(o, {"Power caps", "sample", "cap (W)"}, caps);
  });
  write_file(dir / "power.svg", [&](std::ostream& o) {
    write_line_svg(o, {"Node power", "sample", "power (W)"}, std::span(&power, 1));
  });
  write_file(dir / "throughput.svg", [&](std::ostream& o) {
    write_line_svg(o, {"Throughput", "sample", "iterations/s"}, std::span(&throughput, 1));
  });
}

std::string opt_str(const std::optional<int>& v) { return v ? std::to_string(*v) : "never"; }

void write_convergence_csv(std::ostream& out, const ConvergenceReport& r,
                           const std::optional<int>& converged_at) {
  out << "power_convergence,throughput_convergence,power_cv,throughput_cv,power_change,"
         "throughput_change,baseline_power_w,final_power_w,baseline_throughput,"
         "final_throughput,caps_converged_at\n"
      << opt_str(r.power_convergence) << ',' << opt_str(r.throughput_convergence) << ','
      << r.power_cv << ',' << r.throughput_cv << ',' << r.power_change << ','
      << r.throughput_change << ',' << r.baseline_power_w << ',' << r.final_power_w << ','
      << r.baseline_throughput << ',' << r.final_throughput << ',' << opt_str(converged_at)
      << '\n';
}

std::string label_of(const std::vector<std::pair<std::string, json>>& overrides) {
  if (overrides.empty()) return "base";
  std::string s;
  for (const auto& [k, v] : overrides) {
    if (!s.empty()) s += ';';
    s += k + '=' + (v.is_string() ? v.get<std::string>() : v.dump());
  }
  return s;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

TraceFile run_simulation(const ExperimentConfig& config) {
  const NodeConfig node = node_config(config);
  TraceFile file;
  file.header.gpu_count = node.gpu_count;
  file.header.workload = workload_descriptor(config);
  file.header.knobs = knob_snapshot(config);
  file.iterations = simulate(node, config.power_cap, config.trace_skip, config.trace_stride);
  return file;
}

RunLog run_control(const ExperimentConfig& config) {
  const ControllerConfig cc = controller_config(config);
  SimulatedBackend backend(node_config(config), cc.initial_cap_w, cc.sampling_period);
  return control_loop(backend, cc);
}

void cmd_simulate(const ExperimentConfig& config, const std::string& out_path) {
  const TraceFile file = run_simulation(config);
  const fs::path path(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_trace_file(file, out_path);
  write_json(out_path + ".manifest.json", manifest(config, "simulate"));
}

int cmd_control(const ExperimentConfig& config, const std::string& out_dir) {
  const RunLog log = run_control(config);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_json(dir / "manifest.json", manifest(config, "control"));
  write_file(dir / "run_log.csv", [&](std::ostream& o) { write_run_log_csv(o, log); });
  write_file(dir / "final_caps.csv", [&](std::ostream& o) {
    o << "gpu,cap_w\n";
    for (int g = 0; g < log.gpu_count; ++g) o << g << ',' << log.final_caps.caps_w[g] << '\n';
  });
  const ConvergenceReport report = convergence_metrics(log);
  write_file(dir / "convergence.csv",
             [&](std::ostream& o) { write_convergence_csv(o, report, log.converged_at); });
  plot_run_log(log, dir);
  return log.converged_at ? kExitOk : kExitNotConverged;
}

void cmd_analyze(const std::string& trace_path, const std::string& out_dir, double tau) {
  const TraceFile file = read_trace_file(trace_path);
  const auto& traces = file.iterations;
  if (traces.size() < 2) {
    throw std::invalid_argument("analysis needs at least 2 iterations for correlation, got " +
                                std::to_string(traces.size()));
  }
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const int g_count = file.header.gpu_count;

  write_file(dir / "overlap.csv", [&](std::ostream& o) { write_overlap_csv(o, traces); });
  write_file(dir / "layer_overlap.csv",
             [&](std::ostream& o) { write_layer_overlap_csv(o, traces); });
  write_file(dir / "lead.csv", [&](std::ostream& o) { write_lead_csv(o, traces); });
  write_file(dir / "wave.csv", [&](std::ostream& o) { write_wave_csv(o, traces.back()); });
  const auto classes = classify_overlap(traces, tau);
  write_file(dir / "classification.csv",
             [&](std::ostream& o) { write_classification_csv(o, classes); });
  const auto corr = correlation_report(traces);
  write_file(dir / "correlation.csv", [&](std::ostream& o) { write_correlation_csv(o, corr); });
  write_file(dir / "telemetry.csv", [&](std::ostream& o) { write_telemetry_csv(o, traces); });

  // Overlap ratio of compute and vector kernels over the first iteration.
  std::vector<Series> overlap(static_cast<std::size_t>(g_count));
  const auto t0 = static_cast<double>(traces.front().start_ns());
  for (int g = 0; g < g_count; ++g) overlap[static_cast<std::size_t>(g)].label = gpu_label(g);
  for (const auto& e : traces.front().events) {
    if (e.is_communication()) continue;
    auto& s = overlap[static_cast<std::size_t>(e.gpu_id)];
    s.x.push_back((static_cast<double>(e.start_ns) - t0) * 1e-6);
    s.y.push_back(overlap_ratio(e));
  }
  write_file(dir / "overlap.svg", [&](std::ostream& o) {
    write_line_svg(o, {"Overlap ratio over time", "time (ms)", "overlap ratio"}, overlap);
  });

  // Straggler waves of up to three consecutive iterations, one band each.
  std::vector<Series> wave(static_cast<std::size_t>(g_count));
  for (int g = 0; g < g_count; ++g) wave[static_cast<std::size_t>(g)].label = gpu_label(g);
  const std::size_t bands = std::min<std::size_t>(traces.size(), 3);
  double offset = 0.0;
  for (std::size_t i = traces.size() - bands; i < traces.size(); ++i) {
    const MatrixXi64 w = straggler_wave(traces[i]);
    for (int g = 0; g < g_count; ++g) {
      for (Eigen::Index k = 0; k < w.cols(); ++k) {
        wave[static_cast<std::size_t>(g)].x.push_back(offset + static_cast<double>(k));
        wave[static_cast<std::size_t>(g)].y.push_back(static_cast<double>(w(g, k)) * 1e-6);
      }
    }
    offset += static_cast<double>(w.cols());
  }
  write_file(dir / "wave.svg", [&](std::ostream& o) {
    write_line_svg(o, {"Straggler wave", "kernel position", "lead (ms)"}, wave);
  });

  std::vector<Series> lead(static_cast<std::size_t>(g_count));
  for (int g = 0; g < g_count; ++g) lead[static_cast<std::size_t>(g)].label = gpu_label(g);
  for (const auto& t : traces) {
    const LeadVector v = lead_values(t, LeadAggregation::kSum);
    for (int g = 0; g < g_count; ++g) {
      lead[static_cast<std::size_t>(g)].x.push_back(t.iteration);
      lead[static_cast<std::size_t>(g)].y.push_back(static_cast<double>(v.values[g]) * 1e-6);
    }
  }
  write_file(dir / "lead.svg", [&](std::ostream& o) {
    write_line_svg(o, {"Summed lead per iteration", "iteration", "lead (ms)"}, lead);
  });

  std::vector<Series> temp(static_cast<std::size_t>(g_count));
  std::vector<Series> freq(static_cast<std::size_t>(g_count));
  for (int g = 0; g < g_count; ++g) {
    temp[static_cast<std::size_t>(g)].label = gpu_label(g);
    freq[static_cast<std::size_t>(g)].label = gpu_label(g);
  }
  for (const auto& t : traces) {
    for (const auto& s : t.telemetry) {
      const double x = (static_cast<double>(s.ts_ns) - t0) * 1e-9;
      temp[static_cast<std::size_t>(s.gpu)].x.push_back(x);
      temp[static_cast<std::size_t>(s.gpu)].y.push_back(static_cast<double>(s.temp_mC) * 1e-3);
      freq[static_cast<std::size_t>(s.gpu)].x.push_back(x);
      freq[static_cast<std::size_t>(s.gpu)].y.push_back(static_cast<double>(s.freq_kHz) * 1e-6);
    }
  }
  write_file(dir / "temperature.svg", [&](std::ostream& o) {
    write_line_svg(o, {"Temperature", "time (s)", "temperature (C)"}, temp);
  });
  write_file(dir / "frequency.svg", [&](std::ostream& o) {
    write_line_svg(o, {"Frequency", "time (s)", "frequency (GHz)"}, freq);
  });

  std::vector<std::string> names;
  std::map<std::string, Eigen::Index> col;
  for (const auto& e : corr) {
    if (col.emplace(e.kernel_name, static_cast<Eigen::Index>(names.size())).second) {
      names.push_back(e.kernel_name);
    }
  }
  Eigen::MatrixXd heat = Eigen::MatrixXd::Constant(g_count, static_cast<Eigen::Index>(names.size()),
                                                   std::numeric_limits<double>::quiet_NaN());
  for (const auto& e : corr) {
    if (e.value.pearson) heat(e.gpu, col.at(e.kernel_name)) = *e.value.pearson;
  }
  std::vector<std::string> rows;
  for (int g = 0; g < g_count; ++g) rows.push_back(gpu_label(g));
  write_file(dir / "correlation.svg", [&](std::ostream& o) {
    write_heat_svg(o, "Pearson: overlap ratio vs duration", rows, names, heat, -1.0, 1.0);
  });

  ordered_json m{{"tool", "litsilicon"},
                 {"version", std::string(kToolVersion)},
                 {"command", "analyze"},
                 {"trace", trace_path},
                 {"overlap_tau", tau},
                 {"trace_header", {{"gpu_count", file.header.gpu_count},
                                   {"workload", file.header.workload},
                                   {"knobs", file.header.knobs}}}};
  write_json(dir / "manifest.json", m);
}

void cmd_predict(const std::string& trace_path, std::optional<UseCase> use_case,
                 const ExperimentConfig& config, const std::string& out_path) {
  const TraceFile file = read_trace_file(trace_path);
  std::vector<UseCasePrediction> rows;
  std::vector<UseCase> cases = {UseCase::kGpuRed, UseCase::kGpuRealloc, UseCase::kCpuSlosh};
  if (use_case) cases = {*use_case};
  for (UseCase uc : cases) {
    rows.push_back(predict_use_case(file.iterations, uc, config.power_cap, config.idle_power,
                                    config.overlap_tau));
  }
  write_file(out_path, [&](std::ostream& o) { write_prediction_csv(o, rows); });
  ordered_json m = manifest(config, "predict");
  m["trace"] = trace_path;
  write_json(out_path + ".manifest.json", m);
}

SweepPlan plan_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "plan must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "base" && key != "sweep" && key != "mode" && key != "parallelism") {
      throw ConfigError(key, "unknown plan key");
    }
  }
  SweepPlan plan;
  if (j.contains("base")) plan.base = config_from_json(j.at("base"));
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "list" && mode != "cartesian") throw ConfigError("mode", "expected list or cartesian");
    plan.cartesian = mode == "cartesian";
  }
  if (j.contains("parallelism")) {
    plan.parallelism = j.at("parallelism").get<int>();
    if (plan.parallelism < 1) throw ConfigError("parallelism", "must be positive");
  }
  if (!j.contains("sweep") || !j.at("sweep").is_object()) {
    throw ConfigError("sweep", "expected an object of key: [values]");
  }
  const auto keys = config_keys();
  for (const auto& [key, values] : j.at("sweep").items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError(key, "unknown key");
    }
    if (!values.is_array() || values.empty()) throw ConfigError(key, "expected a non-empty array");
    plan.knobs.emplace_back(key, std::vector<json>(values.begin(), values.end()));
  }
  return plan;
}

SweepPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("", path + ": malformed JSON");
  return plan_from_json(j);
}

std::vector<SweepRun> run_sweep(const SweepPlan& plan) {
  std::vector<std::vector<std::pair<std::string, json>>> combos;
  if (plan.cartesian) {
    combos.emplace_back();
    for (const auto& [key, values] : plan.knobs) {
      std::vector<std::vector<std::pair<std::string, json>>> next;
      for (const auto& c : combos) {
        for (const auto& v : values) {
          next.push_back(c);
          next.back().emplace_back(key, v);
        }
      }
      combos = std::move(next);
    }
  } else {
    for (const auto& [key, values] : plan.knobs) {
      for (const auto& v : values) combos.push_back({{key, v}});
    }
  }

  std::vector<SweepRun> runs(combos.size());
  for (std::size_t i = 0; i < combos.size(); ++i) {
    runs[i].overrides = combos[i];
    runs[i].label = label_of(combos[i]);
    runs[i].config = plan.base;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      SweepRun& run = runs[i];
      try {
        for (const auto& [key, value] : run.overrides) {
          apply_knob(run.config, key + "=" + (value.is_string() ? value.get<std::string>() : value.dump()));
        }
        run.config.validate();
        const RunLog log = run_control(run.config);
        run.report = convergence_metrics(log);
        run.converged_at = log.converged_at;
        run.final_caps = log.final_caps.caps_w;
      } catch (const std::exception& e) {
        run.error = e.what();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(plan.parallelism, static_cast<int>(runs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return runs;
}

void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepRun>& runs) {
  out << "run,label,power_change,throughput_change,power_convergence,throughput_convergence,"
         "power_cv,throughput_cv,caps_converged_at,status\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    out << i << ',' << csv_field(r.label) << ',';
    if (r.report) {
      const auto& m = *r.report;
      out << m.power_change << ',' << m.throughput_change << ',' << opt_str(m.power_convergence)
          << ',' << opt_str(m.throughput_convergence) << ',' << m.power_cv << ','
          << m.throughput_cv << ',' << opt_str(r.converged_at) << ','
          << (r.converged_at ? "ok" : "never-converged") << '\n';
    } else {
      out << ",,,,,,," << csv_field("error: " + r.error) << '\n';
    }
  }
}

void cmd_sweep(const SweepPlan& plan, const std::string& out_dir) {
  const std::vector<SweepRun> runs = run_sweep(plan);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  write_file(dir / "summary.csv", [&](std::ostream& o) { write_sweep_summary_csv(o, runs); });
  write_file(dir / "final_caps.csv", [&](std::ostream& o) {
    o << "run,label,gpu,cap_w,relative_cap\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& r = runs[i];
      if (r.final_caps.size() == 0) continue;
      const double mean = r.final_caps.mean();
      for (Eigen::Index g = 0; g < r.final_caps.size(); ++g) {
        o << i << ',' << csv_field(r.label) << ',' << g << ',' << r.final_caps[g] << ','
          << r.final_caps[g] / mean << '\n';
      }
    }
  });

  // One bar chart per metric, grouped by run.
  std::vector<std::string> labels;
  for (const auto& r : runs) labels.push_back(r.label);
  auto metric = [&](const std::string& name, auto&& get) {
    Series s{name, {}, {}};
    for (const auto& r : runs) {
      s.y.push_back(r.report ? get(*r.report) : std::numeric_limits<double>::quiet_NaN());
    }
    return s;
  };
  const Series power =
      metric("power change (%)", [](const ConvergenceReport& m) { return 100.0 * m.power_change; });
  const Series tput = metric("throughput change (%)",
                             [](const ConvergenceReport& m) { return 100.0 * m.throughput_change; });
  const Series conv = metric("power convergence (samples)", [](const ConvergenceReport& m) {
    return m.power_convergence ? static_cast<double>(*m.power_convergence)
                               : std::numeric_limits<double>::quiet_NaN();
  });
  const Series cv = metric("power CV (%)", [](const ConvergenceReport& m) { return 100.0 * m.power_cv; });
  write_file(dir / "power_change.svg", [&](std::ostream& o) {
    write_bar_svg(o, {"Power change", "run", "%"}, labels, std::span(&power, 1));
  });
  write_file(dir / "throughput_change.svg", [&](std::ostream& o) {
    write_bar_svg(o, {"Throughput change", "run", "%"}, labels, std::span(&tput, 1));
  });
  write_file(dir / "convergence.svg", [&](std::ostream& o) {
    write_bar_svg(o, {"Power convergence", "run", "samples"}, labels, std::span(&conv, 1));
  });
  write_file(dir / "variation.svg", [&](std::ostream& o) {
    write_bar_svg(o, {"Power variation", "run", "%"}, labels, std::span(&cv, 1));
  });

  ordered_json m = manifest(plan.base, "sweep");
  ordered_json knobs = ordered_json::object();
  for (const auto& [key, values] : plan.knobs) knobs[key] = values;
  m["sweep"] = knobs;
  m["mode"] = plan.cartesian ? "cartesian" : "list";
  m["parallelism"] = plan.parallelism;
  write_json(dir / "manifest.json", m);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Thermal straggler simulation, detection and power-cap mitigation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string use_case;
  std::vector<std::string> knobs;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--use-case", use_case, "GPU-Red, GPU-Realloc or CPU-Slosh");
    sub->add_option("--knob", knobs, "Config override key=value (repeatable)");
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a node and write a trace");
  common(simulate_cmd);
  simulate_cmd->add_option("--out", out, "Trace file")->required();

  auto* control_cmd = app.add_subcommand("control", "Run the power-cap control loop");
  common(control_cmd);
  control_cmd->add_option("--out", out, "Output directory")->required();

  std::string trace_path;
  auto* analyze_cmd = app.add_subcommand("analyze", "Characterize a trace");
  common(analyze_cmd);
  analyze_cmd->add_option("trace", trace_path, "Trace file")->required();
  analyze_cmd->add_option("--out", out, "Output directory")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Predict use-case benefits from a trace");
  common(predict_cmd);
  predict_cmd->add_option("trace", trace_path, "Trace file")->required();
  predict_cmd->add_option("--out", out, "Prediction CSV")->required();

  std::string plan_path;
  int jobs = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a knob sweep");
  sweep_cmd->add_option("plan", plan_path, "Sweep plan (JSON)")->required();
  sweep_cmd->add_option("--out", out, "Output directory")->required();
  sweep_cmd->add_option("--jobs", jobs, "Parallel runs (overrides the plan)");

  double capacity_gw = 6.0;
  double fraction = 0.5;
  double price = 0.14;
  double saving = 0.04;
  auto* cost_cmd = app.add_subcommand("cost", "Annual electricity savings in dollars");
  cost_cmd->add_option("--capacity-gw", capacity_gw, "Installed capacity (GW)");
  cost_cmd->add_option("--gpu-fraction", fraction, "Share of energy drawn by GPUs");
  cost_cmd->add_option("--price", price, "Electricity price ($/kWh)");
  cost_cmd->add_option("--saving", saving, "Fractional GPU power saving");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    auto resolve = [&] {
      ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
      for (const auto& k : knobs) apply_knob(c, k);
      if (seed) c.seed = *seed;
      if (!use_case.empty()) c.use_case = std::string(to_string(parse_use_case(use_case)));
      c.validate();
      return c;
    };
    if (*simulate_cmd) {
      cmd_simulate(resolve(), out);
    } else if (*control_cmd) {
      const int code = cmd_control(resolve(), out);
      if (code == kExitNotConverged) std::cerr << "caps never converged\n";
      return code;
    } else if (*analyze_cmd) {
      cmd_analyze(trace_path, out, resolve().overlap_tau);
    } else if (*predict_cmd) {
      const ExperimentConfig c = resolve();
      std::optional<UseCase> uc;
      if (!use_case.empty()) uc = parse_use_case(use_case);
      cmd_predict(trace_path, uc, c, out);
    } else if (*sweep_cmd) {
      SweepPlan plan = load_plan(plan_path);
      if (jobs > 0) plan.parallelism = jobs;
      cmd_sweep(plan, out);
    } else if (*cost_cmd) {
      std::cout.precision(12);
      std::cout << cost_savings(capacity_gw, fraction, price, saving) << '\n';
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const TraceFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const TraceInvariantError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace lit
