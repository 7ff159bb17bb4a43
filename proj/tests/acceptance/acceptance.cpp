// Acceptance suite: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "litsilicon/analysis.hpp"
#include "litsilicon/cli.hpp"
#include "litsilicon/config.hpp"
#include "litsilicon/control.hpp"
#include "litsilicon/models.hpp"
#include "litsilicon/sim.hpp"
#include "litsilicon/trace_io.hpp"

namespace {

using namespace lit;

// Tolerances and budgets.
constexpr double kC1BudgetS = 10.0;
constexpr int kC1Cases = 10'000;
constexpr double kC2BudgetS = 5.0;
constexpr int kC2Cases = 1'000;
constexpr double kC3BudgetS = 60.0;
constexpr double kFreqRatio = 1.062;
constexpr double kFreqRatioTol = 0.01;
constexpr double kTempRatio = 1.155;
constexpr double kTempRatioTol = 0.02;
constexpr double kStragglerOverlap = 0.296;
constexpr double kLeaderOverlap = 0.527;
constexpr double kOverlapTol = 0.05;
constexpr double kC4BudgetS = 120.0;
constexpr double kRedPowerReduction = 0.04;
constexpr double kRedPowerTol = 0.01;
constexpr double kRedThroughputTol = 0.005;
constexpr double kReallocThroughputLo = 0.025;
constexpr double kReallocThroughputHi = 0.035;
constexpr double kReallocPowerTol = 0.01;
constexpr double kMSpread = 0.2;
constexpr double kSloshThroughputHi = 0.06;
constexpr double kSloshPower = 0.03;
constexpr double kSloshPowerTol = 0.01;
constexpr double kSaturationTol = 0.0025;
constexpr double kPredictionPowerTol = 0.01;
constexpr double kCapDistributionTol = 0.05;
constexpr double kPlateauCv = 0.1;
constexpr double kStragglerLeadFraction = 0.01;
constexpr double kNumericsTol = 1e-9;
constexpr double kIdentityTol = 1e-12;
constexpr double kCostTarget = 147e6;
constexpr double kCostTol = 1e6;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ExperimentConfig config_for(UseCase uc) {
  ExperimentConfig c;
  c.use_case = std::string(to_string(uc));
  return c;
}

// Mean of `field` over the last kSettleSamples rows and over the
// kSettleSamples rows before the first adjustment.
std::pair<double, double> before_after(const RunLog& log,
                                       const std::function<double(const RunLogRow&)>& field) {
  const int n = static_cast<int>(log.rows.size());
  const int first = log.first_adjustment.value_or(n);
  auto mean = [&](int lo, int hi) {
    double s = 0;
    for (int i = lo; i < hi; ++i) s += field(log.rows[static_cast<std::size_t>(i)]);
    return s / (hi - lo);
  };
  return {mean(std::max(0, first - kSettleSamples), std::max(1, first)),
          mean(n - kSettleSamples, n)};
}

std::vector<IterationTrace> baseline_traces() {
  NodeConfig node = calibrate_default_node();
  node.iterations = 400;
  return simulate(node, 700.0, 300, 10);
}

Outcome c1_algorithm_fidelity() {
  Outcome o;
  const Eigen::Vector3d leads(0, 50e6, 100e6);
  const auto a = inc_power_gpu(leads, 15, 100e6, Scale::kGlobal);
  o.check(a.increase_w == Eigen::Vector3d(15, 7.5, 0), "inc_power_gpu global_max 100 ms");
  const auto b = inc_power_gpu(leads, 15, 200e6, Scale::kGlobal);
  o.check(b.increase_w == Eigen::Vector3d(7.5, 3.75, 0), "inc_power_gpu global_max 200 ms");
  o.check(b.global_max == 200e6, "global_max kept");

  CapVector caps{Eigen::Vector2d(700, 700), 1400.0, 750.0};
  o.check(adj_power_node(Eigen::Vector2d(15, 0), caps).caps_w == Eigen::Vector2d(707, 692),
          "adj_power_node {707, 692}");
  caps = CapVector{Eigen::Vector2d(745, 700), 1460.0, 750.0};
  o.check(adj_power_node(Eigen::Vector2d(15, 0), caps).caps_w == Eigen::Vector2d(750, 690),
          "adj_power_node {750, 690}");
  caps = CapVector{Eigen::Vector3d(700, 700, 700), 2100.0, 750.0};
  o.check(adj_power_node(Eigen::Vector3d::Zero(), caps).caps_w == caps.caps_w,
          "adj_power_node fixed point");
  o.check(gpu_red_deltas(Eigen::Vector3d(15, 7.5, 0)) == Eigen::Vector3d(0, -7.5, -15),
          "GPU-Red deltas");
  const CapVector red_caps{Eigen::Vector3d(700, 700, 700), std::nullopt, 750.0};
  o.check(apply_gpu_red(Eigen::Vector3d::Constant(5), red_caps, 15, 0, Scale::kGlobal)
                  .caps.caps_w == red_caps.caps_w,
          "GPU-Red degenerate leads");

  std::mt19937_64 rng(20240601);
  int feasible = 0;
  int violations = 0;
  for (int t = 0; t < kC1Cases; ++t) {
    const int g = std::uniform_int_distribution<int>(2, 16)(rng);
    const double min_cap = 200.0;
    const double tdp = 750.0;
    CapVector c;
    c.tdp_w = tdp;
    c.caps_w.resize(g);
    Eigen::VectorXd inc(g);
    for (int i = 0; i < g; ++i) {
      c.caps_w[i] = std::uniform_int_distribution<int>(400, 750)(rng);
      inc[i] = std::uniform_real_distribution<double>(0.0, 30.0)(rng);
    }
    c.node_cap_w = c.total() + std::uniform_int_distribution<int>(-200, 200)(rng);
    CapVector out;
    try {
      out = adj_power_node(inc, c, min_cap);
    } catch (const InfeasibleCaps&) {
      continue;
    }
    ++feasible;
    Eigen::VectorXd raised = c.caps_w;
    for (int i = 0; i < g; ++i) raised[i] += std::round(inc[i]);
    const Eigen::VectorXd diff = out.caps_w - raised;
    const bool ok = out.total() <= *c.node_cap_w && out.caps_w.maxCoeff() <= tdp &&
                    (diff.array() == diff[0]).all() && out.caps_w.minCoeff() >= min_cap &&
                    (out.caps_w.array() == out.caps_w.array().round()).all();
    violations += ok ? 0 : 1;
  }
  o.check(violations == 0, std::to_string(violations) + " property violations");
  o.check(feasible > kC1Cases / 2, "too few feasible cases");
  o.note(std::to_string(feasible) + "/" + std::to_string(kC1Cases) + " feasible cases hold");
  return o;
}

Outcome c2_detection_exactness() {
  Outcome o;
  std::mt19937_64 rng(77);
  int failures = 0;
  for (int t = 0; t < kC2Cases; ++t) {
    const int g_count = std::uniform_int_distribution<int>(2, 16)(rng);
    const int k_count = std::uniform_int_distribution<int>(1, 64)(rng);
    const std::int64_t d = std::uniform_int_distribution<std::int64_t>(1, 1'000'000)(rng);
    const int straggler = std::uniform_int_distribution<int>(0, g_count - 1)(rng);
    IterationTrace trace;
    trace.gpu_count = g_count;
    std::vector<std::int64_t> start(static_cast<std::size_t>(k_count));
    std::vector<std::int64_t> dur(static_cast<std::size_t>(k_count));
    std::int64_t clock = 0;
    for (int k = 0; k < k_count; ++k) {
      start[static_cast<std::size_t>(k)] = clock;
      dur[static_cast<std::size_t>(k)] = std::uniform_int_distribution<std::int64_t>(1, 5'000'000)(rng);
      clock += dur[static_cast<std::size_t>(k)] +
               std::uniform_int_distribution<std::int64_t>(0, 1000)(rng);
    }
    for (int g = 0; g < g_count; ++g) {
      for (int k = 0; k < k_count; ++k) {
        KernelEvent e;
        e.gpu_id = g;
        e.kernel_index = k;
        e.name = "k" + std::to_string(k);
        e.kind = k % 3 == 2 ? KernelKind::kVector : KernelKind::kCompute;
        e.start_ns = start[static_cast<std::size_t>(k)] + (g == straggler ? d : 0);
        e.end_ns = e.start_ns + dur[static_cast<std::size_t>(k)];
        trace.events.push_back(e);
      }
    }
    validate(trace);
    const LeadVector lv = lead_values(trace, LeadAggregation::kSum);
    bool ok = lv.straggler() == straggler && lv.values[straggler] == 0;
    for (int g = 0; g < g_count; ++g) {
      if (g != straggler) ok = ok && lv.values[g] == static_cast<std::int64_t>(k_count) * d;
    }
    failures += ok ? 0 : 1;
  }
  o.check(failures == 0, std::to_string(failures) + " mismatches");
  o.note(std::to_string(kC2Cases) + " randomized traces");
  return o;
}

Outcome c3_calibration() {
  Outcome o;
  const NodeConfig node = calibrate_default_node();
  NodeSimulator sim(node, 700.0);
  std::vector<IterationTrace> traces;
  for (int i = 0; i < 200; ++i) {
    const bool keep = i >= 150 && i % 5 == 0;
    IterationResult r = sim.run_iteration(keep);
    if (keep) traces.push_back(std::move(r.trace));
  }
  const TelemetrySummary ts = summarize_telemetry(traces, node.gpu_count);
  const double ambient = node.gpus.front().ambient_c;
  const double freq_ratio = ts.median_freq_ghz.maxCoeff() / ts.median_freq_ghz.minCoeff();
  const double temp_ratio =
      (ts.median_temp_c.maxCoeff() - ambient) / (ts.median_temp_c.minCoeff() - ambient);
  std::vector<double> straggler;
  std::vector<double> leader;
  for (const auto& t : traces) {
    const int s = lead_values(t, LeadAggregation::kSum).straggler();
    const LayerOverlap prof = layer_overlap_profile(t);
    double best = 0.0;
    for (int g = 0; g < node.gpu_count; ++g) {
      Eigen::VectorXd r = prof.weighted.row(g).transpose();
      const double m = median(std::vector<double>(r.data(), r.data() + r.size()));
      if (g == s) {
        straggler.push_back(m);
      } else {
        best = std::max(best, m);
      }
    }
    leader.push_back(best);
  }
  const double so = median(straggler);
  const double lo = median(leader);
  o.check(std::abs(freq_ratio - kFreqRatio) <= kFreqRatioTol, "frequency ratio");
  o.check(std::abs(temp_ratio - kTempRatio) <= kTempRatioTol, "temperature ratio");
  o.check(std::abs(so - kStragglerOverlap) <= kOverlapTol, "straggler overlap");
  o.check(std::abs(lo - kLeaderOverlap) <= kOverlapTol, "leader overlap");
  o.note(fmt("freq %.4f temp %.4f straggler %.3f leader %.3f", freq_ratio, temp_ratio, so, lo));
  return o;
}

Outcome c4_gpu_red() {
  Outcome o;
  const RunLog log = run_control(config_for(UseCase::kGpuRed));
  const ConvergenceReport r = convergence_metrics(log);
  const double reduction = -r.power_change;
  o.check(std::abs(reduction - kRedPowerReduction) <= kRedPowerTol, "power reduction");
  o.check(std::abs(r.throughput_change) <= kRedThroughputTol, "throughput change");
  o.note(fmt("power %+.2f%% throughput %+.2f%%", 100 * r.power_change, 100 * r.throughput_change));
  return o;
}

Outcome c5_gpu_realloc() {
  Outcome o;
  const RunLog log = run_control(config_for(UseCase::kGpuRealloc));
  const ConvergenceReport r = convergence_metrics(log);
  o.check(r.throughput_change >= kReallocThroughputLo && r.throughput_change <= kReallocThroughputHi,
          "throughput");
  o.check(std::abs(r.power_change) <= kReallocPowerTol, "node power");

  ExperimentConfig spread = config_for(UseCase::kGpuRealloc);
  spread.m_spread = kMSpread;
  const RunLog slog = run_control(spread);
  const auto [f0, f1] = before_after(slog, [](const RunLogRow& row) { return row.freq_ghz.mean(); });
  o.check(f1 <= f0, "average frequency rose with M spread");
  o.note(fmt("power %+.2f%% throughput %+.2f%%; M spread mean freq %.4f -> %.4f GHz",
             100 * r.power_change, 100 * r.throughput_change, f0, f1));
  return o;
}

Outcome c6_cpu_slosh() {
  Outcome o;
  const ConvergenceReport realloc = convergence_metrics(run_control(config_for(UseCase::kGpuRealloc)));
  std::map<int, ConvergenceReport> by_budget;
  for (int budget : {20, 30, 50}) {
    ExperimentConfig c = config_for(UseCase::kCpuSlosh);
    c.power_budget = budget;
    by_budget[budget] = convergence_metrics(run_control(c));
  }
  const auto& b20 = by_budget[20];
  o.check(b20.throughput_change >= realloc.throughput_change, "throughput below GPU-Realloc");
  o.check(b20.throughput_change <= kSloshThroughputHi, "throughput above ceiling");
  o.check(std::abs(b20.power_change - kSloshPower) <= kSloshPowerTol, "power at 20 W");
  for (int budget : {30, 50}) {
    o.check(by_budget[budget].power_change - b20.power_change <= kSaturationTol,
            "budget " + std::to_string(budget) + " W consumed more power");
  }
  o.note(fmt("20 W: power %+.2f%% throughput %+.2f%% (realloc %+.2f%%)", 100 * b20.power_change,
             100 * b20.throughput_change, 100 * realloc.throughput_change));
  o.note(fmt("30 W power %+.2f%%, 50 W power %+.2f%%", 100 * by_budget[30].power_change,
             100 * by_budget[50].power_change));
  return o;
}

Outcome c7_model_oracle() {
  Outcome o;
  const auto traces = baseline_traces();
  std::vector<double> throughput;
  std::vector<double> power;
  for (UseCase uc : {UseCase::kGpuRed, UseCase::kGpuRealloc, UseCase::kCpuSlosh}) {
    const UseCasePrediction p = predict_use_case(traces, uc, 700.0, 150.0);
    const ConvergenceReport m = convergence_metrics(run_control(config_for(uc)));
    const double measured = 1.0 + m.power_change;
    const std::string name(to_string(uc));
    o.check(std::abs(p.prediction.power_ratio - measured) <= kPredictionPowerTol,
            name + " power prediction");
    if (uc != UseCase::kGpuRed) {
      o.check(p.prediction.throughput_ratio >= 1.0 + m.throughput_change,
              name + " throughput prediction below measured");
    }
    o.note(name + fmt(": power %.4f vs %.4f, throughput %.4f vs %.4f", p.prediction.power_ratio,
                      measured, p.prediction.throughput_ratio, 1.0 + m.throughput_change));
    throughput.push_back(p.prediction.throughput_ratio);
    power.push_back(p.prediction.power_ratio);
  }
  // Red, Realloc, Slosh use max, med, min.
  o.check(throughput[0] <= throughput[1] && throughput[1] <= throughput[2], "throughput ordering");
  o.check(power[2] >= power[1] && power[1] >= power[0], "power ordering");
  return o;
}

Outcome c8_cap_distribution() {
  Outcome o;
  std::vector<Eigen::VectorXd> rel;
  for (double cap : {700.0, 650.0, 600.0, 550.0, 500.0}) {
    ExperimentConfig c = config_for(UseCase::kGpuRealloc);
    c.power_cap = cap;
    const RunLog log = run_control(c);
    rel.push_back(log.final_caps.caps_w / log.final_caps.caps_w.mean());
  }
  double worst = 0.0;
  for (std::size_t i = 1; i < rel.size(); ++i) {
    worst = std::max(worst, ((rel[i].array() / rel[0].array()) - 1.0).abs().maxCoeff());
  }
  o.check(worst <= kCapDistributionTol, "distributions differ");
  o.note(fmt("largest per-GPU deviation %.2f%%", 100 * worst));
  return o;
}

Outcome c9_equilibrium() {
  Outcome o;
  const auto traces = baseline_traces();
  double worst_cv = 0.0;
  double worst_straggler = 0.0;
  for (const auto& t : traces) {
    const LeadVector lv = lead_values(t, LeadAggregation::kSum);
    const int s = lv.straggler();
    const MatrixXi64 wave = straggler_wave(t);
    double leader_sum = 0.0;
    for (int g = 0; g < t.gpu_count; ++g) {
      if (g == s) continue;
      const Eigen::VectorXd row = wave.row(g).cast<double>().transpose();
      worst_cv = std::max(worst_cv, tail_cv(std::span(row.data(), row.size())));
      leader_sum = std::max(leader_sum, static_cast<double>(lv.values[g]));
    }
    worst_straggler = std::max(worst_straggler, static_cast<double>(lv.values[s]) / leader_sum);
  }
  o.check(worst_cv < kPlateauCv, "leader plateau");
  o.check(worst_straggler <= kStragglerLeadFraction, "straggler lead not near zero");
  o.note(fmt("max tail CV %.4f, straggler lead %.4f%% of leaders", worst_cv, 100 * worst_straggler));
  return o;
}

Outcome c10_numerics() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n01(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 200)(rng);
    Eigen::VectorXd x(n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = n01(rng) * 3 + 1;
      y[i] = 0.5 * x[i] + n01(rng);
    }
    double mx = 0;
    double my = 0;
    for (int i = 0; i < n; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0;
    double sxx = 0;
    double syy = 0;
    double dot = 0;
    double nx = 0;
    double ny = 0;
    for (int i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
      dot += x[i] * y[i];
      nx += x[i] * x[i];
      ny += y[i] * y[i];
    }
    const double r = sxy / std::sqrt(sxx * syy);
    const double c = dot / std::sqrt(nx * ny);
    worst = std::max(worst, std::abs(*pearson(x, y) - r));
    worst = std::max(worst, std::abs(*cosine_similarity(x, y) - c));
  }
  o.check(worst <= kNumericsTol, "correlation oracle");

  double identity = 0.0;
  bool invariant = true;
  for (int t = 0; t < 100; ++t) {
    const int g = std::uniform_int_distribution<int>(1, 12)(rng);
    const int k = std::uniform_int_distribution<int>(2, 40)(rng);
    PerfModelInput in;
    in.durations = (Eigen::MatrixXd::Random(g, k).array() + 1.5) * 1e6;
    in.constant.assign(static_cast<std::size_t>(k), false);
    for (int i = 0; i < k; ++i) in.constant[static_cast<std::size_t>(i)] = i % 2 == 0 || i == 1;
    PerfModelInput twice = in;
    twice.durations *= 2.0;
    for (Agg agg : {Agg::kMin, Agg::kMed, Agg::kMax}) {
      const ModelPrediction p = predict(in, agg, 700, 150);
      const ModelPrediction q = predict(twice, agg, 700, 150);
      identity = std::max(identity, std::abs(p.throughput_ratio - p.s_c));
      invariant = invariant && p.throughput_ratio == q.throughput_ratio &&
                  p.power_ratio == q.power_ratio;
    }
  }
  o.check(identity <= kIdentityTol, "S_iter identity");
  o.check(invariant, "scale invariance");
  o.note(fmt("correlation err %.2e, identity err %.2e", worst, identity));
  return o;
}

Outcome c11_cost() {
  Outcome o;
  const double v = cost_savings(6, 0.5, 0.14, 0.04);
  o.check(std::abs(v - kCostTarget) <= kCostTol, "cost");
  o.note(fmt("$%.3f M", v / 1e6));
  return o;
}

Outcome c12_determinism() {
  Outcome o;
  ExperimentConfig c;
  c.iterations = 60;
  c.trace_skip = 50;
  auto dump_trace = [&] {
    std::ostringstream s;
    write_trace(run_simulation(c), s);
    return s.str();
  };
  const std::string a = dump_trace();
  o.check(a == dump_trace(), "trace bytes differ");

  ExperimentConfig cc = config_for(UseCase::kGpuRealloc);
  cc.iterations = 800;
  auto dump_log = [&] {
    std::ostringstream s;
    write_run_log_csv(s, run_control(cc));
    return s.str();
  };
  o.check(dump_log() == dump_log(), "run log bytes differ");

  ExperimentConfig other = c;
  other.seed = c.seed + 1;
  std::ostringstream s;
  write_trace(run_simulation(other), s);
  o.check(s.str() != a, "seed had no effect");
  o.note(std::to_string(a.size()) + " trace bytes compared");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
  double budget_s;
};

const Criterion kCriteria[] = {
    {1, "algorithm-fidelity", c1_algorithm_fidelity, kC1BudgetS},
    {2, "detection-exactness", c2_detection_exactness, kC2BudgetS},
    {3, "calibration", c3_calibration, kC3BudgetS},
    {4, "gpu-red", c4_gpu_red, kC4BudgetS},
    {5, "gpu-realloc", c5_gpu_realloc, 0},
    {6, "cpu-slosh", c6_cpu_slosh, 0},
    {7, "model-vs-simulator", c7_model_oracle, 0},
    {8, "cap-distribution-reuse", c8_cap_distribution, 0},
    {9, "equilibrium", c9_equilibrium, 0},
    {10, "numerics", c10_numerics, 0},
    {11, "cost", c11_cost, 0},
    {12, "determinism", c12_determinism, 0},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.check(false, fmt("runtime %.1f s over %.0f s budget", secs, c.budget_s));
    }
    std::printf("%s C%02d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
