#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "litsilicon/analysis.hpp"
#include "litsilicon/sim.hpp"

namespace lit {
namespace {

GpuModel plain_gpu() {
  GpuModel m;
  m.power_coeff_m = 100.0;
  m.idle_power_w = 150.0;
  return m;
}

TEST(StepFrequency, CapLimited) {
  EXPECT_DOUBLE_EQ(step_frequency(plain_gpu(), 350.0, 30.0), 2.0);
}

TEST(StepFrequency, NoConstraintBinds) {
  const GpuModel m = plain_gpu();
  EXPECT_EQ(step_frequency(m, 1e6, m.ambient_c), m.f_max_ghz);
}

TEST(StepFrequency, ThermalThrottle) {
  const GpuModel m = plain_gpu();
  EXPECT_NEAR(step_frequency(m, 1e6, m.throttle_start_c + 10), m.f_max_ghz - 0.2, 1e-12);
}

TEST(StepFrequency, ClampsToFMin) {
  const GpuModel m = plain_gpu();
  EXPECT_EQ(step_frequency(m, 151.0, 30.0), m.f_min_ghz);
}

TEST(StepFrequency, CapAtIdleThrows) {
  EXPECT_THROW(step_frequency(plain_gpu(), 150.0, 30.0), std::invalid_argument);
}

TEST(StepThermal, Example) {
  GpuModel m;
  m.ambient_c = 30;
  m.thermal_resistance_k_per_w = 0.05;
  m.thermal_tau_s = 60;
  EXPECT_NEAR(step_thermal(m, 30, 700, 60), 30 + 35 * (1 - std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(step_thermal(m, 30, 700, 60), 52.12, 0.005);
}

TEST(StepThermal, FixedPointAndLimit) {
  GpuModel m;
  const double steady = m.ambient_c + m.thermal_resistance_k_per_w * 500;
  EXPECT_DOUBLE_EQ(step_thermal(m, steady, 500, 1.0), steady);
  EXPECT_DOUBLE_EQ(step_thermal(m, 40, 500, 1e6), steady);
  EXPECT_THROW(step_thermal(m, 40, 500, 0.0), std::invalid_argument);
}

NodeConfig small_node(int gpus, int iterations) {
  NodeConfig c;
  c.gpu_count = gpus;
  c.gpus.assign(static_cast<std::size_t>(gpus), GpuModel{});
  c.workload = make_workload("llama3.1-8b", "v2", "bf16", "b2s4");
  c.workload.layers = 4;
  c.iterations = iterations;
  return c;
}

TEST(Simulator, SymmetricNodeHasNoLeads) {
  NodeConfig c = small_node(4, 5);
  c.workload.jitter = 0.0;
  const auto traces = simulate(c, 700.0);
  ASSERT_EQ(traces.size(), 5u);
  for (const auto& t : traces) {
    validate(t);
    EXPECT_EQ(lead_values(t, LeadAggregation::kSum).values, VectorXi64::Zero(4));
    const auto cls = classify_overlap(std::span(&t, 1));
    for (const auto& k : cls) EXPECT_EQ(k.min_ratio, k.max_ratio);
  }
}

TEST(Simulator, HotterGpuIsStraggler) {
  NodeConfig c = small_node(2, 200);
  for (auto& g : c.gpus) {
    g.leakage_w_per_c = 1.5;
    g.thermal_tau_s = 0.5;
  }
  c.gpus[1].thermal_resistance_k_per_w = 0.09;
  const auto traces = simulate(c, 500.0, 150);
  for (const auto& t : traces) {
    EXPECT_EQ(lead_values(t, LeadAggregation::kSum).straggler(), 1);
    double f[2] = {0, 0};
    for (const auto& s : t.telemetry) f[s.gpu] += static_cast<double>(s.freq_kHz);
    EXPECT_LT(f[1], f[0]);
  }
}

TEST(Simulator, Deterministic) {
  NodeConfig c = small_node(3, 10);
  c.gpus[2].thermal_resistance_k_per_w = 0.07;
  EXPECT_EQ(simulate(c, 650.0), simulate(c, 650.0));
  NodeConfig other = c;
  other.seed = 2;
  EXPECT_NE(simulate(c, 650.0), simulate(other, 650.0));
}

TEST(Simulator, CollectivesEndTogether) {
  const auto traces = simulate(small_node(3, 3), 700.0);
  for (const auto& t : traces) {
    for (const auto& e : t.events) {
      if (e.kind != KernelKind::kCommunication) continue;
      for (const auto& o : t.events) {
        if (o.kind == KernelKind::kCommunication && o.kernel_index == e.kernel_index) {
          EXPECT_EQ(o.end_ns, e.end_ns);
        }
      }
    }
  }
}

TEST(Simulator, LowerCapIsSlower) {
  NodeSimulator fast(small_node(2, 1), 700.0);
  NodeSimulator slow(small_node(2, 1), 500.0);
  EXPECT_LT(fast.run_iteration().wall_ns, slow.run_iteration().wall_ns);
}

TEST(Simulator, RejectsCapBelowIdle) {
  EXPECT_THROW(NodeSimulator(small_node(2, 1), 100.0), std::invalid_argument);
}

TEST(DefaultNode, Calibration) {
  NodeConfig c = calibrate_default_node();
  EXPECT_EQ(c.gpu_count, 8);
  c.iterations = 400;
  const auto traces = simulate(c, 700.0, 300, 10);
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(8);
  Eigen::VectorXd samples = Eigen::VectorXd::Zero(8);
  for (const auto& t : traces) {
    for (const auto& s : t.telemetry) {
      freq[s.gpu] += static_cast<double>(s.freq_kHz);
      samples[s.gpu] += 1;
    }
  }
  freq = freq.cwiseQuotient(samples);
  EXPECT_GE(freq.maxCoeff() / freq.minCoeff(), 1.05);
  EXPECT_LE(freq.maxCoeff() / freq.minCoeff(), 1.08);

  int straggler = 0;
  freq.minCoeff(&straggler);
  const auto& last = traces.back();
  EXPECT_EQ(lead_values(last, LeadAggregation::kSum).straggler(), straggler);
  const double straggler_overlap = layer_weighted_overlap(last, straggler, 1);
  for (int g = 0; g < 8; ++g) EXPECT_LE(straggler_overlap, layer_weighted_overlap(last, g, 1) + 1e-9);
}

TEST(DefaultNode, Node0HasSeveralStragglers) {
  NodeConfig c = node0_preset();
  c.iterations = 400;
  const auto traces = simulate(c, 700.0, 100, 5);
  std::set<int> stragglers;
  for (const auto& t : traces) stragglers.insert(lead_values(t, LeadAggregation::kSum).straggler());
  EXPECT_GE(stragglers.size(), 2u);
}

TEST(MSpread, ScalesHottestOnly) {
  NodeConfig c = calibrate_default_node();
  const NodeConfig before = c;
  apply_m_spread(c, 0.2);
  double lo = 1e9;
  double hi = 0;
  for (const auto& g : c.gpus) {
    lo = std::min(lo, g.thermal_resistance_k_per_w);
    hi = std::max(hi, g.thermal_resistance_k_per_w);
  }
  for (std::size_t i = 0; i < c.gpus.size(); ++i) {
    const double r = c.gpus[i].thermal_resistance_k_per_w;
    const double want = r == lo ? 1.0 : r == hi ? 1.2 : c.gpus[i].power_coeff_m / before.gpus[i].power_coeff_m;
    EXPECT_NEAR(c.gpus[i].power_coeff_m / before.gpus[i].power_coeff_m, want, 1e-12);
  }
  EXPECT_THROW(apply_m_spread(c, -0.1), std::invalid_argument);
}

TEST(Workload, UnknownKnobThrows) {
  EXPECT_THROW(make_workload("gpt-9", "v2", "bf16", "b2s4"), std::invalid_argument);
  EXPECT_THROW(make_workload("llama3.1-8b", "v3", "bf16", "b2s4"), std::invalid_argument);
}

}  // namespace
}  // namespace lit
