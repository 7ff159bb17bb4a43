#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "litsilicon/trace.hpp"

namespace lit::testing {

inline KernelEvent kernel(int gpu, int index, std::int64_t start, std::int64_t end,
                          std::int64_t overlap = 0, KernelKind kind = KernelKind::kCompute,
                          std::string name = "", int layer = 0, Phase phase = Phase::kForward,
                          int iteration = 0) {
  KernelEvent e;
  e.gpu_id = gpu;
  e.iteration = iteration;
  e.kernel_index = index;
  e.name = name.empty() ? "k" + std::to_string(index) : std::move(name);
  e.layer = layer;
  e.phase = phase;
  e.kind = kind;
  e.start_ns = start;
  e.end_ns = end;
  e.overlap_ns = overlap;
  return e;
}

// starts[g][k] with unit gaps; every kernel lasts `duration`.
inline IterationTrace trace_from_starts(const std::vector<std::vector<std::int64_t>>& starts,
                                        std::int64_t duration = 1) {
  IterationTrace t;
  t.gpu_count = static_cast<int>(starts.size());
  for (int g = 0; g < t.gpu_count; ++g) {
    for (int k = 0; k < static_cast<int>(starts[g].size()); ++k) {
      t.events.push_back(kernel(g, k, starts[g][k], starts[g][k] + duration));
    }
  }
  return t;
}

// Random valid trace: serial compute/vector kernels per GPU with one
// synchronized collective per iteration, plus telemetry.
inline std::vector<IterationTrace> random_traces(std::mt19937_64& rng, int gpus, int kernels,
                                                 int iterations) {
  std::uniform_int_distribution<std::int64_t> dur(1, 10'000);
  std::vector<IterationTrace> out;
  std::int64_t base = 0;
  for (int it = 0; it < iterations; ++it) {
    IterationTrace t;
    t.gpu_count = gpus;
    t.iteration = it;
    std::int64_t comm_end = 0;
    std::vector<std::int64_t> clock(static_cast<std::size_t>(gpus), base);
    for (int k = 0; k < kernels; ++k) {
      for (int g = 0; g < gpus; ++g) {
        const std::int64_t s = clock[static_cast<std::size_t>(g)] + dur(rng) % 7;
        const std::int64_t d = dur(rng);
        const std::int64_t ov = std::uniform_int_distribution<std::int64_t>(0, d)(rng);
        const auto kind = k % 2 ? KernelKind::kVector : KernelKind::kCompute;
        t.events.push_back(kernel(g, k, s, s + d, ov, kind, "op" + std::to_string(k % 3), k / 2,
                                  Phase::kForward, it));
        clock[static_cast<std::size_t>(g)] = s + d;
        comm_end = std::max(comm_end, s + d);
      }
    }
    for (int g = 0; g < gpus; ++g) {
      t.events.push_back(kernel(g, kernels, base + g, comm_end + 5, 0, KernelKind::kCommunication,
                                "ag", 0, Phase::kForward, it));
      TelemetrySample s;
      s.gpu = g;
      s.iteration = it;
      s.ts_ns = base + 100;
      s.temp_mC = 60'000 + g;
      s.freq_kHz = 2'000'000 - g;
      s.power_mW = 700'000;
      s.cap_mW = 700'000;
      t.telemetry.push_back(s);
    }
    out.push_back(std::move(t));
    base = comm_end + 1000;
  }
  return out;
}

}  // namespace lit::testing
