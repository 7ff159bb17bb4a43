#include "litsilicon/trace.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <tuple>

namespace lit {

std::string_view to_string(Phase phase) {
  return phase == Phase::kForward ? "forward" : "backward";
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kCompute:
      return "compute";
    case KernelKind::kVector:
      return "vector";
    case KernelKind::kCommunication:
      return "communication";
  }
  return "compute";
}

Phase parse_phase(std::string_view text) {
  if (text == "forward") return Phase::kForward;
  if (text == "backward") return Phase::kBackward;
  throw std::invalid_argument("unknown phase '" + std::string(text) + "'");
}

KernelKind parse_kernel_kind(std::string_view text) {
  if (text == "compute") return KernelKind::kCompute;
  if (text == "vector") return KernelKind::kVector;
  if (text == "communication") return KernelKind::kCommunication;
  throw std::invalid_argument("unknown kernel kind '" + std::string(text) + "'");
}

std::int64_t IterationTrace::start_ns() const {
  std::int64_t t = std::numeric_limits<std::int64_t>::max();
  for (const auto& e : events) t = std::min(t, e.start_ns);
  return events.empty() ? 0 : t;
}

std::int64_t IterationTrace::end_ns() const {
  std::int64_t t = std::numeric_limits<std::int64_t>::min();
  for (const auto& e : events) t = std::max(t, e.end_ns);
  return events.empty() ? 0 : t;
}

TraceInvariantError::TraceInvariantError(std::string invariant,
                                         const std::string& detail)
    : std::runtime_error("trace invariant '" + invariant + "' violated: " + detail),
      invariant_(std::move(invariant)) {}

namespace {

std::string describe(const KernelEvent& e) {
  return "gpu " + std::to_string(e.gpu_id) + ", iteration " +
         std::to_string(e.iteration) + ", kernel " +
         std::to_string(e.kernel_index) + " (" + e.name + ")";
}

}  // namespace

void validate(const IterationTrace& trace) {
  const int g_count = trace.gpu_count;
  if (g_count <= 0 && !trace.events.empty()) {
    throw TraceInvariantError("gpu range", "gpu_count must be positive");
  }

  for (const auto& e : trace.events) {
    if (e.gpu_id < 0 || e.gpu_id >= g_count) {
      throw TraceInvariantError("gpu range", describe(e));
    }
    if (e.iteration < 0 || e.kernel_index < 0 || e.layer < 0) {
      throw TraceInvariantError("non-negative index", describe(e));
    }
    if (e.iteration != trace.iteration) {
      throw TraceInvariantError("iteration grouping", describe(e));
    }
    if (e.end_ns <= e.start_ns) {
      throw TraceInvariantError("duration", describe(e));
    }
    if (e.overlap_ns < 0 || e.overlap_ns > e.duration_ns()) {
      throw TraceInvariantError("overlap bounds", describe(e));
    }
    if (e.is_communication() && e.overlap_ns != 0) {
      throw TraceInvariantError("overlap bounds",
                                describe(e) + ": communication kernels carry no overlap");
    }
  }

  // Per kernel_index: exactly one event per GPU, identical identity.
  std::map<int, std::vector<const KernelEvent*>> by_index;
  for (const auto& e : trace.events) by_index[e.kernel_index].push_back(&e);
  for (const auto& [k, group] : by_index) {
    std::vector<int> seen(static_cast<std::size_t>(g_count), 0);
    for (const KernelEvent* e : group) {
      if (++seen[static_cast<std::size_t>(e->gpu_id)] > 1) {
        throw TraceInvariantError("per-GPU completeness",
                                  "duplicate event for " + describe(*e));
      }
    }
    if (static_cast<int>(group.size()) != g_count) {
      throw TraceInvariantError(
          "per-GPU completeness",
          "kernel " + std::to_string(k) + " has " + std::to_string(group.size()) +
              " of " + std::to_string(g_count) + " GPU events");
    }
    const KernelEvent& ref = *group.front();
    for (const KernelEvent* e : group) {
      if (e->name != ref.name || e->layer != ref.layer || e->phase != ref.phase ||
          e->kind != ref.kind) {
        throw TraceInvariantError("kernel identity", describe(*e));
      }
      if (ref.is_communication() && e->end_ns != ref.end_ns) {
        throw TraceInvariantError("collective synchronization", describe(*e));
      }
    }
  }

  // Non-communication kernels on one GPU never overlap in time.
  std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> lanes(
      static_cast<std::size_t>(std::max(g_count, 0)));
  for (const auto& e : trace.events) {
    if (!e.is_communication()) {
      lanes[static_cast<std::size_t>(e.gpu_id)].emplace_back(e.start_ns, e.end_ns);
    }
  }
  for (std::size_t g = 0; g < lanes.size(); ++g) {
    auto& lane = lanes[g];
    std::sort(lane.begin(), lane.end());
    for (std::size_t i = 1; i < lane.size(); ++i) {
      if (lane[i].first < lane[i - 1].second) {
        throw TraceInvariantError(
            "serial compute", "gpu " + std::to_string(g) + " runs two compute kernels at " +
                                  std::to_string(lane[i].first));
      }
    }
  }

  for (const auto& s : trace.telemetry) {
    if (s.gpu < 0 || s.gpu >= g_count) {
      throw TraceInvariantError("gpu range",
                                "telemetry sample for gpu " + std::to_string(s.gpu));
    }
    if (s.iteration != trace.iteration) {
      throw TraceInvariantError("iteration grouping",
                                "telemetry sample at " + std::to_string(s.ts_ns));
    }
  }
}

}  // namespace lit
