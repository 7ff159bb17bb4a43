#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lit {

enum class Phase { kForward, kBackward };
enum class KernelKind { kCompute, kVector, kCommunication };

std::string_view to_string(Phase phase);
std::string_view to_string(KernelKind kind);
Phase parse_phase(std::string_view text);
KernelKind parse_kernel_kind(std::string_view text);

// One kernel execution on one GPU. Times are device-side nanoseconds.
struct KernelEvent {
  int gpu_id = 0;
  int iteration = 0;
  // Position within the iteration's kernel sequence; identical on every GPU.
  int kernel_index = 0;
  std::string name;
  int layer = 0;
  Phase phase = Phase::kForward;
  KernelKind kind = KernelKind::kCompute;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  // Wall time during which a collective was active on the same GPU.
  // Always 0 for communication kernels.
  std::int64_t overlap_ns = 0;

  std::int64_t duration_ns() const { return end_ns - start_ns; }
  bool is_communication() const { return kind == KernelKind::kCommunication; }

  friend bool operator==(const KernelEvent&, const KernelEvent&) = default;
};

struct TelemetrySample {
  int gpu = 0;
  int iteration = 0;
  std::int64_t ts_ns = 0;
  std::int64_t temp_mC = 0;
  std::int64_t freq_kHz = 0;
  std::int64_t power_mW = 0;
  std::int64_t cap_mW = 0;

  friend bool operator==(const TelemetrySample&, const TelemetrySample&) = default;
};

// All kernel events and telemetry of one training iteration across all GPUs.
struct IterationTrace {
  int gpu_count = 0;
  int iteration = 0;
  std::vector<KernelEvent> events;
  std::vector<TelemetrySample> telemetry;

  std::int64_t start_ns() const;
  std::int64_t end_ns() const;
  std::int64_t wall_ns() const { return end_ns() - start_ns(); }

  friend bool operator==(const IterationTrace&, const IterationTrace&) = default;
};

// Raised when a trace violates one of the data-model invariants. The message
// names the invariant ("duration", "per-GPU completeness", ...).
class TraceInvariantError : public std::runtime_error {
 public:
  TraceInvariantError(std::string invariant, const std::string& detail);
  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

// Checks every invariant of KernelEvent and IterationTrace; throws
// TraceInvariantError on the first violation.
void validate(const IterationTrace& trace);

}  // namespace lit
