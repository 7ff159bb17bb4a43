#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "litsilicon/trace.hpp"

namespace lit {

inline constexpr int kTraceFormatVersion = 1;

struct TraceHeader {
  int version = kTraceFormatVersion;
  int gpu_count = 0;
  nlohmann::ordered_json workload = nlohmann::ordered_json::object();
  nlohmann::ordered_json knobs = nlohmann::ordered_json::object();

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

struct TraceFile {
  TraceHeader header;
  std::vector<IterationTrace> iterations;

  friend bool operator==(const TraceFile&, const TraceFile&) = default;
};

// Malformed input. line() is 1-based; 0 when the error is not tied to a line.
class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TraceIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Line-delimited JSON: one header line, then kernel and telemetry records
// grouped by iteration. Iterations must be in ascending order.
void write_trace(const TraceHeader& header,
                 std::span<const IterationTrace> iterations, std::ostream& out);
void write_trace(const TraceFile& file, std::ostream& out);
void write_trace_file(const TraceFile& file, const std::string& path);

// Parses and validates. Throws TraceFormatError for malformed records and
// version mismatches, TraceInvariantError for invariant violations.
TraceFile read_trace(std::istream& in);
TraceFile read_trace_file(const std::string& path);

}  // namespace lit
