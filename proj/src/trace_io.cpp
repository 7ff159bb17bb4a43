#include "litsilicon/trace_io.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace lit {

using nlohmann::ordered_json;

TraceFormatError::TraceFormatError(std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

namespace {

ordered_json kernel_record(const KernelEvent& e) {
  ordered_json j;
  j["type"] = "kernel";
  j["gpu_id"] = e.gpu_id;
  j["iteration"] = e.iteration;
  j["kernel_index"] = e.kernel_index;
  j["name"] = e.name;
  j["layer"] = e.layer;
  j["phase"] = to_string(e.phase);
  j["kind"] = to_string(e.kind);
  j["start_ns"] = e.start_ns;
  j["end_ns"] = e.end_ns;
  j["overlap_ns"] = e.overlap_ns;
  return j;
}

ordered_json telemetry_record(const TelemetrySample& s) {
  ordered_json j;
  j["type"] = "telemetry";
  j["gpu"] = s.gpu;
  j["iteration"] = s.iteration;
  j["ts_ns"] = s.ts_ns;
  j["temp_mC"] = s.temp_mC;
  j["freq_kHz"] = s.freq_kHz;
  j["power_mW"] = s.power_mW;
  j["cap_mW"] = s.cap_mW;
  return j;
}

template <typename T>
T field(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) {
      throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
    }
    return it->template get<T>();
  } else {
    if (!it->is_string()) {
      throw std::invalid_argument(std::string("field '") + key + "' must be a string");
    }
    return it->template get<T>();
  }
}

KernelEvent parse_kernel(const ordered_json& j) {
  KernelEvent e;
  e.gpu_id = field<int>(j, "gpu_id");
  e.iteration = field<int>(j, "iteration");
  e.kernel_index = field<int>(j, "kernel_index");
  e.name = field<std::string>(j, "name");
  e.layer = field<int>(j, "layer");
  e.phase = parse_phase(field<std::string>(j, "phase"));
  e.kind = parse_kernel_kind(field<std::string>(j, "kind"));
  e.start_ns = field<std::int64_t>(j, "start_ns");
  e.end_ns = field<std::int64_t>(j, "end_ns");
  e.overlap_ns = field<std::int64_t>(j, "overlap_ns");
  return e;
}

TelemetrySample parse_telemetry(const ordered_json& j) {
  TelemetrySample s;
  s.gpu = field<int>(j, "gpu");
  s.iteration = field<int>(j, "iteration");
  s.ts_ns = field<std::int64_t>(j, "ts_ns");
  s.temp_mC = field<std::int64_t>(j, "temp_mC");
  s.freq_kHz = field<std::int64_t>(j, "freq_kHz");
  s.power_mW = field<std::int64_t>(j, "power_mW");
  s.cap_mW = field<std::int64_t>(j, "cap_mW");
  return s;
}

}  // namespace

void write_trace(const TraceHeader& header, std::span<const IterationTrace> iterations,
                 std::ostream& out) {
  ordered_json h;
  h["type"] = "header";
  h["version"] = header.version;
  h["gpu_count"] = header.gpu_count;
  h["workload"] = header.workload;
  h["knobs"] = header.knobs;
  out << h.dump() << '\n';

  int previous = -1;
  for (const auto& it : iterations) {
    if (it.iteration <= previous) {
      throw std::invalid_argument("write_trace: iterations must be strictly ascending");
    }
    previous = it.iteration;
    for (const auto& e : it.events) out << kernel_record(e).dump() << '\n';
    for (const auto& s : it.telemetry) out << telemetry_record(s).dump() << '\n';
  }
  out.flush();
  if (!out) throw TraceIoError("write_trace: sink failure");
}

void write_trace(const TraceFile& file, std::ostream& out) {
  write_trace(file.header, file.iterations, out);
}

void write_trace_file(const TraceFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TraceIoError("cannot open '" + path + "' for writing");
  write_trace(file, out);
}

TraceFile read_trace(std::istream& in) {
  TraceFile file;
  bool have_header = false;
  std::map<int, IterationTrace> by_iteration;
  std::map<int, std::size_t> first_line;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw TraceFormatError(line_no, std::string("malformed record: ") + ex.what());
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
      throw TraceFormatError(line_no, "record lacks a string 'type' tag");
    }
    const std::string type = j["type"].get<std::string>();
    try {
      if (type == "header") {
        if (have_header) throw std::invalid_argument("duplicate header");
        if (line_no != 1) throw std::invalid_argument("header must be the first record");
        file.header.version = field<int>(j, "version");
        if (file.header.version != kTraceFormatVersion) {
          throw std::invalid_argument("version mismatch: expected " +
                                      std::to_string(kTraceFormatVersion) + ", found " +
                                      std::to_string(file.header.version));
        }
        file.header.gpu_count = field<int>(j, "gpu_count");
        if (file.header.gpu_count <= 0) throw std::invalid_argument("gpu_count must be positive");
        if (j.contains("workload")) file.header.workload = j["workload"];
        if (j.contains("knobs")) file.header.knobs = j["knobs"];
        have_header = true;
        continue;
      }
      if (!have_header) throw std::invalid_argument("header must precede all records");
      if (type == "kernel") {
        KernelEvent e = parse_kernel(j);
        auto& it = by_iteration[e.iteration];
        first_line.try_emplace(e.iteration, line_no);
        it.iteration = e.iteration;
        it.events.push_back(std::move(e));
      } else if (type == "telemetry") {
        TelemetrySample s = parse_telemetry(j);
        auto& it = by_iteration[s.iteration];
        first_line.try_emplace(s.iteration, line_no);
        it.iteration = s.iteration;
        it.telemetry.push_back(s);
      } else {
        throw std::invalid_argument("unknown record type '" + type + "'");
      }
    } catch (const std::invalid_argument& ex) {
      throw TraceFormatError(line_no, ex.what());
    } catch (const nlohmann::json::exception& ex) {
      throw TraceFormatError(line_no, ex.what());
    }
  }
  if (in.bad()) throw TraceIoError("read_trace: stream failure");
  if (!have_header) throw TraceFormatError(0, "missing header");

  // Iterations must appear in ascending, non-interleaved order.
  std::size_t last_line = 0;
  for (const auto& [iter, line_at] : first_line) {
    if (line_at < last_line) {
      throw TraceFormatError(line_at, "iteration " + std::to_string(iter) + " out of order");
    }
    last_line = line_at;
  }

  file.iterations.reserve(by_iteration.size());
  for (auto& [iter, trace] : by_iteration) {
    trace.gpu_count = file.header.gpu_count;
    validate(trace);
    file.iterations.push_back(std::move(trace));
  }
  return file;
}

TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceIoError("cannot open '" + path + "'");
  return read_trace(in);
}

}  // namespace lit
