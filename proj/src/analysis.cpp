#include "litsilicon/analysis.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace lit {

std::string_view to_string(LeadAggregation agg) {
  switch (agg) {
    case LeadAggregation::kSum:
      return "sum";
    case LeadAggregation::kMax:
      return "max";
    case LeadAggregation::kLast:
      return "last";
  }
  return "sum";
}

LeadAggregation parse_lead_aggregation(std::string_view text) {
  if (text == "sum") return LeadAggregation::kSum;
  if (text == "max") return LeadAggregation::kMax;
  if (text == "last") return LeadAggregation::kLast;
  throw std::invalid_argument("unknown aggregation '" + std::string(text) + "'");
}

std::string_view to_string(OverlapClass cls) {
  return cls == OverlapClass::kConstant ? "constant" : "varying";
}

KernelTable tabulate(const IterationTrace& trace) {
  std::map<int, const KernelEvent*> columns;
  for (const auto& e : trace.events) {
    if (!e.is_communication()) columns.try_emplace(e.kernel_index, &e);
  }
  KernelTable table;
  const auto g_count = static_cast<Eigen::Index>(trace.gpu_count);
  const auto k_count = static_cast<Eigen::Index>(columns.size());
  table.start_ns = MatrixXi64::Zero(g_count, k_count);
  table.duration_ns = Eigen::MatrixXd::Zero(g_count, k_count);
  table.overlap_ns = Eigen::MatrixXd::Zero(g_count, k_count);

  std::map<int, Eigen::Index> column_of;
  for (const auto& [k, e] : columns) {
    column_of[k] = static_cast<Eigen::Index>(table.kernel_index.size());
    table.kernel_index.push_back(k);
    table.name.push_back(e->name);
    table.layer.push_back(e->layer);
    table.phase.push_back(e->phase);
    table.kind.push_back(e->kind);
  }
  for (const auto& e : trace.events) {
    if (e.is_communication()) continue;
    const Eigen::Index c = column_of.at(e.kernel_index);
    table.start_ns(e.gpu_id, c) = e.start_ns;
    table.duration_ns(e.gpu_id, c) = static_cast<double>(e.duration_ns());
    table.overlap_ns(e.gpu_id, c) = static_cast<double>(e.overlap_ns);
  }
  return table;
}

int LeadVector::straggler() const {
  if (values.size() == 0) throw std::logic_error("empty lead vector");
  Eigen::Index idx = 0;
  values.minCoeff(&idx);
  return static_cast<int>(idx);
}

double overlap_ratio(const KernelEvent& event) {
  if (event.is_communication()) {
    throw std::invalid_argument("overlap ratio is undefined for communication kernel " +
                                event.name);
  }
  return static_cast<double>(event.overlap_ns) / static_cast<double>(event.duration_ns());
}

double layer_weighted_overlap(const IterationTrace& trace, int gpu, int layer,
                              std::optional<Phase> phase) {
  double overlapped = 0.0;
  double total = 0.0;
  for (const auto& e : trace.events) {
    if (e.is_communication() || e.gpu_id != gpu || e.layer != layer) continue;
    if (phase && e.phase != *phase) continue;
    // ratio * duration is the overlapped wall time itself.
    overlapped += overlap_ratio(e) * static_cast<double>(e.duration_ns());
    total += static_cast<double>(e.duration_ns());
  }
  if (total == 0.0) {
    throw std::invalid_argument("layer " + std::to_string(layer) + " has no kernels on gpu " +
                                std::to_string(gpu));
  }
  return overlapped / total;
}

LayerOverlap layer_overlap_profile(const IterationTrace& trace) {
  const KernelTable table = tabulate(trace);
  LayerOverlap out;
  std::map<std::pair<Phase, int>, Eigen::Index> column_of;
  for (Eigen::Index c = 0; c < table.kernels(); ++c) {
    const std::pair<Phase, int> key{table.phase[c], table.layer[c]};
    if (column_of.try_emplace(key, static_cast<Eigen::Index>(out.keys.size())).second) {
      out.keys.push_back(key);
    }
  }
  Eigen::MatrixXd overlapped = Eigen::MatrixXd::Zero(table.gpus(), out.keys.size());
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(table.gpus(), out.keys.size());
  for (Eigen::Index c = 0; c < table.kernels(); ++c) {
    const Eigen::Index col = column_of.at({table.phase[c], table.layer[c]});
    overlapped.col(col) += table.overlap_ns.col(c);
    total.col(col) += table.duration_ns.col(c);
  }
  out.weighted = overlapped.cwiseQuotient(total);
  return out;
}

LeadVector lead_values(const IterationTrace& trace, LeadAggregation agg) {
  return LeadVector{aggregate_leads(straggler_wave(trace), agg), agg};
}

MatrixXi64 straggler_wave(const IterationTrace& trace) {
  return lead_matrix(tabulate(trace).start_ns);
}

std::vector<KernelClassification> classify_overlap(std::span<const IterationTrace> traces,
                                                   double tau) {
  std::map<int, KernelClassification> by_index;
  for (const auto& trace : traces) {
    for (const auto& e : trace.events) {
      if (e.is_communication()) continue;
      const double r = overlap_ratio(e);
      auto [it, inserted] = by_index.try_emplace(e.kernel_index);
      auto& c = it->second;
      if (inserted) {
        c.kernel_index = e.kernel_index;
        c.name = e.name;
        c.min_ratio = r;
        c.max_ratio = r;
      } else {
        c.min_ratio = std::min(c.min_ratio, r);
        c.max_ratio = std::max(c.max_ratio, r);
      }
    }
  }
  std::vector<KernelClassification> out;
  out.reserve(by_index.size());
  for (auto& [k, c] : by_index) {
    c.cls = (c.max_ratio - c.min_ratio > tau) ? OverlapClass::kVarying : OverlapClass::kConstant;
    out.push_back(std::move(c));
  }
  return out;
}

Correlation correlate(std::span<const IterationTrace> traces, const std::string& kernel_name,
                      int gpu) {
  std::vector<double> ratios;
  std::vector<double> durations;
  for (const auto& trace : traces) {
    for (const auto& e : trace.events) {
      if (e.gpu_id != gpu || e.name != kernel_name || e.is_communication()) continue;
      ratios.push_back(overlap_ratio(e));
      durations.push_back(static_cast<double>(e.duration_ns()));
    }
  }
  if (ratios.size() < 2) {
    throw std::invalid_argument("correlation of " + kernel_name + " on gpu " +
                                std::to_string(gpu) + " needs at least two samples");
  }
  const Eigen::Map<const Eigen::VectorXd> x(ratios.data(), static_cast<Eigen::Index>(ratios.size()));
  const Eigen::Map<const Eigen::VectorXd> y(durations.data(),
                                            static_cast<Eigen::Index>(durations.size()));
  return Correlation{pearson(x, y), cosine_similarity(x, y), ratios.size()};
}

std::vector<CorrelationEntry> correlation_report(std::span<const IterationTrace> traces) {
  std::vector<std::string> names;
  int gpu_count = 0;
  for (const auto& trace : traces) {
    gpu_count = std::max(gpu_count, trace.gpu_count);
    for (const auto& e : trace.events) {
      if (!e.is_communication() &&
          std::find(names.begin(), names.end(), e.name) == names.end()) {
        names.push_back(e.name);
      }
    }
  }
  std::vector<CorrelationEntry> out;
  for (int g = 0; g < gpu_count; ++g) {
    for (const auto& name : names) {
      try {
        out.push_back({g, name, correlate(traces, name, g)});
      } catch (const std::invalid_argument&) {
        out.push_back({g, name, Correlation{}});
      }
    }
  }
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TelemetrySummary summarize_telemetry(std::span<const IterationTrace> traces, int gpu_count) {
  std::vector<std::vector<double>> temps(static_cast<std::size_t>(gpu_count));
  std::vector<std::vector<double>> freqs(static_cast<std::size_t>(gpu_count));
  std::vector<std::vector<double>> powers(static_cast<std::size_t>(gpu_count));
  for (const auto& trace : traces) {
    for (const auto& s : trace.telemetry) {
      const auto g = static_cast<std::size_t>(s.gpu);
      temps[g].push_back(static_cast<double>(s.temp_mC) / 1000.0);
      freqs[g].push_back(static_cast<double>(s.freq_kHz) / 1e6);
      powers[g].push_back(static_cast<double>(s.power_mW) / 1000.0);
    }
  }
  TelemetrySummary out;
  out.median_temp_c.resize(gpu_count);
  out.median_freq_ghz.resize(gpu_count);
  out.mean_freq_ghz.resize(gpu_count);
  out.mean_power_w.resize(gpu_count);
  for (int g = 0; g < gpu_count; ++g) {
    const auto& f = freqs[static_cast<std::size_t>(g)];
    const auto& p = powers[static_cast<std::size_t>(g)];
    out.median_temp_c[g] = median_of(temps[static_cast<std::size_t>(g)]);
    out.median_freq_ghz[g] = median_of(f);
    out.mean_freq_ghz[g] =
        f.empty() ? 0.0 : std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
    out.mean_power_w[g] =
        p.empty() ? 0.0 : std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
  }
  return out;
}

double tail_cv(std::span<const double> series, double fraction) {
  if (series.empty()) throw std::invalid_argument("tail_cv of an empty series");
  const auto n = series.size();
  auto count = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction));
  count = std::clamp<std::size_t>(count, 1, n);
  const Eigen::Map<const Eigen::VectorXd> tail(series.data() + (n - count),
                                               static_cast<Eigen::Index>(count));
  const double mean = tail.mean();
  if (mean == 0.0) return 0.0;
  const double var = (tail.array() - mean).square().mean();
  return std::sqrt(var) / std::abs(mean);
}

void write_overlap_csv(std::ostream& out, std::span<const IterationTrace> traces) {
  out << "iteration,gpu,kernel_index,name,layer,phase,kind,start_ns,duration_ns,overlap_ratio\n";
  for (const auto& trace : traces) {
    for (const auto& e : trace.events) {
      if (e.is_communication()) continue;
      out << e.iteration << ',' << e.gpu_id << ',' << e.kernel_index << ',' << e.name << ','
          << e.layer << ',' << to_string(e.phase) << ',' << to_string(e.kind) << ','
          << e.start_ns << ',' << e.duration_ns() << ',' << overlap_ratio(e) << '\n';
    }
  }
}

void write_layer_overlap_csv(std::ostream& out, std::span<const IterationTrace> traces) {
  out << "iteration,position,phase,layer,gpu,weighted_overlap\n";
  for (const auto& trace : traces) {
    const LayerOverlap profile = layer_overlap_profile(trace);
    for (std::size_t c = 0; c < profile.keys.size(); ++c) {
      for (Eigen::Index g = 0; g < profile.weighted.rows(); ++g) {
        out << trace.iteration << ',' << c << ',' << to_string(profile.keys[c].first) << ','
            << profile.keys[c].second << ',' << g << ','
            << profile.weighted(g, static_cast<Eigen::Index>(c)) << '\n';
      }
    }
  }
}

void write_lead_csv(std::ostream& out, std::span<const IterationTrace> traces) {
  out << "iteration,gpu,lead_sum_ns,lead_max_ns,lead_last_ns,is_straggler\n";
  for (const auto& trace : traces) {
    const MatrixXi64 wave = straggler_wave(trace);
    const VectorXi64 sum = aggregate_leads(wave, LeadAggregation::kSum);
    const VectorXi64 max = aggregate_leads(wave, LeadAggregation::kMax);
    const VectorXi64 last = aggregate_leads(wave, LeadAggregation::kLast);
    Eigen::Index straggler = 0;
    if (sum.size() > 0) sum.minCoeff(&straggler);
    for (Eigen::Index g = 0; g < wave.rows(); ++g) {
      out << trace.iteration << ',' << g << ',' << sum[g] << ',' << max[g] << ',' << last[g]
          << ',' << (g == straggler ? 1 : 0) << '\n';
    }
  }
}

void write_wave_csv(std::ostream& out, const IterationTrace& trace) {
  const KernelTable table = tabulate(trace);
  const MatrixXi64 wave = lead_matrix(table.start_ns);
  out << "position,kernel_index,name,gpu,lead_ns\n";
  for (Eigen::Index c = 0; c < wave.cols(); ++c) {
    for (Eigen::Index g = 0; g < wave.rows(); ++g) {
      out << c << ',' << table.kernel_index[c] << ',' << table.name[c] << ',' << g << ','
          << wave(g, c) << '\n';
    }
  }
}

void write_classification_csv(std::ostream& out,
                              std::span<const KernelClassification> classes) {
  out << "kernel_index,name,min_ratio,max_ratio,class\n";
  for (const auto& c : classes) {
    out << c.kernel_index << ',' << c.name << ',' << c.min_ratio << ',' << c.max_ratio << ','
        << to_string(c.cls) << '\n';
  }
}

void write_correlation_csv(std::ostream& out, std::span<const CorrelationEntry> entries) {
  out << "gpu,kernel,samples,pearson,cosine\n";
  for (const auto& e : entries) {
    out << e.gpu << ',' << e.kernel_name << ',' << e.value.samples << ',';
    if (e.value.pearson) out << *e.value.pearson; else out << "undefined";
    out << ',';
    if (e.value.cosine) out << *e.value.cosine; else out << "undefined";
    out << '\n';
  }
}

void write_telemetry_csv(std::ostream& out, std::span<const IterationTrace> traces) {
  out << "iteration,gpu,ts_ns,temp_c,freq_ghz,power_w,cap_w\n";
  for (const auto& trace : traces) {
    for (const auto& s : trace.telemetry) {
      out << s.iteration << ',' << s.gpu << ',' << s.ts_ns << ',' << s.temp_mC / 1000.0 << ','
          << s.freq_kHz / 1e6 << ',' << s.power_mW / 1000.0 << ',' << s.cap_mW / 1000.0 << '\n';
    }
  }
}

}  // namespace lit
