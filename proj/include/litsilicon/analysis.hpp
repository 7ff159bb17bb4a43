#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "litsilicon/trace.hpp"

namespace lit {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXi64 = Matrix<std::int64_t>;
using VectorXi64 = Vector<std::int64_t>;

enum class LeadAggregation { kSum, kMax, kLast };
std::string_view to_string(LeadAggregation agg);
LeadAggregation parse_lead_aggregation(std::string_view text);

// Compute and vector kernels of one iteration laid out as GPU x kernel
// matrices. Columns follow ascending kernel_index.
struct KernelTable {
  std::vector<int> kernel_index;
  std::vector<std::string> name;
  std::vector<int> layer;
  std::vector<Phase> phase;
  std::vector<KernelKind> kind;
  MatrixXi64 start_ns;
  Eigen::MatrixXd duration_ns;
  Eigen::MatrixXd overlap_ns;

  Eigen::Index gpus() const { return start_ns.rows(); }
  Eigen::Index kernels() const { return start_ns.cols(); }
};

KernelTable tabulate(const IterationTrace& trace);

// Per-kernel lead: latest start across GPUs minus each GPU's start.
template <typename Derived>
Matrix<typename Derived::Scalar> lead_matrix(const Eigen::MatrixBase<Derived>& starts) {
  return starts.colwise().maxCoeff().replicate(starts.rows(), 1) - starts;
}

// Collapses each row of a lead matrix to one value per GPU.
template <typename Derived>
Vector<typename Derived::Scalar> aggregate_leads(const Eigen::MatrixBase<Derived>& leads,
                                                 LeadAggregation agg) {
  using Scalar = typename Derived::Scalar;
  if (leads.cols() == 0) return Vector<Scalar>::Zero(leads.rows());
  switch (agg) {
    case LeadAggregation::kSum:
      return leads.rowwise().sum();
    case LeadAggregation::kMax:
      return leads.rowwise().maxCoeff();
    case LeadAggregation::kLast:
      return leads.col(leads.cols() - 1);
  }
  return leads.rowwise().sum();
}

struct LeadVector {
  VectorXi64 values;
  LeadAggregation aggregation = LeadAggregation::kSum;

  // GPU with the smallest aggregated lead; ties go to the lowest id.
  int straggler() const;
};

// Fraction of the kernel's wall time overlapped by communication.
// Throws std::invalid_argument for communication kernels.
double overlap_ratio(const KernelEvent& event);

// Duration-weighted mean overlap ratio of the compute and vector kernels of
// one layer on one GPU. When phase is empty both passes are pooled. Throws
// std::invalid_argument when the layer has no such kernels.
double layer_weighted_overlap(const IterationTrace& trace, int gpu, int layer,
                              std::optional<Phase> phase = std::nullopt);

// GPU x (phase, layer) weighted overlap. Columns run through the forward
// layers in execution order followed by the backward layers.
struct LayerOverlap {
  std::vector<std::pair<Phase, int>> keys;
  Eigen::MatrixXd weighted;
};
LayerOverlap layer_overlap_profile(const IterationTrace& trace);

LeadVector lead_values(const IterationTrace& trace, LeadAggregation agg);

// GPU x kernel lead matrix, columns ordered by kernel_index.
MatrixXi64 straggler_wave(const IterationTrace& trace);

enum class OverlapClass { kConstant, kVarying };
std::string_view to_string(OverlapClass cls);

struct KernelClassification {
  int kernel_index = 0;
  std::string name;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  OverlapClass cls = OverlapClass::kConstant;
};

inline constexpr double kDefaultVaryingThreshold = 0.10;

// A kernel is varying when its overlap ratio spans more than tau across all
// GPUs and iterations. Communication kernels are excluded.
std::vector<KernelClassification> classify_overlap(
    std::span<const IterationTrace> traces, double tau = kDefaultVaryingThreshold);

// Empty optionals mark undefined values (zero variance / zero vector).
struct Correlation {
  std::optional<double> pearson;
  std::optional<double> cosine;
  std::size_t samples = 0;
};

template <typename DerivedX, typename DerivedY>
std::optional<double> pearson(const Eigen::MatrixBase<DerivedX>& x,
                              const Eigen::MatrixBase<DerivedY>& y) {
  const auto xc = (x.array() - x.mean()).matrix().eval();
  const auto yc = (y.array() - y.mean()).matrix().eval();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return xc.dot(yc) / std::sqrt(sxx * syy);
}

template <typename DerivedX, typename DerivedY>
std::optional<double> cosine_similarity(const Eigen::MatrixBase<DerivedX>& x,
                                        const Eigen::MatrixBase<DerivedY>& y) {
  const double nx = x.norm();
  const double ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return std::nullopt;
  return x.dot(y) / (nx * ny);
}

// Overlap ratio vs duration for every occurrence of a kernel name on one GPU,
// pooled across layers and iterations. Requires at least two samples.
Correlation correlate(std::span<const IterationTrace> traces, const std::string& kernel_name,
                      int gpu);

struct CorrelationEntry {
  int gpu = 0;
  std::string kernel_name;
  Correlation value;
};
std::vector<CorrelationEntry> correlation_report(std::span<const IterationTrace> traces);

struct TelemetrySummary {
  Eigen::VectorXd median_temp_c;
  Eigen::VectorXd median_freq_ghz;
  Eigen::VectorXd mean_freq_ghz;
  Eigen::VectorXd mean_power_w;
};
TelemetrySummary summarize_telemetry(std::span<const IterationTrace> traces, int gpu_count);

// Coefficient of variation of the trailing `fraction` of a series.
double tail_cv(std::span<const double> series, double fraction = 0.25);

// CSV emitters. Column layouts are documented in docs/formats.md.
void write_overlap_csv(std::ostream& out, std::span<const IterationTrace> traces);
void write_layer_overlap_csv(std::ostream& out, std::span<const IterationTrace> traces);
void write_lead_csv(std::ostream& out, std::span<const IterationTrace> traces);
void write_wave_csv(std::ostream& out, const IterationTrace& trace);
void write_classification_csv(std::ostream& out,
                              std::span<const KernelClassification> classes);
void write_correlation_csv(std::ostream& out, std::span<const CorrelationEntry> entries);
void write_telemetry_csv(std::ostream& out, std::span<const IterationTrace> traces);

}  // namespace lit
