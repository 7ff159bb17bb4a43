#include "litsilicon/models.hpp"

#include <map>
#include <ostream>

namespace lit {

std::string_view to_string(Agg agg) {
  switch (agg) {
    case Agg::kMin:
      return "min";
    case Agg::kMed:
      return "med";
    case Agg::kMax:
      return "max";
  }
  return "max";
}

Agg parse_agg(std::string_view text) {
  if (text == "min") return Agg::kMin;
  if (text == "med") return Agg::kMed;
  if (text == "max") return Agg::kMax;
  throw std::invalid_argument("unknown agg '" + std::string(text) + "'");
}

std::string_view to_string(UseCase use_case) {
  switch (use_case) {
    case UseCase::kGpuRed:
      return "GPU-Red";
    case UseCase::kGpuRealloc:
      return "GPU-Realloc";
    case UseCase::kCpuSlosh:
      return "CPU-Slosh";
  }
  return "GPU-Red";
}

UseCase parse_use_case(std::string_view text) {
  if (text == "GPU-Red" || text == "gpu-red") return UseCase::kGpuRed;
  if (text == "GPU-Realloc" || text == "gpu-realloc") return UseCase::kGpuRealloc;
  if (text == "CPU-Slosh" || text == "cpu-slosh") return UseCase::kCpuSlosh;
  throw std::invalid_argument("unknown use case '" + std::string(text) + "'");
}

Agg aggregation_for(UseCase use_case) {
  switch (use_case) {
    case UseCase::kGpuRed:
      return Agg::kMax;
    case UseCase::kGpuRealloc:
      return Agg::kMed;
    case UseCase::kCpuSlosh:
      return Agg::kMin;
  }
  return Agg::kMax;
}

void PerfModelInput::check() const {
  if (durations.cols() != static_cast<Eigen::Index>(constant.size())) {
    throw std::invalid_argument("partition size does not match the kernel count");
  }
  if (durations.rows() == 0 || durations.cols() == 0) {
    throw std::invalid_argument("empty duration matrix");
  }
  if ((durations.array() <= 0.0).any()) {
    throw std::invalid_argument("durations must be positive");
  }
}

std::vector<Eigen::Index> PerfModelInput::columns(bool constant_set) const {
  std::vector<Eigen::Index> out;
  for (std::size_t k = 0; k < constant.size(); ++k) {
    if (constant[k] == constant_set) out.push_back(static_cast<Eigen::Index>(k));
  }
  return out;
}

double baseline_runtime(const PerfModelInput& input) {
  input.check();
  const auto c = input.columns(true);
  const auto v = input.columns(false);
  double t = 0.0;
  if (!c.empty()) t += t_agg(input.durations, c, Agg::kMax);
  if (!v.empty()) t += t_agg(input.durations, v, Agg::kMin);
  return t;
}

Eigen::VectorXd rank_runtimes(const PerfModelInput& input) {
  input.check();
  Eigen::VectorXd t = Eigen::VectorXd::Zero(input.durations.rows());
  for (Eigen::Index c : input.columns(true)) {
    Eigen::VectorXd col = input.durations.col(c);
    std::sort(col.begin(), col.end());
    t += col;
  }
  return t;
}

ModelPrediction speedup(const PerfModelInput& input, Agg agg) {
  input.check();
  const auto c = input.columns(true);
  if (c.empty()) throw std::invalid_argument("speedup needs at least one constant kernel");
  const auto v = input.columns(false);

  ModelPrediction p;
  p.agg = agg;
  const double t_max_c = t_agg(input.durations, c, Agg::kMax);
  const double t_min_v = v.empty() ? 0.0 : t_agg(input.durations, v, Agg::kMin);
  p.t_baseline = t_max_c + t_min_v;
  p.s_c = t_max_c / t_agg(input.durations, c, agg);
  p.s_v = p.s_c;
  p.r_c = t_max_c / p.t_baseline;
  p.r_v = t_min_v / p.t_baseline;
  p.throughput_ratio = 1.0 / (p.r_c / p.s_c + p.r_v / p.s_v);
  return p;
}

ModelPrediction power_ratio(const PowerModelInput& input) {
  if (!(input.p_baseline_w > input.p_idle_w) || input.p_idle_w < 0.0) {
    throw std::invalid_argument("power model needs baseline > idle >= 0");
  }
  if (input.t_agg_constant <= 0.0) throw std::invalid_argument("t_agg of constant kernels is 0");
  if (input.gpu_count <= 0 || input.rank_runtimes.size() != input.gpu_count) {
    throw std::invalid_argument("one rank runtime per GPU is required");
  }
  ModelPrediction p;
  p.delta = input.t_agg_constant / input.rank_runtimes.array();
  p.rank_power_w =
      (input.p_baseline_w - input.p_idle_w) / p.delta.array() + input.p_idle_w;
  p.power_ratio = p.rank_power_w.sum() / (input.gpu_count * input.p_baseline_w);
  return p;
}

PowerModelInput power_input(const PerfModelInput& input, Agg agg, double p_baseline_w,
                            double p_idle_w) {
  PowerModelInput out;
  out.p_baseline_w = p_baseline_w;
  out.p_idle_w = p_idle_w;
  out.rank_runtimes = rank_runtimes(input);
  out.t_agg_constant = t_agg(input.durations, input.columns(true), agg);
  out.gpu_count = static_cast<int>(input.durations.rows());
  return out;
}

ModelPrediction predict(const PerfModelInput& input, Agg agg, double p_baseline_w,
                        double p_idle_w) {
  ModelPrediction p = speedup(input, agg);
  const ModelPrediction power = power_ratio(power_input(input, agg, p_baseline_w, p_idle_w));
  p.power_ratio = power.power_ratio;
  p.delta = power.delta;
  p.rank_power_w = power.rank_power_w;
  return p;
}

PerfModelInput model_input(std::span<const IterationTrace> traces, double tau) {
  if (traces.empty()) throw std::invalid_argument("model input needs at least one iteration");
  PerfModelInput input;
  std::vector<int> layout;
  for (const auto& trace : traces) {
    const KernelTable table = tabulate(trace);
    if (layout.empty()) {
      layout = table.kernel_index;
      input.durations = Eigen::MatrixXd::Zero(table.gpus(), table.kernels());
    } else if (table.kernel_index != layout || table.gpus() != input.durations.rows()) {
      throw std::invalid_argument("iterations do not share one kernel layout");
    }
    input.durations += table.duration_ns;
  }
  input.durations /= static_cast<double>(traces.size());

  std::map<int, bool> constant;
  for (const auto& c : classify_overlap(traces, tau)) {
    constant[c.kernel_index] = c.cls == OverlapClass::kConstant;
  }
  input.constant.reserve(layout.size());
  for (int k : layout) input.constant.push_back(constant.at(k));
  return input;
}

UseCasePrediction predict_use_case(std::span<const IterationTrace> traces, UseCase use_case,
                                   double p_baseline_w, double p_idle_w, double tau) {
  UseCasePrediction out;
  out.use_case = use_case;
  out.prediction = predict(model_input(traces, tau), aggregation_for(use_case), p_baseline_w,
                           p_idle_w);
  out.throughput_benefit = out.prediction.throughput_ratio - 1.0;
  out.power_benefit = use_case == UseCase::kGpuRed ? 1.0 - out.prediction.power_ratio
                                                   : out.prediction.power_ratio - 1.0;
  return out;
}

void write_prediction_csv(std::ostream& out, std::span<const UseCasePrediction> rows) {
  out << "use_case,agg,power_ratio,throughput_ratio,S_C,R_C,R_V,power_benefit,"
         "throughput_benefit\n";
  for (const auto& r : rows) {
    const auto& p = r.prediction;
    out << to_string(r.use_case) << ',' << to_string(p.agg) << ',' << p.power_ratio << ','
        << p.throughput_ratio << ',' << p.s_c << ',' << p.r_c << ',' << p.r_v << ','
        << r.power_benefit << ',' << r.throughput_benefit << '\n';
  }
}

double cost_savings(double capacity_gw, double gpu_energy_fraction, double price_per_kwh,
                    double saving_fraction) {
  if (capacity_gw < 0 || gpu_energy_fraction < 0 || price_per_kwh < 0 || saving_fraction < 0) {
    throw std::invalid_argument("cost inputs must be non-negative");
  }
  constexpr double kKwPerGw = 1e6;
  constexpr double kHoursPerYear = 8760.0;
  return capacity_gw * kKwPerGw * gpu_energy_fraction * kHoursPerYear * price_per_kwh *
         saving_fraction;
}

}  // namespace lit
