#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "litsilicon/config.hpp"
#include "litsilicon/control.hpp"
#include "litsilicon/trace_io.hpp"

namespace lit {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitNotConverged = 3 };

TraceFile run_simulation(const ExperimentConfig& config);
RunLog run_control(const ExperimentConfig& config);

// Writes the trace and <out>.manifest.json.
void cmd_simulate(const ExperimentConfig& config, const std::string& out_path);
// Writes run_log.csv, final_caps.csv, convergence.csv, plots and a manifest
// into out_dir. Returns kExitNotConverged when caps never settled.
int cmd_control(const ExperimentConfig& config, const std::string& out_dir);
void cmd_analyze(const std::string& trace_path, const std::string& out_dir, double tau);
void cmd_predict(const std::string& trace_path, std::optional<UseCase> use_case,
                 const ExperimentConfig& config, const std::string& out_path);

struct SweepPlan {
  ExperimentConfig base;
  // Each knob with its values. In list mode every value is applied to the
  // base alone; in cartesian mode all combinations run.
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> knobs;
  bool cartesian = false;
  int parallelism = 1;
};

SweepPlan load_plan(const std::string& path);
SweepPlan plan_from_json(const nlohmann::json& j);

struct SweepRun {
  std::string label;
  std::vector<std::pair<std::string, nlohmann::json>> overrides;
  ExperimentConfig config;
  std::optional<ConvergenceReport> report;
  std::optional<int> converged_at;
  Eigen::VectorXd final_caps;
  std::string error;
};

std::vector<SweepRun> run_sweep(const SweepPlan& plan);
void write_sweep_summary_csv(std::ostream& out, const std::vector<SweepRun>& runs);
void cmd_sweep(const SweepPlan& plan, const std::string& out_dir);

int run_cli(int argc, char** argv);

}  // namespace lit
