#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epsts/benchmarks.hpp"
#include "epsts/gp_model.hpp"
#include "epsts/inner_opt.hpp"
#include "epsts/kernels.hpp"
#include "epsts/policies.hpp"

namespace epsts {

enum class OutputFormat { Csv, JsonLines };
std::string_view to_string(OutputFormat f);
OutputFormat parse_output_format(std::string_view name);

// Where observations come from: a built-in benchmark, an external command,
// or an external command borrowing a benchmark's geometry (box, dimension).
struct ObjectiveSource {
  std::string benchmark;
  std::string external_cmd;
  std::optional<Eigen::Index> dim;
  std::optional<Box> box;
  std::optional<double> f_star;
  std::chrono::milliseconds external_timeout{30000};

  bool is_external() const { return !external_cmd.empty(); }
  // Name used in outputs: the benchmark name, or "external".
  std::string label() const;
};

struct ExperimentConfig {
  ObjectiveSource objective;
  PolicySpec policy;
  int n_init = 10;
  int n_iters = 50;
  int n_trials = 1;
  std::uint64_t base_seed = 0;
  KernelFamily kernel = KernelFamily::ArdSE;
  double noise_sd = 1e-3;              // GP observation noise, standardized units
  double observation_noise_sd = 0.0;   // injected noise, standardized units
  std::string output_path;
  OutputFormat format = OutputFormat::Csv;
  int parallel = 1;                    // concurrent trials
  std::optional<InnerConfig> inner;    // defaults to InnerConfig::for_dim(d)
  TrainingOptions training;

  // Throws ConfigError naming the first offending field.
  void validate() const;
  Eigen::Index dim() const;
  Box box() const;
  // Builds the evaluator; starts a process for external objectives.
  ObjectiveSpec make_objective() const;
};

struct IterationRow {
  int iter = 0;
  Branch branch = Branch::Deterministic;
  Eigen::VectorXd x;  // problem units
  double y = 0.0;
  double y_min = 0.0;
  std::optional<double> log_error;  // log10(max(y_min - f_star, 1e-16))
  double proposal_s = 0.0;
  double iter_s = 0.0;
};

struct TrialError {
  int trial_id = 0;
  int iter = 0;  // 0 = initial design
  std::string kind;
  std::string message;
};

struct TrialRecord {
  int trial_id = 0;
  Eigen::MatrixXd initial_X;
  Eigen::VectorXd initial_y;
  std::vector<IterationRow> rows;
  std::optional<TrialError> error;
  double wall_s = 0.0;

  bool ok() const { return !error.has_value(); }
};

// log10(max(y_min - f_star, 1e-16)).
double log_error(double y_min, double f_star);

// Runs one trial with seed base_seed + trial_id. Model, optimizer and
// objective failures end the trial and are reported in `error`.
TrialRecord run_trial(const ExperimentConfig& cfg, int trial_id);
TrialRecord run_trial(const ExperimentConfig& cfg, const ObjectiveSpec& objective, int trial_id);

struct IterationSummary {
  int iter = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double mean_proposal_s = 0.0;
  int n = 0;
};

struct BranchRuntime {
  Branch branch = Branch::Deterministic;
  long count = 0;
  double mean_proposal_s = 0.0;
  double median_proposal_s = 0.0;
  double mean_iter_s = 0.0;
};

struct SummaryStats {
  bool uses_log_error = false;  // otherwise the statistic is y_min
  std::vector<IterationSummary> per_iter;
  std::vector<BranchRuntime> per_branch;
  double mean_trial_runtime_s = 0.0;
  int n_completed = 0;
  int n_failed = 0;
  std::vector<TrialError> failures;
};

// Linearly interpolated sample quantile (the "type 7" definition).
double quantile(std::vector<double> values, double p);

// Aborted trials are excluded from every statistic and tallied in n_failed.
SummaryStats summarize(const std::vector<TrialRecord>& records);

struct ExperimentResult {
  std::vector<TrialRecord> trials;  // ordered by trial_id
  SummaryStats stats;
};

// Concurrency: min(cfg.parallel, $EPS_TS_BO_THREADS, n_trials) trials at once.
int effective_trial_threads(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace epsts
