#include "epsts/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <stdexcept>

#include <omp.h>

#include "epsts/errors.hpp"
#include "epsts/external_objective.hpp"
#include "epsts/random.hpp"

namespace epsts {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double population_sd(const Eigen::VectorXd& y) {
  if (y.size() == 0) return 1.0;
  const double m = y.mean();
  const double sd = std::sqrt((y.array() - m).square().mean());
  return sd < 1e-12 ? 1.0 : sd;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ModelFitError*>(&e)) return "model_fit";
  if (dynamic_cast<const OptimizerError*>(&e)) return "optimizer";
  if (dynamic_cast<const ObjectiveError*>(&e)) return "objective";
  if (dynamic_cast<const ProposalError*>(&e)) return "proposal";
  return "runtime";
}

std::string error_message(const std::exception& e) {
  std::string msg = e.what();
  if (const auto* oe = dynamic_cast<const ObjectiveError*>(&e); oe && !oe->raw_reply().empty()) {
    msg += " (reply: " + oe->raw_reply() + ")";
  }
  return msg;
}

}  // namespace

std::string_view to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "jsonl"; }

OutputFormat parse_output_format(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "jsonl" || name == "json-lines" || name == "jsonlines") return OutputFormat::JsonLines;
  throw std::invalid_argument("unknown output format '" + std::string(name) + "'");
}

std::string ObjectiveSource::label() const { return is_external() ? "external" : benchmark; }

void ExperimentConfig::validate() const {
  if (objective.is_external()) {
    if (split_command_line(objective.external_cmd).empty()) throw ConfigError("external_cmd", "is empty");
    if (objective.external_timeout.count() <= 0) throw ConfigError("external_timeout", "must be positive");
    if (!objective.benchmark.empty()) {
      try {
        find_benchmark(objective.benchmark);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("objective", e.what());
      }
    } else {
      if (!objective.box) throw ConfigError("box", "is required for an external objective");
      if (objective.dim && *objective.dim != objective.box->dim()) {
        throw ConfigError("dim", "does not match the box");
      }
    }
  } else {
    if (objective.benchmark.empty()) throw ConfigError("objective", "no objective given");
    try {
      find_benchmark(objective.benchmark);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("objective", e.what());
    }
  }
  if (objective.f_star && !std::isfinite(*objective.f_star)) throw ConfigError("f_star", "must be finite");
  policy.validate();
  if (n_init < 2) throw ConfigError("init", "must be at least 2");
  if (n_iters < 1) throw ConfigError("iters", "must be at least 1");
  if (n_trials < 1) throw ConfigError("trials", "must be at least 1");
  if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd", "must be positive");
  if (!(observation_noise_sd >= 0.0) || !std::isfinite(observation_noise_sd)) {
    throw ConfigError("obs_noise_sd", "must be non-negative");
  }
  if (parallel < 1) throw ConfigError("parallel", "must be at least 1");
  if (inner) {
    try {
      inner->direct.validate();
      inner->local.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("inner", e.what());
    }
  }
  if (training.n_starts < 1) throw ConfigError("training", "needs at least one start");
}

Eigen::Index ExperimentConfig::dim() const { return box().dim(); }

Box ExperimentConfig::box() const {
  if (objective.box) return *objective.box;
  return find_benchmark(objective.benchmark).box;
}

ObjectiveSpec ExperimentConfig::make_objective() const {
  if (!objective.is_external()) {
    ObjectiveSpec spec = find_benchmark(objective.benchmark);
    if (objective.f_star) spec.f_star = objective.f_star;
    return spec;
  }
  ExternalCommand cmd{split_command_line(objective.external_cmd), objective.external_timeout};
  const Box b = box();
  ObjectiveSpec spec = external_objective(cmd, b, b.dim(), "external");
  spec.f_star = objective.f_star;
  return spec;
}

double log_error(double y_min, double f_star) { return std::log10(std::max(y_min - f_star, 1e-16)); }

TrialRecord run_trial(const ExperimentConfig& cfg, int trial_id) {
  ObjectiveSpec objective;
  try {
    objective = cfg.make_objective();
  } catch (const Error& e) {
    TrialRecord rec;
    rec.trial_id = trial_id;
    rec.error = TrialError{trial_id, 0, error_kind(e), error_message(e)};
    return rec;
  }
  return run_trial(cfg, objective, trial_id);
}

TrialRecord run_trial(const ExperimentConfig& cfg, const ObjectiveSpec& objective, int trial_id) {
  const auto trial_start = Clock::now();
  TrialRecord rec;
  rec.trial_id = trial_id;
  TrialStreams streams(cfg.base_seed + static_cast<std::uint64_t>(trial_id));
  const Eigen::Index d = objective.d;
  const InnerConfig inner = cfg.inner ? *cfg.inner : InnerConfig::for_dim(d);
  int iter = 0;

  try {
    // The design depends on the seed and the box only, so policies compared
    // under one base seed start from the same points.
    rec.initial_X = lhs_design(d, cfg.n_init, objective.box, streams.design);
    rec.initial_y.resize(cfg.n_init);
    for (int i = 0; i < cfg.n_init; ++i) {
      rec.initial_y[i] = observe(objective, NoiseSpec{0.0}, rec.initial_X.row(i).transpose(), streams.noise);
    }
    // Injected noise is specified in standardized units; convert with the
    // spread of the noiseless initial observations.
    const double output_scale = population_sd(rec.initial_y);
    const NoiseSpec noise{cfg.observation_noise_sd};
    if (noise.noise_sd > 0.0) {
      std::normal_distribution<double> normal(0.0, noise.noise_sd * output_scale);
      for (int i = 0; i < cfg.n_init; ++i) rec.initial_y[i] += normal(streams.noise);
    }

    Dataset data(objective.box, rec.initial_X, rec.initial_y);
    double y_min = rec.initial_y.minCoeff();
    rec.rows.reserve(static_cast<std::size_t>(cfg.n_iters));
    PolicyStreams policy_streams{streams.switch_draw, streams.spectral, streams.weights};

    for (iter = 1; iter <= cfg.n_iters; ++iter) {
      const auto t0 = Clock::now();
      const GpPosterior gp = fit_gp(data, cfg.kernel, cfg.noise_sd, streams.hyper, cfg.training);
      const auto t1 = Clock::now();
      const Proposal proposal = propose(cfg.policy, gp, policy_streams, inner);
      const double proposal_s = seconds_since(t1);
      const Eigen::VectorXd u = dedup_guard(proposal.x_next, gp.X(), streams.dedup);
      const Eigen::VectorXd x = gp.standardizer().to_raw(u);
      const double y = observe(objective, noise, x, streams.noise, output_scale);
      data.append(x, y);
      y_min = std::min(y_min, y);

      IterationRow row;
      row.iter = iter;
      row.branch = proposal.branch;
      row.x = x;
      row.y = y;
      row.y_min = y_min;
      if (objective.f_star) row.log_error = log_error(y_min, *objective.f_star);
      row.proposal_s = proposal_s;
      row.iter_s = seconds_since(t0);
      rec.rows.push_back(std::move(row));
    }
  } catch (const Error& e) {
    rec.error = TrialError{trial_id, iter, error_kind(e), error_message(e)};
  } catch (const std::invalid_argument& e) {
    rec.error = TrialError{trial_id, iter, "invalid_argument", e.what()};
  }
  rec.wall_s = seconds_since(trial_start);
  return rec;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SummaryStats summarize(const std::vector<TrialRecord>& records) {
  SummaryStats s;
  std::vector<const TrialRecord*> done;
  for (const auto& r : records) {
    if (r.ok()) {
      done.push_back(&r);
    } else {
      s.failures.push_back(*r.error);
    }
  }
  s.n_completed = static_cast<int>(done.size());
  s.n_failed = static_cast<int>(s.failures.size());
  if (done.empty()) return s;

  s.uses_log_error = true;
  std::size_t max_rows = 0;
  double runtime = 0.0;
  for (const auto* r : done) {
    runtime += r->wall_s;
    max_rows = std::max(max_rows, r->rows.size());
    for (const auto& row : r->rows) s.uses_log_error = s.uses_log_error && row.log_error.has_value();
  }
  s.mean_trial_runtime_s = runtime / static_cast<double>(done.size());

  for (std::size_t k = 0; k < max_rows; ++k) {
    std::vector<double> v;
    double prop = 0.0;
    for (const auto* r : done) {
      if (k >= r->rows.size()) continue;
      const auto& row = r->rows[k];
      v.push_back(s.uses_log_error ? *row.log_error : row.y_min);
      prop += row.proposal_s;
    }
    IterationSummary it;
    it.iter = static_cast<int>(k) + 1;
    it.n = static_cast<int>(v.size());
    it.median = quantile(v, 0.5);
    it.q1 = quantile(v, 0.25);
    it.q3 = quantile(v, 0.75);
    it.mean_proposal_s = prop / static_cast<double>(v.size());
    s.per_iter.push_back(it);
  }

  std::map<Branch, std::vector<const IterationRow*>> by_branch;
  for (const auto* r : done) {
    for (const auto& row : r->rows) by_branch[row.branch].push_back(&row);
  }
  for (const auto& [branch, rows] : by_branch) {
    BranchRuntime b;
    b.branch = branch;
    b.count = static_cast<long>(rows.size());
    std::vector<double> prop;
    double iter_total = 0.0;
    for (const auto* row : rows) {
      prop.push_back(row->proposal_s);
      iter_total += row->iter_s;
    }
    double sum = 0.0;
    for (double p : prop) sum += p;
    b.mean_proposal_s = sum / static_cast<double>(rows.size());
    b.median_proposal_s = quantile(prop, 0.5);
    b.mean_iter_s = iter_total / static_cast<double>(rows.size());
    s.per_branch.push_back(b);
  }
  return s;
}

int effective_trial_threads(const ExperimentConfig& cfg) {
  int n = std::max(1, cfg.parallel);
  if (const char* env = std::getenv("EPS_TS_BO_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<long>(n, cap);
  }
  return std::min(n, std::max(1, cfg.n_trials));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.trials.resize(static_cast<std::size_t>(cfg.n_trials));
  const int threads = effective_trial_threads(cfg);

  if (threads == 1) {
    for (int t = 0; t < cfg.n_trials; ++t) result.trials[static_cast<std::size_t>(t)] = run_trial(cfg, t);
  } else {
    // Kernels nested inside a trial run serially while trials are parallel.
    const int saved_levels = omp_get_max_active_levels();
    omp_set_max_active_levels(1);
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg.n_trials));
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
    for (int t = 0; t < cfg.n_trials; ++t) {
      try {
        result.trials[static_cast<std::size_t>(t)] = run_trial(cfg, t);
      } catch (...) {
        failures[static_cast<std::size_t>(t)] = std::current_exception();
      }
    }
    omp_set_max_active_levels(saved_levels);
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  result.stats = summarize(result.trials);
  return result;
}

}  // namespace epsts
