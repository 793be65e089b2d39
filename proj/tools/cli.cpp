#include "epsts/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>

#include "epsts/errors.hpp"
#include "epsts/external_objective.hpp"
#include "epsts/results_io.hpp"

namespace epsts {
namespace {

using json = nlohmann::json;

struct FlagInfo {
  const char* key;
  const char* help;
};

// Every setting is accepted both as a flag and as a config-file key.
constexpr FlagInfo kFlags[] = {
    {"objective", "benchmark name (see bench-list); with --external-cmd it supplies the box"},
    {"external_cmd", "command speaking the JSON line protocol"},
    {"policy", "generic-ts | averaging-ts | eps-ts | ei | lcb"},
    {"epsilon", "exploration probability of eps-ts, in [0, 1]"},
    {"num_paths", "sample paths averaged by averaging-ts / eps-ts"},
    {"spectral_points", "random features per sample path"},
    {"kernel", "se | ard-se | matern32 | matern52"},
    {"noise_sd", "GP noise SD in standardized units"},
    {"obs_noise_sd", "noise added to observations, standardized units"},
    {"lcb_kappa", "LCB exploration weight"},
    {"init", "initial Latin-hypercube points per trial"},
    {"iters", "BO iterations per trial"},
    {"trials", "number of trials"},
    {"seed", "base seed; trial t uses seed + t"},
    {"out", "records file; summary files are written next to it"},
    {"format", "csv | jsonl"},
    {"parallel", "trials run concurrently (capped by EPS_TS_BO_THREADS)"},
    {"dim", "dimension of an external objective"},
    {"box", "external objective box: 'lo,hi' for every axis, 'lo1,hi1;lo2,hi2;...', or a JSON array"},
    {"f_star", "known optimum, enables log_error"},
    {"external_timeout", "per-evaluation timeout in milliseconds"},
};

std::string canonical_key(std::string k) {
  std::replace(k.begin(), k.end(), '-', '_');
  return k;
}

std::string flag_name(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  return "--" + k;
}

bool known_key(const std::string& k) {
  return std::any_of(std::begin(kFlags), std::end(kFlags), [&](const FlagInfo& f) { return k == f.key; });
}

std::string as_string(const json& v, const std::string& field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw ConfigError(field, "expected a scalar value");
}

double as_double(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  const std::string s = as_string(v, field);
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(field, "'" + s + "' is not a number");
  }
  if (pos != s.size() || !std::isfinite(out)) throw ConfigError(field, "'" + s + "' is not a finite number");
  return out;
}

long long as_integer(const json& v, const std::string& field) {
  const double d = as_double(v, field);
  if (d != std::floor(d) || std::fabs(d) > 9.0e15) throw ConfigError(field, "must be an integer");
  return static_cast<long long>(d);
}

int as_int(const json& v, const std::string& field) {
  const long long x = as_integer(v, field);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(field, "out of range");
  return static_cast<int>(x);
}

std::vector<double> parse_numbers(const std::string& s, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(as_double(json(tok), field));
  return out;
}

Box parse_box(const json& v, std::optional<Eigen::Index> dim) {
  std::vector<std::pair<double, double>> bounds;
  if (v.is_array()) {
    if (!v.empty() && v[0].is_array()) {
      for (const auto& b : v) {
        if (!b.is_array() || b.size() != 2) throw ConfigError("box", "expected [[lo, hi], ...]");
        bounds.emplace_back(as_double(b[0], "box"), as_double(b[1], "box"));
      }
    } else if (v.size() == 2) {
      bounds.emplace_back(as_double(v[0], "box"), as_double(v[1], "box"));
    } else {
      throw ConfigError("box", "expected [lo, hi] or [[lo, hi], ...]");
    }
  } else if (const std::string text = as_string(v, "box"); text.find('[') != std::string::npos) {
    json parsed;
    try {
      parsed = json::parse(text);
    } catch (const json::exception&) {
      throw ConfigError("box", "'" + text + "' is not valid JSON");
    }
    if (!parsed.is_array()) throw ConfigError("box", "expected [lo, hi] or [[lo, hi], ...]");
    return parse_box(parsed, dim);
  } else {
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
      const auto nums = parse_numbers(part, "box");
      if (nums.size() != 2) throw ConfigError("box", "each axis needs 'lo,hi'");
      bounds.emplace_back(nums[0], nums[1]);
    }
  }
  if (bounds.empty()) throw ConfigError("box", "is empty");
  if (bounds.size() == 1 && dim && *dim > 1) bounds.assign(static_cast<std::size_t>(*dim), bounds[0]);
  if (dim && static_cast<Eigen::Index>(bounds.size()) != *dim) throw ConfigError("box", "does not match --dim");
  Eigen::VectorXd lo(static_cast<Eigen::Index>(bounds.size()));
  Eigen::VectorXd hi(lo.size());
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    lo[static_cast<Eigen::Index>(i)] = bounds[i].first;
    hi[static_cast<Eigen::Index>(i)] = bounds[i].second;
  }
  try {
    return Box(lo, hi);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("box", e.what());
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  json out = json::object();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = canonical_key(it.key());
    if (!known_key(key)) throw ConfigError(key, "unknown setting");
    out[key] = it.value();
  }
  return out;
}

void print_summary(const ExperimentResult& r, const ExperimentConfig& cfg, std::ostream& out) {
  const auto& s = r.stats;
  out << "trials: " << s.n_completed << " completed, " << s.n_failed << " failed\n";
  if (!s.per_iter.empty()) {
    const auto& last = s.per_iter.back();
    out << "final " << (s.uses_log_error ? "log10 error" : "y_min") << ": median " << last.median << " (IQR "
        << last.q1 << " .. " << last.q3 << ")\n";
  }
  for (const auto& b : s.per_branch) {
    out << "proposal time [" << to_string(b.branch) << "]: mean " << b.mean_proposal_s << " s over " << b.count
        << " proposals\n";
  }
  out << "mean trial runtime: " << s.mean_trial_runtime_s << " s (" << to_string(cfg.policy.kind) << ")\n";
  for (const auto& e : s.failures) {
    out << "trial " << e.trial_id << " aborted at iteration " << e.iter << " [" << e.kind << "]: " << e.message
        << '\n';
  }
}

int cmd_bench_list(std::ostream& out) {
  for (const auto& name : benchmark_names()) {
    const ObjectiveSpec s = find_benchmark(name);
    out << name << "  d=" << s.d << "  box=";
    for (Eigen::Index i = 0; i < s.d; ++i) out << (i ? "x" : "") << '[' << s.box.lo[i] << ',' << s.box.hi[i] << ']';
    out << "  f_star=";
    if (s.f_star) {
      out << *s.f_star;
    } else {
      out << "unknown";
    }
    out << "  init=" << s.default_init << "  iters=" << s.default_iters << '\n';
  }
  return kExitOk;
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.output_path.empty()) throw ConfigError("out", "is required");
  const Eigen::Index d = cfg.dim();
  const OutputPaths paths = output_paths(cfg.output_path, cfg.format);
  for (const auto& p : {paths.records, paths.summary, paths.branches, paths.errors}) check_writable(p);

  const ExperimentResult result = run_experiment(cfg);
  try {
    emit_results(result, d, cfg.format, cfg.output_path);
  } catch (const IoError& e) {
    // Keep the finished experiment: retry in the temporary directory.
    err << "error: " << e.what() << '\n';
    const auto fallback = std::filesystem::temp_directory_path() /
                          ("epsts-" + std::to_string(::getpid()) + paths.records.filename().string());
    emit_results(result, d, cfg.format, fallback);
    err << "results saved to " << fallback.string() << " instead\n";
    return kExitRuntime;
  }
  print_summary(result, cfg, out);
  out << "wrote " << paths.records.string() << ", " << paths.summary.string() << ", " << paths.branches.string()
      << ", " << paths.errors.string() << '\n';
  if (result.stats.n_failed > 0) {
    err << "error: " << result.stats.n_failed << " trial(s) aborted; see " << paths.errors.string() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

ExperimentConfig config_from_settings(const json& raw) {
  json s = json::object();
  for (auto it = raw.begin(); it != raw.end(); ++it) {
    const std::string key = canonical_key(it.key());
    if (!known_key(key)) throw ConfigError(key, "unknown setting");
    s[key] = it.value();
  }
  auto has = [&](const char* k) { return s.contains(k) && !s[k].is_null(); };

  ExperimentConfig cfg;
  if (has("objective")) cfg.objective.benchmark = as_string(s["objective"], "objective");
  if (has("external_cmd")) cfg.objective.external_cmd = as_string(s["external_cmd"], "external_cmd");
  if (cfg.objective.benchmark.empty() && cfg.objective.external_cmd.empty()) {
    throw ConfigError("objective", "give --objective or --external-cmd");
  }
  if (!cfg.objective.benchmark.empty()) {
    try {
      find_benchmark(cfg.objective.benchmark);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("objective", e.what());
    }
  }
  if (has("dim")) {
    if (!cfg.objective.is_external()) throw ConfigError("dim", "only applies to --external-cmd");
    const long long d = as_integer(s["dim"], "dim");
    if (d < 1) throw ConfigError("dim", "must be at least 1");
    cfg.objective.dim = d;
  }
  if (has("box")) {
    if (!cfg.objective.is_external()) throw ConfigError("box", "only applies to --external-cmd");
    cfg.objective.box = parse_box(s["box"], cfg.objective.dim);
  }
  if (has("external_timeout")) {
    if (!cfg.objective.is_external()) throw ConfigError("external_timeout", "only applies to --external-cmd");
    cfg.objective.external_timeout = std::chrono::milliseconds(as_integer(s["external_timeout"], "external_timeout"));
  }
  if (has("f_star")) cfg.objective.f_star = as_double(s["f_star"], "f_star");

  if (has("policy")) {
    try {
      cfg.policy.kind = parse_policy_kind(as_string(s["policy"], "policy"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("policy", e.what());
    }
  }
  const PolicyKind kind = cfg.policy.kind;
  const bool ts = kind == PolicyKind::GenericTS || kind == PolicyKind::AveragingTS || kind == PolicyKind::EpsGreedyTS;
  const std::string policy_name(to_string(kind));
  if (has("epsilon")) {
    if (kind != PolicyKind::EpsGreedyTS) throw ConfigError("epsilon", "is not used by policy " + policy_name);
    cfg.policy.epsilon = as_double(s["epsilon"], "epsilon");
  }
  if (has("num_paths")) {
    if (kind != PolicyKind::EpsGreedyTS && kind != PolicyKind::AveragingTS) {
      throw ConfigError("num_paths", "is not used by policy " + policy_name);
    }
    cfg.policy.n_paths = as_int(s["num_paths"], "num_paths");
  }
  if (has("spectral_points")) {
    if (!ts) throw ConfigError("spectral_points", "is not used by policy " + policy_name);
    cfg.policy.n_spectral = as_int(s["spectral_points"], "spectral_points");
  }
  if (has("lcb_kappa")) {
    if (kind != PolicyKind::LCB) throw ConfigError("lcb_kappa", "is not used by policy " + policy_name);
    cfg.policy.lcb_kappa = as_double(s["lcb_kappa"], "lcb_kappa");
  }
  if (has("kernel")) {
    try {
      cfg.kernel = parse_kernel_family(as_string(s["kernel"], "kernel"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("kernel", e.what());
    }
  }
  if (has("noise_sd")) cfg.noise_sd = as_double(s["noise_sd"], "noise_sd");
  if (has("obs_noise_sd")) cfg.observation_noise_sd = as_double(s["obs_noise_sd"], "obs_noise_sd");

  // Budgets default to the benchmark's suggested values.
  if (!cfg.objective.benchmark.empty()) {
    const ObjectiveSpec b = find_benchmark(cfg.objective.benchmark);
    cfg.n_init = b.default_init;
    cfg.n_iters = b.default_iters;
  }
  if (has("init")) cfg.n_init = as_int(s["init"], "init");
  if (has("iters")) cfg.n_iters = as_int(s["iters"], "iters");
  if (has("trials")) cfg.n_trials = as_int(s["trials"], "trials");
  if (has("seed")) {
    const long long seed = as_integer(s["seed"], "seed");
    if (seed < 0) throw ConfigError("seed", "must be non-negative");
    cfg.base_seed = static_cast<std::uint64_t>(seed);
  }
  if (has("parallel")) cfg.parallel = as_int(s["parallel"], "parallel");
  if (has("out")) cfg.output_path = as_string(s["out"], "out");
  if (has("format")) {
    try {
      cfg.format = parse_output_format(as_string(s["format"], "format"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("format", e.what());
    }
  }
  cfg.validate();
  return cfg;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian optimization with epsilon-greedy Thompson sampling", "epsts"};
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_path;
  std::map<std::string, std::vector<CLI::Option*>> options;

  auto add_settings = [&](CLI::App* sub) {
    auto& v = values[sub->get_name()];
    for (const auto& f : kFlags) {
      options[sub->get_name()].push_back(sub->add_option(flag_name(f.key), v[f.key], f.help));
    }
    sub->add_option("--config", config_path[sub->get_name()], "JSON file with the same settings; flags override it");
  };
  CLI::App* run = app.add_subcommand("run", "run an experiment and write results");
  CLI::App* validate = app.add_subcommand("validate-config", "check settings without running");
  CLI::App* list = app.add_subcommand("bench-list", "list built-in objectives");
  add_settings(run);
  add_settings(validate);

  std::vector<std::string> argv_store{"epsts"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  if (list->parsed()) return cmd_bench_list(out);
  CLI::App* sub = run->parsed() ? run : validate;
  const std::string name = sub->get_name();

  ExperimentConfig cfg;
  try {
    json settings = json::object();
    if (!config_path[name].empty()) settings = load_config_file(config_path[name]);
    std::size_t i = 0;
    for (const auto& f : kFlags) {
      if (options[name][i++]->count() > 0) settings[f.key] = values[name][f.key];
    }
    cfg = config_from_settings(settings);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (sub == validate) {
    out << "config ok: " << cfg.objective.label() << ", policy " << to_string(cfg.policy.kind) << ", d=" << cfg.dim()
        << ", init=" << cfg.n_init << ", iters=" << cfg.n_iters << ", trials=" << cfg.n_trials << '\n';
    return kExitOk;
  }
  try {
    return cmd_run(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace epsts
