#include "epsts/policies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "epsts/errors.hpp"
#include "epsts/rff_sampler.hpp"

namespace epsts {
namespace {

constexpr double kDedupRadius = 1e-8;
constexpr double kDedupPerturbation = 1e-6;
constexpr int kDedupAttempts = 100;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

Proposal minimize_path(const SamplePath& path, Eigen::Index d, Branch branch, const InnerConfig& inner) {
  ScalarFn f = [&path](const Eigen::VectorXd& x) { return path.value(x); };
  ValueGradFn fg = [&path](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return path.value_and_gradient(x, g); };
  MinimizeResult r = minimize_acquisition(f, fg, d, inner);
  return {std::move(r.x), branch, r.f};
}

std::shared_ptr<const FeatureMap> feature_map_for(const GpPosterior& gp, int n_spectral, Rng& spectral_rng) {
  if (n_spectral < 1) throw std::invalid_argument("n_spectral must be at least 1");
  return std::make_shared<const FeatureMap>(build_feature_map(gp.kernel(), gp.dim(), n_spectral, spectral_rng));
}

}  // namespace

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::GenericTS: return "generic-ts";
    case PolicyKind::AveragingTS: return "averaging-ts";
    case PolicyKind::EpsGreedyTS: return "eps-ts";
    case PolicyKind::EI: return "ei";
    case PolicyKind::LCB: return "lcb";
  }
  return "unknown";
}

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::Explore: return "explore";
    case Branch::Exploit: return "exploit";
    case Branch::Deterministic: return "deterministic";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "generic-ts") return PolicyKind::GenericTS;
  if (n == "averaging-ts") return PolicyKind::AveragingTS;
  if (n == "eps-ts" || n == "eps-greedy-ts") return PolicyKind::EpsGreedyTS;
  if (n == "ei") return PolicyKind::EI;
  if (n == "lcb") return PolicyKind::LCB;
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

Branch parse_branch(std::string_view name) {
  if (name == "explore") return Branch::Explore;
  if (name == "exploit") return Branch::Exploit;
  if (name == "deterministic") return Branch::Deterministic;
  throw std::invalid_argument("unknown branch '" + std::string(name) + "'");
}

void PolicySpec::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon", "must lie in [0, 1]");
  if (n_paths < 1) throw ConfigError("num_paths", "must be at least 1");
  if (n_spectral < 1) throw ConfigError("spectral_points", "must be at least 1");
  if (!(lcb_kappa > 0.0) || !std::isfinite(lcb_kappa)) throw ConfigError("lcb_kappa", "must be positive");
}

bool draw_explore(double epsilon, Rng& switch_rng) {
  const double r = 1.0 - uniform01(switch_rng);  // (0, 1]
  return r <= epsilon;
}

Proposal propose_generic_ts(const GpPosterior& gp, int n_spectral, Rng& spectral_rng, Rng& weights_rng,
                            const InnerConfig& inner) {
  auto fm = feature_map_for(gp, n_spectral, spectral_rng);
  const WeightPosterior wp = weight_posterior(*fm, gp.X(), gp.y(), gp.noise_sd());
  const SamplePath path = draw_path(fm, wp, weights_rng);
  return minimize_path(path, gp.dim(), Branch::Explore, inner);
}

Proposal propose_averaging_ts(const GpPosterior& gp, int n_paths, int n_spectral, Rng& spectral_rng,
                              Rng& weights_rng, const InnerConfig& inner) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");
  auto fm = feature_map_for(gp, n_spectral, spectral_rng);
  const WeightPosterior wp = weight_posterior(*fm, gp.X(), gp.y(), gp.noise_sd());
  std::vector<SamplePath> paths;
  paths.reserve(static_cast<std::size_t>(n_paths));
  for (int s = 0; s < n_paths; ++s) paths.push_back(draw_path(fm, wp, weights_rng));
  const SamplePath avg = average_paths(paths);
  return minimize_path(avg, gp.dim(), Branch::Exploit, inner);
}

Proposal propose_eps_greedy_ts(const GpPosterior& gp, double epsilon, int n_paths, int n_spectral,
                               const PolicyStreams& streams, const InnerConfig& inner) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (draw_explore(epsilon, streams.switch_draw)) {
    return propose_generic_ts(gp, n_spectral, streams.spectral, streams.weights, inner);
  }
  return propose_averaging_ts(gp, n_paths, n_spectral, streams.spectral, streams.weights, inner);
}

double expected_improvement(double mean, double sd, double y_best) {
  const double gap = y_best - mean;
  if (sd <= 1e-12) return std::max(gap, 0.0);
  const double z = gap / sd;
  return gap * normal_cdf(z) + sd * normal_pdf(z);
}

Proposal propose_ei(const GpPosterior& gp, double y_best, const InnerConfig& inner) {
  ScalarFn f = [&](const Eigen::VectorXd& x) {
    const Prediction p = gp.predict(x);
    return -expected_improvement(p.mean, std::sqrt(p.variance), y_best);
  };
  ValueGradFn fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const PredictionWithGradient p = gp.predict_with_gradient(x);
    const double sd = std::sqrt(p.variance);
    const double gap = y_best - p.mean;
    if (sd <= 1e-12) {
      g = gap > 0.0 ? Eigen::VectorXd(p.mean_grad) : Eigen::VectorXd::Zero(x.size());
      return -std::max(gap, 0.0);
    }
    const double z = gap / sd;
    const Eigen::VectorXd sd_grad = p.variance_grad / (2.0 * sd);
    // d EI = -Phi(z) d mu + phi(z) d sd
    g = normal_cdf(z) * p.mean_grad - normal_pdf(z) * sd_grad;
    return -(gap * normal_cdf(z) + sd * normal_pdf(z));
  };
  MinimizeResult r = minimize_acquisition(f, fg, gp.dim(), inner);
  return {std::move(r.x), Branch::Deterministic, r.f};
}

Proposal propose_lcb(const GpPosterior& gp, double kappa, const InnerConfig& inner) {
  if (!(kappa > 0.0)) throw std::invalid_argument("lcb kappa must be positive");
  ScalarFn f = [&](const Eigen::VectorXd& x) {
    const Prediction p = gp.predict(x);
    return p.mean - kappa * std::sqrt(p.variance);
  };
  ValueGradFn fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const PredictionWithGradient p = gp.predict_with_gradient(x);
    const double sd = std::sqrt(p.variance);
    g = p.mean_grad;
    if (sd > 1e-12) g -= kappa * p.variance_grad / (2.0 * sd);
    return p.mean - kappa * sd;
  };
  MinimizeResult r = minimize_acquisition(f, fg, gp.dim(), inner);
  return {std::move(r.x), Branch::Deterministic, r.f};
}

Proposal propose(const PolicySpec& spec, const GpPosterior& gp, const PolicyStreams& streams,
                 const InnerConfig& inner) {
  switch (spec.kind) {
    case PolicyKind::GenericTS:
      return propose_generic_ts(gp, spec.n_spectral, streams.spectral, streams.weights, inner);
    case PolicyKind::AveragingTS:
      return propose_averaging_ts(gp, spec.n_paths, spec.n_spectral, streams.spectral, streams.weights, inner);
    case PolicyKind::EpsGreedyTS:
      return propose_eps_greedy_ts(gp, spec.epsilon, spec.n_paths, spec.n_spectral, streams, inner);
    case PolicyKind::EI:
      return propose_ei(gp, gp.y().minCoeff(), inner);
    case PolicyKind::LCB:
      return propose_lcb(gp, spec.lcb_kappa, inner);
  }
  throw std::invalid_argument("unknown policy kind");
}

Eigen::VectorXd dedup_guard(const Eigen::VectorXd& x, const Eigen::MatrixXd& rows, Rng& rng) {
  auto too_close = [&](const Eigen::VectorXd& p) {
    if (rows.rows() == 0) return false;
    return (rows.rowwise() - p.transpose()).rowwise().norm().minCoeff() < kDedupRadius;
  };
  if (!too_close(x)) return x;
  for (int attempt = 0; attempt < kDedupAttempts; ++attempt) {
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] += kDedupPerturbation * (2.0 * uniform01(rng) - 1.0);
    p = p.cwiseMax(0.0).cwiseMin(1.0);
    if (!too_close(p)) return p;
  }
  throw ProposalError("could not move the proposal away from existing observations after 100 attempts");
}

}  // namespace epsts
