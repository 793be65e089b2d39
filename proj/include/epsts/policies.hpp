#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "epsts/gp_model.hpp"
#include "epsts/inner_opt.hpp"
#include "epsts/random.hpp"

namespace epsts {

enum class PolicyKind { GenericTS, AveragingTS, EpsGreedyTS, EI, LCB };
enum class Branch { Explore, Exploit, Deterministic };

std::string_view to_string(PolicyKind k);
std::string_view to_string(Branch b);
// Accepts "generic-ts", "averaging-ts", "eps-ts", "ei", "lcb".
PolicyKind parse_policy_kind(std::string_view name);
Branch parse_branch(std::string_view name);

struct PolicySpec {
  PolicyKind kind = PolicyKind::EpsGreedyTS;
  double epsilon = 0.5;      // EpsGreedyTS only
  int n_paths = 50;          // AveragingTS / EpsGreedyTS
  int n_spectral = 1000;     // Thompson-sampling policies
  double lcb_kappa = 2.0;    // LCB only

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct Proposal {
  Eigen::VectorXd x_next;  // unit cube
  Branch branch = Branch::Deterministic;
  double acq_value = 0.0;  // minimized surrogate value at x_next
};

// The three streams a proposal may consume. Keeping them apart makes
// epsilon = 1 reproduce generic TS and epsilon = 0 reproduce averaging TS
// bit-for-bit.
struct PolicyStreams {
  Rng& switch_draw;
  Rng& spectral;
  Rng& weights;
};

// r ~ U(0, 1] from the switch stream; explore when r <= epsilon.
bool draw_explore(double epsilon, Rng& switch_rng);

// Minimizer of one posterior sample path.
Proposal propose_generic_ts(const GpPosterior& gp, int n_spectral, Rng& spectral_rng, Rng& weights_rng,
                            const InnerConfig& inner);

// Minimizer of the average of n_paths sample paths drawn from one shared
// feature map and weight posterior.
Proposal propose_averaging_ts(const GpPosterior& gp, int n_paths, int n_spectral, Rng& spectral_rng,
                              Rng& weights_rng, const InnerConfig& inner);

Proposal propose_eps_greedy_ts(const GpPosterior& gp, double epsilon, int n_paths, int n_spectral,
                               const PolicyStreams& streams, const InnerConfig& inner);

// Expected improvement below y_best (standardized units) in closed form.
double expected_improvement(double mean, double sd, double y_best);
Proposal propose_ei(const GpPosterior& gp, double y_best, const InnerConfig& inner);
Proposal propose_lcb(const GpPosterior& gp, double kappa, const InnerConfig& inner);

// Dispatches on spec.kind. y_best is the smallest standardized observation.
Proposal propose(const PolicySpec& spec, const GpPosterior& gp, const PolicyStreams& streams,
                 const InnerConfig& inner);

// Returns x unchanged unless it lies within 1e-8 of a row of `rows`; then
// retries up to 100 uniform perturbations of radius 1e-6 clamped to the unit
// cube. Throws ProposalError when every attempt collides.
Eigen::VectorXd dedup_guard(const Eigen::VectorXd& x, const Eigen::MatrixXd& rows, Rng& rng);

}  // namespace epsts
