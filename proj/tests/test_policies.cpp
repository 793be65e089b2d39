#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include "epsts/benchmarks.hpp"
#include "epsts/errors.hpp"
#include "epsts/policies.hpp"
#include "epsts/rff_sampler.hpp"

using namespace epsts;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

bool in_unit_cube(const VectorXd& x) { return (x.array() >= 0.0).all() && (x.array() <= 1.0).all(); }

// x sin x on [0, 20] with 10 Latin-hypercube observations and an SE kernel.
GpPosterior xsinx_posterior(std::uint64_t seed = 1) {
  const ObjectiveSpec f = make_xsinx();
  Rng design(seed);
  const MatrixXd X = lhs_design(1, 10, f.box, design);
  VectorXd y(10);
  for (int i = 0; i < 10; ++i) y[i] = f.evaluator(X.row(i).transpose());
  Rng hyper(seed + 1);
  return fit_gp(Dataset(f.box, X, y), KernelFamily::SE, 1e-3, hyper);
}

// Number of single-linkage groups (gap > `gap`) holding at least `min_size` points.
int count_clusters(std::vector<double> xs, double gap, int min_size) {
  std::sort(xs.begin(), xs.end());
  int clusters = 0, run = 1;
  for (std::size_t i = 1; i <= xs.size(); ++i) {
    if (i == xs.size() || xs[i] - xs[i - 1] > gap) {
      if (run >= min_size) ++clusters;
      run = 1;
    } else {
      ++run;
    }
  }
  return clusters;
}

// EI by averaging max(y_best - f, 0) over 1e5 stratified standard-normal
// samples (inverse CDF at the stratum midpoints).
double ei_oracle(double mean, double sd, double y_best) {
  static const std::vector<double> z = [] {
    boost::math::normal n;
    std::vector<double> out(100000);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = boost::math::quantile(n, (i + 0.5) / out.size());
    return out;
  }();
  double acc = 0;
  for (double zi : z) acc += std::max(y_best - (mean + sd * zi), 0.0);
  return acc / static_cast<double>(z.size());
}

InnerConfig inner1() { return InnerConfig::for_dim(1); }

}  // namespace

TEST(PolicySpec, NamesAndValidation) {
  for (auto k : {PolicyKind::GenericTS, PolicyKind::AveragingTS, PolicyKind::EpsGreedyTS, PolicyKind::EI,
                 PolicyKind::LCB}) {
    EXPECT_EQ(parse_policy_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_policy_kind("ucb"), std::invalid_argument);
  PolicySpec s;
  EXPECT_EQ(s.n_paths, 50);
  EXPECT_EQ(s.n_spectral, 1000);
  EXPECT_EQ(s.lcb_kappa, 2.0);
  EXPECT_NO_THROW(s.validate());
  for (double eps : {0.0, 1.0}) {
    s.epsilon = eps;
    EXPECT_NO_THROW(s.validate());
  }
  s.epsilon = 1.5;
  try {
    s.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "epsilon");
  }
  s = PolicySpec{};
  s.n_paths = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = PolicySpec{};
  s.n_spectral = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = PolicySpec{};
  s.lcb_kappa = -1;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(GenericTs, DeterministicAndFeasible) {
  const GpPosterior gp = xsinx_posterior();
  Rng s1(3), w1(4), s2(3), w2(4);
  const Proposal a = propose_generic_ts(gp, 500, s1, w1, inner1());
  const Proposal b = propose_generic_ts(gp, 500, s2, w2, inner1());
  EXPECT_EQ(a.x_next, b.x_next);
  EXPECT_EQ(a.acq_value, b.acq_value);
  EXPECT_EQ(a.branch, Branch::Explore);
  EXPECT_TRUE(in_unit_cube(a.x_next));
}

TEST(GenericTs, MinimizerDistributionIsMultimodal) {
  const GpPosterior gp = xsinx_posterior();
  Rng spectral(10), weights(11);
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(propose_generic_ts(gp, 1000, spectral, weights, inner1()).x_next[0]);
  EXPECT_GE(count_clusters(xs, 0.05, 3), 2);
}

TEST(GenericTs, ProposalsStayInBoundsOnSymmetricData) {
  // 10^4 cheap configurations: symmetric data, random kernels.
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> ul(0.05, 2.0);
  InnerConfig cheap = InnerConfig::for_dim(1);
  cheap.direct.max_evals = 60;
  cheap.local.max_iters = 20;
  for (int t = 0; t < 10000; ++t) {
    const int d = 1 + t % 2;
    MatrixXd X(4, d);
    for (int j = 0; j < d; ++j) X.col(j) << 0.0, 0.25, 0.75, 1.0;
    const VectorXd y = (VectorXd(4) << 1.0, -1.0, -1.0, 1.0).finished();
    const auto fam = t % 3 == 0 ? KernelFamily::SE : (t % 3 == 1 ? KernelFamily::Matern32 : KernelFamily::Matern52);
    GpPosterior gp(X, y, KernelSpec::isotropic(fam, 1.0, ul(gen)), 1e-3);
    Rng s(t), w(t + 1);
    cheap.direct.max_evals = 60 * d;
    const Proposal p = propose_generic_ts(gp, 20, s, w, cheap);
    ASSERT_TRUE(in_unit_cube(p.x_next)) << "config " << t;
  }
}

TEST(AveragingTs, SinglePathEqualsGenericTs) {
  const GpPosterior gp = xsinx_posterior();
  Rng s1(5), w1(6), s2(5), w2(6);
  const Proposal a = propose_averaging_ts(gp, 1, 500, s1, w1, inner1());
  const Proposal b = propose_generic_ts(gp, 500, s2, w2, inner1());
  EXPECT_EQ(a.x_next, b.x_next);
  EXPECT_EQ(a.acq_value, b.acq_value);
  EXPECT_EQ(a.branch, Branch::Exploit);
}

TEST(AveragingTs, ManyPathsApproachTheWeightPosteriorMean) {
  // Fixed SE(1, 0.1) on the x sin x data: posterior SD stays below about 0.5,
  // so the Monte-Carlo error of 10^4 paths is well under the bound. The
  // trained posterior (SD near 1 between points) sits right at it.
  const GpPosterior fitted = xsinx_posterior();
  const GpPosterior gp(fitted.X(), fitted.y(), KernelSpec::isotropic(KernelFamily::SE, 1.0, 0.1), 1e-3);
  Rng spectral(7), weights(8);
  auto fm = std::make_shared<const FeatureMap>(build_feature_map(gp.kernel(), 1, 1000, spectral));
  const WeightPosterior wp = weight_posterior(*fm, gp.X(), gp.y(), gp.noise_sd());
  std::vector<SamplePath> paths;
  for (int s = 0; s < 10000; ++s) paths.push_back(draw_path(fm, wp, weights));
  const SamplePath avg = average_paths(paths);
  const SamplePath mean = mean_path(fm, wp);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const VectorXd x = VectorXd::Constant(1, i / 99.0);
    worst = std::max(worst, std::abs(avg.value(x) - mean.value(x)));
  }
  EXPECT_LT(worst, 0.02);
}

TEST(EpsGreedy, SwitchExtremesAndFrequency) {
  Rng r0(1), r1(2), r3(3);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_FALSE(draw_explore(0.0, r0));
    EXPECT_TRUE(draw_explore(1.0, r1));
  }
  int explore = 0;
  for (int i = 0; i < 10000; ++i) explore += draw_explore(0.3, r3);
  EXPECT_NEAR(explore / 10000.0, 0.3, 0.014);
}

TEST(EpsGreedy, BranchesAreRecorded) {
  const GpPosterior gp = xsinx_posterior();
  Rng sw(1), sp(2), w(3);
  PolicyStreams streams{sw, sp, w};
  int explore = 0, exploit = 0;
  for (int i = 0; i < 40; ++i) {
    const Proposal p = propose_eps_greedy_ts(gp, 0.5, 5, 100, streams, inner1());
    (p.branch == Branch::Explore ? explore : exploit)++;
    EXPECT_NE(p.branch, Branch::Deterministic);
  }
  EXPECT_GT(explore, 0);
  EXPECT_GT(exploit, 0);
  EXPECT_THROW(propose_eps_greedy_ts(gp, 1.5, 5, 100, streams, inner1()), std::invalid_argument);
}

TEST(EpsGreedy, ExtremesReproduceGenericAndAveraging) {
  const GpPosterior gp = xsinx_posterior();
  for (double eps : {0.0, 1.0}) {
    Rng sw(1), sp(2), w(3);
    Rng sp_ref(2), w_ref(3);
    PolicyStreams streams{sw, sp, w};
    for (int i = 0; i < 20; ++i) {
      const Proposal a = propose_eps_greedy_ts(gp, eps, 10, 300, streams, inner1());
      const Proposal b = eps == 1.0 ? propose_generic_ts(gp, 300, sp_ref, w_ref, inner1())
                                    : propose_averaging_ts(gp, 10, 300, sp_ref, w_ref, inner1());
      ASSERT_EQ(a.x_next, b.x_next) << "eps " << eps << " step " << i;
      ASSERT_EQ(a.branch, b.branch);
      ASSERT_EQ(a.acq_value, b.acq_value);
    }
  }
}

TEST(Ei, ClosedFormMatchesStratifiedOracle) {
  const GpPosterior gp = xsinx_posterior();
  const double y_best = gp.y().minCoeff();
  int compared = 0;
  for (int i = 0; i <= 200; ++i) {
    const VectorXd x = VectorXd::Constant(1, i / 200.0);
    const Prediction p = gp.predict(x);
    const double ei = expected_improvement(p.mean, std::sqrt(p.variance), y_best);
    if (ei > 1e-3) {
      ++compared;
      EXPECT_NEAR(ei_oracle(p.mean, std::sqrt(p.variance), y_best) / ei, 1.0, 0.01) << "x = " << x[0];
    }
  }
  EXPECT_GT(compared, 10);
}

TEST(Ei, ZeroAtIncumbentWithoutNoise) {
  MatrixXd X(3, 1);
  X << 0.2, 0.5, 0.8;
  const VectorXd y = (VectorXd(3) << 0.4, -1.0, 0.9).finished();
  GpPosterior gp(X, y, KernelSpec::isotropic(KernelFamily::SE, 1.0, 0.2), 1e-8);
  const Prediction p = gp.predict(VectorXd::Constant(1, 0.5));
  EXPECT_LT(expected_improvement(p.mean, std::sqrt(p.variance), -1.0), 1e-6);
  EXPECT_EQ(expected_improvement(0.0, 0.0, -1.0), 0.0);
  EXPECT_EQ(expected_improvement(-2.0, 0.0, -1.0), 1.0);
}

TEST(Ei, ProposalIsDeterministicAndFeasible) {
  const GpPosterior gp = xsinx_posterior();
  const Proposal a = propose_ei(gp, gp.y().minCoeff(), inner1());
  const Proposal b = propose_ei(gp, gp.y().minCoeff(), inner1());
  EXPECT_EQ(a.x_next, b.x_next);
  EXPECT_EQ(a.branch, Branch::Deterministic);
  EXPECT_TRUE(in_unit_cube(a.x_next));
  // The proposal maximizes EI at least as well as a dense grid.
  double grid_best = 0;
  for (int i = 0; i <= 10000; ++i) {
    const Prediction p = gp.predict(VectorXd::Constant(1, i / 10000.0));
    grid_best = std::max(grid_best, expected_improvement(p.mean, std::sqrt(p.variance), gp.y().minCoeff()));
  }
  EXPECT_GE(-a.acq_value, grid_best * (1 - 1e-6));
}

TEST(Lcb, PriorReversionFarFromData) {
  MatrixXd X(2, 2);
  X << 0.0, 0.0, 0.05, 0.0;
  GpPosterior gp(X, (VectorXd(2) << 0.3, -0.3).finished(), KernelSpec::isotropic(KernelFamily::SE, 1.0, 0.05), 1e-3);
  const Prediction p = gp.predict(VectorXd::Constant(2, 1.0));
  EXPECT_NEAR(p.mean - 2.0 * std::sqrt(p.variance), -2.0, 1e-6);
  const Proposal prop = propose_lcb(gp, 2.0, InnerConfig::for_dim(2));
  EXPECT_NEAR(prop.acq_value, -2.0, 1e-6);
  EXPECT_EQ(prop.branch, Branch::Deterministic);
}

TEST(Propose, DispatchesOnKind) {
  const GpPosterior gp = xsinx_posterior();
  for (auto kind : {PolicyKind::GenericTS, PolicyKind::AveragingTS, PolicyKind::EpsGreedyTS, PolicyKind::EI,
                    PolicyKind::LCB}) {
    PolicySpec spec;
    spec.kind = kind;
    spec.n_spectral = 200;
    spec.n_paths = 5;
    Rng sw(1), sp(2), w(3);
    const Proposal p = propose(spec, gp, PolicyStreams{sw, sp, w}, inner1());
    EXPECT_TRUE(in_unit_cube(p.x_next));
    if (kind == PolicyKind::EI || kind == PolicyKind::LCB) EXPECT_EQ(p.branch, Branch::Deterministic);
    if (kind == PolicyKind::GenericTS) EXPECT_EQ(p.branch, Branch::Explore);
    if (kind == PolicyKind::AveragingTS) EXPECT_EQ(p.branch, Branch::Exploit);
  }
}

TEST(DedupGuard, Contract) {
  MatrixXd rows(3, 2);
  rows << 0.1, 0.1, 0.5, 0.5, 0.0, 1.0;
  Rng rng(1);
  const VectorXd far = (VectorXd(2) << 0.3, 0.7).finished();
  EXPECT_EQ(dedup_guard(far, rows, rng), far);
  for (int i = 0; i < 3; ++i) {
    const VectorXd moved = dedup_guard(rows.row(i).transpose(), rows, rng);
    EXPECT_TRUE(in_unit_cube(moved));
    EXPECT_GE((rows.rowwise() - moved.transpose()).rowwise().norm().minCoeff(), 1e-8);
    EXPECT_LE((moved - rows.row(i).transpose()).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(DedupGuard, BoundaryCasesIn1d) {
  for (double corner : {0.0, 1.0}) {
    MatrixXd one = MatrixXd::Constant(1, 1, corner);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      Rng rng(seed);
      const VectorXd moved = dedup_guard(VectorXd::Constant(1, corner), one, rng);
      ASSERT_TRUE(in_unit_cube(moved));
      ASSERT_GE(std::abs(moved[0] - corner), 1e-8);
    }
  }
}

TEST(DedupGuard, SaturatedNeighbourhoodThrows) {
  MatrixXd rows(141, 1);
  for (int k = -70; k <= 70; ++k) rows(k + 70, 0) = 0.5 + k * 1.5e-8;
  Rng rng(1);
  EXPECT_THROW(dedup_guard(VectorXd::Constant(1, 0.5), rows, rng), ProposalError);
}
