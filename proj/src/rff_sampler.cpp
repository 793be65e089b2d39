#include "epsts/rff_sampler.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "epsts/errors.hpp"

namespace epsts {

Eigen::VectorXd FeatureMap::features(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("feature map input has wrong dimension");
  return scale * (W * x + b).array().cos().matrix();
}

FeatureMap build_feature_map(const KernelSpec& kernel, Eigen::Index d, Eigen::Index n_points, Rng& rng) {
  FeatureMap fm;
  fm.W = sample_spectral_points(kernel, d, n_points, rng);
  fm.b.resize(n_points);
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index j = 0; j < n_points; ++j) {
    double v = two_pi * uniform01(rng);
    if (v >= two_pi) v = 0.0;
    fm.b[j] = v;
  }
  fm.scale = std::sqrt(2.0 * kernel.variance() / static_cast<double>(n_points));
  return fm;
}

Eigen::MatrixXd feature_matrix(const FeatureMap& fm, const Eigen::MatrixXd& X) {
  if (X.cols() != fm.dim()) throw std::invalid_argument("feature_matrix input has wrong dimension");
  const Eigen::Index n = X.rows();
  const Eigen::Index p = fm.size();
  Eigen::MatrixXd Phi(n, p);
#pragma omp parallel for schedule(static) if (n * p >= 16384)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      double z = fm.b[j];
      for (Eigen::Index k = 0; k < fm.dim(); ++k) z += fm.W(j, k) * X(i, k);
      Phi(i, j) = fm.scale * std::cos(z);
    }
  }
  return Phi;
}

WeightPosterior weight_posterior(const FeatureMap& fm, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 double noise_sd) {
  if (!(noise_sd > 0.0)) throw std::invalid_argument("noise_sd must be positive");
  if (X.rows() != y.size()) throw std::invalid_argument("X and y row counts differ");
  const Eigen::MatrixXd Phi = feature_matrix(fm, X);
  const Eigen::Index p = fm.size();
  const double noise_var = noise_sd * noise_sd;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  A.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose());
  A.diagonal().array() += noise_var;

  WeightPosterior out;
  out.noise_sd = noise_sd;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(A);
  if (llt.info() != Eigen::Success) {
    const double ref = std::max(noise_var, A.diagonal().maxCoeff());
    bool ok = false;
    for (double rel = 1e-10; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) {
      Eigen::MatrixXd Aj = A;
      Aj.diagonal().array() += rel * ref;
      llt.compute(Aj);
      if (llt.info() == Eigen::Success) {
        out.jitter = rel * ref;
        ok = true;
        break;
      }
    }
    if (!ok) throw ModelFitError("feature-weight precision matrix is not positive definite");
  }
  out.mean = llt.solve(Phi.transpose() * y);
  out.chol_lower = llt.matrixL();
  return out;
}

SamplePath::SamplePath(std::shared_ptr<const FeatureMap> features, Eigen::VectorXd beta)
    : features_(std::move(features)), beta_(std::move(beta)) {
  if (!features_) throw std::invalid_argument("sample path needs a feature map");
  if (beta_.size() != features_->size()) throw std::invalid_argument("weight vector does not match feature count");
  if (!beta_.allFinite()) throw std::invalid_argument("sample path weights must be finite");
}

double SamplePath::value(const Eigen::VectorXd& x) const {
  const FeatureMap& fm = *features_;
  return fm.scale * beta_.dot((fm.W * x + fm.b).array().cos().matrix());
}

Eigen::VectorXd SamplePath::gradient(const Eigen::VectorXd& x) const {
  const FeatureMap& fm = *features_;
  const Eigen::VectorXd s = (fm.W * x + fm.b).array().sin().matrix();
  return -fm.scale * (fm.W.transpose() * beta_.cwiseProduct(s));
}

double SamplePath::value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  const FeatureMap& fm = *features_;
  const Eigen::ArrayXd z = (fm.W * x + fm.b).array();
  grad = -fm.scale * (fm.W.transpose() * (beta_.array() * z.sin()).matrix());
  return fm.scale * beta_.dot(z.cos().matrix());
}

Eigen::VectorXd SamplePath::values(const Eigen::MatrixXd& points) const {
  const Eigen::Index n = points.rows();
  Eigen::VectorXd out(n);
#pragma omp parallel for schedule(static) if (n >= 16)
  for (Eigen::Index i = 0; i < n; ++i) out[i] = value(points.row(i).transpose());
  return out;
}

SamplePath draw_path(std::shared_ptr<const FeatureMap> fm, const WeightPosterior& posterior, Rng& rng) {
  const Eigen::Index p = posterior.mean.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(p);
  for (Eigen::Index j = 0; j < p; ++j) z[j] = normal(rng);
  posterior.chol_lower.triangularView<Eigen::Lower>().transpose().solveInPlace(z);
  return SamplePath(std::move(fm), posterior.mean + posterior.noise_sd * z);
}

SamplePath average_paths(const std::vector<SamplePath>& paths) {
  if (paths.empty()) throw std::invalid_argument("cannot average zero paths");
  Eigen::VectorXd beta = paths.front().beta();
  for (std::size_t s = 1; s < paths.size(); ++s) {
    if (paths[s].features_ptr() != paths.front().features_ptr()) {
      throw std::invalid_argument("averaged paths must share one feature map");
    }
    beta += paths[s].beta();
  }
  beta /= static_cast<double>(paths.size());
  return SamplePath(paths.front().features_ptr(), std::move(beta));
}

SamplePath mean_path(std::shared_ptr<const FeatureMap> fm, const WeightPosterior& posterior) {
  return SamplePath(std::move(fm), posterior.mean);
}

}  // namespace epsts
