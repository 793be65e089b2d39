#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "epsts/kernels.hpp"
#include "epsts/random.hpp"

namespace epsts {

/// Random cosine features phi(x) = scale * cos(W x + b) with
/// scale = sqrt(2 k(0) / N_p), so that E[phi(x)^T phi(x')] = k(x, x').
struct FeatureMap {
  Eigen::MatrixXd W;  // N_p x d spectral points
  Eigen::VectorXd b;  // N_p phases in [0, 2 pi)
  double scale = 0.0;

  Eigen::Index size() const { return W.rows(); }
  Eigen::Index dim() const { return W.cols(); }
  Eigen::VectorXd features(const Eigen::VectorXd& x) const;
};

FeatureMap build_feature_map(const KernelSpec& kernel, Eigen::Index d, Eigen::Index n_points, Rng& rng);

// Phi with one row phi(x_i)^T per row of X. Rows are computed in parallel.
Eigen::MatrixXd feature_matrix(const FeatureMap& fm, const Eigen::MatrixXd& X);

/// Gaussian posterior over the feature weights given data:
/// mean = A^-1 Phi^T y and covariance noise_sd^2 A^-1, A = Phi^T Phi + noise_sd^2 I.
/// The covariance is kept implicitly through the lower Cholesky factor of A.
struct WeightPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol_lower;
  double noise_sd = 0.0;
  double jitter = 0.0;
};

WeightPosterior weight_posterior(const FeatureMap& fm, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 double noise_sd);

/// One analytic function g(x) = beta^T phi(x). Immutable; evaluation is pure.
class SamplePath {
 public:
  SamplePath(std::shared_ptr<const FeatureMap> features, Eigen::VectorXd beta);

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;
  // Values at every row of `points`, computed in parallel.
  Eigen::VectorXd values(const Eigen::MatrixXd& points) const;

  const Eigen::VectorXd& beta() const { return beta_; }
  const FeatureMap& features() const { return *features_; }
  const std::shared_ptr<const FeatureMap>& features_ptr() const { return features_; }

 private:
  std::shared_ptr<const FeatureMap> features_;
  Eigen::VectorXd beta_;
};

// beta = mean + noise_sd * (L^T)^-1 z with z ~ N(0, I): an exact draw from
// N(mean, noise_sd^2 A^-1).
SamplePath draw_path(std::shared_ptr<const FeatureMap> fm, const WeightPosterior& posterior, Rng& rng);

// Pointwise average of paths sharing one feature map. Because paths are
// linear in their weights this is the path whose weights are the average.
SamplePath average_paths(const std::vector<SamplePath>& paths);

// The path with beta = posterior mean (the N_s -> infinity limit of averaging).
SamplePath mean_path(std::shared_ptr<const FeatureMap> fm, const WeightPosterior& posterior);

}  // namespace epsts
