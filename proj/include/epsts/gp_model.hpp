#pragma once

#include <vector>

#include <Eigen/Dense>

#include "epsts/box.hpp"
#include "epsts/inner_opt.hpp"
#include "epsts/kernels.hpp"
#include "epsts/random.hpp"

namespace epsts {

/// Observations in problem units. Rows of X must lie in the box and be
/// pairwise farther apart than kDuplicateTolerance.
class Dataset {
 public:
  static constexpr double kDuplicateTolerance = 1e-10;

  Dataset(Box box, Eigen::MatrixXd X, Eigen::VectorXd y);

  void append(const Eigen::VectorXd& x, double y);

  const Box& box() const { return box_; }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  Eigen::Index size() const { return X_.rows(); }
  Eigen::Index dim() const { return X_.cols(); }

  // Smallest Euclidean distance from x to any row.
  double min_distance(const Eigen::VectorXd& x) const;

 private:
  void check_point(const Eigen::VectorXd& x, Eigen::Index skip_from) const;

  Box box_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
};

/// Affine maps between problem units and the model's working space:
/// inputs to the unit cube, outputs to z-scores.
struct Standardizer {
  double y_mean = 0.0;
  double y_std = 1.0;
  Eigen::VectorXd input_lo;
  Eigen::VectorXd input_hi;

  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
  Eigen::VectorXd to_raw(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd rows_to_unit(const Eigen::MatrixXd& X) const;
  double standardize(double y) const { return (y - y_mean) / y_std; }
  Eigen::VectorXd standardize(const Eigen::VectorXd& y) const;
  double unstandardize(double z) const { return z * y_std + y_mean; }
};

// Population mean/SD of raw_y (SD replaced by 1 below 1e-12) plus the box map.
Standardizer fit_standardizer(const Eigen::VectorXd& raw_y, const Box& box);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  double raw_variance = 0.0;  // before clamping to [0, k(0)]
};

struct PredictionWithGradient {
  double mean = 0.0;
  double variance = 0.0;
  Eigen::VectorXd mean_grad;
  Eigen::VectorXd variance_grad;  // zero wherever the variance is clamped
};

/// Exact GP posterior in standardized space. Immutable once built; all
/// queries are const and safe to call concurrently.
class GpPosterior {
 public:
  // Conditions the zero-mean prior on (X, y). On factorization failure a
  // diagonal jitter of 1e-10 k(0) is added and escalated x10 up to 1e-4 k(0)
  // before throwing ModelFitError.
  GpPosterior(Eigen::MatrixXd X, Eigen::VectorXd y, KernelSpec kernel, double noise_sd,
              Standardizer standardizer = {});

  Prediction predict(const Eigen::VectorXd& x) const;
  PredictionWithGradient predict_with_gradient(const Eigen::VectorXd& x) const;

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  const KernelSpec& kernel() const { return kernel_; }
  double noise_sd() const { return noise_sd_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& chol_lower() const { return chol_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Standardizer& standardizer() const { return standardizer_; }
  Eigen::Index dim() const { return X_.cols(); }
  Eigen::Index size() const { return X_.rows(); }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  KernelSpec kernel_;
  double noise_sd_;
  Standardizer standardizer_;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
};

// Log evidence -1/2 y^T C^-1 y - 1/2 log|C| - N/2 log 2pi with
// C = K + noise_sd^2 I. No jitter: throws ModelFitError if C is not
// positive definite.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& kernel,
                               double noise_sd);

struct TrainingOptions {
  int n_starts = 8;
  double amplitude_lo = 1e-2;
  double amplitude_hi = 1e2;
  double lengthscale_lo = 1e-2;
  double lengthscale_hi = 1e1;
  LocalConfig local{1e-10, 1e-10, 1e-7, 100, 1000};
  bool parallel_starts = true;
};

struct TrainingResult {
  KernelSpec kernel;
  double log_likelihood;
  std::vector<double> start_log_likelihood;  // at each initial guess
  std::vector<double> final_log_likelihood;  // after each local run
};

// Multi-start bounded maximization of the log marginal likelihood over
// log amplitude and log lengthscales. Initial guesses are log-uniform in the
// option ranges and drawn from `rng` in a fixed order.
TrainingResult train_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelFamily family,
                                     double noise_sd, Rng& rng, const TrainingOptions& opts = {});

// Standardizes the dataset, trains hyperparameters and returns the posterior.
// Needs at least two observations.
GpPosterior fit_gp(const Dataset& data, KernelFamily family, double noise_sd, Rng& rng,
                   const TrainingOptions& opts = {});

}  // namespace epsts
