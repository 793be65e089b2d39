#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "epsts/random.hpp"

namespace epsts {

enum class KernelFamily { SE, ArdSE, Matern32, Matern52 };

std::string_view to_string(KernelFamily f);
// Accepts "se", "ard-se", "matern32", "matern52" (case-insensitive).
KernelFamily parse_kernel_family(std::string_view name);

/// Stationary covariance function with its hyperparameters.
///
/// `amplitude` is the output scale sigma_f, so k(x, x) = amplitude^2.
/// Isotropic families carry one lengthscale; ARD-SE carries one per input
/// dimension. Instances are immutable and validated on construction.
class KernelSpec {
 public:
  KernelSpec(KernelFamily family, double amplitude, Eigen::VectorXd lengthscales);

  static KernelSpec isotropic(KernelFamily family, double amplitude, double lengthscale);

  // Parameters as [log amplitude, log l_1, ..., log l_m].
  static KernelSpec from_log_params(KernelFamily family, const Eigen::VectorXd& log_params);
  Eigen::VectorXd log_params() const;
  Eigen::Index num_params() const { return 1 + lengthscales_.size(); }

  KernelFamily family() const { return family_; }
  double amplitude() const { return amplitude_; }
  double variance() const { return amplitude_ * amplitude_; }
  const Eigen::VectorXd& lengthscales() const { return lengthscales_; }
  double lengthscale(Eigen::Index axis) const {
    return lengthscales_.size() == 1 ? lengthscales_[0] : lengthscales_[axis];
  }

  // ARD-SE fixes the input dimension; isotropic families accept any d >= 1.
  bool accepts_dim(Eigen::Index d) const;
  void check_dim(Eigen::Index d) const;

 private:
  KernelFamily family_;
  double amplitude_;
  Eigen::VectorXd lengthscales_;
};

// k(x, x2). Throws std::invalid_argument on dimension mismatch.
double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2);

// Gradient of k(x, x2) with respect to x.
Eigen::VectorXd kernel_grad_x(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& x2);

// Derivatives of k(x, x2) with respect to each entry of log_params().
Eigen::VectorXd kernel_grad_log_params(const KernelSpec& spec,
                                       const Eigen::Ref<const Eigen::VectorXd>& x,
                                       const Eigen::Ref<const Eigen::VectorXd>& x2);

// Gram matrix over the rows of X (N x d). Rows are filled in parallel.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X);

// k(x, X_i) for every row of X.
Eigen::VectorXd cross_covariance(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X);

// The spectral density S(s) exactly as tabulated for each family, i.e. the
// Fourier transform of k under the convention k(r) = (2 pi)^-d int S(s) e^{i s.r} ds.
double tabulated_spectral_density(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& s);

// Probability density of the random-feature frequencies: S(s) / ((2 pi)^d k(0)).
// Integrates to one and satisfies int cos(s.r) p(s) ds = k(r) / k(0).
double spectral_density(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& s);

// n_points i.i.d. rows from spectral_density: Gaussian with per-axis SD 1/l
// for the SE families, multivariate Student-t (nu = 3 or 5, scale 1/l) for
// the Matern families.
Eigen::MatrixXd sample_spectral_points(const KernelSpec& spec, Eigen::Index d, Eigen::Index n_points,
                                       Rng& rng);

}  // namespace epsts
