#include "epsts/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace epsts {
namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.2360679774997897;

// Squared distance with each axis divided by its lengthscale.
double scaled_sq_dist(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& x2) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double t = (x[i] - x2[i]) / spec.lengthscale(i);
    acc += t * t;
  }
  return acc;
}

double eval_unchecked(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& x2) {
  const double rho2 = scaled_sq_dist(spec, x, x2);
  const double var = spec.variance();
  switch (spec.family()) {
    case KernelFamily::SE:
    case KernelFamily::ArdSE:
      return var * std::exp(-0.5 * rho2);
    case KernelFamily::Matern32: {
      const double a = kSqrt3 * std::sqrt(rho2);
      return var * (1.0 + a) * std::exp(-a);
    }
    case KernelFamily::Matern52: {
      const double a = kSqrt5 * std::sqrt(rho2);
      return var * (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

void check_pair(const KernelSpec& spec, Eigen::Index a, Eigen::Index b) {
  if (a != b) {
    throw std::invalid_argument("kernel inputs have mismatched dimensions " + std::to_string(a) + " and " +
                                std::to_string(b));
  }
  spec.check_dim(a);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::SE: return "se";
    case KernelFamily::ArdSE: return "ard-se";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  const std::string n = lower(name);
  if (n == "se") return KernelFamily::SE;
  if (n == "ard-se" || n == "ardse" || n == "ard_se") return KernelFamily::ArdSE;
  if (n == "matern32") return KernelFamily::Matern32;
  if (n == "matern52") return KernelFamily::Matern52;
  throw std::invalid_argument("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec::KernelSpec(KernelFamily family, double amplitude, Eigen::VectorXd lengthscales)
    : family_(family), amplitude_(amplitude), lengthscales_(std::move(lengthscales)) {
  if (!(amplitude_ > 0.0) || !std::isfinite(amplitude_)) {
    throw std::invalid_argument("kernel amplitude must be positive and finite");
  }
  if (lengthscales_.size() < 1) throw std::invalid_argument("kernel needs at least one lengthscale");
  if (family_ != KernelFamily::ArdSE && lengthscales_.size() != 1) {
    throw std::invalid_argument("isotropic kernel families take exactly one lengthscale");
  }
  for (Eigen::Index i = 0; i < lengthscales_.size(); ++i) {
    if (!(lengthscales_[i] > 0.0) || !std::isfinite(lengthscales_[i])) {
      throw std::invalid_argument("kernel lengthscales must be positive and finite");
    }
  }
}

KernelSpec KernelSpec::isotropic(KernelFamily family, double amplitude, double lengthscale) {
  return KernelSpec(family, amplitude, Eigen::VectorXd::Constant(1, lengthscale));
}

KernelSpec KernelSpec::from_log_params(KernelFamily family, const Eigen::VectorXd& log_params) {
  if (log_params.size() < 2) throw std::invalid_argument("log parameter vector too short");
  return KernelSpec(family, std::exp(log_params[0]), log_params.tail(log_params.size() - 1).array().exp());
}

Eigen::VectorXd KernelSpec::log_params() const {
  Eigen::VectorXd p(num_params());
  p[0] = std::log(amplitude_);
  p.tail(lengthscales_.size()) = lengthscales_.array().log();
  return p;
}

bool KernelSpec::accepts_dim(Eigen::Index d) const {
  if (d < 1) return false;
  return family_ != KernelFamily::ArdSE || lengthscales_.size() == d;
}

void KernelSpec::check_dim(Eigen::Index d) const {
  if (!accepts_dim(d)) {
    throw std::invalid_argument("input dimension " + std::to_string(d) + " incompatible with " +
                                std::string(to_string(family_)) + " kernel carrying " +
                                std::to_string(lengthscales_.size()) + " lengthscale(s)");
  }
}

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2) {
  check_pair(spec, x.size(), x2.size());
  return eval_unchecked(spec, x, x2);
}

Eigen::VectorXd kernel_grad_x(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& x2) {
  check_pair(spec, x.size(), x2.size());
  const Eigen::Index d = x.size();
  const double rho2 = scaled_sq_dist(spec, x, x2);
  const double var = spec.variance();
  Eigen::VectorXd g(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double l = spec.lengthscale(i);
    const double delta = x[i] - x2[i];
    switch (spec.family()) {
      case KernelFamily::SE:
      case KernelFamily::ArdSE:
        g[i] = -var * std::exp(-0.5 * rho2) * delta / (l * l);
        break;
      case KernelFamily::Matern32: {
        const double a = kSqrt3 * std::sqrt(rho2);
        g[i] = -var * 3.0 / (l * l) * std::exp(-a) * delta;
        break;
      }
      case KernelFamily::Matern52: {
        const double a = kSqrt5 * std::sqrt(rho2);
        g[i] = -var * 5.0 / (3.0 * l * l) * (1.0 + a) * std::exp(-a) * delta;
        break;
      }
    }
  }
  return g;
}

Eigen::VectorXd kernel_grad_log_params(const KernelSpec& spec,
                                       const Eigen::Ref<const Eigen::VectorXd>& x,
                                       const Eigen::Ref<const Eigen::VectorXd>& x2) {
  check_pair(spec, x.size(), x2.size());
  const double rho2 = scaled_sq_dist(spec, x, x2);
  const double var = spec.variance();
  Eigen::VectorXd g(spec.num_params());
  switch (spec.family()) {
    case KernelFamily::SE: {
      const double k = var * std::exp(-0.5 * rho2);
      g[0] = 2.0 * k;
      g[1] = k * rho2;
      break;
    }
    case KernelFamily::ArdSE: {
      const double k = var * std::exp(-0.5 * rho2);
      g[0] = 2.0 * k;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double t = (x[i] - x2[i]) / spec.lengthscale(i);
        g[1 + i] = k * t * t;
      }
      break;
    }
    case KernelFamily::Matern32: {
      const double a = kSqrt3 * std::sqrt(rho2);
      const double e = std::exp(-a);
      g[0] = 2.0 * var * (1.0 + a) * e;
      g[1] = var * a * a * e;
      break;
    }
    case KernelFamily::Matern52: {
      const double a = kSqrt5 * std::sqrt(rho2);
      const double e = std::exp(-a);
      g[0] = 2.0 * var * (1.0 + a + a * a / 3.0) * e;
      g[1] = var * (a * a / 3.0) * (1.0 + a) * e;
      break;
    }
  }
  return g;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::Index n = X.rows();
  if (n < 1) throw std::invalid_argument("gram_matrix needs at least one point");
  spec.check_dim(X.cols());
  Eigen::MatrixXd K(n, n);
  const Eigen::MatrixXd Xt = X.transpose();  // column access per point
#pragma omp parallel for schedule(dynamic, 8) if (n >= 64)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = eval_unchecked(spec, Xt.col(i), Xt.col(j));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Eigen::VectorXd cross_covariance(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::MatrixXd>& X) {
  check_pair(spec, x.size(), X.cols());
  Eigen::VectorXd k(X.rows());
  Eigen::VectorXd row(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    row = X.row(i).transpose();
    k[i] = eval_unchecked(spec, x, row);
  }
  return k;
}

double tabulated_spectral_density(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& s) {
  const Eigen::Index d = s.size();
  spec.check_dim(d);
  const double dd = static_cast<double>(d);
  const double var = spec.variance();
  const double pi = std::numbers::pi;
  switch (spec.family()) {
    case KernelFamily::SE:
    case KernelFamily::ArdSE: {
      double prod_l = 1.0;
      double quad = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double l = spec.lengthscale(i);
        prod_l *= l;
        quad += l * l * s[i] * s[i];
      }
      return var * std::pow(std::sqrt(2.0 * pi), dd) * prod_l * std::exp(-0.5 * quad);
    }
    case KernelFamily::Matern32: {
      const double l = spec.lengthscale(0);
      const double c = std::pow(2.0, dd) * std::pow(pi, dd / 2.0) * std::tgamma((dd + 3.0) / 2.0) *
                       std::pow(3.0, 1.5) / (0.5 * std::sqrt(pi) * std::pow(l, 3.0));
      return var * c * std::pow(3.0 / (l * l) + s.squaredNorm(), -(dd + 3.0) / 2.0);
    }
    case KernelFamily::Matern52: {
      const double l = spec.lengthscale(0);
      const double c = std::pow(2.0, dd) * std::pow(pi, dd / 2.0) * std::tgamma((dd + 5.0) / 2.0) *
                       std::pow(5.0, 2.5) / (0.75 * std::sqrt(pi) * std::pow(l, 5.0));
      return var * c * std::pow(5.0 / (l * l) + s.squaredNorm(), -(dd + 5.0) / 2.0);
    }
  }
  return 0.0;
}

double spectral_density(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& s) {
  const double two_pi_d = std::pow(2.0 * std::numbers::pi, static_cast<double>(s.size()));
  return tabulated_spectral_density(spec, s) / (two_pi_d * spec.variance());
}

Eigen::MatrixXd sample_spectral_points(const KernelSpec& spec, Eigen::Index d, Eigen::Index n_points,
                                       Rng& rng) {
  if (n_points < 1) throw std::invalid_argument("n_points must be at least 1");
  spec.check_dim(d);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd W(n_points, d);

  double nu = 0.0;
  if (spec.family() == KernelFamily::Matern32) nu = 3.0;
  if (spec.family() == KernelFamily::Matern52) nu = 5.0;

  if (nu == 0.0) {
    for (Eigen::Index j = 0; j < n_points; ++j) {
      for (Eigen::Index i = 0; i < d; ++i) W(j, i) = normal(rng) / spec.lengthscale(i);
    }
    return W;
  }

  // Multivariate t: one chi-square mixing draw shared by the whole row.
  std::chi_squared_distribution<double> chi2(nu);
  for (Eigen::Index j = 0; j < n_points; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) W(j, i) = normal(rng);
    const double mix = std::sqrt(chi2(rng) / nu);
    for (Eigen::Index i = 0; i < d; ++i) W(j, i) /= mix * spec.lengthscale(i);
  }
  return W;
}

}  // namespace epsts
