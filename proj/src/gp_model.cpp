#include "epsts/gp_model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "epsts/errors.hpp"

namespace epsts {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

// Cholesky of K + noise_var I, escalating a diagonal jitter on failure.
std::optional<Factorization> factorize(const Eigen::MatrixXd& K, double noise_var, double k0, bool allow_jitter) {
  Eigen::MatrixXd C = K;
  C.diagonal().array() += noise_var;
  Factorization out;
  out.llt.compute(C);
  if (out.llt.info() == Eigen::Success) return out;
  if (!allow_jitter) return std::nullopt;
  for (double rel = 1e-10; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) {
    Eigen::MatrixXd Cj = C;
    Cj.diagonal().array() += rel * k0;
    out.llt.compute(Cj);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = rel * k0;
      return out;
    }
  }
  return std::nullopt;
}

void check_xy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() < 1) throw std::invalid_argument("need at least one observation");
  if (X.rows() != y.size()) throw std::invalid_argument("X and y row counts differ");
}

struct LmlValue {
  double value;
  Eigen::VectorXd grad;  // w.r.t. log parameters
};

std::optional<LmlValue> lml_with_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                          const KernelSpec& kernel, double noise_sd) {
  const Eigen::Index n = X.rows();
  const Eigen::MatrixXd K = gram_matrix(kernel, X);
  auto fac = factorize(K, noise_sd * noise_sd, kernel.variance(), true);
  if (!fac) return std::nullopt;
  const Eigen::VectorXd alpha = fac->llt.solve(y);
  const Eigen::MatrixXd L = fac->llt.matrixL();
  const double value = -0.5 * y.dot(alpha) - L.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;

  // d/dp = 1/2 tr((alpha alpha^T - C^-1) dK/dp); per-row partials are summed
  // serially so the result does not depend on the thread count.
  const Eigen::MatrixXd Q = alpha * alpha.transpose() - fac->llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::Index p = kernel.num_params();
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(p, n);
  const Eigen::MatrixXd Xt = X.transpose();
#pragma omp parallel for schedule(dynamic, 8) if (n >= 64)
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < i; ++j) {
      acc += 2.0 * Q(i, j) * kernel_grad_log_params(kernel, Xt.col(i), Xt.col(j));
    }
    acc += Q(i, i) * kernel_grad_log_params(kernel, Xt.col(i), Xt.col(i));
    partial.col(i) = acc;
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) grad += partial.col(i);
  return LmlValue{value, 0.5 * grad};
}

}  // namespace

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(Box box, Eigen::MatrixXd X, Eigen::VectorXd y)
    : box_(std::move(box)), X_(std::move(X)), y_(std::move(y)) {
  check_xy(X_, y_);
  if (X_.cols() != box_.dim()) throw std::invalid_argument("dataset dimension does not match its box");
  for (Eigen::Index i = 0; i < X_.rows(); ++i) check_point(X_.row(i).transpose(), i);
  if (!y_.allFinite()) throw std::invalid_argument("observations must be finite");
}

double Dataset::min_distance(const Eigen::VectorXd& x) const {
  return (X_.rowwise() - x.transpose()).rowwise().norm().minCoeff();
}

void Dataset::check_point(const Eigen::VectorXd& x, Eigen::Index skip_from) const {
  if (!box_.contains(x)) throw std::invalid_argument("observation lies outside the search box");
  for (Eigen::Index j = 0; j < skip_from; ++j) {
    if ((X_.row(j).transpose() - x).norm() <= kDuplicateTolerance) {
      throw std::invalid_argument("duplicate input row " + std::to_string(skip_from) + " (matches row " +
                                  std::to_string(j) + ")");
    }
  }
}

void Dataset::append(const Eigen::VectorXd& x, double y) {
  if (x.size() != dim()) throw std::invalid_argument("appended point has wrong dimension");
  if (!std::isfinite(y)) throw std::invalid_argument("observation must be finite");
  check_point(x, size());
  X_.conservativeResize(size() + 1, Eigen::NoChange);
  X_.row(size() - 1) = x.transpose();
  y_.conservativeResize(y_.size() + 1);
  y_[y_.size() - 1] = y;
}

// ----------------------------------------------------------- Standardizer

Eigen::VectorXd Standardizer::to_unit(const Eigen::VectorXd& x) const {
  return ((x - input_lo).array() / (input_hi - input_lo).array()).matrix();
}

Eigen::VectorXd Standardizer::to_raw(const Eigen::VectorXd& u) const {
  Eigen::VectorXd x = (input_lo.array() + u.array() * (input_hi - input_lo).array()).matrix();
  return x.cwiseMax(input_lo).cwiseMin(input_hi);
}

Eigen::MatrixXd Standardizer::rows_to_unit(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd U(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) U.row(i) = to_unit(X.row(i).transpose()).transpose();
  return U;
}

Eigen::VectorXd Standardizer::standardize(const Eigen::VectorXd& y) const {
  return ((y.array() - y_mean) / y_std).matrix();
}

Standardizer fit_standardizer(const Eigen::VectorXd& raw_y, const Box& box) {
  if (raw_y.size() < 1) throw std::invalid_argument("cannot standardize an empty observation vector");
  Standardizer s;
  s.y_mean = raw_y.mean();
  const double sd = std::sqrt((raw_y.array() - s.y_mean).square().mean());
  s.y_std = sd < 1e-12 ? 1.0 : sd;
  s.input_lo = box.lo;
  s.input_hi = box.hi;
  return s;
}

// ----------------------------------------------------------- GpPosterior

GpPosterior::GpPosterior(Eigen::MatrixXd X, Eigen::VectorXd y, KernelSpec kernel, double noise_sd,
                         Standardizer standardizer)
    : X_(std::move(X)),
      y_(std::move(y)),
      kernel_(std::move(kernel)),
      noise_sd_(noise_sd),
      standardizer_(std::move(standardizer)) {
  check_xy(X_, y_);
  kernel_.check_dim(X_.cols());
  if (!(noise_sd_ >= 0.0)) throw std::invalid_argument("noise_sd must be non-negative");
  const Eigen::MatrixXd K = gram_matrix(kernel_, X_);
  auto fac = factorize(K, noise_sd_ * noise_sd_, kernel_.variance(), true);
  if (!fac) {
    throw ModelFitError("covariance matrix is not positive definite even with jitter 1e-4 k(0); N = " +
                        std::to_string(X_.rows()) + ", check for near-duplicate inputs or extreme hyperparameters");
  }
  jitter_ = fac->jitter;
  chol_ = fac->llt.matrixL();
  alpha_ = fac->llt.solve(y_);
  if (standardizer_.input_lo.size() == 0) {
    standardizer_.input_lo = Eigen::VectorXd::Zero(X_.cols());
    standardizer_.input_hi = Eigen::VectorXd::Ones(X_.cols());
  }
}

Prediction GpPosterior::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd k_star = cross_covariance(kernel_, x, X_);
  const double k0 = kernel_.variance();
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k_star);
  Prediction p;
  p.mean = k_star.dot(alpha_);
  p.raw_variance = k0 - v.squaredNorm();
  p.variance = std::clamp(p.raw_variance, 0.0, k0);
  return p;
}

PredictionWithGradient GpPosterior::predict_with_gradient(const Eigen::VectorXd& x) const {
  const Eigen::Index n = X_.rows();
  const Eigen::Index d = X_.cols();
  const Eigen::VectorXd k_star = cross_covariance(kernel_, x, X_);
  Eigen::MatrixXd J(n, d);  // d k_star / d x
  for (Eigen::Index i = 0; i < n; ++i) J.row(i) = kernel_grad_x(kernel_, x, X_.row(i).transpose()).transpose();

  const auto L = chol_.triangularView<Eigen::Lower>();
  const Eigen::VectorXd v = L.solve(k_star);
  const Eigen::VectorXd c_inv_k = L.transpose().solve(v);
  const double k0 = kernel_.variance();

  PredictionWithGradient p;
  p.mean = k_star.dot(alpha_);
  p.mean_grad = J.transpose() * alpha_;
  const double raw = k0 - v.squaredNorm();
  p.variance = std::clamp(raw, 0.0, k0);
  p.variance_grad = (raw > 0.0 && raw < k0) ? Eigen::VectorXd(-2.0 * J.transpose() * c_inv_k)
                                            : Eigen::VectorXd::Zero(d);
  return p;
}

// ------------------------------------------------------------- training

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelSpec& kernel,
                               double noise_sd) {
  check_xy(X, y);
  const Eigen::MatrixXd K = gram_matrix(kernel, X);
  auto fac = factorize(K, noise_sd * noise_sd, kernel.variance(), false);
  if (!fac) throw ModelFitError("covariance matrix is not positive definite");
  const Eigen::VectorXd alpha = fac->llt.solve(y);
  const Eigen::MatrixXd L = fac->llt.matrixL();
  return -0.5 * y.dot(alpha) - L.diagonal().array().log().sum() - 0.5 * static_cast<double>(X.rows()) * kLog2Pi;
}

TrainingResult train_hyperparameters(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, KernelFamily family,
                                     double noise_sd, Rng& rng, const TrainingOptions& opts) {
  check_xy(X, y);
  if (opts.n_starts < 1) throw std::invalid_argument("n_starts must be at least 1");
  const Eigen::Index d = X.cols();
  const Eigen::Index n_len = family == KernelFamily::ArdSE ? d : 1;
  const Eigen::Index p = 1 + n_len;

  // Optimization runs on the unit cube; u maps affinely onto the log ranges.
  Eigen::VectorXd log_lo(p), log_span(p);
  log_lo[0] = std::log(opts.amplitude_lo);
  log_span[0] = std::log(opts.amplitude_hi) - log_lo[0];
  for (Eigen::Index i = 1; i < p; ++i) {
    log_lo[i] = std::log(opts.lengthscale_lo);
    log_span[i] = std::log(opts.lengthscale_hi) - log_lo[i];
  }
  auto to_kernel = [&](const Eigen::VectorXd& u) {
    return KernelSpec::from_log_params(family, (log_lo.array() + u.array() * log_span.array()).matrix());
  };
  constexpr double kPenalty = 1e100;
  ValueGradFn neg_lml = [&](const Eigen::VectorXd& u, Eigen::VectorXd& g) {
    auto r = lml_with_gradient(X, y, to_kernel(u), noise_sd);
    if (!r) {
      g.setZero();
      return kPenalty;
    }
    g = -(r->grad.array() * log_span.array()).matrix();
    return -r->value;
  };

  std::vector<Eigen::VectorXd> starts;
  for (int s = 0; s < opts.n_starts; ++s) {
    Eigen::VectorXd u(p);
    for (Eigen::Index i = 0; i < p; ++i) u[i] = uniform01(rng);
    starts.push_back(u);
  }

  const int n_starts = opts.n_starts;
  std::vector<MinimizeResult> results(static_cast<std::size_t>(n_starts));
  std::vector<double> start_values(static_cast<std::size_t>(n_starts));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_starts));
#pragma omp parallel for schedule(dynamic, 1) if (opts.parallel_starts)
  for (int s = 0; s < n_starts; ++s) {
    try {
      Eigen::VectorXd g(p);
      start_values[s] = neg_lml(starts[s], g);
      results[s] = local_refine(neg_lml, starts[s], opts.local);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  int best = 0;
  for (int s = 1; s < n_starts; ++s) {
    if (results[s].f < results[best].f) best = s;
  }
  if (results[best].f >= kPenalty) {
    throw ModelFitError("no hyperparameter start produced a factorizable covariance matrix");
  }
  TrainingResult out{to_kernel(results[best].x), -results[best].f, {}, {}};
  for (int s = 0; s < n_starts; ++s) {
    out.start_log_likelihood.push_back(-start_values[s]);
    out.final_log_likelihood.push_back(-results[s].f);
  }
  return out;
}

GpPosterior fit_gp(const Dataset& data, KernelFamily family, double noise_sd, Rng& rng, const TrainingOptions& opts) {
  if (data.size() < 2) throw std::invalid_argument("fit_gp needs at least two observations");
  if (!(noise_sd > 0.0)) throw std::invalid_argument("noise_sd must be positive");
  Standardizer st = fit_standardizer(data.y(), data.box());
  Eigen::MatrixXd U = st.rows_to_unit(data.X());
  Eigen::VectorXd z = st.standardize(data.y());
  TrainingResult trained = train_hyperparameters(U, z, family, noise_sd, rng, opts);
  return GpPosterior(std::move(U), std::move(z), std::move(trained.kernel), noise_sd, std::move(st));
}

}  // namespace epsts
