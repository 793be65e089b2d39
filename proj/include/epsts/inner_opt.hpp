#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace epsts {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
// Returns f(x) and writes the gradient into `grad` (already sized to x).
using ValueGradFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd& grad)>;

/// Budgets for the DIRECT global stage. Defaults scale with dimension:
/// fun_tolerance 1e-9, max_evals 1e3 d, max_iters 1e4 d, max_rect_divisions 1e4 d.
///
/// `fun_tolerance` stops the search once every sampled center lies within
/// that distance of the incumbent value (a flat surface).
/// `epsilon` is the relative improvement required of potentially optimal
/// rectangles. With `parallel_batch` the centers created in one iteration are
/// evaluated concurrently; the objective must then be safe to call from
/// several threads.
struct DirectConfig {
  double fun_tolerance = 1e-9;
  long max_evals = 1000;
  long max_iters = 10000;
  long max_rect_divisions = 10000;
  double epsilon = 1e-4;
  bool parallel_batch = true;

  static DirectConfig for_dim(Eigen::Index d);
  void validate() const;
};

/// Termination settings for the bounded quasi-Newton refinement.
struct LocalConfig {
  double fun_tolerance = 1e-12;
  double step_tolerance = 1e-12;
  double optimality_tolerance = 1e-12;
  long max_iters = 200;
  long max_evals = 5000;

  void validate() const;
};

struct InnerConfig {
  DirectConfig direct;
  LocalConfig local;

  static InnerConfig for_dim(Eigen::Index d) { return {DirectConfig::for_dim(d), LocalConfig{}}; }
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  long evals = 0;
  long iters = 0;
  std::string stop_reason;
};

// DIRECT (dividing rectangles) over the unit cube [0, 1]^d.
MinimizeResult direct_minimize(const ScalarFn& objective, Eigen::Index d, const DirectConfig& cfg);

// Projected BFGS with an Armijo backtracking search, restricted to [0, 1]^d.
MinimizeResult local_refine(const ValueGradFn& objective, const Eigen::VectorXd& x0, const LocalConfig& cfg);
MinimizeResult local_refine(const ScalarFn& objective, const GradientFn& gradient, const Eigen::VectorXd& x0,
                            const LocalConfig& cfg);

// DIRECT, then local refinement from DIRECT's incumbent when `value_grad`
// is non-empty. Returns whichever stage found the lower value.
MinimizeResult minimize_acquisition(const ScalarFn& objective, const ValueGradFn& value_grad, Eigen::Index d,
                                    const InnerConfig& cfg);

}  // namespace epsts
