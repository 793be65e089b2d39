#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epsts/box.hpp"
#include "epsts/random.hpp"

namespace epsts {

using Evaluator = std::function<double(const Eigen::VectorXd&)>;

struct ObjectiveSpec {
  std::string name;
  Eigen::Index d = 0;
  Box box;
  std::optional<double> f_star;
  Evaluator evaluator;
  // Suggested budgets for experiments on this objective.
  int default_init = 0;
  int default_iters = 0;
};

struct NoiseSpec {
  double noise_sd = 0.0;  // in standardized output units
};

// Ackley with a = 20, b = 0.2, c = 2 pi on [-10, 10]^2. Minimum 0 at the origin.
double ackley2(const Eigen::VectorXd& x);
// Rosenbrock on [-5, 10]^6. Minimum 0 at (1, ..., 1).
double rosenbrock6(const Eigen::VectorXd& x);
// x sin(x) on [0, 20]; the one-dimensional illustration problem.
double xsinx(const Eigen::VectorXd& x);

ObjectiveSpec make_ackley2();
ObjectiveSpec make_rosenbrock6();
ObjectiveSpec make_xsinx();

std::vector<std::string> benchmark_names();
// Throws std::invalid_argument for unknown names.
ObjectiveSpec find_benchmark(const std::string& name);

// Random Latin hypercube: along every axis the n coordinates fall one per
// equal-width stratum, uniformly within the stratum, with an independent
// permutation per axis.
Eigen::MatrixXd lhs_design(Eigen::Index d, Eigen::Index n, const Box& box, Rng& rng);

// f(x) plus N(0, (noise.noise_sd * output_scale)^2). `output_scale` converts
// standardized noise to problem units. No random draw is consumed when the
// noise SD is zero.
double observe(const ObjectiveSpec& spec, const NoiseSpec& noise, const Eigen::VectorXd& x, Rng& rng,
               double output_scale = 1.0);

}  // namespace epsts
