#pragma once

#include <Eigen/Dense>

#include "epsts/kernels.hpp"
#include "epsts/rff_sampler.hpp"

// Single-threaded versions of the parallel hot loops. They perform the same
// per-element arithmetic, so results must match the parallel code exactly;
// tests and the benchmark target compare the two.
namespace epsts::reference {

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X);
Eigen::MatrixXd feature_matrix(const FeatureMap& fm, const Eigen::MatrixXd& X);
Eigen::VectorXd path_values(const SamplePath& path, const Eigen::MatrixXd& points);

// Phi^T Phi by explicit triple loop (agrees with the blocked product up to rounding).
Eigen::MatrixXd feature_gram(const Eigen::MatrixXd& Phi);

}  // namespace epsts::reference
