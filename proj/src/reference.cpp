#include "epsts/reference.hpp"

#include <cmath>

namespace epsts::reference {

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X.row(i).transpose();
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(spec, xi, X.row(j).transpose());
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Eigen::MatrixXd feature_matrix(const FeatureMap& fm, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Phi(X.rows(), fm.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < fm.size(); ++j) {
      double z = fm.b[j];
      for (Eigen::Index k = 0; k < fm.dim(); ++k) z += fm.W(j, k) * X(i, k);
      Phi(i, j) = fm.scale * std::cos(z);
    }
  }
  return Phi;
}

Eigen::VectorXd path_values(const SamplePath& path, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out[i] = path.value(points.row(i).transpose());
  return out;
}

Eigen::MatrixXd feature_gram(const Eigen::MatrixXd& Phi) {
  const Eigen::Index p = Phi.cols();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < Phi.rows(); ++i) s += Phi(i, a) * Phi(i, b);
      A(a, b) = s;
      A(b, a) = s;
    }
  }
  return A;
}

}  // namespace epsts::reference
