#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace epsts {

// Axis-aligned search box [lo, hi] with lo < hi componentwise.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd lower, Eigen::VectorXd upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (lo.size() != hi.size() || lo.size() < 1) throw std::invalid_argument("box bounds must have equal, nonzero size");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || !(lo[i] < hi[i])) {
        throw std::invalid_argument("box bounds must be finite with lo < hi");
      }
    }
  }

  static Box uniform(Eigen::Index d, double lower, double upper) {
    return Box(Eigen::VectorXd::Constant(d, lower), Eigen::VectorXd::Constant(d, upper));
  }
  static Box unit(Eigen::Index d) { return uniform(d, 0.0, 1.0); }

  Eigen::Index dim() const { return lo.size(); }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    }
    return true;
  }

  Eigen::VectorXd clamp(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }
};

}  // namespace epsts
