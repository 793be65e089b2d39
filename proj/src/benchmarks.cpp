#include "epsts/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "epsts/errors.hpp"

namespace epsts {
namespace {

void require_in_box(const Box& box, const Eigen::VectorXd& x, const char* name) {
  if (!box.contains(x)) {
    std::ostringstream os;
    os << name << ": point outside the domain " << x.transpose();
    throw std::invalid_argument(os.str());
  }
}

const Box& ackley_box() {
  static const Box b = Box::uniform(2, -10.0, 10.0);
  return b;
}
const Box& rosenbrock_box() {
  static const Box b = Box::uniform(6, -5.0, 10.0);
  return b;
}
const Box& xsinx_box() {
  static const Box b = Box::uniform(1, 0.0, 20.0);
  return b;
}

}  // namespace

double ackley2(const Eigen::VectorXd& x) {
  require_in_box(ackley_box(), x, "ackley2");
  constexpr double a = 20.0;
  constexpr double b = 0.2;
  constexpr double c = 2.0 * std::numbers::pi;
  const double sq = 0.5 * (x[0] * x[0] + x[1] * x[1]);
  const double cs = 0.5 * (std::cos(c * x[0]) + std::cos(c * x[1]));
  // Grouped as two non-negative terms so the value at the origin is exactly 0.
  return a * (1.0 - std::exp(-b * std::sqrt(sq))) + (std::exp(1.0) - std::exp(cs));
}

double rosenbrock6(const Eigen::VectorXd& x) {
  require_in_box(rosenbrock_box(), x, "rosenbrock6");
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double t = x[i + 1] - x[i] * x[i];
    const double u = x[i] - 1.0;
    acc += 100.0 * t * t + u * u;
  }
  return acc;
}

double xsinx(const Eigen::VectorXd& x) {
  require_in_box(xsinx_box(), x, "xsinx");
  return x[0] * std::sin(x[0]);
}

ObjectiveSpec make_ackley2() { return {"ackley2", 2, ackley_box(), 0.0, ackley2, 10, 50}; }
ObjectiveSpec make_rosenbrock6() { return {"rosenbrock6", 6, rosenbrock_box(), 0.0, rosenbrock6, 60, 200}; }
ObjectiveSpec make_xsinx() { return {"xsinx", 1, xsinx_box(), std::nullopt, xsinx, 10, 20}; }

std::vector<std::string> benchmark_names() { return {"ackley2", "rosenbrock6", "xsinx"}; }

ObjectiveSpec find_benchmark(const std::string& name) {
  if (name == "ackley2") return make_ackley2();
  if (name == "rosenbrock6") return make_rosenbrock6();
  if (name == "xsinx") return make_xsinx();
  throw std::invalid_argument("unknown benchmark objective '" + name + "'");
}

Eigen::MatrixXd lhs_design(Eigen::Index d, Eigen::Index n, const Box& box, Rng& rng) {
  if (n < 1) throw std::invalid_argument("lhs_design needs n >= 1");
  if (box.dim() != d) throw std::invalid_argument("lhs_design box dimension mismatch");
  Eigen::MatrixXd X(n, d);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates from our own uniform draws keeps designs identical across
    // standard library implementations.
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(std::min(j, i))]);
    }
    const double width = (box.hi[k] - box.lo[k]) / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double stratum = static_cast<double>(perm[static_cast<std::size_t>(i)]);
      const double v = box.lo[k] + (stratum + uniform01(rng)) * width;
      X(i, k) = std::clamp(v, box.lo[k], box.hi[k]);
    }
  }
  return X;
}

double observe(const ObjectiveSpec& spec, const NoiseSpec& noise, const Eigen::VectorXd& x, Rng& rng,
               double output_scale) {
  if (!(noise.noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be non-negative");
  if (!spec.box.contains(x)) throw std::invalid_argument(spec.name + ": observation point outside the box");
  double fx;
  try {
    fx = spec.evaluator(x);
  } catch (const ObjectiveError&) {
    throw;
  } catch (const std::exception& e) {
    std::ostringstream os;
    os << spec.name << " failed at x = " << x.transpose() << ": " << e.what();
    throw ObjectiveError(os.str());
  }
  if (!std::isfinite(fx)) {
    std::ostringstream os;
    os << spec.name << " returned non-finite value at x = " << x.transpose();
    throw ObjectiveError(os.str());
  }
  if (noise.noise_sd == 0.0) return fx;
  std::normal_distribution<double> normal(0.0, noise.noise_sd * output_scale);
  return fx + normal(rng);
}

}  // namespace epsts
