#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "epsts/benchmarks.hpp"
#include "epsts/errors.hpp"

using namespace epsts;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Second implementation of Ackley written from the textbook form with
// long double accumulation.
double ackley_oracle(double x1, double x2) {
  const long double a = 20, b = 0.2L, c = 2 * std::numbers::pi_v<long double>;
  const long double s1 = (static_cast<long double>(x1) * x1 + static_cast<long double>(x2) * x2) / 2;
  const long double s2 = (std::cos(c * x1) + std::cos(c * x2)) / 2;
  return static_cast<double>(-a * std::exp(-b * std::sqrt(s1)) - std::exp(s2) + a + std::exp(1.0L));
}

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

VectorXd uniform_in(const Box& box, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd x(box.dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = box.lo[i] + u(gen) * (box.hi[i] - box.lo[i]);
  return x;
}

// Stratum index of every coordinate of column j; checks it is a permutation.
bool column_is_stratified(const MatrixXd& X, Eigen::Index j, const Box& box) {
  const Eigen::Index n = X.rows();
  std::vector<int> seen(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (X(i, j) - box.lo[j]) / (box.hi[j] - box.lo[j]);
    auto k = static_cast<Eigen::Index>(std::floor(u * n));
    if (k == n) k = n - 1;
    if (k < 0 || k >= n) return false;
    ++seen[k];
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

}  // namespace

TEST(Ackley, MinimumAndOracle) {
  EXPECT_EQ(ackley2(v2(0, 0)), 0.0);
  EXPECT_NEAR(ackley2(v2(1, 1)), ackley_oracle(1, 1), 1e-12);
  std::mt19937_64 gen(1);
  const Box box = make_ackley2().box;
  for (int i = 0; i < 1000; ++i) {
    const VectorXd x = uniform_in(box, gen);
    EXPECT_NEAR(ackley2(x), ackley_oracle(x[0], x[1]), 1e-12);
  }
}

TEST(Ackley, Symmetry) {
  std::mt19937_64 gen(2);
  const Box box = make_ackley2().box;
  for (int i = 0; i < 1000; ++i) {
    const VectorXd x = uniform_in(box, gen);
    const double f = ackley2(x);
    EXPECT_NEAR(f, ackley2(-x), 1e-12);
    EXPECT_NEAR(f, ackley2(v2(x[1], x[0])), 1e-12);
  }
}

TEST(Rosenbrock, Examples) {
  EXPECT_EQ(rosenbrock6(VectorXd::Ones(6)), 0.0);
  EXPECT_EQ(rosenbrock6(VectorXd::Zero(6)), 5.0);
}

TEST(Benchmarks, ZeroAtMinimizerPositiveElsewhere) {
  std::mt19937_64 gen(3);
  const ObjectiveSpec a = make_ackley2(), r = make_rosenbrock6();
  for (int i = 0; i < 100000; ++i) {
    ASSERT_GT(a.evaluator(uniform_in(a.box, gen)), 0.0);
    ASSERT_GT(r.evaluator(uniform_in(r.box, gen)), 0.0);
  }
}

TEST(Benchmarks, OutOfBoxThrows) {
  EXPECT_THROW(ackley2(v2(10.5, 0)), std::invalid_argument);
  EXPECT_THROW(ackley2(VectorXd::Zero(3)), std::invalid_argument);
  VectorXd x = VectorXd::Ones(6);
  x[3] = -5.01;
  EXPECT_THROW(rosenbrock6(x), std::invalid_argument);
  EXPECT_THROW(xsinx(VectorXd::Constant(1, 20.5)), std::invalid_argument);
  EXPECT_NO_THROW(ackley2(v2(-10, 10)));
}

TEST(Benchmarks, Registry) {
  const auto names = benchmark_names();
  for (const auto& n : {"ackley2", "rosenbrock6", "xsinx"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
  const ObjectiveSpec a = find_benchmark("ackley2");
  EXPECT_EQ(a.d, 2);
  EXPECT_EQ(a.f_star, 0.0);
  EXPECT_EQ(a.default_init, 10);
  EXPECT_EQ(a.default_iters, 50);
  const ObjectiveSpec r = find_benchmark("rosenbrock6");
  EXPECT_EQ(r.default_init, 60);
  EXPECT_EQ(r.default_iters, 200);
  EXPECT_THROW(find_benchmark("sphere"), std::invalid_argument);
}

TEST(Lhs, SinglePointInBox) {
  const Box box = Box::uniform(3, -2, 5);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const MatrixXd X = lhs_design(3, 1, box, rng);
    ASSERT_EQ(X.rows(), 1);
    EXPECT_TRUE(box.contains(X.row(0).transpose()));
  }
}

TEST(Lhs, TenPointsAreAPermutationOfStrata) {
  const Box box = make_ackley2().box;
  Rng rng(5);
  const MatrixXd X = lhs_design(2, 10, box, rng);
  EXPECT_TRUE(column_is_stratified(X, 0, box));
  EXPECT_TRUE(column_is_stratified(X, 1, box));
}

TEST(Lhs, StratificationUpToLargeDesigns) {
  Rng rng(6);
  for (Eigen::Index d : {1, 3, 10}) {
    for (Eigen::Index n : {2, 7, 50, 200}) {
      const Box box = Box::uniform(d, -1.5, 4.0);
      const MatrixXd X = lhs_design(d, n, box, rng);
      for (Eigen::Index j = 0; j < d; ++j) EXPECT_TRUE(column_is_stratified(X, j, box)) << n << "x" << d;
    }
  }
}

TEST(Lhs, PooledCoordinatesAreUniform) {
  const Box box = Box::uniform(1, 0, 1);
  Rng rng(7);
  std::vector<double> u;
  for (int t = 0; t < 10000; ++t) {
    const MatrixXd X = lhs_design(1, 5, box, rng);
    for (Eigen::Index i = 0; i < 5; ++i) u.push_back(X(i, 0));
  }
  std::sort(u.begin(), u.end());
  double ks = 0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    ks = std::max({ks, std::abs((i + 1) / n - u[i]), std::abs(u[i] - i / n)});
  }
  EXPECT_LT(ks, 0.02);
}

TEST(Lhs, DeterministicPerSeed) {
  const Box box = make_rosenbrock6().box;
  Rng a(8), b(8);
  EXPECT_EQ(lhs_design(6, 60, box, a), lhs_design(6, 60, box, b));
}

TEST(Observe, NoiselessIsExactAndConsumesNothing) {
  const ObjectiveSpec f = make_ackley2();
  Rng rng(9), untouched(9);
  const VectorXd x = v2(1.5, -2.25);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(observe(f, NoiseSpec{0.0}, x, rng), ackley2(x));
  EXPECT_EQ(rng(), untouched());
}

TEST(Observe, NoiseStandardDeviation) {
  const ObjectiveSpec f = make_ackley2();
  const VectorXd x = v2(0.3, 0.7);
  const double f0 = ackley2(x);
  for (double scale : {1.0, 4.0}) {
    Rng rng(10);
    double s = 0, s2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double e = observe(f, NoiseSpec{0.05}, x, rng, scale) - f0;
      s += e;
      s2 += e * e;
    }
    const double mean = s / n;
    const double sd = std::sqrt(s2 / n - mean * mean);
    EXPECT_NEAR(sd, 0.05 * scale, 0.03 * 0.05 * scale);
  }
}

TEST(Observe, EvaluatorFailureBecomesObjectiveError) {
  ObjectiveSpec f = make_ackley2();
  f.evaluator = [](const VectorXd&) -> double { throw std::runtime_error("solver diverged"); };
  Rng rng(11);
  try {
    observe(f, NoiseSpec{}, v2(1, 2), rng);
    FAIL() << "expected ObjectiveError";
  } catch (const ObjectiveError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("solver diverged"), std::string::npos) << what;
    EXPECT_NE(what.find('1'), std::string::npos) << what;
  }
  f.evaluator = [](const VectorXd&) { return std::nan(""); };
  EXPECT_THROW(observe(f, NoiseSpec{}, v2(1, 2), rng), ObjectiveError);
}

TEST(Observe, OutOfBoxIsAnObjectiveFailure) {
  Rng rng(12);
  EXPECT_ANY_THROW(observe(make_ackley2(), NoiseSpec{}, v2(11, 0), rng));
}
