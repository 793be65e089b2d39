#include <chrono>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "epsts/benchmarks.hpp"
#include "epsts/errors.hpp"
#include "epsts/external_objective.hpp"

using namespace epsts;
using Eigen::VectorXd;

namespace {

ExternalCommand stub(const std::string& mode, int good = 0, int timeout_ms = 10000) {
  ExternalCommand c;
  c.argv = {EPSTS_STUB_PATH, mode, std::to_string(good)};
  c.timeout = std::chrono::milliseconds(timeout_ms);
  return c;
}

VectorXd v2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

// Evaluates once and returns the ObjectiveError it must raise.
ObjectiveError expect_failure(ExternalProcess& p, const VectorXd& x) {
  try {
    p.evaluate(x);
  } catch (const ObjectiveError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ObjectiveError";
  return ObjectiveError("none");
}

}  // namespace

TEST(SplitCommandLine, WordsAndQuotes) {
  EXPECT_EQ(split_command_line("a b  c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(split_command_line("  python3 'my sim.py' \"--opt x\"  "),
            (std::vector<std::string>{"python3", "my sim.py", "--opt x"}));
  EXPECT_EQ(split_command_line("a'b c'd"), (std::vector<std::string>{"ab cd"}));
  EXPECT_EQ(split_command_line(""), std::vector<std::string>{});
  EXPECT_THROW(split_command_line("a 'b"), std::invalid_argument);
}

TEST(FormatDouble, RoundTrips) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
  EXPECT_EQ(format_double(-0.0), "-0.0");
  EXPECT_EQ(format_double(3.0), "3.0");
  EXPECT_EQ(format_double(1e300), "1.0000000000000001e+300");
}

TEST(ExternalProcess, SumStubRoundTripsLosslessly) {
  ExternalProcess p(stub("sum"), 3);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const VectorXd x = (VectorXd(3) << u(gen), u(gen), u(gen)).finished();
    ASSERT_EQ(p.evaluate(x), x.sum()) << i;
  }
  EXPECT_EQ(p.evaluations(), 1000);
}

TEST(ExternalProcess, AckleyStubMatchesInProcess) {
  const ObjectiveSpec ext = external_objective(stub("ackley2"), make_ackley2().box, 2);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 200; ++i) {
    const VectorXd x = v2(u(gen), u(gen));
    ASSERT_EQ(ext.evaluator(x), ackley2(x));
  }
  EXPECT_FALSE(ext.f_star.has_value());
}

TEST(ExternalProcess, NanReplyCarriesTheRawReply) {
  ExternalProcess p(stub("nan", 2), 2);
  EXPECT_EQ(p.evaluate(v2(0, 0)), 0.0);
  EXPECT_NO_THROW(p.evaluate(v2(1, 0)));
  const ObjectiveError e = expect_failure(p, v2(1, 1));
  EXPECT_NE(e.raw_reply().find("nan"), std::string::npos) << e.raw_reply();
}

TEST(ExternalProcess, GarbageReply) {
  ExternalProcess p(stub("garbage"), 2);
  const ObjectiveError e = expect_failure(p, v2(1, 1));
  EXPECT_EQ(e.raw_reply(), "this is not json");
}

TEST(ExternalProcess, ErrorReplyWithoutY) {
  // The Ackley stub answers out-of-domain points with an error object.
  ExternalProcess p(stub("ackley2"), 2);
  const ObjectiveError e = expect_failure(p, v2(50, 0));
  EXPECT_NE(e.raw_reply().find("error"), std::string::npos) << e.raw_reply();
  EXPECT_EQ(p.evaluate(v2(0, 0)), 0.0);
}

TEST(ExternalProcess, ProcessExit) {
  ExternalProcess p(stub("exit", 1), 2);
  EXPECT_NO_THROW(p.evaluate(v2(1, 1)));
  const ObjectiveError e = expect_failure(p, v2(1, 1));
  EXPECT_NE(std::string(e.what()).find("exited"), std::string::npos) << e.what();
}

TEST(ExternalProcess, Timeout) {
  ExternalProcess p(stub("hang", 0, 300), 2);
  const auto t0 = std::chrono::steady_clock::now();
  const ObjectiveError e = expect_failure(p, v2(1, 1));
  const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_NE(std::string(e.what()).find("timed out"), std::string::npos) << e.what();
  EXPECT_GE(waited, 0.25);
  EXPECT_LT(waited, 5.0);
}

TEST(ExternalProcess, RejectedHandshake) {
  try {
    ExternalProcess p(stub("reject"), 2);
    FAIL() << "expected ObjectiveError";
  } catch (const ObjectiveError& e) {
    EXPECT_NE(e.raw_reply().find("false"), std::string::npos) << e.raw_reply();
  }
}

TEST(ExternalProcess, MissingExecutable) {
  ExternalCommand c;
  c.argv = {"/nonexistent/definitely-not-here"};
  EXPECT_THROW(ExternalProcess(c, 2), ObjectiveError);
  EXPECT_THROW(ExternalProcess(ExternalCommand{}, 2), std::invalid_argument);
}

TEST(ExternalProcess, WrongDimension) {
  ExternalProcess p(stub("sum"), 2);
  EXPECT_THROW(p.evaluate(VectorXd::Zero(3)), std::invalid_argument);
  EXPECT_THROW(external_objective(stub("sum"), Box::unit(3), 2), std::invalid_argument);
}

TEST(ExternalProcess, FailureThroughObserveAbortsWithObjectiveError) {
  const ObjectiveSpec ext = external_objective(stub("nan"), make_ackley2().box, 2);
  Rng rng(4);
  try {
    observe(ext, NoiseSpec{}, v2(1, 1), rng);
    FAIL() << "expected ObjectiveError";
  } catch (const ObjectiveError& e) {
    EXPECT_NE(e.raw_reply().find("nan"), std::string::npos);
  }
}
