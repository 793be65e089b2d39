#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <sys/types.h>

#include <Eigen/Dense>

#include "epsts/benchmarks.hpp"
#include "epsts/box.hpp"

namespace epsts {

struct ExternalCommand {
  std::vector<std::string> argv;  // argv[0] is looked up on PATH
  std::chrono::milliseconds timeout{30000};
};

// Splits a shell-like command line on whitespace; single and double quotes
// group words. No other shell syntax is interpreted.
std::vector<std::string> split_command_line(const std::string& line);

// Formats a double with 17 significant digits (round-trips exactly).
std::string format_double(double v);

/// A child process speaking the line protocol on stdin/stdout:
///
///   -> {"hello": {"d": 2}}        <- {"ok": true}
///   -> {"x": [0.5, -1.25]}        <- {"y": 3.75}
///
/// One UTF-8 JSON object per line, flushed after each line. The process is
/// reused for every evaluation and serves one request at a time; calls from
/// several threads are serialized.
class ExternalProcess {
 public:
  ExternalProcess(const ExternalCommand& command, Eigen::Index d);
  ~ExternalProcess();
  ExternalProcess(const ExternalProcess&) = delete;
  ExternalProcess& operator=(const ExternalProcess&) = delete;

  double evaluate(const Eigen::VectorXd& x);
  pid_t pid() const { return pid_; }
  long evaluations() const { return evaluations_; }

 private:
  std::string exchange(const std::string& line);
  void shutdown();

  ExternalCommand command_;
  Eigen::Index d_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  long evaluations_ = 0;
  std::mutex mutex_;
};

// An ObjectiveSpec whose evaluator forwards to a freshly started process.
// Unknown optimum: f_star stays empty unless the caller sets it.
ObjectiveSpec external_objective(const ExternalCommand& command, const Box& box, Eigen::Index d,
                                 std::string name = "external");

}  // namespace epsts
