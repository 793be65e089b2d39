#include "epsts/external_objective.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "epsts/errors.hpp"

extern char** environ;

namespace epsts {
namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

std::string describe(const ExternalCommand& c) {
  std::string s;
  for (const auto& a : c.argv) s += (s.empty() ? "" : " ") + a;
  return s;
}

}  // namespace

std::vector<std::string> split_command_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool have = false;
  char quote = 0;
  for (char ch : line) {
    if (quote) {
      if (ch == quote) {
        quote = 0;
      } else {
        cur += ch;
      }
    } else if (ch == '"' || ch == '\'') {
      quote = ch;
      have = true;
    } else if (ch == ' ' || ch == '\t' || ch == '\n') {
      if (have) out.push_back(cur);
      cur.clear();
      have = false;
    } else {
      cur += ch;
      have = true;
    }
  }
  if (quote) throw std::invalid_argument("unterminated quote in command line");
  if (have) out.push_back(cur);
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string out = buf;
  // Integral values keep a decimal point so JSON readers see a float; this
  // also preserves the sign of -0.
  if (out.find_first_not_of("-0123456789") == std::string::npos) out += ".0";
  return out;
}

ExternalProcess::ExternalProcess(const ExternalCommand& command, Eigen::Index d) : command_(command), d_(d) {
  if (command_.argv.empty()) throw std::invalid_argument("external objective command is empty");
  if (d < 1) throw std::invalid_argument("external objective dimension must be at least 1");
  ignore_sigpipe_once();

  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw ObjectiveError("pipe() failed: " + std::string(std::strerror(errno)));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw ObjectiveError("pipe() failed: " + std::string(std::strerror(errno)));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (auto& a : command_.argv) args.push_back(a.data());
  args.push_back(nullptr);
  const int rc = posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (rc != 0) {
    pid_ = -1;
    shutdown();
    throw ObjectiveError("could not start '" + describe(command_) + "': " + std::strerror(rc));
  }

  const std::string reply = exchange("{\"hello\":{\"d\":" + std::to_string(d_) + "}}");
  bool ok = false;
  try {
    const auto j = nlohmann::json::parse(reply);
    ok = j.is_object() && j.contains("ok") && j["ok"] == true;
  } catch (const nlohmann::json::exception&) {
    ok = false;
  }
  if (!ok) {
    shutdown();
    throw ObjectiveError("external objective handshake rejected", reply);
  }
}

ExternalProcess::~ExternalProcess() { shutdown(); }

void ExternalProcess::shutdown() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ <= 0) return;
  // Closing stdin asks the child to exit; escalate if it lingers.
  for (int i = 0; i < 100; ++i) {
    if (waitpid(pid_, nullptr, WNOHANG) == pid_) {
      pid_ = -1;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  kill(pid_, SIGKILL);
  waitpid(pid_, nullptr, 0);
  pid_ = -1;
}

std::string ExternalProcess::exchange(const std::string& line) {
  if (to_child_ < 0) throw ObjectiveError("external objective process is not running");
  const std::string msg = line + "\n";
  std::size_t sent = 0;
  while (sent < msg.size()) {
    const ssize_t n = write(to_child_, msg.data() + sent, msg.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string err = std::strerror(errno);
      shutdown();
      throw ObjectiveError("external objective process closed its input (" + err + ")");
    }
    sent += static_cast<std::size_t>(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + command_.timeout;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!reply.empty() && reply.back() == '\r') reply.pop_back();
      return reply;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      std::string partial = buffer_;
      shutdown();
      throw ObjectiveError("external objective timed out after " + std::to_string(command_.timeout.count()) + " ms",
                           partial);
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int pr = poll(&pfd, 1, static_cast<int>(left.count()));
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw ObjectiveError("poll() failed: " + std::string(std::strerror(errno)));
    }
    if (pr == 0) continue;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ObjectiveError("read() failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) {
      std::string partial = buffer_;
      shutdown();
      throw ObjectiveError("external objective process exited", partial);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

double ExternalProcess::evaluate(const Eigen::VectorXd& x) {
  if (x.size() != d_) throw std::invalid_argument("external objective point has wrong dimension");
  std::lock_guard<std::mutex> lock(mutex_);
  std::string req = "{\"x\":[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) req += ',';
    req += format_double(x[i]);
  }
  req += "]}";
  const std::string reply = exchange(req);
  double y = 0.0;
  try {
    const auto j = nlohmann::json::parse(reply);
    if (!j.is_object() || !j.contains("y") || !j["y"].is_number()) {
      throw ObjectiveError("external objective reply lacks a numeric \"y\"", reply);
    }
    y = j["y"].get<double>();
  } catch (const nlohmann::json::exception&) {
    throw ObjectiveError("malformed external objective reply", reply);
  }
  if (!std::isfinite(y)) throw ObjectiveError("external objective returned a non-finite value", reply);
  ++evaluations_;
  return y;
}

ObjectiveSpec external_objective(const ExternalCommand& command, const Box& box, Eigen::Index d, std::string name) {
  if (box.dim() != d) throw std::invalid_argument("external objective box dimension mismatch");
  auto process = std::make_shared<ExternalProcess>(command, d);
  ObjectiveSpec spec;
  spec.name = std::move(name);
  spec.d = d;
  spec.box = box;
  spec.evaluator = [process](const Eigen::VectorXd& x) { return process->evaluate(x); };
  return spec;
}

}  // namespace epsts
