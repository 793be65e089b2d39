#pragma once

#include <stdexcept>
#include <string>

namespace epsts {

// Base for runtime failures raised by the library. Precondition violations
// on arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Covariance matrix could not be factorized even after jitter escalation.
class ModelFitError : public Error {
 public:
  using Error::Error;
};

class OptimizerError : public Error {
 public:
  using Error::Error;
};

// Objective evaluation failed. `raw_reply` carries whatever the evaluator
// produced (empty for in-process objectives).
class ObjectiveError : public Error {
 public:
  ObjectiveError(const std::string& what, std::string raw_reply = {})
      : Error(what), raw_reply_(std::move(raw_reply)) {}
  const std::string& raw_reply() const noexcept { return raw_reply_; }

 private:
  std::string raw_reply_;
};

class ProposalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace epsts
