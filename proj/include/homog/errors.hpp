#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace homog {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape parameters outside the [1/2, 3/4] shell.
class RejectedSpec : public Error {
 public:
  using Error::Error;
};

// No admissible lattice point for the requested box and epsilon.
class EmptyDomain : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CacheMiss : public Error {
 public:
  using Error::Error;
};

// Time step rejected by the transport stability check.
class CflViolation : public Error {
 public:
  using Error::Error;
};

// Iterative solver failure; carries the residual trace for diagnostics.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace homog

namespace homog {

// Negative or zero curvature met inside CG.
class IndefiniteOperator : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace homog
