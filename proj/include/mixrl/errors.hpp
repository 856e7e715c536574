#pragma once

#include <stdexcept>
#include <string>

namespace mixrl {

// Base for everything this library throws on its own behalf.
// std::invalid_argument is still used directly for plain bad-parameter cases.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Linear solve failed or produced an unusable result (singular system,
// residual above tolerance, iteration cap hit without convergence).
class SolverError : public Error {
 public:
  SolverError(const std::string& msg, double residual)
      : Error(msg + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// A horizon-capped search ran out of horizon before the criterion was met.
class HorizonError : public Error {
 public:
  HorizonError(const std::string& msg, long horizon, double last_value)
      : Error(msg + " (horizon " + std::to_string(horizon) + ", last value " +
              std::to_string(last_value) + ")"),
        horizon_(horizon),
        last_value_(last_value) {}
  long horizon() const { return horizon_; }
  double last_value() const { return last_value_; }

 private:
  long horizon_;
  double last_value_;
};

}  // namespace mixrl
