#pragma once

#include <stdexcept>
#include <string>

namespace rydchirp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Population leaked onto a truncated edge of the basis (or the end of a chain).
class TruncationViolation : public Error {
 public:
  TruncationViolation(const std::string& boundary, double population)
      : Error("population " + std::to_string(population) + " reached boundary '" + boundary + "'"),
        boundary_(boundary),
        population_(population) {}

  const std::string& boundary() const noexcept { return boundary_; }
  double population() const noexcept { return population_; }

 private:
  std::string boundary_;
  double population_;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class IntegrationFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rydchirp
