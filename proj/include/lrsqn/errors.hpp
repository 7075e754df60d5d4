#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lrsqn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InfeasibleWindow : public Error {
 public:
  using Error::Error;
};

// The optimal averaging window cuts through the run of eigenvalues equal to
// the shift, so the result would need eigenvectors that are not stored.
class StructuralSplit : public Error {
 public:
  using Error::Error;
};

class PositivityViolation : public Error {
 public:
  using Error::Error;
};

class ZeroCurvature : public Error {
 public:
  using Error::Error;
};

class DegenerateQuadForm : public Error {
 public:
  using Error::Error;
};

class SingularShift : public Error {
 public:
  using Error::Error;
};

class MaxIterations : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class GuardExceeded : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ObjectiveFailure : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NonAscendingIndex : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace lrsqn
