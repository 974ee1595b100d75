#pragma once

#include <stdexcept>
#include <string>

namespace sphero {

/// Failure classes raised by the numerical core. The CLI maps these to exit
/// code 2.
enum class NumericalErrorKind {
  kNotSkew,
  kDegenerate,
  kSingularInertia,
  kAxesDegenerate,
  kAxisViolation,
  kInfeasible,
  kNoEquilibrium,
  kNonFinite,
};

const char* to_string(NumericalErrorKind kind);

class NumericalError : public std::runtime_error {
 public:
  NumericalError(NumericalErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}
  NumericalErrorKind kind() const { return kind_; }

 private:
  NumericalErrorKind kind_;
};

/// Bad user input (config files, flags). The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace sphero
