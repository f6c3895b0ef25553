#pragma once

#include <stdexcept>
#include <string>

namespace estimand {

/// Bad input: malformed configuration, unknown treatment, dimension mismatch.
/// `path` names the offending field (e.g. "model.interactions") when known.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& message, std::string path = {})
      : std::runtime_error(message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A computation could not produce a finite, meaningful value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value left the domain of a link function (e.g. identity link giving 1.2).
class RangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace estimand
