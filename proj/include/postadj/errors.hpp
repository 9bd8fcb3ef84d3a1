#ifndef POSTADJ_ERRORS_HPP
#define POSTADJ_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace postadj {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain numeric input.
class NumericDomainError : public Error {
 public:
  using Error::Error;
};

class NotSpdError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A likelihood term (or a stencil point of a numeric derivative) could not be
// evaluated. `unit` and `time` identify the offending composite term when known.
class EvaluationError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit EvaluationError(const std::string& what, std::size_t unit = npos,
                           std::size_t time = npos)
      : Error(what), unit_(unit), time_(time) {}

  std::size_t unit() const { return unit_; }
  std::size_t time() const { return time_; }

 private:
  std::size_t unit_;
  std::size_t time_;
};

// Non-fatal conditions (eigenvalue flooring, noisy convergence) collected for
// reporting instead of thrown.
using Warnings = std::vector<std::string>;

}  // namespace postadj

#endif  // POSTADJ_ERRORS_HPP
