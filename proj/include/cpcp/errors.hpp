#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace cpcp {

// Base class for every error raised by the library. Argument validation
// failures use std::invalid_argument directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An underlying factorization failed or produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Two subspaces are too close to intersecting for their direct sum to be
// projected onto reliably.
class DegenerateSum : public Error {
 public:
  DegenerateSum(double measured_norm, const std::string& what)
      : Error(what), measured_norm_(measured_norm) {}

  double measured_norm() const noexcept { return measured_norm_; }

 private:
  double measured_norm_;
};

// A certificate construction precondition (an operator-norm bound) failed.
class PremiseViolation : public Error {
 public:
  PremiseViolation(std::string premise, double measured, double bound)
      : Error(premise + " violated: measured " + std::to_string(measured) +
              ", required < " + std::to_string(bound)),
        premise_(std::move(premise)),
        measured_(measured),
        bound_(bound) {}

  const std::string& premise() const noexcept { return premise_; }
  double measured() const noexcept { return measured_; }
  double bound() const noexcept { return bound_; }

 private:
  std::string premise_;
  double measured_;
  double bound_;
};

// Input matrices that should span independent directions do not. `index` is
// the zero-based position of the first dependent input.
class RankDeficient : public Error {
 public:
  RankDeficient(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// File or bundle could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration file or override, unknown key, bad value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpcp
