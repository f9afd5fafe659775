#ifndef SHRINKAGE_ERRORS_HPP
#define SHRINKAGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace shrinkage {

/* Error taxonomy used across the library.  The CLI maps these onto process
   exit codes, so every throw site should pick the narrowest fitting class. */

// Bad user input: out-of-domain values, schema violations, broken preconditions.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-finite intermediates, singular denominators, divergence.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Rejection sampling against a selection rule that accepts (almost) nothing.
class InfeasibleSelectionError : public NumericalError {
 public:
  explicit InfeasibleSelectionError(const std::string& what) : NumericalError(what) {}
};

// Filesystem / stream problems.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shrinkage

#endif  // SHRINKAGE_ERRORS_HPP
