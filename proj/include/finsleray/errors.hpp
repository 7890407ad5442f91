#pragma once

#include <stdexcept>
#include <string>

namespace finsleray {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Singular primitive hit during evaluation (division by zero, sqrt/log of a
// non-positive value). Raised at evaluation time, never at parse time.
struct DomainError : Error {
  using Error::Error;
};

// A derivative index outside the stored truncation order of a jet.
struct IndexError : Error {
  using Error::Error;
};

// The candidate metric's y-Hessian of F^2/2 is not positive-definite at the
// queried support element.
struct NonPositiveDefinite : Error {
  NonPositiveDefinite(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue(min_eigenvalue) {}
  double min_eigenvalue;
};

struct ParseError : Error {
  ParseError(const std::string& what, std::size_t offset, std::string expected)
      : Error(what), offset(offset), expected(std::move(expected)) {}
  std::size_t offset;    // byte offset into the source text
  std::string expected;  // human-readable expected-token set
};

// Malformed medium description (bad variant, non-unit axes, ...).
struct SpecError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// |Delta| or |Sigma| under tolerance: the spin foliation is singular here.
struct SingularLocus : Error {
  SingularLocus(const std::string& what, double delta, double sigma)
      : Error(what), delta(delta), sigma(sigma) {}
  double delta;
  double sigma;
};

// Gram-Schmidt seed (numerically) parallel to the support direction.
struct DegenerateSeed : Error {
  using Error::Error;
};

// Two trajectories do not share a parameter grid.
struct GridMismatch : Error {
  using Error::Error;
};

}  // namespace finsleray
