#ifndef EOT_ERRORS_HPP
#define EOT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eot {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A row of an input file could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// The data do not form a valid probability measure.
class InvalidMeasure : public Error {
 public:
  using Error::Error;
};

/// Two inputs live in spaces of different dimension or incompatible shape.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// The dual fixed point did not reach the requested tolerance.
class NoConvergence : public Error {
 public:
  NoConvergence(double residual, std::size_t iterations)
      : Error("sinkhorn solve did not converge: residual " +
              std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations"),
        residual(residual),
        iterations(iterations) {}
  double residual;
  std::size_t iterations;
};

/// A resolvent right-hand side violated the centering precondition.
class NotCentered : public Error {
 public:
  using Error::Error;
};

/// The deflated Fredholm system is numerically singular.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// A self-transport operation was requested for distinct measures.
class NotSelfTransport : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be symmetric PSD failed the symmetry/positivity check.
class NonSymmetric : public Error {
 public:
  using Error::Error;
};

/// An empirical-CDF operation received no data.
class EmptySample : public Error {
 public:
  using Error::Error;
};

/// A configuration document is inconsistent or incomplete.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace eot

#endif  // EOT_ERRORS_HPP
