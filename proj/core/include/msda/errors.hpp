#ifndef MSDA_ERRORS_HPP
#define MSDA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace msda {

// Base class for every error this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter value outside its documented domain (alpha <= 0, r > 1, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Dimension or grid-kind mismatch between arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-PSD target, quadrature non-convergence, divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File or stream problems, including parse failures of PGM/CSV inputs.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace msda

#endif
