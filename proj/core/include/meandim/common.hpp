#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace meandim {

/// Row-major dense matrix; rows are observations.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition (shapes, ranges, formats).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical failure: non-finite values, divergence, bad quadrature.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The predictor output has (near) zero variance, so normalized indices and
/// the mean dimension are undefined.
class DegenerateOutputError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Library version, e.g. "0.3.0".
const char* version();

}  // namespace meandim
