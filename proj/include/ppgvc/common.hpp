// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ppgvc {

/// Sequences are stored frame-major: row t is frame t.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Number of quin-phone context groups (prev-prev, prev, current, next, next-next).
inline constexpr int kContextGroups = 5;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: configs, specs, argument combinations.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk data.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Tensor dimension mismatch inside a model or loss.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace ppgvc
