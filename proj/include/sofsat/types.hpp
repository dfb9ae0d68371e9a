#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sofsat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Raised when inputs have inconsistent shapes or out-of-domain values.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace sofsat
