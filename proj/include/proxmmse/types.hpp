#pragma once

#include <Eigen/Dense>

namespace proxmmse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Vector scalar_vector(double v) { return Vector::Constant(1, v); }

}  // namespace proxmmse
