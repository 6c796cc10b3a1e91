#pragma once

#include <Eigen/Dense>

namespace qgibbs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace qgibbs
