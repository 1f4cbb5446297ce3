#pragma once

#include <Eigen/Dense>

namespace nphisd {

// Flat coordinate vector of a model state. Dimension is fixed by the model.
using StateVector = Eigen::VectorXd;

// Column-orthonormal matrix (M x k). k == 0 is an empty frame.
using Frame = Eigen::MatrixXd;

using Matrix = Eigen::MatrixXd;

inline Frame empty_frame(Eigen::Index rows) { return Frame(rows, 0); }

} // namespace nphisd
