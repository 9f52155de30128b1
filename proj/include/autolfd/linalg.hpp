#pragma once

#include <Eigen/Dense>

namespace autolfd {

// Cholesky of a symmetric matrix with diagonal jitter escalation: starts at
// `base`, multiplies by 10 up to `max` (both scaled by `scale`), throws
// std::runtime_error(context) when every level fails.
Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& matrix,
                                                 const char* context, double scale = 1.0,
                                                 double base = 1e-10, double max = 1e-4);

// Symmetrizes and clamps eigenvalues to at least `floor`.
Eigen::MatrixXd floor_covariance(const Eigen::MatrixXd& covariance, double floor);

// Smallest eigenvalue of the symmetrized matrix.
double min_eigenvalue(const Eigen::MatrixXd& matrix);

}  // namespace autolfd
