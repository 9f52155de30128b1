#include "autolfd/linalg.hpp"

#include <stdexcept>

namespace autolfd {

Eigen::LLT<Eigen::MatrixXd> cholesky_with_jitter(const Eigen::MatrixXd& matrix,
                                                 const char* context, double scale, double base,
                                                 double max) {
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() == Eigen::Success) return llt;
  const int n = static_cast<int>(matrix.rows());
  for (double jitter = base; jitter <= max * (1.0 + 1e-12); jitter *= 10.0) {
    llt.compute(matrix + jitter * scale * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt;
  }
  throw std::runtime_error(context);
}

Eigen::MatrixXd floor_covariance(const Eigen::MatrixXd& covariance, double floor) {
  Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.eigenvalues().minCoeff() >= floor) return sym;
  Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(floor);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& matrix) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (matrix + matrix.transpose()));
  return eig.eigenvalues().minCoeff();
}

}  // namespace autolfd
