#pragma once

#include <Eigen/Dense>

#include "autolfd/gmm.hpp"
#include "autolfd/hyperparams.hpp"
#include "autolfd/trajectory.hpp"

namespace autolfd {

// 2O x 2O block kernel [[k, dk/dtj], [dk/dti, d2k/dti dtj]] (x) I_O for the
// SE base kernel k(ti, tj) = exp(-width (ti - tj)^2), derivatives analytic.
Eigen::MatrixXd extended_kernel(double t_i, double t_j, double kernel_width, int dims);

// Replaces the reference point nearest in time to each constraint by the
// desired mean with variance eps on the constrained coordinates.
ProbRefTrajectory insert_constraints(const ProbRefTrajectory& ref, const Constraints& constraints,
                                     double eps);

// eps = 1e-6 * median covariance trace of the reference.
double default_constraint_eps(const ProbRefTrajectory& ref);

// Single-trajectory reference with isotropic covariance (rel_sigma of the
// bounding-box diagonal), thinned to `support` points.
ProbRefTrajectory isotropic_reference(const Trajectory& anchor, double rel_sigma = 0.05,
                                      int support = 60);

// Nonparametric predictor mu(t*) = k* (K + lambda Sigma)^-1 mu over the
// (possibly constraint-augmented) reference trajectory.
class KmpModel {
 public:
  KmpModel(ProbRefTrajectory reference, double kernel_width, double regularization);

  const ProbRefTrajectory& reference() const { return reference_; }
  double kernel_width() const { return kernel_width_; }
  double regularization() const { return regularization_; }

  // mu(t*) in R^{2O}: position block then velocity block.
  Eigen::VectorXd predict(double t_star) const;

 private:
  ProbRefTrajectory reference_;
  double kernel_width_;
  double regularization_;
  Eigen::VectorXd solve_weights_;  // (K + lambda Sigma)^-1 mu_stacked
};

inline Eigen::VectorXd kmp_predict(const KmpModel& model, double t_star) {
  return model.predict(t_star);
}

// insert_constraints + KmpModel + prediction on the uniform encoder grid.
Trajectory adapt_kmp(const ProbRefTrajectory& ref, const Constraints& constraints,
                     const Hyperparams& theta);

}  // namespace autolfd
