#pragma once

#include <Eigen/Dense>
#include <string>

#include "autolfd/encoder.hpp"
#include "autolfd/gmm.hpp"
#include "autolfd/trajectory.hpp"

namespace autolfd {

struct MetricReport {
  double mse = 0.0;
  double mle = 0.0;
  double frechet = 0.0;
  double latent = 0.0;
  double shape_distortion = 0.0;
};

// (1/N) sum_n (mu*_n - mu_n)^T (mu*_n - mu_n) over stacked position+velocity
// rows; ref_means is N x 2O.
double mse(const Eigen::MatrixXd& ref_means, const Trajectory& traj);

// Same residuals weighted by the inverse reference covariances.
double mle_cost(const ProbRefTrajectory& ref, const Trajectory& traj);

// Discrete Frechet distance between position polylines (rows are points).
double discrete_frechet(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Similarity-aligned residual plus a jerk-ratio penalty; the repo's
// independent notion of adaptation quality.  Both trajectories must share N.
//   distortion = rms(P - s Q R - t) / diag(P) + max(0, msd(Q)/msd(P) - 2)
double shape_distortion(const Trajectory& demo, const Trajectory& traj);

// || S(demo) - S(traj) ||_2 in the encoder's embedding space.
double latent_metric(const EncoderParams& params, const Trajectory& demo,
                     const Trajectory& traj);

MetricReport evaluate_metrics(const EncoderParams& params, const ProbRefTrajectory& ref,
                              const Trajectory& demo_traj, const Trajectory& traj);

std::string report_to_json(const MetricReport& report);

}  // namespace autolfd
