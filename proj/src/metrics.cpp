#include "autolfd/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "autolfd/linalg.hpp"

namespace autolfd {

double mse(const Eigen::MatrixXd& ref_means, const Trajectory& traj) {
  const Eigen::MatrixXd rows = stacked_rows(traj);
  if (ref_means.rows() != rows.rows() || ref_means.cols() != rows.cols())
    throw std::invalid_argument("mse shape mismatch");
  return (rows - ref_means).rowwise().squaredNorm().mean();
}

double mle_cost(const ProbRefTrajectory& ref, const Trajectory& traj) {
  const Eigen::MatrixXd rows = stacked_rows(traj);
  if (ref.samples() != rows.rows() || 2 * ref.dims() != rows.cols())
    throw std::invalid_argument("mle shape mismatch");
  double total = 0.0;
  for (int i = 0; i < ref.samples(); ++i) {
    const Eigen::MatrixXd cov = floor_covariance(ref.covariances[i], kCovarianceFloor);
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw std::runtime_error("singular reference covariance");
    const Eigen::VectorXd diff = rows.row(i).transpose() - ref.means[i];
    total += diff.dot(llt.solve(diff));
  }
  return total / ref.samples();
}

double discrete_frechet(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  if (n == 0 || m == 0) throw std::invalid_argument("empty polyline");
  if (a.cols() != b.cols()) throw std::invalid_argument("polyline dimension mismatch");

  Eigen::MatrixXd table(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double d = (a.row(i) - b.row(j)).norm();
      if (i == 0 && j == 0) {
        table(i, j) = d;
      } else if (i == 0) {
        table(i, j) = std::max(table(i, j - 1), d);
      } else if (j == 0) {
        table(i, j) = std::max(table(i - 1, j), d);
      } else {
        table(i, j) =
            std::max(std::min({table(i - 1, j), table(i - 1, j - 1), table(i, j - 1)}), d);
      }
    }
  }
  return table(n - 1, m - 1);
}

double shape_distortion(const Trajectory& demo, const Trajectory& traj) {
  if (demo.samples() != traj.samples() || demo.dims() != traj.dims())
    throw std::invalid_argument("shape_distortion needs equal sampling");
  const double diagonal = demo.bbox_diagonal();
  if (diagonal <= 0.0) throw std::invalid_argument("degenerate demonstration bounding box");

  const int n = demo.samples();
  const Eigen::MatrixXd p = demo.positions.rowwise() - demo.positions.colwise().mean();
  const Eigen::MatrixXd q = traj.positions.rowwise() - traj.positions.colwise().mean();

  // Orthogonal Procrustes with uniform scale (rotation only, no reflection).
  const Eigen::MatrixXd cross = q.transpose() * p;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd rotation = svd.matrixU() * svd.matrixV().transpose();
  Eigen::VectorXd singular = svd.singularValues();
  if (rotation.determinant() < 0.0) {
    Eigen::MatrixXd u = svd.matrixU();
    u.col(u.cols() - 1) *= -1.0;
    singular(singular.size() - 1) *= -1.0;
    rotation = u * svd.matrixV().transpose();
  }
  const double q_norm2 = q.squaredNorm();
  const double scale = q_norm2 > 0.0 ? singular.sum() / q_norm2 : 1.0;
  const double residual2 = (p - scale * q * rotation).squaredNorm();
  const double residual_rms = std::sqrt(std::max(residual2, 0.0) / n) / diagonal;

  // Smoothness: mean squared second differences, trajectory over demo, each
  // normalized by its own bounding-box scale so pure rescaling is not
  // penalized.
  auto mean_sq_second_diff = [](const Eigen::MatrixXd& x) {
    double acc = 0.0;
    for (int i = 1; i + 1 < x.rows(); ++i)
      acc += (x.row(i + 1) - 2.0 * x.row(i) + x.row(i - 1)).squaredNorm();
    return acc / (x.rows() - 2);
  };
  const double traj_diag = std::max(traj.bbox_diagonal(), 1e-9 * diagonal);
  const double demo_msd = mean_sq_second_diff(demo.positions) / (diagonal * diagonal);
  const double traj_msd = mean_sq_second_diff(traj.positions) / (traj_diag * traj_diag);
  const double jerk_ratio = traj_msd / std::max(demo_msd, 1e-12);

  return residual_rms + std::max(0.0, jerk_ratio - 2.0);
}

double latent_metric(const EncoderParams& params, const Trajectory& demo,
                     const Trajectory& traj) {
  return (encode(params, demo) - encode(params, traj)).norm();
}

MetricReport evaluate_metrics(const EncoderParams& params, const ProbRefTrajectory& ref,
                              const Trajectory& demo_traj, const Trajectory& traj) {
  MetricReport report;
  report.mse = mse(stacked_rows(demo_traj), traj);
  report.mle = mle_cost(ref, traj);
  report.frechet = discrete_frechet(demo_traj.positions, traj.positions);
  report.latent = latent_metric(params, demo_traj, traj);
  report.shape_distortion = shape_distortion(demo_traj, traj);
  return report;
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["mse"] = report.mse;
  j["mle"] = report.mle;
  j["frechet"] = report.frechet;
  j["latent"] = report.latent;
  j["shape_distortion"] = report.shape_distortion;
  return j.dump(2);
}

}  // namespace autolfd
