#include "autolfd/kmp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "autolfd/linalg.hpp"

namespace autolfd {

Eigen::MatrixXd extended_kernel(double t_i, double t_j, double kernel_width, int dims) {
  if (kernel_width <= 0.0) throw std::invalid_argument("kernel width must be positive");
  const double d = t_i - t_j;
  const double k = std::exp(-kernel_width * d * d);
  const double dk_dtj = 2.0 * kernel_width * d * k;
  const double dk_dti = -dk_dtj;
  const double d2k = (2.0 * kernel_width - 4.0 * kernel_width * kernel_width * d * d) * k;

  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * dims, 2 * dims);
  for (int o = 0; o < dims; ++o) {
    block(o, o) = k;
    block(o, dims + o) = dk_dtj;
    block(dims + o, o) = dk_dti;
    block(dims + o, dims + o) = d2k;
  }
  return block;
}

ProbRefTrajectory isotropic_reference(const Trajectory& anchor, double rel_sigma, int support) {
  const Trajectory thin = resample(anchor, support);
  const int dims = thin.dims();
  const double sigma = rel_sigma * thin.bbox_diagonal();
  const Eigen::MatrixXd iso = sigma * sigma * Eigen::MatrixXd::Identity(2 * dims, 2 * dims);

  ProbRefTrajectory ref;
  ref.times = thin.times;
  for (int i = 0; i < thin.samples(); ++i) {
    Eigen::VectorXd mean(2 * dims);
    mean.head(dims) = thin.positions.row(i);
    mean.tail(dims) = thin.velocities.row(i);
    ref.means.push_back(mean);
    ref.covariances.push_back(iso);
  }
  return ref;
}

double default_constraint_eps(const ProbRefTrajectory& ref) {
  std::vector<double> traces;
  traces.reserve(ref.covariances.size());
  for (const auto& cov : ref.covariances) traces.push_back(cov.trace());
  std::sort(traces.begin(), traces.end());
  const std::size_t n = traces.size();
  const double median =
      n % 2 == 1 ? traces[n / 2] : 0.5 * (traces[n / 2 - 1] + traces[n / 2]);
  return std::max(1e-6 * median, 1e-12);
}

ProbRefTrajectory insert_constraints(const ProbRefTrajectory& ref, const Constraints& constraints,
                                     double eps) {
  if (eps <= 0.0) throw std::invalid_argument("constraint variance must be positive");
  ref.validate();
  constraints.validate(ref.times(0), ref.times(ref.samples() - 1));

  ProbRefTrajectory out = ref;
  const int dims = ref.dims();
  std::vector<int> used;
  for (const ConstraintPoint& point : constraints.points) {
    int nearest = 0;
    double best = std::abs(ref.times(0) - point.time);
    for (int i = 1; i < ref.samples(); ++i) {
      const double d = std::abs(ref.times(i) - point.time);
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    if (std::find(used.begin(), used.end(), nearest) != used.end())
      throw std::invalid_argument("conflicting constraints");
    used.push_back(nearest);

    if (static_cast<int>(point.position.size()) != dims)
      throw std::invalid_argument("constraint dimension mismatch");

    Eigen::VectorXd mean = out.means[nearest];
    mean.head(dims) = point.position;
    if (point.velocity) mean.tail(dims) = *point.velocity;
    out.means[nearest] = mean;

    Eigen::MatrixXd cov = out.covariances[nearest];
    const int constrained = point.velocity ? 2 * dims : dims;
    cov.topRows(constrained).setZero();
    cov.leftCols(constrained).setZero();
    for (int i = 0; i < constrained; ++i) cov(i, i) = eps;
    out.covariances[nearest] = cov;
  }
  return out;
}

KmpModel::KmpModel(ProbRefTrajectory reference, double kernel_width, double regularization)
    : reference_(std::move(reference)),
      kernel_width_(kernel_width),
      regularization_(regularization) {
  if (kernel_width_ <= 0.0) throw std::invalid_argument("kernel width must be positive");
  if (regularization_ <= 0.0) throw std::invalid_argument("regularization must be positive");
  reference_.validate();

  const int n = reference_.samples();
  const int block = 2 * reference_.dims();
  Eigen::MatrixXd system(n * block, n * block);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const Eigen::MatrixXd k =
          extended_kernel(reference_.times(i), reference_.times(j), kernel_width_, reference_.dims());
      system.block(i * block, j * block, block, block) = k;
      if (j < i) system.block(j * block, i * block, block, block) = k.transpose();
    }
  }
  for (int i = 0; i < n; ++i)
    system.block(i * block, i * block, block, block) += regularization_ * reference_.covariances[i];

  Eigen::VectorXd stacked_mean(n * block);
  for (int i = 0; i < n; ++i) stacked_mean.segment(i * block, block) = reference_.means[i];

  const double scale = std::max(1.0, system.diagonal().cwiseAbs().mean());
  const auto llt = cholesky_with_jitter(system, "ill-conditioned system", scale);
  solve_weights_ = llt.solve(stacked_mean);
  if (!solve_weights_.allFinite()) throw std::runtime_error("ill-conditioned system");
}

Eigen::VectorXd KmpModel::predict(double t_star) const {
  const int n = reference_.samples();
  const int block = 2 * reference_.dims();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(block);
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXd k =
        extended_kernel(t_star, reference_.times(j), kernel_width_, reference_.dims());
    out += k * solve_weights_.segment(j * block, block);
  }
  return out;
}

Trajectory adapt_kmp(const ProbRefTrajectory& ref, const Constraints& constraints,
                     const Hyperparams& theta) {
  const ProbRefTrajectory augmented =
      insert_constraints(ref, constraints, default_constraint_eps(ref));
  const KmpModel model(augmented, theta.kernel_width(), theta.regularization());

  const int dims = ref.dims();
  Trajectory out;
  out.times = Eigen::VectorXd::LinSpaced(kEncoderSamples, ref.times(0),
                                         ref.times(ref.samples() - 1));
  out.positions.resize(kEncoderSamples, dims);
  out.velocities.resize(kEncoderSamples, dims);
  for (int i = 0; i < kEncoderSamples; ++i) {
    const Eigen::VectorXd mu = model.predict(out.times(i));
    if (!mu.allFinite()) throw std::runtime_error("non-finite KMP prediction");
    out.positions.row(i) = mu.head(dims);
    out.velocities.row(i) = mu.tail(dims);
  }
  return out;
}

}  // namespace autolfd
