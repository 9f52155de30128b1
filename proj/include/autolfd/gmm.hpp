#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "autolfd/trajectory.hpp"

namespace autolfd {

// Mixture over time-augmented samples [t, position, velocity] of size 1+2O.
struct GaussianMixture {
  Eigen::VectorXd weights;                   // K, sums to 1
  std::vector<Eigen::VectorXd> means;        // K of dim D
  std::vector<Eigen::MatrixXd> covariances;  // K of D x D, floored PSD

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
};

struct GmmFitResult {
  GaussianMixture mixture;
  std::vector<double> log_likelihoods;  // one entry per EM iteration
  std::vector<std::string> warnings;
};

// Per-timestep Gaussian over [position; velocity], the KMP reference.
struct ProbRefTrajectory {
  Eigen::VectorXd times;                     // N, strictly increasing
  std::vector<Eigen::VectorXd> means;        // N of dim 2O
  std::vector<Eigen::MatrixXd> covariances;  // N of 2O x 2O

  int samples() const { return static_cast<int>(times.size()); }
  int dims() const { return means.empty() ? 0 : static_cast<int>(means.front().size()) / 2; }

  // Means reinterpreted as a Trajectory (position block, velocity block).
  Trajectory mean_trajectory() const;

  void validate() const;
};

inline constexpr double kCovarianceFloor = 1e-6;

// EM from a k-means++ seeded initialization.  Stops when the relative
// log-likelihood change drops below tol or after max_iters.
GmmFitResult fit_gmm(const Eigen::MatrixXd& samples, int components, std::uint64_t seed,
                     int max_iters = 200, double tol = 1e-8,
                     double covariance_floor = kCovarianceFloor);

// Conditions [position; velocity] on time.  Returns the responsibility-
// weighted conditional mean and the law-of-total-variance covariance,
// symmetrized and floored.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> gmr(const GaussianMixture& mixture, double t);

// GMR evaluated on a uniform grid of n_ref times after aligning the
// demonstrations to a shared duration.
ProbRefTrajectory extract_reference(const std::vector<Demonstration>& demos, int components,
                                    int n_ref, std::uint64_t seed);

// JSON serialization: {times:[...], means:[[...]], covariances:[[[...]]]}.
std::string reference_to_json(const ProbRefTrajectory& ref);
ProbRefTrajectory reference_from_json(const std::string& text);
void save_reference_json(const ProbRefTrajectory& ref, const std::string& path);
ProbRefTrajectory load_reference_json(const std::string& path);

}  // namespace autolfd
