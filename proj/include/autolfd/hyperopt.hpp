#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "autolfd/hyperparams.hpp"

namespace autolfd {

// Cost of an adaptation as a function of the hyperparameters, evaluated in
// log10 coordinates.
using LossFn = std::function<double(const Hyperparams&)>;

struct Observation {
  Hyperparams theta;
  double cost = 0.0;
};

struct ObservationSet {
  std::vector<Observation> items;

  int size() const { return static_cast<int>(items.size()); }
  const Observation& incumbent() const;
  void append(const Hyperparams& theta, double cost);
};

// Central finite differences in log10 coordinates; the stencil must stay in
// bounds and the loss must be finite at all four points.
Eigen::Vector2d fd_gradient(const LossFn& loss, const Hyperparams& theta, double step = 1e-3);

struct GdResult {
  Hyperparams best;
  std::vector<Observation> history;  // accepted iterates, cost non-increasing
};

// Projected gradient descent with backtracking: a step that does not improve
// the cost halves the rate and is retried; 30 updates by default.
GdResult gd_optimize(const LossFn& loss, const Hyperparams& theta0, double learning_rate,
                     int steps, const HyperBounds& bounds = {}, double fd_step = 1e-3);

// Matern-5/2 GP over log10 hyperparameters with per-dimension length scales
// selected on a fixed 10x10 grid by marginal likelihood; noise 1e-6.
class Surrogate {
 public:
  static Surrogate fit(const ObservationSet& observations);

  // Predictive mean and standard deviation at a point.
  std::pair<double, double> predict(const Hyperparams& theta) const;

  const Eigen::Vector2d& length_scales() const { return length_scales_; }
  double signal_variance() const { return signal_variance_; }

 private:
  Eigen::MatrixXd inputs_;  // n x 2
  Eigen::VectorXd centered_;
  double mean_ = 0.0;
  Eigen::Vector2d length_scales_{1.0, 1.0};
  double signal_variance_ = 1.0;
  double noise_variance_ = 1e-6;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::VectorXd alpha_;

  double kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;
};

inline Surrogate surrogate_fit(const ObservationSet& observations) {
  return Surrogate::fit(observations);
}

// Closed-form EI: (best - mean) Phi(z) + stddev phi(z), z = (best - mean)/stddev.
double expected_improvement(double mean, double stddev, double best);

struct BoResult {
  Hyperparams best;
  ObservationSet observations;
};

// Seeded Latin-hypercube design (8 points) followed by EI maximization over
// 1000 seeded uniform candidates per iteration; non-finite losses recorded
// as a large finite penalty.
BoResult bo_optimize(const LossFn& loss, const HyperBounds& bounds, int budget,
                     std::uint64_t seed);

inline constexpr int kGdStepBudget = 30;
inline constexpr int kBoEvaluationBudget = 100;
inline constexpr int kBoInitialDesign = 8;
inline constexpr int kBoCandidates = 1000;

}  // namespace autolfd
