#include "autolfd/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "autolfd/linalg.hpp"
#include "autolfd/rng.hpp"

namespace autolfd {

namespace {

Eigen::Vector2d as_vec(const Hyperparams& theta) {
  return {theta.log10_kernel_width, theta.log10_regularization};
}

Hyperparams as_theta(const Eigen::Vector2d& v) { return Hyperparams{v(0), v(1)}; }

double norm_pdf(double z) { return std::exp(-0.5 * z * z) * 0.3989422804014326779399461; }
double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440084436); }

}  // namespace

const Observation& ObservationSet::incumbent() const {
  if (items.empty()) throw std::runtime_error("empty observation set");
  int best = 0;
  for (int i = 1; i < size(); ++i)
    if (items[i].cost < items[best].cost) best = i;
  return items[best];
}

void ObservationSet::append(const Hyperparams& theta, double cost) {
  if (!std::isfinite(cost)) throw std::invalid_argument("observation cost must be finite");
  items.push_back({theta, cost});
}

Eigen::Vector2d fd_gradient(const LossFn& loss, const Hyperparams& theta, double step) {
  if (step <= 0.0) throw std::invalid_argument("fd step must be positive");
  Eigen::Vector2d grad;
  const Eigen::Vector2d center = as_vec(theta);
  for (int d = 0; d < 2; ++d) {
    Eigen::Vector2d hi = center;
    Eigen::Vector2d lo = center;
    hi(d) += step;
    lo(d) -= step;
    const double f_hi = loss(as_theta(hi));
    const double f_lo = loss(as_theta(lo));
    if (!std::isfinite(f_hi) || !std::isfinite(f_lo))
      throw std::runtime_error("non-finite loss in gradient stencil at log10 theta (" +
                               std::to_string(hi(0)) + ", " + std::to_string(hi(1)) + ")");
    grad(d) = (f_hi - f_lo) / (2.0 * step);
  }
  return grad;
}

GdResult gd_optimize(const LossFn& loss, const Hyperparams& theta0, double learning_rate,
                     int steps, const HyperBounds& bounds, double fd_step) {
  if (!bounds.contains(theta0)) throw std::invalid_argument("theta0 outside bounds");
  if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be nonnegative");

  // Iterates stay one stencil step inside the box so the gradient is always
  // evaluable.
  auto project = [&](Eigen::Vector2d v) {
    v(0) = std::clamp(v(0), bounds.lo.log10_kernel_width + fd_step,
                      bounds.hi.log10_kernel_width - fd_step);
    v(1) = std::clamp(v(1), bounds.lo.log10_regularization + fd_step,
                      bounds.hi.log10_regularization - fd_step);
    return v;
  };

  GdResult result;
  Eigen::Vector2d current = project(as_vec(theta0));
  double current_cost = loss(as_theta(current));
  if (!std::isfinite(current_cost)) throw std::runtime_error("non-finite loss at theta0");
  result.history.push_back({as_theta(current), current_cost});

  double rate = learning_rate;
  for (int step = 0; step < steps; ++step) {
    if (rate == 0.0) break;
    const Eigen::Vector2d grad = fd_gradient(loss, as_theta(current), fd_step);
    bool accepted = false;
    for (int backtrack = 0; backtrack < 16; ++backtrack) {
      const Eigen::Vector2d candidate = project(current - rate * grad);
      if ((candidate - current).norm() < 1e-15) break;
      const double cost = loss(as_theta(candidate));
      if (std::isfinite(cost) && cost <= current_cost) {
        current = candidate;
        current_cost = cost;
        result.history.push_back({as_theta(current), current_cost});
        accepted = true;
        break;
      }
      rate *= 0.5;
    }
    if (!accepted) break;
  }
  result.best = result.history.back().theta;
  return result;
}

// ---------------------------------------------------------------------------
// Surrogate
// ---------------------------------------------------------------------------

double Surrogate::kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
  double rho2 = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double diff = (a(d) - b(d)) / length_scales_(d);
    rho2 += diff * diff;
  }
  const double rho = std::sqrt(5.0 * rho2);
  return signal_variance_ * (1.0 + rho + 5.0 * rho2 / 3.0) * std::exp(-rho);
}

Surrogate Surrogate::fit(const ObservationSet& observations) {
  const int n = observations.size();
  if (n < 2) throw std::invalid_argument("surrogate needs at least 2 observations");

  Surrogate s;
  s.inputs_.resize(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    s.inputs_.row(i) = as_vec(observations.items[i].theta);
    y(i) = observations.items[i].cost;
  }

  const Eigen::Vector2d range(
      std::max(s.inputs_.col(0).maxCoeff() - s.inputs_.col(0).minCoeff(), 1e-6),
      std::max(s.inputs_.col(1).maxCoeff() - s.inputs_.col(1).minCoeff(), 1e-6));
  if (range.maxCoeff() <= 1e-6) throw std::invalid_argument("degenerate observations");

  s.mean_ = y.mean();
  const double var_y = std::max((y.array() - s.mean_).square().mean(), 1e-12);

  // Fixed 10x10 log grid: a shared length-scale factor applied to the
  // per-dimension input ranges crossed with a signal-variance factor.
  const auto grid = [](double lo, double hi, int count, int idx) {
    return std::pow(10.0, lo + (hi - lo) * idx / (count - 1));
  };

  double best_ml = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10; ++i) {
    const double ls_factor = grid(-1.0, 0.7, 10, i);
    for (int j = 0; j < 10; ++j) {
      const double sv_factor = grid(-2.0, 1.0, 10, j);
      Surrogate trial = s;
      trial.length_scales_ = ls_factor * range;
      trial.signal_variance_ = sv_factor * var_y;
      Eigen::MatrixXd gram(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c <= r; ++c) {
          const double v = trial.kernel(trial.inputs_.row(r), trial.inputs_.row(c));
          gram(r, c) = v;
          gram(c, r) = v;
        }
      gram.diagonal().array() += trial.noise_variance_;
      Eigen::LLT<Eigen::MatrixXd> llt(gram);
      if (llt.info() != Eigen::Success) continue;
      const Eigen::VectorXd centered = y.array() - trial.mean_;
      const Eigen::VectorXd alpha = llt.solve(centered);
      double log_det = 0.0;
      for (int r = 0; r < n; ++r) log_det += 2.0 * std::log(llt.matrixLLT()(r, r));
      const double ml = -0.5 * centered.dot(alpha) - 0.5 * log_det;
      if (ml > best_ml) {
        best_ml = ml;
        s.length_scales_ = trial.length_scales_;
        s.signal_variance_ = trial.signal_variance_;
        s.centered_ = centered;
        s.factor_ = llt;
        s.alpha_ = alpha;
      }
    }
  }
  if (!std::isfinite(best_ml))
    throw std::runtime_error("surrogate fit failed for all grid candidates");
  return s;
}

std::pair<double, double> Surrogate::predict(const Hyperparams& theta) const {
  const int n = static_cast<int>(inputs_.rows());
  const Eigen::Vector2d x = as_vec(theta);
  Eigen::VectorXd k_star(n);
  for (int i = 0; i < n; ++i) k_star(i) = kernel(x, inputs_.row(i));
  const double mean = mean_ + k_star.dot(alpha_);
  const double reduction = k_star.dot(factor_.solve(k_star));
  const double var = std::max(signal_variance_ + noise_variance_ - reduction, 0.0);
  return {mean, std::sqrt(var)};
}

double expected_improvement(double mean, double stddev, double best) {
  if (stddev < 0.0) throw std::invalid_argument("stddev must be nonnegative");
  const double gap = best - mean;
  if (stddev == 0.0) return std::max(gap, 0.0);
  const double z = gap / stddev;
  return gap * norm_cdf(z) + stddev * norm_pdf(z);
}

BoResult bo_optimize(const LossFn& loss, const HyperBounds& bounds, int budget,
                     std::uint64_t seed) {
  if (budget < kBoInitialDesign)
    throw std::invalid_argument("budget smaller than the initial design");

  Rng rng(Rng::mix(seed, 0xb0b0ULL));
  const Eigen::Vector2d lo = as_vec(bounds.lo);
  const Eigen::Vector2d hi = as_vec(bounds.hi);

  auto record = [&](ObservationSet& obs, const Hyperparams& theta, double raw) {
    double cost = raw;
    if (!std::isfinite(cost)) {
      double worst = 1.0;
      for (const auto& o : obs.items) worst = std::max(worst, std::abs(o.cost));
      cost = 10.0 * worst;
    }
    obs.append(theta, cost);
  };

  // Latin hypercube over the box: one stratum per point and dimension.
  ObservationSet observations;
  std::vector<int> strata0(kBoInitialDesign), strata1(kBoInitialDesign);
  for (int i = 0; i < kBoInitialDesign; ++i) strata0[i] = strata1[i] = i;
  for (int i = kBoInitialDesign - 1; i > 0; --i) {
    std::swap(strata0[i], strata0[rng.uniform_int(i + 1)]);
    std::swap(strata1[i], strata1[rng.uniform_int(i + 1)]);
  }
  for (int i = 0; i < kBoInitialDesign; ++i) {
    Eigen::Vector2d x;
    x(0) = lo(0) + (hi(0) - lo(0)) * (strata0[i] + rng.uniform()) / kBoInitialDesign;
    x(1) = lo(1) + (hi(1) - lo(1)) * (strata1[i] + rng.uniform()) / kBoInitialDesign;
    const Hyperparams theta = as_theta(x);
    double raw = std::numeric_limits<double>::quiet_NaN();
    try {
      raw = loss(theta);
    } catch (const std::exception&) {
    }
    record(observations, theta, raw);
  }

  while (observations.size() < budget) {
    const Surrogate surrogate = Surrogate::fit(observations);
    const double best_cost = observations.incumbent().cost;

    Hyperparams next = observations.incumbent().theta;
    double best_ei = -1.0;
    for (int c = 0; c < kBoCandidates; ++c) {
      Eigen::Vector2d x;
      x(0) = rng.uniform(lo(0), hi(0));
      x(1) = rng.uniform(lo(1), hi(1));
      const Hyperparams candidate = as_theta(x);
      const auto [mean, stddev] = surrogate.predict(candidate);
      const double ei = expected_improvement(mean, stddev, best_cost);
      if (ei > best_ei) {
        best_ei = ei;
        next = candidate;
      }
    }

    double raw = std::numeric_limits<double>::quiet_NaN();
    try {
      raw = loss(next);
    } catch (const std::exception&) {
    }
    record(observations, next, raw);
  }

  return {observations.incumbent().theta, std::move(observations)};
}

}  // namespace autolfd
