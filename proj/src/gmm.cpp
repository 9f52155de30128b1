#include "autolfd/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "autolfd/linalg.hpp"
#include "autolfd/rng.hpp"

namespace autolfd {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct ComponentCache {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_norm = 0.0;  // -0.5 * (D log 2pi + log|Sigma|)
};

ComponentCache cache_component(const Eigen::MatrixXd& covariance) {
  ComponentCache cache;
  cache.llt = cholesky_with_jitter(covariance, "gmm component covariance not PD");
  const Eigen::MatrixXd& l = cache.llt.matrixLLT();
  double log_det = 0.0;
  for (int i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  cache.log_norm = -0.5 * (covariance.rows() * kLog2Pi + log_det);
  return cache;
}

double log_density(const ComponentCache& cache, const Eigen::VectorXd& mean,
                   const Eigen::VectorXd& x) {
  const Eigen::VectorXd diff = x - mean;
  const Eigen::VectorXd solved = cache.llt.solve(diff);
  return cache.log_norm - 0.5 * diff.dot(solved);
}

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// k-means++ seeding followed by a few Lloyd iterations.
std::vector<int> kmeans_assignments(const Eigen::MatrixXd& samples, int k, Rng& rng) {
  const int n = static_cast<int>(samples.rows());
  std::vector<Eigen::VectorXd> centers;
  centers.push_back(samples.row(rng.uniform_int(n)));
  Eigen::VectorXd dist2 = (samples.rowwise() - centers[0].transpose()).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    const double total = dist2.sum();
    int pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (; pick < n - 1; ++pick) {
        target -= dist2(pick);
        if (target <= 0.0) break;
      }
    } else {
      pick = rng.uniform_int(n);
    }
    centers.push_back(samples.row(pick));
    dist2 = dist2.cwiseMin(
        (samples.rowwise() - centers.back().transpose()).rowwise().squaredNorm());
  }

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 20; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (samples.row(i).transpose() - centers[c]).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    for (int c = 0; c < k; ++c) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(samples.cols());
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (assign[i] == c) {
          sum += samples.row(i);
          ++count;
        }
      if (count > 0) centers[c] = sum / count;
    }
  }
  return assign;
}

}  // namespace

Trajectory ProbRefTrajectory::mean_trajectory() const {
  const int n = samples();
  const int o = dims();
  Trajectory traj;
  traj.times = times;
  traj.positions.resize(n, o);
  traj.velocities.resize(n, o);
  for (int i = 0; i < n; ++i) {
    traj.positions.row(i) = means[i].head(o);
    traj.velocities.row(i) = means[i].tail(o);
  }
  return traj;
}

void ProbRefTrajectory::validate() const {
  const int n = samples();
  if (n < 2) throw std::invalid_argument("reference needs at least 2 steps");
  if (static_cast<int>(means.size()) != n || static_cast<int>(covariances.size()) != n)
    throw std::invalid_argument("reference arrays disagree in length");
  for (int i = 1; i < n; ++i)
    if (!(times(i) > times(i - 1)))
      throw std::invalid_argument("reference times not strictly increasing");
  for (const auto& cov : covariances) {
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9)
      throw std::invalid_argument("reference covariance not symmetric");
  }
}

GmmFitResult fit_gmm(const Eigen::MatrixXd& samples, int components, std::uint64_t seed,
                     int max_iters, double tol, double covariance_floor) {
  const int n = static_cast<int>(samples.rows());
  const int d = static_cast<int>(samples.cols());
  if (components < 1) throw std::invalid_argument("need at least one component");
  if (n < components) throw std::invalid_argument("fewer samples than components");
  if (n < components * (d + 1))
    throw std::invalid_argument("too few samples for requested component count");

  GmmFitResult result;
  GaussianMixture& gmm = result.mixture;
  gmm.weights = Eigen::VectorXd::Constant(components, 1.0 / components);
  gmm.means.assign(components, Eigen::VectorXd::Zero(d));
  gmm.covariances.assign(components, Eigen::MatrixXd::Identity(d, d));

  Rng rng(seed);
  const std::vector<int> assign = kmeans_assignments(samples, components, rng);
  for (int c = 0; c < components; ++c) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (assign[i] == c) {
        mean += samples.row(i);
        ++count;
      }
    if (count == 0) {
      gmm.means[c] = samples.row(rng.uniform_int(n));
      gmm.weights(c) = 1.0 / n;
      continue;
    }
    mean /= count;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i)
      if (assign[i] == c) {
        const Eigen::VectorXd diff = samples.row(i).transpose() - mean;
        cov += diff * diff.transpose();
      }
    cov /= count;
    gmm.means[c] = mean;
    gmm.covariances[c] = floor_covariance(cov, covariance_floor);
    gmm.weights(c) = static_cast<double>(count) / n;
  }
  gmm.weights /= gmm.weights.sum();

  Eigen::MatrixXd resp(n, components);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    // E-step
    std::vector<ComponentCache> caches(components);
    for (int c = 0; c < components; ++c) caches[c] = cache_component(gmm.covariances[c]);

    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd logp(components);
      for (int c = 0; c < components; ++c)
        logp(c) = std::log(gmm.weights(c)) + log_density(caches[c], gmm.means[c], samples.row(i));
      const double lse = logsumexp(logp);
      ll += lse;
      resp.row(i) = (logp.array() - lse).exp();
    }
    result.log_likelihoods.push_back(ll);

    // M-step
    for (int c = 0; c < components; ++c) {
      const double mass = resp.col(c).sum();
      if (mass < 2.0) {
        result.warnings.push_back("component " + std::to_string(c) +
                                  " degenerate (responsibility mass " + std::to_string(mass) +
                                  "), covariance floored");
      }
      if (mass <= 0.0) {
        gmm.weights(c) = 1e-12;
        continue;
      }
      Eigen::VectorXd mean = (samples.transpose() * resp.col(c)) / mass;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd diff = samples.row(i).transpose() - mean;
        cov += resp(i, c) * diff * diff.transpose();
      }
      cov /= mass;
      gmm.weights(c) = mass / n;
      gmm.means[c] = mean;
      gmm.covariances[c] = floor_covariance(cov, covariance_floor);
    }
    gmm.weights /= gmm.weights.sum();

    if (iter > 0) {
      const double rel = std::abs(ll - prev_ll) / std::max(1.0, std::abs(prev_ll));
      if (rel < tol) break;
    }
    prev_ll = ll;
  }
  return result;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> gmr(const GaussianMixture& mixture, double t) {
  const int k = mixture.components();
  const int d = mixture.dim();
  const int out_dim = d - 1;
  if (out_dim < 1) throw std::invalid_argument("mixture dimension too small for conditioning");

  // Responsibilities from the time marginal.
  Eigen::VectorXd logw(k);
  for (int c = 0; c < k; ++c) {
    const double var = std::max(mixture.covariances[c](0, 0), kCovarianceFloor);
    const double diff = t - mixture.means[c](0);
    logw(c) = std::log(mixture.weights(c)) - 0.5 * (std::log(2.0 * M_PI * var) +
                                                    diff * diff / var);
  }
  const double lse = logsumexp(logw);
  if (!std::isfinite(lse) || lse < -700.0) throw std::runtime_error("query outside support");
  const Eigen::VectorXd h = (logw.array() - lse).exp();

  std::vector<Eigen::VectorXd> cond_means(k);
  std::vector<Eigen::MatrixXd> cond_covs(k);
  for (int c = 0; c < k; ++c) {
    const double var_t = std::max(mixture.covariances[c](0, 0), kCovarianceFloor);
    const Eigen::VectorXd cross = mixture.covariances[c].block(1, 0, out_dim, 1);
    const Eigen::MatrixXd out_cov = mixture.covariances[c].block(1, 1, out_dim, out_dim);
    cond_means[c] =
        mixture.means[c].tail(out_dim) + cross * ((t - mixture.means[c](0)) / var_t);
    cond_covs[c] = out_cov - cross * cross.transpose() / var_t;
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(out_dim);
  for (int c = 0; c < k; ++c) mean += h(c) * cond_means[c];
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(out_dim, out_dim);
  for (int c = 0; c < k; ++c)
    cov += h(c) * (cond_covs[c] + cond_means[c] * cond_means[c].transpose());
  cov -= mean * mean.transpose();

  return {mean, floor_covariance(cov, kCovarianceFloor)};
}

ProbRefTrajectory extract_reference(const std::vector<Demonstration>& demos, int components,
                                    int n_ref, std::uint64_t seed) {
  if (demos.size() < 2) throw std::invalid_argument("extract_reference needs >= 2 demonstrations");
  if (n_ref < 2) throw std::invalid_argument("n_ref must be >= 2");

  const int o = demos.front().trajectory.dims();
  double shared_duration = 0.0;
  for (const auto& demo : demos) {
    if (demo.trajectory.dims() != o)
      throw std::invalid_argument("demonstrations disagree in dimension");
    shared_duration += demo.trajectory.duration();
  }
  shared_duration /= static_cast<double>(demos.size());

  const int per_demo = kEncoderSamples;
  Eigen::MatrixXd samples(static_cast<int>(demos.size()) * per_demo, 1 + 2 * o);
  int row = 0;
  for (const auto& demo : demos) {
    const Trajectory traj = resample(demo.trajectory, per_demo);
    const double warp = shared_duration / traj.duration();
    for (int i = 0; i < per_demo; ++i) {
      samples(row, 0) = (traj.times(i) - traj.start_time()) * warp;
      samples.block(row, 1, 1, o) = traj.positions.row(i);
      samples.block(row, 1 + o, 1, o) = traj.velocities.row(i) / warp;
      ++row;
    }
  }

  // Canonical row order keeps the fit invariant to demonstration order.
  std::vector<int> order(samples.rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (int c = 0; c < samples.cols(); ++c) {
      if (samples(a, c) != samples(b, c)) return samples(a, c) < samples(b, c);
    }
    return false;
  });
  Eigen::MatrixXd sorted(samples.rows(), samples.cols());
  for (int i = 0; i < samples.rows(); ++i) sorted.row(i) = samples.row(order[i]);

  const GmmFitResult fit = fit_gmm(sorted, components, seed);

  ProbRefTrajectory ref;
  ref.times = Eigen::VectorXd::LinSpaced(n_ref, 0.0, shared_duration);
  ref.means.reserve(n_ref);
  ref.covariances.reserve(n_ref);
  for (int i = 0; i < n_ref; ++i) {
    auto [mean, cov] = gmr(fit.mixture, ref.times(i));
    ref.means.push_back(mean);
    ref.covariances.push_back(cov);
  }
  ref.validate();
  return ref;
}

std::string reference_to_json(const ProbRefTrajectory& ref) {
  nlohmann::json j;
  j["times"] = std::vector<double>(ref.times.data(), ref.times.data() + ref.times.size());
  for (const auto& m : ref.means)
    j["means"].push_back(std::vector<double>(m.data(), m.data() + m.size()));
  for (const auto& c : ref.covariances) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < c.rows(); ++r) {
      rows.push_back(std::vector<double>(c.row(r).begin(), c.row(r).end()));
    }
    j["covariances"].push_back(rows);
  }
  return j.dump(2);
}

ProbRefTrajectory reference_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ProbRefTrajectory ref;
  const auto times = j.at("times").get<std::vector<double>>();
  ref.times = Eigen::Map<const Eigen::VectorXd>(times.data(), times.size());
  for (const auto& m : j.at("means")) {
    const auto v = m.get<std::vector<double>>();
    ref.means.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
  }
  for (const auto& c : j.at("covariances")) {
    const int rows = static_cast<int>(c.size());
    Eigen::MatrixXd cov(rows, rows);
    for (int r = 0; r < rows; ++r) {
      const auto v = c[r].get<std::vector<double>>();
      cov.row(r) = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    }
    ref.covariances.push_back(cov);
  }
  ref.validate();
  return ref;
}

void save_reference_json(const ProbRefTrajectory& ref, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << reference_to_json(ref) << "\n";
}

ProbRefTrajectory load_reference_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return reference_from_json(text);
}

}  // namespace autolfd
