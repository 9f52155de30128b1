#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "autolfd/gmm.hpp"
#include "autolfd/linalg.hpp"
#include "autolfd/rng.hpp"

using namespace autolfd;

namespace {

Eigen::MatrixXd gaussian_blob(int n, const Eigen::VectorXd& center, double stddev, Rng& rng) {
  Eigen::MatrixXd samples(n, center.size());
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < center.size(); ++d) samples(i, d) = center(d) + stddev * rng.normal();
  return samples;
}

void check_monotone(const std::vector<double>& ll) {
  for (std::size_t i = 1; i < ll.size(); ++i)
    CHECK(ll[i] >= ll[i - 1] - 1e-9 * std::max(1.0, std::abs(ll[i - 1])));
}

}  // namespace

TEST_CASE("single-component fit recovers sample mean and covariance") {
  Rng rng(10);
  Eigen::VectorXd center(3);
  center << 1.0, -2.0, 0.5;
  const Eigen::MatrixXd samples = gaussian_blob(300, center, 1.3, rng);

  const GmmFitResult fit = fit_gmm(samples, 1, 0);
  const Eigen::VectorXd mean = samples.colwise().mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < samples.rows(); ++i) {
    const Eigen::VectorXd diff = samples.row(i).transpose() - mean;
    cov += diff * diff.transpose();
  }
  cov /= samples.rows();

  CHECK((fit.mixture.means[0] - mean).norm() < 1e-9);
  CHECK((fit.mixture.covariances[0] - floor_covariance(cov, kCovarianceFloor)).norm() < 1e-9);
  CHECK(fit.mixture.weights(0) == doctest::Approx(1.0));
  check_monotone(fit.log_likelihoods);
}

TEST_CASE("two well-separated clusters are recovered") {
  Rng rng(11);
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd c1 = Eigen::VectorXd::Constant(3, 10.0);
  Eigen::MatrixXd samples(400, 3);
  samples.topRows(200) = gaussian_blob(200, c0, 1.0, rng);
  samples.bottomRows(200) = gaussian_blob(200, c1, 1.0, rng);

  const GmmFitResult fit = fit_gmm(samples, 2, 3);
  check_monotone(fit.log_likelihoods);
  double e0 = std::min((fit.mixture.means[0] - c0).norm(), (fit.mixture.means[1] - c0).norm());
  double e1 = std::min((fit.mixture.means[0] - c1).norm(), (fit.mixture.means[1] - c1).norm());
  CHECK(e0 < 0.5);
  CHECK(e1 < 0.5);
}

TEST_CASE("log-likelihood is monotone on letter data") {
  const auto demos = synth_letters("G", 5, 21);
  Eigen::MatrixXd samples(5 * 50, 5);
  int row = 0;
  for (const auto& demo : demos) {
    const Trajectory traj = resample(demo.trajectory, 50);
    for (int i = 0; i < 50; ++i) {
      samples(row, 0) = traj.times(i);
      samples.block(row, 1, 1, 2) = traj.positions.row(i);
      samples.block(row, 3, 1, 2) = traj.velocities.row(i);
      ++row;
    }
  }
  const GmmFitResult fit = fit_gmm(samples, 6, 17);
  REQUIRE(fit.log_likelihoods.size() >= 2);
  check_monotone(fit.log_likelihoods);
}

TEST_CASE("component count larger than sample budget is rejected") {
  Rng rng(12);
  const Eigen::MatrixXd samples = gaussian_blob(10, Eigen::VectorXd::Zero(2), 1.0, rng);
  CHECK_THROWS(fit_gmm(samples, 11, 0));
  CHECK_THROWS(fit_gmm(samples, 0, 0));
}

TEST_CASE("gmr of a single component matches the closed-form conditional") {
  // Hand-built joint Gaussian over (t, y1, y2).
  GaussianMixture gmm;
  gmm.weights = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd mean(3);
  mean << 1.0, 2.0, -1.0;
  Eigen::MatrixXd cov(3, 3);
  cov << 2.0, 0.3, -0.1, 0.3, 1.5, 0.4, -0.1, 0.4, 1.2;
  gmm.means.push_back(mean);
  gmm.covariances.push_back(cov);

  const double t = 1.8;
  auto [m, c] = gmr(gmm, t);

  // Independent linear-Gaussian conditional.
  const Eigen::VectorXd cross = cov.block(1, 0, 2, 1);
  const Eigen::VectorXd expect_m = mean.tail(2) + cross * ((t - mean(0)) / cov(0, 0));
  const Eigen::MatrixXd expect_c =
      cov.block(1, 1, 2, 2) - cross * cross.transpose() / cov(0, 0);

  CHECK((m - expect_m).norm() < 1e-12);
  CHECK((c - expect_c).norm() < 1e-9);
}

TEST_CASE("gmr at a component's time mean is dominated by that component") {
  GaussianMixture gmm;
  gmm.weights = Eigen::VectorXd::Constant(2, 0.5);
  Eigen::VectorXd m0(3), m1(3);
  m0 << 0.0, 1.0, 2.0;
  m1 << 10.0, -3.0, 4.0;
  gmm.means = {m0, m1};
  gmm.covariances = {0.01 * Eigen::MatrixXd::Identity(3, 3),
                     0.01 * Eigen::MatrixXd::Identity(3, 3)};
  auto [mean, cov] = gmr(gmm, 0.0);
  CHECK((mean - m0.tail(2)).norm() < 1e-6);
}

TEST_CASE("gmr output covariance is symmetric and floored") {
  const auto demos = synth_letters("A", 5, 3);
  const ProbRefTrajectory ref = extract_reference(demos, 5, 40, 2);
  for (const auto& cov : ref.covariances) {
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(min_eigenvalue(cov) >= kCovarianceFloor - 1e-12);
  }
}

TEST_CASE("gmr far outside the support fails") {
  GaussianMixture gmm;
  gmm.weights = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd mean(3);
  mean << 0.0, 1.0, 1.0;
  gmm.means.push_back(mean);
  gmm.covariances.push_back(1e-4 * Eigen::MatrixXd::Identity(3, 3));
  CHECK_THROWS_WITH(gmr(gmm, 1e6), doctest::Contains("outside support"));
}

TEST_CASE("reference means stay inside the demo bounding box nearly everywhere") {
  const auto demos = synth_letters("A", 5, 9);
  const int n_ref = 60;
  const ProbRefTrajectory ref = extract_reference(demos, 8, n_ref, 4);

  int inside = 0;
  for (int i = 0; i < n_ref; ++i) {
    // Per-time bounding box over the resampled demos.
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e300);
    Eigen::Vector2d hi = Eigen::Vector2d::Constant(-1e300);
    for (const auto& demo : demos) {
      const Trajectory traj = resample(demo.trajectory, n_ref);
      lo = lo.cwiseMin(traj.positions.row(i).transpose());
      hi = hi.cwiseMax(traj.positions.row(i).transpose());
    }
    const Eigen::Vector2d pos = ref.means[i].head(2);
    const Eigen::Vector2d pad = 0.05 * (hi - lo) + Eigen::Vector2d::Constant(1e-6);
    if ((pos.array() >= (lo - pad).array()).all() && (pos.array() <= (hi + pad).array()).all())
      ++inside;
  }
  CHECK(inside >= static_cast<int>(0.95 * n_ref));
}

TEST_CASE("duplicated demonstrations give a floor-dominated covariance") {
  auto demos = synth_letters("S", 1, 5);
  std::vector<Demonstration> dup{demos[0], demos[0], demos[0]};
  const ProbRefTrajectory ref = extract_reference(dup, 3, 30, 6);
  const double scale = demos[0].trajectory.bbox_diagonal();
  for (const auto& cov : ref.covariances)
    CHECK(cov.trace() <= 1e-4 * scale * scale + 40.0 * kCovarianceFloor);
}

TEST_CASE("extract_reference is deterministic and order invariant") {
  const auto demos = synth_letters("U", 4, 13);
  const ProbRefTrajectory a = extract_reference(demos, 4, 25, 7);
  const ProbRefTrajectory b = extract_reference(demos, 4, 25, 7);
  std::vector<Demonstration> reversed(demos.rbegin(), demos.rend());
  const ProbRefTrajectory c = extract_reference(reversed, 4, 25, 7);
  for (int i = 0; i < a.samples(); ++i) {
    CHECK((a.means[i] - b.means[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.means[i] - c.means[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.covariances[i] - c.covariances[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("reference json round trip") {
  const auto demos = synth_letters("C", 3, 1);
  const ProbRefTrajectory ref = extract_reference(demos, 3, 12, 0);
  const std::string path =
      (std::filesystem::temp_directory_path() / "autolfd_ref.json").string();
  save_reference_json(ref, path);
  const ProbRefTrajectory back = load_reference_json(path);
  CHECK((back.times - ref.times).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < ref.samples(); ++i) {
    CHECK((back.means[i] - ref.means[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.covariances[i] - ref.covariances[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}
