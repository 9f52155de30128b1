#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "autolfd/metrics.hpp"
#include "autolfd/rng.hpp"

using namespace autolfd;

namespace {

Trajectory random_trajectory(int n, int o, Rng& rng, double scale = 1.0) {
  Trajectory traj;
  traj.times = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  traj.positions.resize(n, o);
  traj.velocities.resize(n, o);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < o; ++d) {
      traj.positions(i, d) = scale * rng.normal();
      traj.velocities(i, d) = scale * rng.normal();
    }
  return traj;
}

// Brute-force oracle: enumerate every monotone coupling of two polylines and
// take the cheapest maximal link.
double frechet_by_enumeration(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  struct State {
    int i, j;
  };
  std::vector<std::vector<double>> memo(a.rows(), std::vector<double>(b.rows(), -1.0));
  std::function<double(int, int)> walk = [&](int i, int j) -> double {
    const double d = (a.row(i) - b.row(j)).norm();
    if (i == static_cast<int>(a.rows()) - 1 && j == static_cast<int>(b.rows()) - 1) return d;
    if (memo[i][j] >= 0.0) return memo[i][j];
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < a.rows()) best = std::min(best, walk(i + 1, j));
    if (j + 1 < b.rows()) best = std::min(best, walk(i, j + 1));
    if (i + 1 < a.rows() && j + 1 < b.rows()) best = std::min(best, walk(i + 1, j + 1));
    return memo[i][j] = std::max(d, best);
  };
  return walk(0, 0);
}

EncoderParams tiny_encoder(int input_dim, Rng& rng) {
  EncoderParams params;
  Eigen::MatrixXd w(8, input_dim);
  for (int r = 0; r < w.rows(); ++r)
    for (int c = 0; c < w.cols(); ++c) w(r, c) = 0.3 * rng.normal();
  params.weights.push_back(w);
  params.biases.push_back(Eigen::VectorXd::Zero(8));
  params.input_mean = Eigen::VectorXd::Zero(input_dim);
  params.input_scale = Eigen::VectorXd::Ones(input_dim);
  return params;
}

}  // namespace

TEST_CASE("mse is zero on identical inputs") {
  Rng rng(1);
  const Trajectory traj = random_trajectory(10, 2, rng);
  CHECK(mse(stacked_rows(traj), traj) == 0.0);
}

TEST_CASE("mse of a constant offset is the squared offset norm") {
  Rng rng(2);
  const Trajectory traj = random_trajectory(12, 2, rng);
  Trajectory shifted = traj;
  shifted.positions.array() += 0.7;
  shifted.velocities.array() -= 0.3;
  const double offset2 = 2 * 0.7 * 0.7 + 2 * 0.3 * 0.3;
  CHECK(mse(stacked_rows(traj), shifted) == doctest::Approx(offset2).epsilon(1e-12));
}

TEST_CASE("mse matches a hand-rolled summation oracle") {
  Rng rng(3);
  const Trajectory a = random_trajectory(5, 1, rng);
  const Trajectory b = random_trajectory(5, 1, rng);
  double expected = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double dp = a.positions(i, 0) - b.positions(i, 0);
    const double dv = a.velocities(i, 0) - b.velocities(i, 0);
    expected += dp * dp + dv * dv;
  }
  expected /= 5.0;
  CHECK(mse(stacked_rows(a), b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mle equals mse under identity covariances and scales inversely") {
  Rng rng(4);
  const Trajectory a = random_trajectory(8, 2, rng);
  const Trajectory b = random_trajectory(8, 2, rng);

  ProbRefTrajectory ref;
  ref.times = a.times;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd mean(4);
    mean.head(2) = a.positions.row(i);
    mean.tail(2) = a.velocities.row(i);
    ref.means.push_back(mean);
    ref.covariances.push_back(Eigen::MatrixXd::Identity(4, 4));
  }
  CHECK(mle_cost(ref, b) == doctest::Approx(mse(stacked_rows(a), b)).epsilon(1e-12));
  CHECK(mle_cost(ref, a) == 0.0);

  for (auto& cov : ref.covariances) cov *= 2.0;
  CHECK(mle_cost(ref, b) == doctest::Approx(0.5 * mse(stacked_rows(a), b)).epsilon(1e-12));
}

TEST_CASE("discrete frechet base cases") {
  Eigen::MatrixXd p(1, 2), q(1, 2);
  p << 0.0, 0.0;
  q << 3.0, 4.0;
  CHECK(discrete_frechet(p, p) == 0.0);
  CHECK(discrete_frechet(p, q) == doctest::Approx(5.0));
}

TEST_CASE("discrete frechet equals brute-force coupling enumeration") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + rng.uniform_int(5);
    const int m = 2 + rng.uniform_int(5);
    Eigen::MatrixXd a(n, 2), b(m, 2);
    for (int i = 0; i < n; ++i) a.row(i) << rng.normal(), rng.normal();
    for (int j = 0; j < m; ++j) b.row(j) << rng.normal(), rng.normal();
    CHECK(discrete_frechet(a, b) ==
          doctest::Approx(frechet_by_enumeration(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("discrete frechet endpoint lower bound") {
  Rng rng(6);
  const Trajectory a = random_trajectory(9, 2, rng);
  const Trajectory b = random_trajectory(7, 2, rng);
  const double d = discrete_frechet(a.positions, b.positions);
  CHECK(d >= (a.positions.row(0) - b.positions.row(0)).norm() - 1e-12);
  CHECK(d >= (a.positions.row(8) - b.positions.row(6)).norm() - 1e-12);
}

TEST_CASE("shape distortion vanishes for a similarity transform") {
  const Trajectory demo = letter_template("A", 60);
  const double angle = 0.8;
  Eigen::Matrix2d rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Trajectory moved = demo;
  moved.positions = (1.7 * demo.positions * rot.transpose()).rowwise() +
                    Eigen::RowVector2d(5.0, -2.0);
  auto [vel, acc] = finite_differences(moved.positions, moved.times);
  moved.velocities = vel;
  CHECK(shape_distortion(demo, moved) < 1e-9);
}

TEST_CASE("shape distortion is positive for a displaced point") {
  const Trajectory demo = letter_template("G", 60);
  Trajectory bent = demo;
  bent.positions(30, 0) += 0.1 * demo.bbox_diagonal();
  CHECK(shape_distortion(demo, bent) > 0.0);
}

TEST_CASE("zigzag trajectory triggers the jerk term") {
  const Trajectory demo = letter_template("S", 80);
  Trajectory zigzag = demo;
  for (int i = 0; i < 80; ++i)
    zigzag.positions(i, 1) += (i % 2 == 0 ? 1.0 : -1.0) * 0.05 * demo.bbox_diagonal();

  // Direct second-difference oracle for the jerk ratio term (per-curve
  // scale-normalized, matching the distortion definition).
  auto msd = [](const Eigen::MatrixXd& x) {
    double acc = 0.0;
    for (int i = 1; i + 1 < x.rows(); ++i)
      acc += (x.row(i + 1) - 2.0 * x.row(i) + x.row(i - 1)).squaredNorm();
    return acc / (x.rows() - 2);
  };
  auto diag2 = [](const Trajectory& t) {
    const double d = t.bbox_diagonal();
    return d * d;
  };
  const double ratio =
      (msd(zigzag.positions) / diag2(zigzag)) / (msd(demo.positions) / diag2(demo));
  REQUIRE(ratio > 2.0);
  CHECK(shape_distortion(demo, zigzag) >= ratio - 2.0 - 1e-9);
}

TEST_CASE("latent metric is a pseudometric") {
  Rng rng(7);
  const int n = 6, o = 2;
  EncoderParams params = tiny_encoder(2 * o * n, rng);
  const Trajectory a = random_trajectory(n, o, rng);
  const Trajectory b = random_trajectory(n, o, rng);
  const Trajectory c = random_trajectory(n, o, rng);

  CHECK(latent_metric(params, a, a) == 0.0);
  CHECK(latent_metric(params, a, b) == latent_metric(params, b, a));
  CHECK(latent_metric(params, a, c) <=
        latent_metric(params, a, b) + latent_metric(params, b, c) + 1e-12);
}

TEST_CASE("metric report serializes all fields") {
  MetricReport report{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::string j = report_to_json(report);
  CHECK(j.find("\"mse\"") != std::string::npos);
  CHECK(j.find("\"shape_distortion\"") != std::string::npos);
}
