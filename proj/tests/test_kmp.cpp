#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "autolfd/kmp.hpp"
#include "autolfd/metrics.hpp"
#include "autolfd/rng.hpp"

using namespace autolfd;

namespace {

double se_kernel(double ti, double tj, double width) {
  const double d = ti - tj;
  return std::exp(-width * d * d);
}

ProbRefTrajectory letter_reference(const std::string& letter, int n_ref) {
  const auto demos = synth_letters(letter, 5, 17);
  return extract_reference(demos, 6, n_ref, 3);
}

Constraints via_constraints(const ProbRefTrajectory& ref) {
  const Trajectory mean = ref.mean_trajectory();
  const double diag = mean.bbox_diagonal();
  Constraints c;
  ConstraintPoint start, via, end;
  start.time = mean.start_time();
  start.position = mean.positions.row(0).transpose() + Eigen::Vector2d(0.1, -0.08) * diag;
  via.time = mean.start_time() + 0.5 * mean.duration();
  int mid = 0;
  (mean.times.array() - via.time).abs().minCoeff(&mid);
  via.position = mean.positions.row(mid).transpose() + Eigen::Vector2d(-0.06, 0.09) * diag;
  end.time = mean.end_time();
  end.position =
      mean.positions.row(mean.samples() - 1).transpose() + Eigen::Vector2d(0.12, 0.1) * diag;
  c.points = {start, via, end};
  return c;
}

}  // namespace

TEST_CASE("extended kernel at zero lag") {
  const double width = 3.0;
  const Eigen::MatrixXd block = extended_kernel(1.0, 1.0, width, 2);
  CHECK((block.topLeftCorner(2, 2) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(block.topRightCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(block.bottomLeftCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((block.bottomRightCorner(2, 2) - 2.0 * width * Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("extended kernel derivative blocks match finite differences") {
  Rng rng(5);
  const double width = 2.7;
  const double h = 1e-5;
  for (int trial = 0; trial < 25; ++trial) {
    const double ti = rng.uniform(0.0, 2.0);
    const double tj = rng.uniform(0.0, 2.0);
    const Eigen::MatrixXd block = extended_kernel(ti, tj, width, 1);

    const double dk_dtj =
        (se_kernel(ti, tj + h, width) - se_kernel(ti, tj - h, width)) / (2.0 * h);
    const double dk_dti =
        (se_kernel(ti + h, tj, width) - se_kernel(ti - h, tj, width)) / (2.0 * h);
    const double d2k = (se_kernel(ti + h, tj + h, width) - se_kernel(ti + h, tj - h, width) -
                        se_kernel(ti - h, tj + h, width) + se_kernel(ti - h, tj - h, width)) /
                       (4.0 * h * h);

    const double scale = std::max({1.0, std::abs(dk_dtj), std::abs(d2k)});
    CHECK(std::abs(block(0, 0) - se_kernel(ti, tj, width)) < 1e-12);
    CHECK(std::abs(block(0, 1) - dk_dtj) / scale < 1e-6);
    CHECK(std::abs(block(1, 0) - dk_dti) / scale < 1e-6);
    CHECK(std::abs(block(1, 1) - d2k) / scale < 1e-6);
  }
}

TEST_CASE("extended kernel transposes under argument swap") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const double ti = rng.uniform(0.0, 2.0);
    const double tj = rng.uniform(0.0, 2.0);
    const Eigen::MatrixXd a = extended_kernel(ti, tj, 4.0, 2);
    const Eigen::MatrixXd b = extended_kernel(tj, ti, 4.0, 2);
    CHECK((a - b.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("assembled gram matrix is symmetric") {
  const ProbRefTrajectory ref = letter_reference("A", 30);
  const int block = 2 * ref.dims();
  Eigen::MatrixXd gram(ref.samples() * block, ref.samples() * block);
  for (int i = 0; i < ref.samples(); ++i)
    for (int j = 0; j < ref.samples(); ++j)
      gram.block(i * block, j * block, block, block) =
          extended_kernel(ref.times(i), ref.times(j), 5.0, ref.dims());
  CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("insert_constraints with no constraints is the identity") {
  const ProbRefTrajectory ref = letter_reference("G", 25);
  const ProbRefTrajectory out = insert_constraints(ref, Constraints{}, 1e-6);
  for (int i = 0; i < ref.samples(); ++i) {
    CHECK((out.means[i] - ref.means[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((out.covariances[i] - ref.covariances[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("end-point constraint replaces exactly the last reference row") {
  const ProbRefTrajectory ref = letter_reference("A", 25);
  Constraints c;
  ConstraintPoint end;
  end.time = ref.times(ref.samples() - 1);
  end.position = Eigen::Vector2d(4.2, -1.1);
  c.points.push_back(end);
  const double eps = 1e-6;
  const ProbRefTrajectory out = insert_constraints(ref, c, eps);

  const int last = ref.samples() - 1;
  CHECK((out.means[last].head(2) - end.position).cwiseAbs().maxCoeff() == 0.0);
  CHECK((out.means[last].tail(2) - ref.means[last].tail(2)).cwiseAbs().maxCoeff() == 0.0);
  for (int d = 0; d < 2; ++d) CHECK(out.covariances[last](d, d) == eps);
  // Velocity block keeps the reference covariance.
  CHECK((out.covariances[last].bottomRightCorner(2, 2) -
         ref.covariances[last].bottomRightCorner(2, 2))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  for (int i = 0; i < last; ++i) {
    CHECK((out.means[i] - ref.means[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((out.covariances[i] - ref.covariances[i]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("via point touches exactly one row and conflicts are rejected") {
  const ProbRefTrajectory ref = letter_reference("S", 40);
  Constraints c;
  ConstraintPoint via;
  via.time = ref.times(0) + 0.5 * (ref.times(ref.samples() - 1) - ref.times(0));
  via.position = Eigen::Vector2d(1.0, 2.0);
  c.points.push_back(via);
  const ProbRefTrajectory out = insert_constraints(ref, c, 1e-6);
  int changed = 0;
  for (int i = 0; i < ref.samples(); ++i)
    if ((out.means[i] - ref.means[i]).cwiseAbs().maxCoeff() > 0.0 ||
        (out.covariances[i] - ref.covariances[i]).cwiseAbs().maxCoeff() > 0.0)
      ++changed;
  CHECK(changed == 1);

  Constraints conflicting = c;
  ConstraintPoint nearby = via;
  nearby.time = via.time + 1e-4;  // maps to the same grid row
  conflicting.points.push_back(nearby);
  CHECK_THROWS_WITH(insert_constraints(ref, conflicting, 1e-6),
                    doctest::Contains("conflicting"));
}

TEST_CASE("kmp prediction nearly interpolates the reference at small regularization") {
  const ProbRefTrajectory ref = letter_reference("A", 40);
  const double scale = ref.mean_trajectory().bbox_diagonal();
  const KmpModel model(ref, 10.0, 1e-8);
  for (int i = 0; i < ref.samples(); i += 7) {
    const Eigen::VectorXd mu = model.predict(ref.times(i));
    CHECK((mu.head(2) - ref.means[i].head(2)).norm() < 1e-3 * std::max(1.0, scale));
  }
}

TEST_CASE("kmp prediction is linear in the reference means") {
  const ProbRefTrajectory ref = letter_reference("G", 30);
  ProbRefTrajectory zero = ref;
  for (auto& m : zero.means) m.setZero();
  ProbRefTrajectory doubled = ref;
  for (auto& m : doubled.means) m *= 2.0;

  const KmpModel base(ref, 8.0, 1e-4);
  const KmpModel zeroed(zero, 8.0, 1e-4);
  const KmpModel scaled(doubled, 8.0, 1e-4);

  for (double t : {0.3, 0.9, 1.6}) {
    CHECK(zeroed.predict(t).cwiseAbs().maxCoeff() == 0.0);
    CHECK((2.0 * base.predict(t) - scaled.predict(t)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("kmp prediction vanishes far outside the support") {
  const ProbRefTrajectory ref = letter_reference("A", 30);
  const KmpModel model(ref, 10.0, 1e-6);
  double mean_norm = 0.0;
  for (const auto& m : ref.means) mean_norm = std::max(mean_norm, m.norm());
  const Eigen::VectorXd far = model.predict(ref.times(ref.samples() - 1) + 100.0);
  CHECK(far.norm() <= 1e-6 * mean_norm);
}

TEST_CASE("empty constraints reproduce the reference means") {
  const ProbRefTrajectory ref = letter_reference("A", kEncoderSamples);
  const Trajectory mean = ref.mean_trajectory();
  const Trajectory out = adapt_kmp(ref, Constraints{}, Hyperparams{1.0, -6.0});
  const double rmse =
      std::sqrt((out.positions - mean.positions).rowwise().squaredNorm().mean());
  CHECK(rmse <= 0.02 * mean.bbox_diagonal());
}

TEST_CASE("via-point adaptation passes near the desired points with tuned theta") {
  const ProbRefTrajectory ref = letter_reference("G", kEncoderSamples);
  const Constraints c = via_constraints(ref);
  const Trajectory out = adapt_kmp(ref, c, Hyperparams{1.0, -6.0});
  const double diag = ref.mean_trajectory().bbox_diagonal();
  for (const auto& point : c.points) {
    int nearest = 0;
    (out.times.array() - point.time).abs().minCoeff(&nearest);
    CHECK((out.positions.row(nearest).transpose() - point.position).norm() < 1e-2 * diag);
  }
}

TEST_CASE("doubling the reference means doubles the adaptation") {
  const ProbRefTrajectory ref = letter_reference("S", 50);
  ProbRefTrajectory doubled = ref;
  for (auto& m : doubled.means) m *= 2.0;
  const Trajectory a = adapt_kmp(ref, Constraints{}, Hyperparams{1.0, -5.0});
  const Trajectory b = adapt_kmp(doubled, Constraints{}, Hyperparams{1.0, -5.0});
  CHECK((2.0 * a.positions - b.positions).cwiseAbs().maxCoeff() < 1e-9);
}
