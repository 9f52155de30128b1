#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "autolfd/metrics.hpp"
#include "autolfd/rng.hpp"
#include "autolfd/trajectory.hpp"

using namespace autolfd;
namespace fs = std::filesystem;

namespace {

Trajectory line_trajectory(int n, double slope) {
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  Eigen::MatrixXd pos(n, 1);
  for (int i = 0; i < n; ++i) pos(i, 0) = slope * times(i);
  return make_demonstration(times, pos, "line").trajectory;
}

std::string write_temp(const std::string& name, const std::string& text) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << text;
  out.close();
  return path.string();
}

}  // namespace

TEST_CASE("finite differences of constant position are zero") {
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(11, 0.0, 1.0);
  Eigen::MatrixXd pos = Eigen::MatrixXd::Constant(11, 2, 3.5);
  auto [vel, acc] = finite_differences(pos, times);
  CHECK(vel.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(acc.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("finite differences of a linear signal give the slope") {
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(21, 0.0, 1.0);
  Eigen::MatrixXd pos(21, 1);
  for (int i = 0; i < 21; ++i) pos(i, 0) = 2.0 * times(i);
  auto [vel, acc] = finite_differences(pos, times);
  CHECK((vel.array() - 2.0).abs().maxCoeff() < 1e-12);
  CHECK(acc.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("finite differences of a quadratic recover the second derivative") {
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(51, 0.0, 1.0);
  Eigen::MatrixXd pos(51, 1);
  for (int i = 0; i < 51; ++i) pos(i, 0) = times(i) * times(i);
  auto [vel, acc] = finite_differences(pos, times);
  for (int i = 2; i < 49; ++i) CHECK(acc(i, 0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("finite differences rejects short inputs") {
  Eigen::VectorXd times(2);
  times << 0.0, 1.0;
  Eigen::MatrixXd pos(2, 1);
  pos << 0.0, 1.0;
  CHECK_THROWS(finite_differences(pos, times));
}

TEST_CASE("velocity integrates back to position on a smooth curve") {
  Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(200, 0.0, 2.0);
  Eigen::MatrixXd pos(200, 1);
  for (int i = 0; i < 200; ++i) pos(i, 0) = std::sin(times(i));
  auto [vel, acc] = finite_differences(pos, times);
  double integrated = pos(0, 0);
  double worst = 0.0;
  for (int i = 1; i < 200; ++i) {
    integrated += 0.5 * (vel(i, 0) + vel(i - 1, 0)) * (times(i) - times(i - 1));
    worst = std::max(worst, std::abs(integrated - pos(i, 0)));
  }
  CHECK(worst < 1e-3 * 2.0);
}

TEST_CASE("resample to own uniform grid is the identity") {
  Trajectory traj = letter_template("A", 50);
  Trajectory again = resample(traj, 50);
  CHECK((again.positions - traj.positions).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((again.times - traj.times).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("resample to 2 keeps only the endpoints") {
  Trajectory traj = letter_template("A", 50);
  Trajectory two = resample(traj, 2);
  CHECK(two.samples() == 2);
  CHECK((two.positions.row(0) - traj.positions.row(0)).norm() < 1e-12);
  CHECK((two.positions.row(1) - traj.positions.row(49)).norm() < 1e-12);
}

TEST_CASE("resampling a straight line keeps points collinear") {
  Trajectory traj = line_trajectory(17, 3.0);
  Trajectory out = resample(traj, 41);
  for (int i = 0; i < out.samples(); ++i)
    CHECK(std::abs(out.positions(i, 0) - 3.0 * out.times(i)) < 1e-12);
}

TEST_CASE("resample is idempotent on its own output") {
  Trajectory traj = letter_template("G", 37);
  Trajectory once = resample(traj, 23);
  Trajectory twice = resample(once, 23);
  CHECK((once.positions - twice.positions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((once.velocities - twice.velocities).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flatten layout interleaves position and velocity per sample") {
  Trajectory traj;
  traj.times = Eigen::Vector2d(0.0, 1.0);
  traj.positions = Eigen::MatrixXd(2, 1);
  traj.positions << 1.0, 2.0;
  traj.velocities = Eigen::MatrixXd::Zero(2, 1);
  const Eigen::VectorXd flat = flatten(traj);
  REQUIRE(flat.size() == 4);
  CHECK(flat(0) == 1.0);
  CHECK(flat(1) == 0.0);
  CHECK(flat(2) == 2.0);
  CHECK(flat(3) == 0.0);
}

TEST_CASE("flatten of the zero trajectory is the zero vector") {
  Trajectory traj;
  traj.times = Eigen::Vector3d(0.0, 0.5, 1.0);
  traj.positions = Eigen::MatrixXd::Zero(3, 2);
  traj.velocities = Eigen::MatrixXd::Zero(3, 2);
  CHECK(flatten(traj).isZero());
  CHECK(flatten(traj).size() == 12);
}

TEST_CASE("unflatten inverts flatten") {
  Rng rng(3);
  Trajectory traj;
  const int n = 9, o = 3;
  traj.times = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  traj.positions.resize(n, o);
  traj.velocities.resize(n, o);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < o; ++d) {
      traj.positions(i, d) = rng.normal();
      traj.velocities(i, d) = rng.normal();
    }
  const Trajectory back = unflatten(flatten(traj), traj.times, o);
  CHECK((back.positions - traj.positions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.velocities - traj.velocities).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trajectory invariants are enforced") {
  Trajectory traj;
  traj.times = Eigen::Vector2d(0.0, 0.0);  // not strictly increasing
  traj.positions = Eigen::MatrixXd::Zero(2, 1);
  traj.velocities = Eigen::MatrixXd::Zero(2, 1);
  CHECK_THROWS(traj.validate());
  traj.times = Eigen::Vector2d(0.0, 1.0);
  CHECK_NOTHROW(traj.validate());
  traj.positions(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(traj.validate());
}

TEST_CASE("csv loader parses a 3-row file") {
  const std::string path = write_temp("autolfd_parse.csv", "t,x1,x2\n0,1,2\n0.5,2,3\n1,3,4\n");
  const auto demos = load_demonstrations(path);
  REQUIRE(demos.size() == 1);
  CHECK(demos[0].trajectory.samples() == 3);
  CHECK(demos[0].trajectory.dims() == 2);
  CHECK(demos[0].trajectory.positions(2, 1) == 4.0);
}

TEST_CASE("csv loader rejects duplicate times with a line number") {
  const std::string path = write_temp("autolfd_dup.csv", "t,x1\n0,1\n0,2\n1,3\n");
  try {
    load_demonstrations(path);
    FAIL("expected parse error");
  } catch (const std::exception& err) {
    const std::string what = err.what();
    CHECK(what.find("non-increasing times") != std::string::npos);
    CHECK(what.find(":3") != std::string::npos);
  }
}

TEST_CASE("csv loader rejects ragged rows") {
  const std::string path = write_temp("autolfd_ragged.csv", "t,x1,x2\n0,1,2\n0.5,2\n");
  CHECK_THROWS(load_demonstrations(path));
}

TEST_CASE("csv round trip via save and load") {
  const auto demos = synth_letters("S", 1, 11);
  const std::string path = write_temp("autolfd_round.csv", "");
  save_trajectory_csv(demos[0].trajectory, path);
  const Trajectory back = load_trajectory_csv(path);
  CHECK((back.positions - demos[0].trajectory.positions).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.velocities - demos[0].trajectory.velocities).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("loader velocities match central differences when absent") {
  const auto demos = synth_letters("A", 1, 5);
  // Write positions only.
  const fs::path path = fs::temp_directory_path() / "autolfd_posonly.csv";
  {
    std::ofstream out(path);
    out << "t,x1,x2\n";
    const Trajectory& traj = demos[0].trajectory;
    out.precision(17);
    for (int i = 0; i < traj.samples(); ++i)
      out << traj.times(i) << "," << traj.positions(i, 0) << "," << traj.positions(i, 1) << "\n";
  }
  const auto loaded = load_demonstrations(path.string());
  REQUIRE(loaded.size() == 1);
  auto [vel, acc] = finite_differences(loaded[0].trajectory.positions, loaded[0].trajectory.times);
  CHECK((loaded[0].trajectory.velocities - vel).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((loaded[0].accelerations - acc).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synth letters are deterministic under a seed") {
  const auto a = synth_letters("A", 1, 0);
  const auto b = synth_letters("A", 1, 0);
  CHECK((a[0].trajectory.positions - b[0].trajectory.positions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("synth letters vary across the batch") {
  const auto demos = synth_letters("A", 5, 0);
  REQUIRE(demos.size() == 5);
  for (std::size_t i = 0; i < demos.size(); ++i)
    for (std::size_t j = i + 1; j < demos.size(); ++j)
      CHECK(mse(stacked_rows(demos[i].trajectory), demos[j].trajectory) > 0.0);
}

TEST_CASE("synth letter endpoints stay within the jitter bound of the template") {
  const Trajectory base = letter_template("A", kEncoderSamples);
  const double bound = letter_jitter_bound("A");
  const auto demos = synth_letters("A", 5, 42);
  for (const auto& demo : demos) {
    const double start_err = (demo.trajectory.positions.row(0) - base.positions.row(0)).norm();
    const double end_err = (demo.trajectory.positions.row(kEncoderSamples - 1) -
                            base.positions.row(kEncoderSamples - 1))
                               .norm();
    // Per-coordinate bound, so the euclidean error is at most bound*sqrt(2).
    CHECK(start_err <= bound * std::sqrt(2.0) + 1e-12);
    CHECK(end_err <= bound * std::sqrt(2.0) + 1e-12);
  }
}

TEST_CASE("unknown letter id is rejected") { CHECK_THROWS(synth_letters("Z", 1, 0)); }

TEST_CASE("constraints validation") {
  Constraints c;
  ConstraintPoint p;
  p.time = 0.5;
  p.position = Eigen::Vector2d(1.0, 2.0);
  c.points.push_back(p);
  CHECK_NOTHROW(c.validate(0.0, 1.0));
  CHECK_THROWS(c.validate(0.6, 1.0));  // before span
  c.points.push_back(p);               // duplicate time
  CHECK_THROWS(c.validate(0.0, 1.0));
}
