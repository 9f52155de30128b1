#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace autolfd {

// Fixed sample count used by the encoder; adaptation outputs are resampled
// to this length before any metric is evaluated.
inline constexpr int kEncoderSamples = 200;

// Time-stamped position + velocity sequence, N rows by O columns.
struct Trajectory {
  Eigen::VectorXd times;       // strictly increasing, N >= 2
  Eigen::MatrixXd positions;   // N x O
  Eigen::MatrixXd velocities;  // N x O

  int samples() const { return static_cast<int>(times.size()); }
  int dims() const { return static_cast<int>(positions.cols()); }
  double start_time() const { return times(0); }
  double end_time() const { return times(times.size() - 1); }
  double duration() const { return end_time() - start_time(); }

  // Diagonal of the axis-aligned bounding box of the positions.
  double bbox_diagonal() const;

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

struct Demonstration {
  Trajectory trajectory;
  Eigen::MatrixXd accelerations;  // N x O, derived
  std::string label;

  void validate() const;
};

// One desired (time, position[, velocity]) point.
struct ConstraintPoint {
  double time = 0.0;
  Eigen::VectorXd position;
  std::optional<Eigen::VectorXd> velocity;
};

// Desired start/via/end points for adaptation, sorted by time.
struct Constraints {
  std::vector<ConstraintPoint> points;

  bool empty() const { return points.empty(); }
  const ConstraintPoint& front() const { return points.front(); }
  const ConstraintPoint& back() const { return points.back(); }

  // Checks times lie in [t_begin, t_end], are unique, and positions are finite.
  void validate(double t_begin, double t_end) const;
};

// Central differences at interior samples, one-sided at the boundaries.
// Returns (velocities, accelerations); requires N >= 3.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> finite_differences(const Eigen::MatrixXd& positions,
                                                               const Eigen::VectorXd& times);

// Linear interpolation of positions and velocities onto a uniform grid of
// n_out samples spanning [t_1, t_N].
Trajectory resample(const Trajectory& traj, int n_out);

// Concatenation [x_1; v_1; x_2; v_2; ...; x_N; v_N] of length 2*O*N.
Eigen::VectorXd flatten(const Trajectory& traj);

// Inverse of flatten for the given time grid and dimension count.
Trajectory unflatten(const Eigen::VectorXd& stacked, const Eigen::VectorXd& times, int dims);

// Rows [position velocity] per sample, N x 2O.
Eigen::MatrixXd stacked_rows(const Trajectory& traj);

// Builds a Demonstration from positions only; velocities and accelerations
// come from finite_differences.
Demonstration make_demonstration(const Eigen::VectorXd& times, const Eigen::MatrixXd& positions,
                                 std::string label);

// Demonstration CSV I/O.  Header `t,x1,...,xO[,v1,...,vO]`; when velocity
// columns are absent they are recovered numerically.  A directory loads
// every *.csv inside it, sorted by filename.
std::vector<Demonstration> load_demonstrations(const std::string& path);
void save_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory_csv(const std::string& path);

// Synthetic single-stroke letter demonstrations: a piecewise cubic Bezier
// template plus bounded, seeded control-point jitter; 200 samples each.
std::vector<Demonstration> synth_letters(const std::string& letter_id, int count,
                                         std::uint64_t seed);
const std::vector<std::string>& letter_catalog();

// Per-coordinate jitter bound used by synth_letters, in workspace units.
double letter_jitter_bound(const std::string& letter_id);

// Template curve of a letter without jitter, sampled at n points.
Trajectory letter_template(const std::string& letter_id, int n);

}  // namespace autolfd
