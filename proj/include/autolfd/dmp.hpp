#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "autolfd/hyperparams.hpp"
#include "autolfd/trajectory.hpp"

namespace autolfd {

// Phase/target pairs extracted from one demonstration.  Dimensions whose
// start-to-goal amplitude falls under the guard carry zero targets and are
// driven by the spring-damper alone.
struct ForcingDataset {
  Eigen::VectorXd phases;   // s_n in (0, 1]
  Eigen::MatrixXd targets;  // N x O
  std::vector<bool> degenerate;
};

// GP regression of the forcing term over phase with an SE kernel.
struct GpForcing {
  Eigen::VectorXd phases;
  Eigen::MatrixXd targets;
  double kernel_width = 0.0;
  double regularization = 0.0;
  Eigen::MatrixXd solve_weights;  // (K + lambda I)^-1 targets, cached
};

struct DmpConfig {
  double decay = 4.0;        // canonical system decay factor
  double stiffness = 100.0;  // per-dimension spring gain
  // Damping is fixed to 2*sqrt(stiffness) (critical damping).
};

struct DmpModel {
  double decay = 4.0;
  double duration = 1.0;
  Eigen::VectorXd stiffness;  // O
  Eigen::VectorXd damping;    // O, 2*sqrt(stiffness)
  Eigen::VectorXd demo_start;
  Eigen::VectorXd demo_goal;
  GpForcing forcing;
};

// Analytic solution s(t) = exp(-decay * t / duration) of the canonical system.
double canonical_phase(double t, double duration, double decay);

ForcingDataset extract_forcing_targets(const Demonstration& demo, const DmpConfig& config);

// Builds the Gram matrix and caches the regularized solve.
GpForcing fit_forcing(const ForcingDataset& data, double kernel_width, double regularization);

// f(s*) = k* (K + lambda I)^-1 U per output dimension.
Eigen::VectorXd gp_predict(const GpForcing& gp, double phase);

DmpModel learn_dmp(const Demonstration& demo, const Hyperparams& theta,
                   const DmpConfig& config = {});

// Semi-implicit Euler integration of the transformation system from rest at
// `start` towards `goal`; floor(duration/dt)+1 samples.
Trajectory rollout(const DmpModel& model, const Eigen::VectorXd& start,
                   const Eigen::VectorXd& goal, double duration, double dt);

// Full adaptation: fit the forcing GP with theta, roll out between the
// constraint endpoints, resample to the encoder length.
Trajectory adapt_dmp(const Demonstration& demo, const Constraints& constraints,
                     const Hyperparams& theta, const DmpConfig& config = {});

std::string dmp_to_json(const DmpModel& model);
DmpModel dmp_from_json(const std::string& text);
void save_dmp_json(const DmpModel& model, const std::string& path);
DmpModel load_dmp_json(const std::string& path);

}  // namespace autolfd
