#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "autolfd/encoder.hpp"
#include "autolfd/gmm.hpp"
#include "autolfd/hyperopt.hpp"
#include "autolfd/metrics.hpp"

namespace autolfd {

struct ExperimentConfig {
  // Corpus
  std::vector<std::string> letters;  // defaults to the full catalog
  std::string letter = "A";
  int demos_per_letter = 5;
  std::uint64_t corpus_seed = 7;
  int gmm_components = 8;
  std::string demos_path;  // optional external CSV directory

  // Adaptation and optimization
  std::string method = "dmp";     // dmp | kmp
  std::string optimizer = "bo";   // gd | bo
  std::string metric = "latent";  // latent | mse | mle
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int budget = kBoEvaluationBudget;
  int gd_steps = kGdStepBudget;
  double gd_learning_rate = 0.5;
  std::string init = "adversarial";  // adversarial | good
  HyperBounds bounds;

  // Encoder training
  int triplet_count = kDefaultTripletCount;
  std::string train_preset = "desk";  // desk | paper
  std::uint64_t train_seed = 0;

  // Metric-failure sweep resolution (grid x grid)
  int sweep_grid = 20;

  // Paths
  std::string encoder_path = "encoder.json";
  std::string out_dir = "out";

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json() const;
};

// Hyperparameter presets used as optimizer initializations.
Hyperparams named_init(const std::string& name);

// One experiment cell: everything needed to evaluate adaptations of a letter
// under per-seed constraints.
struct AdaptationCell {
  std::string method;
  Demonstration demo;           // anchor demonstration at encoder length
  Trajectory anchor;            // trajectory the metrics compare against
  ProbRefTrajectory reference;  // KMP reference (isotropic single-demo for DMP)
  Constraints constraints;
};

AdaptationCell build_cell(const ExperimentConfig& config, std::uint64_t seed);
Trajectory run_adaptation(const AdaptationCell& cell, const Hyperparams& theta);

// Cost of theta for the configured metric; "latent" needs encoder params.
LossFn make_cost_fn(const AdaptationCell& cell, const EncoderParams* encoder,
                    const std::string& metric);

// Largest constraint-point position error of the trajectory, relative to the
// anchor bounding-box diagonal. `via_only` restricts to interior points.
double constraint_error_rel(const AdaptationCell& cell, const Trajectory& traj, bool via_only);

struct RunReport {
  std::uint64_t seed = 0;
  std::string method;
  std::string optimizer;
  Hyperparams theta_initial;
  Hyperparams theta_final;
  std::vector<Observation> trace;
  int mid_iter = 0;    // trace index of the emitted intermediate trajectory
  int final_iter = 0;  // trace index of the emitted final trajectory
  double cost_initial = 0.0;
  double cost_final = 0.0;
  MetricReport metrics_initial;
  MetricReport metrics_final;
  double endpoint_error_rel = 0.0;
  double via_error_rel = 0.0;
};

std::string report_to_json(const RunReport& report);

// CLI commands.  Exit code 0 on success, 2 on assertion failure (e.g. no
// metric inversion found), 1 on error.
int cmd_gen_data(const ExperimentConfig& config);
int cmd_train_encoder(const ExperimentConfig& config);
int cmd_metric_failure(const ExperimentConfig& config);
int cmd_auto(const ExperimentConfig& config, std::vector<RunReport>* reports = nullptr);
int cmd_compare(const ExperimentConfig& config);

}  // namespace autolfd
