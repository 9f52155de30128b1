#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "autolfd/rng.hpp"
#include "autolfd/trajectory.hpp"

namespace autolfd {

// Fully connected trajectory encoder [2*O*N, 256, 128, h], tanh hidden
// activations, identity output.  Inputs are flattened trajectories
// normalized per coordinate with statistics from the training anchors.
struct EncoderParams {
  std::vector<Eigen::MatrixXd> weights;  // per layer, rows = fan-out
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_mean;   // 2*O*N
  Eigen::VectorXd input_scale;  // 2*O*N, strictly positive

  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int embedding_dim() const {
    return weights.empty() ? 0 : static_cast<int>(weights.back().rows());
  }
  void validate() const;
};

inline constexpr int kEmbeddingDim = 32;

struct Triplet {
  Trajectory anchor;
  Trajectory positive;
  Trajectory negative;
};

struct TrainConfig {
  double learning_rate = 1e-7;
  int batch_size = 200;
  int epochs = 30000;
  double margin = 0.5;
  std::uint64_t seed = 0;

  // Training-time values reported in the writing-task experiments.
  static TrainConfig paper() { return TrainConfig{}; }
  // Fast preset for CI-scale runs.
  static TrainConfig desk() {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.epochs = 500;
    return c;
  }
};

// Thresholds of the shape-distortion oracle used to label synthesized
// adaptations as positive/negative.
inline constexpr double kPositiveDistortion = 0.05;
inline constexpr double kNegativeDistortion = 0.15;
inline constexpr int kDefaultTripletCount = 3026;

Eigen::VectorXd encode(const EncoderParams& params, const Trajectory& traj);
Eigen::VectorXd encode_flat(const EncoderParams& params, const Eigen::VectorXd& flat);

double triplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                    const Eigen::VectorXd& negative, double margin);

// Random start/via/end points around a demonstration — the constraint
// distribution shared by triplet synthesis and the experiment harness.
Constraints sample_adaptation_constraints(const Trajectory& anchor, Rng& rng, bool with_via);

// Synthesizes labeled triplets: positives are similarity transforms of the
// anchor onto sampled endpoints plus a low-amplitude bump, negatives are
// DMP/KMP adaptations under hyperparameters drawn from extreme log-ranges;
// both filtered by the shape-distortion oracle.
std::vector<Triplet> generate_triplets(const std::vector<Demonstration>& demos, int count,
                                       std::uint64_t seed);

struct TrainResult {
  EncoderParams params;
  std::vector<double> epoch_loss;        // mean train triplet loss per epoch
  std::vector<double> holdout_accuracy;  // per epoch
  double final_holdout_accuracy = 0.0;
};

// Mini-batch SGD on the triplet loss with manual backpropagation;
// deterministic for a given dataset/config.  Holds out 20% of triplets.
TrainResult train_encoder(const std::vector<Triplet>& dataset, const TrainConfig& config);

// Fraction of triplets with d(anchor, positive) < d(anchor, negative).
double separation_accuracy(const EncoderParams& params, const std::vector<Triplet>& triplets);

// Loss and parameter gradients of one batch of pre-normalized inputs;
// exposed for gradient checking.  Columns are samples.
struct BatchGradients {
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> weight_grads;
  std::vector<Eigen::VectorXd> bias_grads;
};
BatchGradients triplet_batch_gradients(const EncoderParams& params, const Eigen::MatrixXd& anchors,
                                       const Eigen::MatrixXd& positives,
                                       const Eigen::MatrixXd& negatives, double margin);

std::string encoder_to_json(const EncoderParams& params);
EncoderParams encoder_from_json(const std::string& text);
void save_encoder_json(const EncoderParams& params, const std::string& path);
EncoderParams load_encoder_json(const std::string& path);

void save_training_curve_csv(const TrainResult& result, const std::string& path);

}  // namespace autolfd
