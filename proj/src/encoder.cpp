#include "autolfd/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "autolfd/dmp.hpp"
#include "autolfd/kmp.hpp"
#include "autolfd/metrics.hpp"
#include "autolfd/rng.hpp"

namespace autolfd {

void EncoderParams::validate() const {
  if (weights.size() != biases.size() || weights.empty())
    throw std::invalid_argument("encoder layer lists disagree");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite())
      throw std::invalid_argument("encoder parameters not finite");
    if (weights[l].rows() != biases[l].size())
      throw std::invalid_argument("encoder bias shape mismatch");
    if (l > 0 && weights[l].cols() != weights[l - 1].rows())
      throw std::invalid_argument("encoder layer shapes do not chain");
  }
  if (input_mean.size() != input_dim() || input_scale.size() != input_dim())
    throw std::invalid_argument("encoder normalization shape mismatch");
  if ((input_scale.array() <= 0.0).any())
    throw std::invalid_argument("encoder normalization scale must be positive");
}

namespace {

// Forward pass over a batch (columns are samples); activations returned per
// layer, last entry is the embedding.
std::vector<Eigen::MatrixXd> forward_batch(const EncoderParams& params,
                                           const Eigen::MatrixXd& input) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(params.weights.size());
  const Eigen::MatrixXd* prev = &input;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Eigen::MatrixXd z = params.weights[l] * (*prev);
    z.colwise() += params.biases[l];
    if (l + 1 < params.weights.size()) z = z.array().tanh();
    acts.push_back(std::move(z));
    prev = &acts.back();
  }
  return acts;
}

Eigen::MatrixXd normalize_columns(const EncoderParams& params, const Eigen::MatrixXd& raw) {
  return (raw.colwise() - params.input_mean).array().colwise() / params.input_scale.array();
}

}  // namespace

Eigen::VectorXd encode_flat(const EncoderParams& params, const Eigen::VectorXd& flat) {
  if (flat.size() != params.input_dim())
    throw std::invalid_argument("input dimension does not match encoder");
  Eigen::VectorXd x = (flat - params.input_mean).cwiseQuotient(params.input_scale);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    x = params.weights[l] * x + params.biases[l];
    if (l + 1 < params.weights.size()) x = x.array().tanh();
  }
  return x;
}

Eigen::VectorXd encode(const EncoderParams& params, const Trajectory& traj) {
  return encode_flat(params, flatten(traj));
}

double triplet_loss(const Eigen::VectorXd& anchor, const Eigen::VectorXd& positive,
                    const Eigen::VectorXd& negative, double margin) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size())
    throw std::invalid_argument("embedding dimension mismatch");
  if (margin <= 0.0) throw std::invalid_argument("margin must be positive");
  return std::max(0.0, margin + (anchor - positive).norm() - (anchor - negative).norm());
}

// ---------------------------------------------------------------------------
// Triplet synthesis
// ---------------------------------------------------------------------------

namespace {

// Rotation carrying unit vector `from` onto unit vector `to` in their shared
// plane, identity on the orthogonal complement.
Eigen::MatrixXd plane_rotation(const Eigen::VectorXd& from, const Eigen::VectorXd& to) {
  const int dims = static_cast<int>(from.size());
  const double cos_angle = from.dot(to);
  Eigen::VectorXd ortho = to - cos_angle * from;
  const double ortho_norm = ortho.norm();
  if (ortho_norm < 1e-12) {
    if (cos_angle > 0.0) return Eigen::MatrixXd::Identity(dims, dims);
    // Antiparallel: rotate by pi in a plane containing `from`.
    int pick = 0;
    from.cwiseAbs().minCoeff(&pick);
    Eigen::VectorXd e = Eigen::VectorXd::Unit(dims, pick);
    e -= e.dot(from) * from;
    e.normalize();
    return Eigen::MatrixXd::Identity(dims, dims) - 2.0 * from * from.transpose() -
           2.0 * e * e.transpose();
  }
  ortho /= ortho_norm;
  const double sin_angle = ortho_norm;
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dims, dims);
  r += (cos_angle - 1.0) * (from * from.transpose() + ortho * ortho.transpose());
  r += sin_angle * (ortho * from.transpose() - from * ortho.transpose());
  return r;
}

// Similarity transform of the anchor mapping its endpoints onto the
// constraint endpoints, plus a smooth single-lobe bump.
Trajectory similarity_positive(const Trajectory& anchor, const Eigen::VectorXd& new_start,
                               const Eigen::VectorXd& new_end, Rng& rng) {
  const int n = anchor.samples();
  const int dims = anchor.dims();
  const Eigen::VectorXd old_start = anchor.positions.row(0);
  const Eigen::VectorXd old_end = anchor.positions.row(n - 1);
  const Eigen::VectorXd u = old_end - old_start;
  const Eigen::VectorXd v = new_end - new_start;
  const double u_norm = u.norm();
  const double v_norm = v.norm();
  if (u_norm < 1e-12 || v_norm < 1e-12)
    throw std::invalid_argument("degenerate endpoints for similarity transform");

  const Eigen::MatrixXd rotation = plane_rotation(u / u_norm, v / v_norm);
  const double scale = v_norm / u_norm;

  Eigen::MatrixXd pos(n, dims);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd rel = anchor.positions.row(i).transpose() - old_start;
    pos.row(i) = (new_start + scale * (rotation * rel)).transpose();
  }

  // Low-amplitude sin^2 bump in a random direction.
  Eigen::VectorXd direction(dims);
  for (int d = 0; d < dims; ++d) direction(d) = rng.normal();
  if (direction.norm() < 1e-12) direction.setOnes();
  direction.normalize();
  const double amplitude = rng.uniform(0.0, 0.01) * anchor.bbox_diagonal() * scale;
  for (int i = 0; i < n; ++i) {
    const double w = std::sin(M_PI * i / (n - 1));
    pos.row(i) += (amplitude * w * w) * direction.transpose();
  }

  return make_demonstration(anchor.times, pos, "positive").trajectory;
}

}  // namespace

Constraints sample_adaptation_constraints(const Trajectory& anchor, Rng& rng, bool with_via) {
  const int dims = anchor.dims();
  const double diagonal = anchor.bbox_diagonal();
  const Eigen::VectorXd anchor_start = anchor.positions.row(0);
  const Eigen::VectorXd anchor_end = anchor.positions.row(anchor.samples() - 1);
  const double min_span = 0.3 * (anchor_end - anchor_start).norm();

  for (int attempt = 0; attempt < 64; ++attempt) {
    ConstraintPoint start;
    start.time = anchor.start_time();
    start.position = anchor_start;
    for (int d = 0; d < dims; ++d) start.position(d) += rng.uniform(-0.25, 0.25) * diagonal;

    ConstraintPoint end;
    end.time = anchor.end_time();
    end.position = anchor_end;
    for (int d = 0; d < dims; ++d) end.position(d) += rng.uniform(-0.25, 0.25) * diagonal;

    Constraints out;
    out.points.push_back(start);
    if (with_via) {
      ConstraintPoint via;
      via.time = anchor.start_time() + rng.uniform(0.35, 0.65) * anchor.duration();
      int nearest = 0;
      (anchor.times.array() - via.time).abs().minCoeff(&nearest);
      via.position = anchor.positions.row(nearest);
      for (int d = 0; d < dims; ++d) via.position(d) += rng.uniform(-0.15, 0.15) * diagonal;
      out.points.push_back(via);
    }
    out.points.push_back(end);

    if ((end.position - start.position).norm() >= min_span) return out;
  }
  throw std::runtime_error("could not sample non-degenerate constraints");
}

std::vector<Triplet> generate_triplets(const std::vector<Demonstration>& demos, int count,
                                       std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("triplet count must be >= 1");
  if (demos.empty()) throw std::invalid_argument("no demonstrations");

  std::vector<Trajectory> anchors;
  std::vector<ProbRefTrajectory> anchor_refs;
  std::vector<Demonstration> anchor_demos;
  for (const auto& demo : demos) {
    Trajectory traj = resample(demo.trajectory, kEncoderSamples);
    anchor_refs.push_back(isotropic_reference(traj));
    anchor_demos.push_back(make_demonstration(traj.times, traj.positions, demo.label));
    anchors.push_back(std::move(traj));
  }

  std::vector<Triplet> triplets;
  triplets.reserve(count);
  long attempts = 0;
  const long attempt_budget = 100L * count;
  Rng rng(Rng::mix(seed, 0x7472697063ULL));

  for (int m = 0; m < count; ++m) {
    const std::size_t a = m % anchors.size();
    const Trajectory& anchor = anchors[a];

    Triplet triplet;
    triplet.anchor = anchor;

    // Positive: similarity transform onto sampled endpoints.
    bool have_positive = false;
    while (!have_positive) {
      if (++attempts > attempt_budget) throw std::runtime_error("cannot synthesize labels");
      try {
        const Constraints c = sample_adaptation_constraints(anchor, rng, false);
        Trajectory candidate =
            similarity_positive(anchor, c.front().position, c.back().position, rng);
        if (shape_distortion(anchor, candidate) < kPositiveDistortion) {
          triplet.positive = std::move(candidate);
          have_positive = true;
        }
      } catch (const std::exception&) {
      }
    }

    // Negative: real adaptation under extreme hyperparameters.
    bool have_negative = false;
    while (!have_negative) {
      if (++attempts > attempt_budget) throw std::runtime_error("cannot synthesize labels");
      const bool overfit = rng.uniform() < 0.5;
      Hyperparams theta;
      theta.log10_kernel_width = overfit ? rng.uniform(4.0, 6.0) : rng.uniform(-2.0, 0.0);
      theta.log10_regularization = overfit ? rng.uniform(-8.0, -5.0) : rng.uniform(0.5, 2.0);
      const bool use_kmp = rng.uniform() < 0.5;
      try {
        Trajectory candidate;
        if (use_kmp) {
          const Constraints c = sample_adaptation_constraints(anchor, rng, true);
          candidate = adapt_kmp(anchor_refs[a], c, theta);
        } else {
          const Constraints c = sample_adaptation_constraints(anchor, rng, false);
          candidate = adapt_dmp(anchor_demos[a], c, theta);
        }
        if (candidate.positions.cwiseAbs().maxCoeff() > 1e6 * anchor.bbox_diagonal()) continue;
        if (shape_distortion(anchor, candidate) > kNegativeDistortion) {
          triplet.negative = std::move(candidate);
          have_negative = true;
        }
      } catch (const std::exception&) {
      }
    }

    triplets.push_back(std::move(triplet));
  }
  return triplets;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

constexpr int kHidden1 = 256;
constexpr int kHidden2 = 128;

EncoderParams init_params(int input_dim, std::uint64_t seed) {
  EncoderParams params;
  const std::vector<int> sizes{input_dim, kHidden1, kHidden2, kEmbeddingDim};
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Rng rng(Rng::mix(seed, 0xabcdef00ULL + l));
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    params.weights.push_back(std::move(w));
    params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  params.input_mean = Eigen::VectorXd::Zero(input_dim);
  params.input_scale = Eigen::VectorXd::Ones(input_dim);
  return params;
}

struct EmbeddingGrads {
  Eigen::MatrixXd anchor, positive, negative;  // h x B
  double loss_sum = 0.0;
  std::vector<int> active;
};

EmbeddingGrads embedding_gradients(const Eigen::MatrixXd& ea, const Eigen::MatrixXd& ep,
                                   const Eigen::MatrixXd& en, double margin) {
  const int b = static_cast<int>(ea.cols());
  EmbeddingGrads g;
  g.anchor = Eigen::MatrixXd::Zero(ea.rows(), b);
  g.positive = Eigen::MatrixXd::Zero(ea.rows(), b);
  g.negative = Eigen::MatrixXd::Zero(ea.rows(), b);
  for (int m = 0; m < b; ++m) {
    const Eigen::VectorXd dp = ea.col(m) - ep.col(m);
    const Eigen::VectorXd dn = ea.col(m) - en.col(m);
    const double dist_p = dp.norm();
    const double dist_n = dn.norm();
    const double loss = margin + dist_p - dist_n;
    if (loss <= 0.0) continue;
    g.loss_sum += loss;
    g.active.push_back(m);
    if (dist_p > 0.0) {
      g.anchor.col(m) += dp / dist_p;
      g.positive.col(m) -= dp / dist_p;
    }
    if (dist_n > 0.0) {
      g.anchor.col(m) -= dn / dist_n;
      g.negative.col(m) += dn / dist_n;
    }
  }
  return g;
}

// Accumulates parameter gradients for one stream (given embedding grads).
void backprop_stream(const EncoderParams& params, const Eigen::MatrixXd& input,
                     const std::vector<Eigen::MatrixXd>& acts, const Eigen::MatrixXd& embed_grad,
                     std::vector<Eigen::MatrixXd>& weight_grads,
                     std::vector<Eigen::VectorXd>& bias_grads) {
  const int layers = static_cast<int>(params.weights.size());
  Eigen::MatrixXd delta = embed_grad;
  for (int l = layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& below = l == 0 ? input : acts[l - 1];
    weight_grads[l].noalias() += delta * below.transpose();
    bias_grads[l] += delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd prev_delta = params.weights[l].transpose() * delta;
      delta = prev_delta.array() * (1.0 - acts[l - 1].array().square());
    }
  }
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& src, const std::vector<int>& idx) {
  Eigen::MatrixXd out(src.rows(), static_cast<int>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<int>(i)) = src.col(idx[i]);
  return out;
}

}  // namespace

BatchGradients triplet_batch_gradients(const EncoderParams& params, const Eigen::MatrixXd& anchors,
                                       const Eigen::MatrixXd& positives,
                                       const Eigen::MatrixXd& negatives, double margin) {
  const int b = static_cast<int>(anchors.cols());
  const auto acts_a = forward_batch(params, anchors);
  const auto acts_p = forward_batch(params, positives);
  const auto acts_n = forward_batch(params, negatives);
  EmbeddingGrads grads =
      embedding_gradients(acts_a.back(), acts_p.back(), acts_n.back(), margin);

  BatchGradients out;
  out.loss = grads.loss_sum / b;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    out.weight_grads.push_back(
        Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
    out.bias_grads.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
  }
  if (!grads.active.empty()) {
    // Backprop only through triplets with a live hinge.
    const std::vector<int>& idx = grads.active;
    auto gather_acts = [&](const std::vector<Eigen::MatrixXd>& acts) {
      std::vector<Eigen::MatrixXd> out_acts;
      for (const auto& a : acts) out_acts.push_back(gather_columns(a, idx));
      return out_acts;
    };
    backprop_stream(params, gather_columns(anchors, idx), gather_acts(acts_a),
                    gather_columns(grads.anchor, idx), out.weight_grads, out.bias_grads);
    backprop_stream(params, gather_columns(positives, idx), gather_acts(acts_p),
                    gather_columns(grads.positive, idx), out.weight_grads, out.bias_grads);
    backprop_stream(params, gather_columns(negatives, idx), gather_acts(acts_n),
                    gather_columns(grads.negative, idx), out.weight_grads, out.bias_grads);
  }
  for (auto& w : out.weight_grads) w /= b;
  for (auto& bg : out.bias_grads) bg /= b;
  return out;
}

TrainResult train_encoder(const std::vector<Triplet>& dataset, const TrainConfig& config) {
  if (dataset.size() < 5) throw std::invalid_argument("dataset too small to split");
  if (config.learning_rate <= 0.0 || config.batch_size < 1 || config.epochs < 1 ||
      config.margin <= 0.0)
    throw std::invalid_argument("invalid training configuration");

  const int total = static_cast<int>(dataset.size());
  const int input_dim = static_cast<int>(flatten(dataset.front().anchor).size());

  Eigen::MatrixXd anchors(input_dim, total);
  Eigen::MatrixXd positives(input_dim, total);
  Eigen::MatrixXd negatives(input_dim, total);
  for (int m = 0; m < total; ++m) {
    anchors.col(m) = flatten(dataset[m].anchor);
    positives.col(m) = flatten(dataset[m].positive);
    negatives.col(m) = flatten(dataset[m].negative);
  }

  // 80/20 split by seeded shuffle.
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(Rng::mix(config.seed, 0x73706c6974ULL));
  for (int i = total - 1; i > 0; --i)
    std::swap(order[i], order[split_rng.uniform_int(i + 1)]);
  const int train_count = std::max(1, (total * 4) / 5);
  const std::vector<int> train_idx(order.begin(), order.begin() + train_count);
  const std::vector<int> holdout_idx(order.begin() + train_count, order.end());

  EncoderParams params = init_params(input_dim, config.seed);

  // Normalization statistics from the training anchors.
  const Eigen::MatrixXd train_anchors = gather_columns(anchors, train_idx);
  params.input_mean = train_anchors.rowwise().mean();
  Eigen::VectorXd var = (train_anchors.colwise() - params.input_mean).rowwise().squaredNorm() /
                        std::max(1, train_count);
  params.input_scale = var.cwiseSqrt().cwiseMax(1e-9);

  const Eigen::MatrixXd na = normalize_columns(params, anchors);
  const Eigen::MatrixXd np = normalize_columns(params, positives);
  const Eigen::MatrixXd nn = normalize_columns(params, negatives);

  const Eigen::MatrixXd hold_a = gather_columns(na, holdout_idx);
  const Eigen::MatrixXd hold_p = gather_columns(np, holdout_idx);
  const Eigen::MatrixXd hold_n = gather_columns(nn, holdout_idx);

  auto holdout_accuracy = [&]() {
    if (holdout_idx.empty()) return 1.0;
    const auto ea = forward_batch(params, hold_a).back();
    const auto ep = forward_batch(params, hold_p).back();
    const auto en = forward_batch(params, hold_n).back();
    int correct = 0;
    for (int m = 0; m < ea.cols(); ++m)
      if ((ea.col(m) - ep.col(m)).norm() < (ea.col(m) - en.col(m)).norm()) ++correct;
    return static_cast<double>(correct) / static_cast<double>(ea.cols());
  };

  TrainResult result;
  Rng epoch_rng(Rng::mix(config.seed, 0x65706f6368ULL));
  std::vector<int> perm = train_idx;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i)
      std::swap(perm[i], perm[epoch_rng.uniform_int(i + 1)]);

    double loss_sum = 0.0;
    for (int begin = 0; begin < train_count; begin += config.batch_size) {
      const int b = std::min(config.batch_size, train_count - begin);
      const std::vector<int> batch(perm.begin() + begin, perm.begin() + begin + b);
      const BatchGradients grads =
          triplet_batch_gradients(params, gather_columns(na, batch), gather_columns(np, batch),
                                  gather_columns(nn, batch), config.margin);
      if (!std::isfinite(grads.loss))
        throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch));
      loss_sum += grads.loss * b;
      for (std::size_t l = 0; l < params.weights.size(); ++l) {
        params.weights[l] -= config.learning_rate * grads.weight_grads[l];
        params.biases[l] -= config.learning_rate * grads.bias_grads[l];
      }
    }
    result.epoch_loss.push_back(loss_sum / train_count);
    result.holdout_accuracy.push_back(holdout_accuracy());
  }

  params.validate();
  result.params = params;
  result.final_holdout_accuracy =
      result.holdout_accuracy.empty() ? 0.0 : result.holdout_accuracy.back();
  return result;
}

double separation_accuracy(const EncoderParams& params, const std::vector<Triplet>& triplets) {
  if (triplets.empty()) return 1.0;
  int correct = 0;
  for (const auto& t : triplets) {
    const Eigen::VectorXd ea = encode(params, t.anchor);
    if ((ea - encode(params, t.positive)).norm() < (ea - encode(params, t.negative)).norm())
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(triplets.size());
}

std::string encoder_to_json(const EncoderParams& params) {
  nlohmann::json j;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    nlohmann::json layer;
    nlohmann::json w = nlohmann::json::array();
    for (int r = 0; r < params.weights[l].rows(); ++r)
      w.push_back(std::vector<double>(params.weights[l].row(r).begin(),
                                      params.weights[l].row(r).end()));
    layer["weight"] = std::move(w);
    layer["bias"] = std::vector<double>(params.biases[l].begin(), params.biases[l].end());
    j["layers"].push_back(std::move(layer));
  }
  j["input_mean"] =
      std::vector<double>(params.input_mean.begin(), params.input_mean.end());
  j["input_scale"] =
      std::vector<double>(params.input_scale.begin(), params.input_scale.end());
  return j.dump();
}

EncoderParams encoder_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  EncoderParams params;
  for (const auto& layer : j.at("layers")) {
    const auto& w = layer.at("weight");
    const int rows = static_cast<int>(w.size());
    const int cols = static_cast<int>(w[0].size());
    Eigen::MatrixXd weight(rows, cols);
    for (int r = 0; r < rows; ++r) {
      const auto row = w[r].get<std::vector<double>>();
      weight.row(r) = Eigen::Map<const Eigen::VectorXd>(row.data(), row.size());
    }
    params.weights.push_back(std::move(weight));
    const auto bias = layer.at("bias").get<std::vector<double>>();
    params.biases.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), bias.size()));
  }
  const auto mean = j.at("input_mean").get<std::vector<double>>();
  params.input_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  const auto scale = j.at("input_scale").get<std::vector<double>>();
  params.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), scale.size());
  params.validate();
  return params;
}

void save_encoder_json(const EncoderParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << encoder_to_json(params) << "\n";
}

EncoderParams load_encoder_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return encoder_from_json(text);
}

void save_training_curve_csv(const TrainResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,loss,holdout_accuracy\n";
  char buf[80];
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e, result.epoch_loss[e],
                  result.holdout_accuracy[e]);
    out << buf;
  }
}

}  // namespace autolfd
