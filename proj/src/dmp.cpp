#include "autolfd/dmp.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "autolfd/linalg.hpp"

namespace autolfd {

namespace {

constexpr double kAmplitudeGuard = 1e-6;

Eigen::MatrixXd se_gram(const Eigen::VectorXd& inputs, double kernel_width) {
  const int n = static_cast<int>(inputs.size());
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    gram(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      const double d = inputs(i) - inputs(j);
      const double v = std::exp(-kernel_width * d * d);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

}  // namespace

double canonical_phase(double t, double duration, double decay) {
  return std::exp(-decay * t / duration);
}

ForcingDataset extract_forcing_targets(const Demonstration& demo, const DmpConfig& config) {
  demo.validate();
  const Trajectory& traj = demo.trajectory;
  const int n = traj.samples();
  const int dims = traj.dims();
  const double duration = traj.duration();

  const Eigen::VectorXd start = traj.positions.row(0);
  const Eigen::VectorXd goal = traj.positions.row(n - 1);
  const Eigen::VectorXd amplitude = goal - start;
  const double scale = std::max(traj.bbox_diagonal(), 1e-300);

  ForcingDataset data;
  data.degenerate.assign(dims, false);
  int live = 0;
  for (int d = 0; d < dims; ++d) {
    data.degenerate[d] = std::abs(amplitude(d)) < kAmplitudeGuard * scale;
    if (!data.degenerate[d]) ++live;
  }
  if (live == 0) throw std::invalid_argument("zero-amplitude demonstration");

  const double stiffness = config.stiffness;
  const double damping = 2.0 * std::sqrt(stiffness);

  data.phases.resize(n);
  data.targets.resize(n, dims);
  for (int i = 0; i < n; ++i) {
    const double s = canonical_phase(traj.times(i) - traj.start_time(), duration, config.decay);
    data.phases(i) = s;
    for (int d = 0; d < dims; ++d) {
      if (data.degenerate[d]) {
        data.targets(i, d) = 0.0;
        continue;
      }
      const double accel_term = duration * duration * demo.accelerations(i, d);
      const double spring = stiffness * (goal(d) - traj.positions(i, d));
      const double damp = duration * damping * traj.velocities(i, d);
      data.targets(i, d) = (accel_term - spring + damp) / (s * amplitude(d));
    }
  }
  return data;
}

GpForcing fit_forcing(const ForcingDataset& data, double kernel_width, double regularization) {
  if (kernel_width <= 0.0) throw std::invalid_argument("kernel width must be positive");
  if (regularization < 0.0) throw std::invalid_argument("regularization must be nonnegative");

  GpForcing gp;
  gp.phases = data.phases;
  gp.targets = data.targets;
  gp.kernel_width = kernel_width;
  gp.regularization = regularization;

  Eigen::MatrixXd gram = se_gram(data.phases, kernel_width);
  gram.diagonal().array() += regularization;
  const auto llt = cholesky_with_jitter(gram, "ill-conditioned Gram");
  gp.solve_weights = llt.solve(data.targets);
  if (!gp.solve_weights.allFinite()) throw std::runtime_error("ill-conditioned Gram");
  return gp;
}

Eigen::VectorXd gp_predict(const GpForcing& gp, double phase) {
  const int n = static_cast<int>(gp.phases.size());
  Eigen::RowVectorXd k_star(n);
  for (int i = 0; i < n; ++i) {
    const double d = phase - gp.phases(i);
    k_star(i) = std::exp(-gp.kernel_width * d * d);
  }
  return (k_star * gp.solve_weights).transpose();
}

DmpModel learn_dmp(const Demonstration& demo, const Hyperparams& theta, const DmpConfig& config) {
  const ForcingDataset data = extract_forcing_targets(demo, config);

  DmpModel model;
  model.decay = config.decay;
  model.duration = demo.trajectory.duration();
  model.stiffness = Eigen::VectorXd::Constant(demo.trajectory.dims(), config.stiffness);
  model.damping = model.stiffness.cwiseSqrt() * 2.0;
  model.demo_start = demo.trajectory.positions.row(0);
  model.demo_goal = demo.trajectory.positions.row(demo.trajectory.samples() - 1);
  model.forcing = fit_forcing(data, theta.kernel_width(), theta.regularization());
  return model;
}

Trajectory rollout(const DmpModel& model, const Eigen::VectorXd& start,
                   const Eigen::VectorXd& goal, double duration, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  if (duration / dt < 10.0) throw std::invalid_argument("duration/dt must be at least 10");
  const int dims = static_cast<int>(start.size());
  const int n = static_cast<int>(std::floor(duration / dt + 1e-9)) + 1;

  Trajectory traj;
  traj.times.resize(n);
  traj.positions.resize(n, dims);
  traj.velocities.resize(n, dims);

  Eigen::VectorXd pos = start;
  Eigen::VectorXd vel = Eigen::VectorXd::Zero(dims);
  const Eigen::VectorXd amplitude = goal - start;
  const double inv_tau2 = 1.0 / (duration * duration);

  traj.times(0) = 0.0;
  traj.positions.row(0) = pos;
  traj.velocities.row(0) = vel;
  for (int i = 1; i < n; ++i) {
    const double t_prev = (i - 1) * dt;
    const double s = canonical_phase(t_prev, duration, model.decay);
    const Eigen::VectorXd force = gp_predict(model.forcing, s);
    Eigen::VectorXd accel(dims);
    for (int d = 0; d < dims; ++d) {
      accel(d) = (model.stiffness(d) * (goal(d) - pos(d)) -
                  duration * model.damping(d) * vel(d) + s * amplitude(d) * force(d)) *
                 inv_tau2;
    }
    vel += dt * accel;
    pos += dt * vel;
    if (!pos.allFinite() || !vel.allFinite()) throw std::runtime_error("diverged rollout");
    traj.times(i) = i * dt;
    traj.positions.row(i) = pos;
    traj.velocities.row(i) = vel;
  }
  return traj;
}

Trajectory adapt_dmp(const Demonstration& demo, const Constraints& constraints,
                     const Hyperparams& theta, const DmpConfig& config) {
  const Trajectory& traj = demo.trajectory;
  constraints.validate(traj.start_time(), traj.end_time());
  if (constraints.points.size() != 2)
    throw std::invalid_argument("unsupported constraint for DMP: need exactly start and end");
  const double tol = 1e-6 * traj.duration();
  const ConstraintPoint& start = constraints.front();
  const ConstraintPoint& end = constraints.back();
  if (std::abs(start.time - traj.start_time()) > tol ||
      std::abs(end.time - traj.end_time()) > tol)
    throw std::invalid_argument("unsupported constraint for DMP: via-point present");

  const DmpModel model = learn_dmp(demo, theta, config);
  const double dt = model.duration / (kEncoderSamples - 1);
  Trajectory out = rollout(model, start.position, end.position, model.duration, dt);
  return resample(out, kEncoderSamples);
}

std::string dmp_to_json(const DmpModel& model) {
  nlohmann::json j;
  j["decay"] = model.decay;
  j["duration"] = model.duration;
  j["stiffness"] = std::vector<double>(model.stiffness.begin(), model.stiffness.end());
  j["damping"] = std::vector<double>(model.damping.begin(), model.damping.end());
  j["demo_start"] = std::vector<double>(model.demo_start.begin(), model.demo_start.end());
  j["demo_goal"] = std::vector<double>(model.demo_goal.begin(), model.demo_goal.end());
  j["kernel_width"] = model.forcing.kernel_width;
  j["regularization"] = model.forcing.regularization;
  j["phases"] = std::vector<double>(model.forcing.phases.begin(), model.forcing.phases.end());
  nlohmann::json targets = nlohmann::json::array();
  for (int i = 0; i < model.forcing.targets.rows(); ++i)
    targets.push_back(std::vector<double>(model.forcing.targets.row(i).begin(),
                                          model.forcing.targets.row(i).end()));
  j["targets"] = targets;
  return j.dump(2);
}

DmpModel dmp_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  DmpModel model;
  model.decay = j.at("decay").get<double>();
  model.duration = j.at("duration").get<double>();
  const auto stiffness = j.at("stiffness").get<std::vector<double>>();
  model.stiffness = Eigen::Map<const Eigen::VectorXd>(stiffness.data(), stiffness.size());
  const auto damping = j.at("damping").get<std::vector<double>>();
  model.damping = Eigen::Map<const Eigen::VectorXd>(damping.data(), damping.size());
  const auto start = j.at("demo_start").get<std::vector<double>>();
  model.demo_start = Eigen::Map<const Eigen::VectorXd>(start.data(), start.size());
  const auto goal = j.at("demo_goal").get<std::vector<double>>();
  model.demo_goal = Eigen::Map<const Eigen::VectorXd>(goal.data(), goal.size());

  ForcingDataset data;
  const auto phases = j.at("phases").get<std::vector<double>>();
  data.phases = Eigen::Map<const Eigen::VectorXd>(phases.data(), phases.size());
  const auto& targets = j.at("targets");
  data.targets.resize(static_cast<int>(targets.size()), model.stiffness.size());
  for (int i = 0; i < data.targets.rows(); ++i) {
    const auto row = targets[i].get<std::vector<double>>();
    data.targets.row(i) = Eigen::Map<const Eigen::VectorXd>(row.data(), row.size());
  }
  data.degenerate.assign(model.stiffness.size(), false);
  model.forcing = fit_forcing(data, j.at("kernel_width").get<double>(),
                              j.at("regularization").get<double>());
  return model;
}

void save_dmp_json(const DmpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dmp_to_json(model) << "\n";
}

DmpModel load_dmp_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return dmp_from_json(text);
}

}  // namespace autolfd
