#include "autolfd/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "autolfd/rng.hpp"

namespace autolfd {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double Trajectory::bbox_diagonal() const {
  const Eigen::VectorXd extent = positions.colwise().maxCoeff() - positions.colwise().minCoeff();
  return extent.norm();
}

void Trajectory::validate() const {
  const int n = samples();
  if (n < 2) throw std::invalid_argument("trajectory needs at least 2 samples");
  if (positions.rows() != n || velocities.rows() != n)
    throw std::invalid_argument("trajectory row counts disagree");
  if (positions.cols() != velocities.cols() || positions.cols() < 1)
    throw std::invalid_argument("trajectory dimension counts disagree");
  for (int i = 1; i < n; ++i)
    if (!(times(i) > times(i - 1))) throw std::invalid_argument("non-increasing times");
  if (!times.allFinite() || !all_finite(positions) || !all_finite(velocities))
    throw std::invalid_argument("trajectory contains non-finite entries");
}

void Demonstration::validate() const {
  trajectory.validate();
  if (accelerations.rows() != trajectory.samples() || accelerations.cols() != trajectory.dims())
    throw std::invalid_argument("acceleration shape does not match trajectory");
  if (!all_finite(accelerations))
    throw std::invalid_argument("demonstration contains non-finite accelerations");
}

void Constraints::validate(double t_begin, double t_end) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(t_end - t_begin));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ConstraintPoint& p = points[i];
    if (p.time < t_begin - tol || p.time > t_end + tol)
      throw std::invalid_argument("constraint time outside trajectory span");
    if (!p.position.allFinite()) throw std::invalid_argument("constraint position not finite");
    if (p.velocity && !p.velocity->allFinite())
      throw std::invalid_argument("constraint velocity not finite");
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (std::abs(points[j].time - p.time) <= tol)
        throw std::invalid_argument("duplicate constraint time");
  }
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> finite_differences(const Eigen::MatrixXd& positions,
                                                               const Eigen::VectorXd& times) {
  const int n = static_cast<int>(times.size());
  if (n < 3) throw std::invalid_argument("finite_differences needs at least 3 samples");
  if (positions.rows() != n) throw std::invalid_argument("positions/times length mismatch");

  Eigen::MatrixXd vel(n, positions.cols());
  vel.row(0) = (positions.row(1) - positions.row(0)) / (times(1) - times(0));
  vel.row(n - 1) = (positions.row(n - 1) - positions.row(n - 2)) / (times(n - 1) - times(n - 2));
  for (int i = 1; i < n - 1; ++i)
    vel.row(i) = (positions.row(i + 1) - positions.row(i - 1)) / (times(i + 1) - times(i - 1));

  Eigen::MatrixXd acc(n, positions.cols());
  acc.row(0) = (vel.row(1) - vel.row(0)) / (times(1) - times(0));
  acc.row(n - 1) = (vel.row(n - 1) - vel.row(n - 2)) / (times(n - 1) - times(n - 2));
  for (int i = 1; i < n - 1; ++i)
    acc.row(i) = (vel.row(i + 1) - vel.row(i - 1)) / (times(i + 1) - times(i - 1));

  return {vel, acc};
}

Trajectory resample(const Trajectory& traj, int n_out) {
  traj.validate();
  if (n_out < 2) throw std::invalid_argument("resample needs n_out >= 2");

  const int n = traj.samples();
  const int dims = traj.dims();
  Trajectory out;
  out.times = Eigen::VectorXd::LinSpaced(n_out, traj.start_time(), traj.end_time());
  out.positions.resize(n_out, dims);
  out.velocities.resize(n_out, dims);

  int seg = 0;
  for (int i = 0; i < n_out; ++i) {
    const double t = out.times(i);
    while (seg < n - 2 && traj.times(seg + 1) < t) ++seg;
    const double t0 = traj.times(seg);
    const double t1 = traj.times(seg + 1);
    const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    out.positions.row(i) = (1.0 - w) * traj.positions.row(seg) + w * traj.positions.row(seg + 1);
    out.velocities.row(i) = (1.0 - w) * traj.velocities.row(seg) + w * traj.velocities.row(seg + 1);
  }
  return out;
}

Eigen::VectorXd flatten(const Trajectory& traj) {
  const int n = traj.samples();
  const int dims = traj.dims();
  Eigen::VectorXd out(2 * dims * n);
  for (int i = 0; i < n; ++i) {
    out.segment(2 * dims * i, dims) = traj.positions.row(i);
    out.segment(2 * dims * i + dims, dims) = traj.velocities.row(i);
  }
  return out;
}

Trajectory unflatten(const Eigen::VectorXd& stacked, const Eigen::VectorXd& times, int dims) {
  const int n = static_cast<int>(times.size());
  if (stacked.size() != 2 * dims * n)
    throw std::invalid_argument("stacked vector length does not match 2*O*N");
  Trajectory out;
  out.times = times;
  out.positions.resize(n, dims);
  out.velocities.resize(n, dims);
  for (int i = 0; i < n; ++i) {
    out.positions.row(i) = stacked.segment(2 * dims * i, dims);
    out.velocities.row(i) = stacked.segment(2 * dims * i + dims, dims);
  }
  return out;
}

Eigen::MatrixXd stacked_rows(const Trajectory& traj) {
  Eigen::MatrixXd rows(traj.samples(), 2 * traj.dims());
  rows.leftCols(traj.dims()) = traj.positions;
  rows.rightCols(traj.dims()) = traj.velocities;
  return rows;
}

Demonstration make_demonstration(const Eigen::VectorXd& times, const Eigen::MatrixXd& positions,
                                 std::string label) {
  auto [vel, acc] = finite_differences(positions, times);
  Demonstration demo;
  demo.trajectory.times = times;
  demo.trajectory.positions = positions;
  demo.trajectory.velocities = vel;
  demo.accelerations = acc;
  demo.label = std::move(label);
  demo.validate();
  return demo;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& text, const std::string& file, int line_no) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    throw std::runtime_error(file + ":" + std::to_string(line_no) + ": malformed number '" +
                             text + "'");
  return v;
}

Demonstration load_one_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path + ":1: empty file");
  const auto cols = split_csv_line(header);
  if (cols.empty() || cols[0] != "t")
    throw std::runtime_error(path + ":1: header must start with 't'");

  int dims = 0;
  while (1 + dims < static_cast<int>(cols.size()) &&
         cols[1 + dims] == "x" + std::to_string(dims + 1))
    ++dims;
  if (dims == 0) throw std::runtime_error(path + ":1: no position columns x1..xO");
  const bool has_velocity = static_cast<int>(cols.size()) == 1 + 2 * dims;
  if (!has_velocity && static_cast<int>(cols.size()) != 1 + dims)
    throw std::runtime_error(path + ":1: expected t,x1..xO or t,x1..xO,v1..vO header");

  std::vector<double> times;
  std::vector<double> values;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != static_cast<int>(cols.size()))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": inconsistent column count");
    const double t = parse_field(fields[0], path, line_no);
    if (!times.empty() && !(t > times.back()))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-increasing times");
    times.push_back(t);
    for (std::size_t i = 1; i < fields.size(); ++i)
      values.push_back(parse_field(fields[i], path, line_no));
  }
  const int n = static_cast<int>(times.size());
  if (n < 2) throw std::runtime_error(path + ": needs at least 2 data rows");

  Eigen::VectorXd t(n);
  Eigen::MatrixXd pos(n, dims);
  Eigen::MatrixXd vel(n, dims);
  const int row_width = has_velocity ? 2 * dims : dims;
  for (int i = 0; i < n; ++i) {
    t(i) = times[i];
    for (int d = 0; d < dims; ++d) pos(i, d) = values[i * row_width + d];
    if (has_velocity)
      for (int d = 0; d < dims; ++d) vel(i, d) = values[i * row_width + dims + d];
  }

  const std::string label = std::filesystem::path(path).stem().string();
  if (!has_velocity || n < 3) {
    if (n < 3 && !has_velocity)
      throw std::runtime_error(path + ": too few rows to recover velocities");
    if (!has_velocity) return make_demonstration(t, pos, label);
  }

  Demonstration demo;
  demo.trajectory.times = t;
  demo.trajectory.positions = pos;
  demo.trajectory.velocities = vel;
  if (n >= 3) {
    demo.accelerations = finite_differences(pos, t).second;
  } else {
    demo.accelerations = Eigen::MatrixXd::Zero(n, dims);
  }
  demo.label = label;
  demo.validate();
  return demo;
}

}  // namespace

std::vector<Demonstration> load_demonstrations(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw std::runtime_error("no such file or directory: " + path);

  std::vector<Demonstration> demos;
  if (fs::is_directory(path)) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".csv")
        files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .csv files under " + path);
    for (const auto& f : files) demos.push_back(load_one_csv(f));
  } else {
    demos.push_back(load_one_csv(path));
  }
  return demos;
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const int dims = traj.dims();
  out << "t";
  for (int d = 0; d < dims; ++d) out << ",x" << d + 1;
  for (int d = 0; d < dims; ++d) out << ",v" << d + 1;
  out << "\n";
  for (int i = 0; i < traj.samples(); ++i) {
    out << format_double(traj.times(i));
    for (int d = 0; d < dims; ++d) out << "," << format_double(traj.positions(i, d));
    for (int d = 0; d < dims; ++d) out << "," << format_double(traj.velocities(i, d));
    out << "\n";
  }
}

Trajectory load_trajectory_csv(const std::string& path) {
  const Demonstration demo = load_one_csv(path);
  return demo.trajectory;
}

// ---------------------------------------------------------------------------
// Synthetic letters
// ---------------------------------------------------------------------------

namespace {

struct BezierSegment {
  Eigen::Vector2d p0, p1, p2, p3;

  Eigen::Vector2d eval(double u) const {
    const double w = 1.0 - u;
    return w * w * w * p0 + 3.0 * w * w * u * p1 + 3.0 * w * u * u * p2 + u * u * u * p3;
  }

  double chord_length() const {
    double len = 0.0;
    Eigen::Vector2d prev = p0;
    for (int i = 1; i <= 16; ++i) {
      const Eigen::Vector2d p = eval(i / 16.0);
      len += (p - prev).norm();
      prev = p;
    }
    return len;
  }
};

using LetterTemplate = std::vector<BezierSegment>;

Eigen::Vector2d v2(double x, double y) { return {x, y}; }

// Single-stroke templates on a roughly 10x10 canvas.
const std::map<std::string, LetterTemplate>& letter_templates() {
  static const std::map<std::string, LetterTemplate> templates = [] {
    std::map<std::string, LetterTemplate> m;
    m["A"] = {
        {v2(0.0, 0.0), v2(1.5, 4.0), v2(3.0, 8.0), v2(5.0, 10.0)},
        {v2(5.0, 10.0), v2(7.0, 8.0), v2(8.5, 4.0), v2(10.0, 0.0)},
        {v2(10.0, 0.0), v2(9.2, 2.4), v2(8.4, 4.0), v2(7.4, 5.0)},
        {v2(7.4, 5.0), v2(6.0, 5.4), v2(4.0, 5.4), v2(2.6, 5.0)},
    };
    m["C"] = {
        {v2(8.0, 8.5), v2(6.0, 10.6), v2(1.0, 9.0), v2(1.0, 5.0)},
        {v2(1.0, 5.0), v2(1.0, 1.2), v2(6.0, -0.6), v2(8.0, 1.6)},
    };
    m["G"] = {
        {v2(9.0, 8.0), v2(8.0, 9.6), v2(6.5, 10.0), v2(5.0, 10.0)},
        {v2(5.0, 10.0), v2(2.4, 10.0), v2(0.8, 7.8), v2(0.8, 5.0)},
        {v2(0.8, 5.0), v2(0.8, 2.2), v2(2.5, 0.0), v2(5.0, 0.0)},
        {v2(5.0, 0.0), v2(7.2, 0.0), v2(9.0, 0.8), v2(9.0, 2.2)},
        {v2(9.0, 2.2), v2(9.0, 3.4), v2(7.6, 3.6), v2(6.0, 3.6)},
    };
    m["S"] = {
        {v2(8.5, 8.6), v2(7.5, 10.2), v2(4.4, 10.4), v2(3.0, 9.4)},
        {v2(3.0, 9.4), v2(1.4, 8.2), v2(2.4, 6.4), v2(5.0, 5.5)},
        {v2(5.0, 5.5), v2(7.6, 4.6), v2(8.6, 2.8), v2(7.0, 1.4)},
        {v2(7.0, 1.4), v2(5.6, 0.0), v2(2.6, 0.2), v2(1.6, 1.6)},
    };
    m["U"] = {
        {v2(1.0, 10.0), v2(1.0, 5.0), v2(1.4, 1.0), v2(5.0, 0.6)},
        {v2(5.0, 0.6), v2(8.6, 1.0), v2(9.0, 5.0), v2(9.0, 10.0)},
    };
    return m;
  }();
  return templates;
}

const LetterTemplate& lookup_letter(const std::string& letter_id) {
  const auto& templates = letter_templates();
  const auto it = templates.find(letter_id);
  if (it == templates.end()) throw std::invalid_argument("unknown letter id '" + letter_id + "'");
  return it->second;
}

double template_diagonal(const LetterTemplate& segments) {
  Eigen::Vector2d lo = segments.front().p0;
  Eigen::Vector2d hi = lo;
  for (const auto& seg : segments) {
    for (const Eigen::Vector2d& p : {seg.p0, seg.p1, seg.p2, seg.p3}) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  return (hi - lo).norm();
}

// Samples the stroke with parameter allocated proportionally to segment
// chord length, so the nominal speed is roughly uniform.
Eigen::MatrixXd sample_stroke(const LetterTemplate& segments, int n) {
  std::vector<double> cumulative{0.0};
  for (const auto& seg : segments) cumulative.push_back(cumulative.back() + seg.chord_length());
  const double total = cumulative.back();

  Eigen::MatrixXd pos(n, 2);
  for (int i = 0; i < n; ++i) {
    const double target = total * i / (n - 1);
    std::size_t k = 0;
    while (k + 2 < cumulative.size() && cumulative[k + 1] < target) ++k;
    const double span = cumulative[k + 1] - cumulative[k];
    const double u = span > 0.0 ? (target - cumulative[k]) / span : 0.0;
    pos.row(i) = segments[k].eval(std::clamp(u, 0.0, 1.0));
  }
  return pos;
}

constexpr double kLetterDuration = 2.0;     // seconds per stroke
constexpr double kJitterFraction = 0.015;   // of the template bbox diagonal

}  // namespace

const std::vector<std::string>& letter_catalog() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> v;
    for (const auto& [id, _] : letter_templates()) v.push_back(id);
    return v;
  }();
  return ids;
}

double letter_jitter_bound(const std::string& letter_id) {
  return kJitterFraction * template_diagonal(lookup_letter(letter_id));
}

Trajectory letter_template(const std::string& letter_id, int n) {
  const Eigen::MatrixXd pos = sample_stroke(lookup_letter(letter_id), n);
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n, 0.0, kLetterDuration);
  return make_demonstration(times, pos, letter_id).trajectory;
}

std::vector<Demonstration> synth_letters(const std::string& letter_id, int count,
                                         std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("synth_letters needs count >= 1");
  const LetterTemplate& base = lookup_letter(letter_id);
  const double bound = letter_jitter_bound(letter_id);

  std::vector<Demonstration> demos;
  demos.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(Rng::mix(Rng::mix(seed, std::hash<std::string>{}(letter_id)), i));
    LetterTemplate jittered = base;
    // Shared endpoint of consecutive segments must receive one jitter draw.
    std::vector<Eigen::Vector2d> deltas;
    for (std::size_t s = 0; s < jittered.size(); ++s)
      for (int c = 0; c < 3; ++c)
        deltas.push_back(v2(rng.uniform(-bound, bound), rng.uniform(-bound, bound)));
    deltas.push_back(v2(rng.uniform(-bound, bound), rng.uniform(-bound, bound)));

    std::size_t k = 0;
    for (std::size_t s = 0; s < jittered.size(); ++s) {
      jittered[s].p0 += deltas[k];
      jittered[s].p1 += deltas[k + 1];
      jittered[s].p2 += deltas[k + 2];
      jittered[s].p3 += deltas[k + 3];
      k += 3;
    }

    const Eigen::MatrixXd pos = sample_stroke(jittered, kEncoderSamples);
    const Eigen::VectorXd times =
        Eigen::VectorXd::LinSpaced(kEncoderSamples, 0.0, kLetterDuration);
    demos.push_back(
        make_demonstration(times, pos, letter_id + "_" + std::to_string(i)));
  }
  return demos;
}

}  // namespace autolfd
