#include "autolfd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "autolfd/dmp.hpp"
#include "autolfd/kmp.hpp"
#include "autolfd/rng.hpp"
#include "autolfd/svg.hpp"

namespace fs = std::filesystem;

namespace autolfd {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json theta_json(const Hyperparams& theta) {
  return {{"log10_kernel_width", theta.log10_kernel_width},
          {"log10_regularization", theta.log10_regularization}};
}

Hyperparams theta_from_json(const nlohmann::json& j) {
  return {j.at("log10_kernel_width").get<double>(),
          j.at("log10_regularization").get<double>()};
}

nlohmann::json report_json(const MetricReport& m) {
  return {{"mse", m.mse},
          {"mle", m.mle},
          {"frechet", m.frechet},
          {"latent", m.latent},
          {"shape_distortion", m.shape_distortion}};
}

int thread_budget(int cells) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("AUTOLFD_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) cap = std::min(cap, requested);
  }
  return std::min(cap, cells);
}

// Runs fn(i) for every cell, possibly in parallel; rethrows the first error.
void for_each_cell(int cells, const std::function<void(int)>& fn) {
  const int threads = thread_budget(cells);
  if (threads <= 1) {
    for (int i = 0; i < cells; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(cells);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < cells; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
}

std::vector<Demonstration> corpus_for_letter(const ExperimentConfig& config,
                                             const std::string& letter) {
  if (!config.demos_path.empty()) {
    std::vector<Demonstration> all = load_demonstrations(config.demos_path);
    std::vector<Demonstration> selected;
    for (auto& demo : all)
      if (demo.label.rfind(letter, 0) == 0) selected.push_back(std::move(demo));
    if (selected.empty())
      throw std::runtime_error("no demonstrations for letter '" + letter + "' under " +
                               config.demos_path);
    return selected;
  }
  return synth_letters(letter, config.demos_per_letter, config.corpus_seed);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << "\n";
}

void write_trace_csv(const std::vector<Observation>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iter,log10_kh,log10_lambda,cost,incumbent\n";
  double incumbent = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    incumbent = std::min(incumbent, trace[i].cost);
    out << i << "," << fmt17(trace[i].theta.log10_kernel_width) << ","
        << fmt17(trace[i].theta.log10_regularization) << "," << fmt17(trace[i].cost) << ","
        << fmt17(incumbent) << "\n";
  }
}

SvgSeries series_of(const std::string& label, const std::string& color, const Trajectory& traj,
                    bool dashed = false) {
  SvgSeries s;
  s.label = label;
  s.color = color;
  s.points = traj.positions;
  s.dashed = dashed;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig c;
  if (j.contains("letters")) c.letters = j["letters"].get<std::vector<std::string>>();
  if (j.contains("letter")) c.letter = j["letter"].get<std::string>();
  if (j.contains("demos_per_letter")) c.demos_per_letter = j["demos_per_letter"].get<int>();
  if (j.contains("corpus_seed")) c.corpus_seed = j["corpus_seed"].get<std::uint64_t>();
  if (j.contains("gmm_components")) c.gmm_components = j["gmm_components"].get<int>();
  if (j.contains("demos_path")) c.demos_path = j["demos_path"].get<std::string>();
  if (j.contains("method")) c.method = j["method"].get<std::string>();
  if (j.contains("optimizer")) c.optimizer = j["optimizer"].get<std::string>();
  if (j.contains("metric")) c.metric = j["metric"].get<std::string>();
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("budget")) c.budget = j["budget"].get<int>();
  if (j.contains("gd_steps")) c.gd_steps = j["gd_steps"].get<int>();
  if (j.contains("gd_learning_rate")) c.gd_learning_rate = j["gd_learning_rate"].get<double>();
  if (j.contains("init")) c.init = j["init"].get<std::string>();
  if (j.contains("bounds")) {
    c.bounds.lo = theta_from_json(j["bounds"]["lo"]);
    c.bounds.hi = theta_from_json(j["bounds"]["hi"]);
  }
  if (j.contains("triplet_count")) c.triplet_count = j["triplet_count"].get<int>();
  if (j.contains("train_preset")) c.train_preset = j["train_preset"].get<std::string>();
  if (j.contains("train_seed")) c.train_seed = j["train_seed"].get<std::uint64_t>();
  if (j.contains("sweep_grid")) c.sweep_grid = j["sweep_grid"].get<int>();
  if (j.contains("encoder")) c.encoder_path = j["encoder"].get<std::string>();
  if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["letters"] = letters.empty() ? letter_catalog() : letters;
  j["letter"] = letter;
  j["demos_per_letter"] = demos_per_letter;
  j["corpus_seed"] = corpus_seed;
  j["gmm_components"] = gmm_components;
  if (!demos_path.empty()) j["demos_path"] = demos_path;
  j["method"] = method;
  j["optimizer"] = optimizer;
  j["metric"] = metric;
  j["seeds"] = seeds;
  j["budget"] = budget;
  j["gd_steps"] = gd_steps;
  j["gd_learning_rate"] = gd_learning_rate;
  j["init"] = init;
  j["bounds"] = {{"lo", theta_json(bounds.lo)}, {"hi", theta_json(bounds.hi)}};
  j["triplet_count"] = triplet_count;
  j["train_preset"] = train_preset;
  j["train_seed"] = train_seed;
  j["sweep_grid"] = sweep_grid;
  j["encoder"] = encoder_path;
  j["out"] = out_dir;
  return j.dump(2);
}

Hyperparams named_init(const std::string& name) {
  if (name == "adversarial") return {-1.5, 1.5};
  if (name == "good") return {3.0, -5.0};
  throw std::invalid_argument("unknown init preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Cells
// ---------------------------------------------------------------------------

AdaptationCell build_cell(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.method != "dmp" && config.method != "kmp")
    throw std::invalid_argument("unknown method '" + config.method + "'");

  const std::vector<Demonstration> demos = corpus_for_letter(config, config.letter);

  AdaptationCell cell;
  cell.method = config.method;
  const Trajectory first = resample(demos.front().trajectory, kEncoderSamples);
  if (config.method == "dmp") {
    cell.demo = make_demonstration(first.times, first.positions, demos.front().label);
    cell.anchor = cell.demo.trajectory;
    cell.reference = isotropic_reference(cell.anchor);
  } else {
    cell.reference =
        extract_reference(demos, config.gmm_components, kEncoderSamples, config.corpus_seed);
    cell.anchor = cell.reference.mean_trajectory();
    cell.demo = make_demonstration(cell.anchor.times, cell.anchor.positions,
                                   demos.front().label + "_ref");
  }

  Rng rng(Rng::mix(Rng::mix(config.corpus_seed, seed), 0xce11ULL));
  cell.constraints = sample_adaptation_constraints(cell.anchor, rng, config.method == "kmp");
  return cell;
}

Trajectory run_adaptation(const AdaptationCell& cell, const Hyperparams& theta) {
  if (cell.method == "dmp") return adapt_dmp(cell.demo, cell.constraints, theta);
  return adapt_kmp(cell.reference, cell.constraints, theta);
}

LossFn make_cost_fn(const AdaptationCell& cell, const EncoderParams* encoder,
                    const std::string& metric) {
  if (metric == "latent") {
    if (encoder == nullptr) throw std::invalid_argument("latent metric needs encoder params");
    const Eigen::VectorXd anchor_embedding = encode(*encoder, cell.anchor);
    return [&cell, encoder, anchor_embedding](const Hyperparams& theta) {
      const Trajectory adapted = run_adaptation(cell, theta);
      return (anchor_embedding - encode(*encoder, adapted)).norm();
    };
  }
  if (metric == "mse") {
    const Eigen::MatrixXd anchor_rows = stacked_rows(cell.anchor);
    return [&cell, anchor_rows](const Hyperparams& theta) {
      return mse(anchor_rows, run_adaptation(cell, theta));
    };
  }
  if (metric == "mle") {
    return [&cell](const Hyperparams& theta) {
      return mle_cost(cell.reference, run_adaptation(cell, theta));
    };
  }
  throw std::invalid_argument("unknown metric '" + metric + "'");
}

double constraint_error_rel(const AdaptationCell& cell, const Trajectory& traj, bool via_only) {
  const double diagonal = cell.anchor.bbox_diagonal();
  double worst = 0.0;
  for (const ConstraintPoint& point : cell.constraints.points) {
    const bool interior = point.time > traj.start_time() + 1e-9 * traj.duration() &&
                          point.time < traj.end_time() - 1e-9 * traj.duration();
    if (via_only && !interior) continue;
    int nearest = 0;
    (traj.times.array() - point.time).abs().minCoeff(&nearest);
    const double err =
        (traj.positions.row(nearest).transpose() - point.position).norm() / diagonal;
    worst = std::max(worst, err);
  }
  return worst;
}

std::string report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["seed"] = report.seed;
  j["method"] = report.method;
  j["optimizer"] = report.optimizer;
  j["theta_initial"] = theta_json(report.theta_initial);
  j["theta_final"] = theta_json(report.theta_final);
  j["cost_initial"] = report.cost_initial;
  j["cost_final"] = report.cost_final;
  j["mid_iter"] = report.mid_iter;
  j["final_iter"] = report.final_iter;
  j["metrics_initial"] = report_json(report.metrics_initial);
  j["metrics_final"] = report_json(report.metrics_final);
  j["endpoint_error_rel"] = report.endpoint_error_rel;
  j["via_error_rel"] = report.via_error_rel;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& obs : report.trace) {
    trace.push_back({{"theta", theta_json(obs.theta)}, {"cost", obs.cost}});
  }
  j["trace"] = trace;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_gen_data(const ExperimentConfig& config) {
  const fs::path dir = fs::path(config.out_dir) / "corpus";
  fs::create_directories(dir);
  const std::vector<std::string> letters =
      config.letters.empty() ? letter_catalog() : config.letters;

  nlohmann::json manifest;
  manifest["corpus_seed"] = config.corpus_seed;
  manifest["demos_per_letter"] = config.demos_per_letter;
  nlohmann::json files = nlohmann::json::array();
  for (const std::string& letter : letters) {
    const auto demos = synth_letters(letter, config.demos_per_letter, config.corpus_seed);
    for (const auto& demo : demos) {
      const std::string name = demo.label + ".csv";
      save_trajectory_csv(demo.trajectory, (dir / name).string());
      files.push_back(name);
    }
  }
  manifest["files"] = files;
  write_text((dir / "manifest.json").string(), manifest.dump(2));
  std::cout << "gen-data: wrote " << files.size() << " demonstrations to " << dir.string()
            << "\n";
  return 0;
}

int cmd_train_encoder(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const std::vector<std::string> letters =
      config.letters.empty() ? letter_catalog() : config.letters;

  std::vector<Demonstration> demos;
  if (!config.demos_path.empty()) {
    demos = load_demonstrations(config.demos_path);
  } else {
    for (const std::string& letter : letters) {
      auto batch = synth_letters(letter, config.demos_per_letter, config.corpus_seed);
      demos.insert(demos.end(), std::make_move_iterator(batch.begin()),
                   std::make_move_iterator(batch.end()));
    }
  }

  const std::vector<Triplet> triplets =
      generate_triplets(demos, config.triplet_count, config.train_seed);

  TrainConfig train =
      config.train_preset == "paper" ? TrainConfig::paper() : TrainConfig::desk();
  train.seed = config.train_seed;
  const TrainResult result = train_encoder(triplets, train);

  const fs::path encoder_path = fs::path(config.out_dir) / "encoder.json";
  save_encoder_json(result.params, encoder_path.string());
  save_training_curve_csv(result, (fs::path(config.out_dir) / "training_curve.csv").string());

  char line[160];
  std::snprintf(line, sizeof(line),
                "train-encoder: M=%zu preset=%s holdout separation accuracy %.4f\n",
                triplets.size(), config.train_preset.c_str(), result.final_holdout_accuracy);
  std::cout << line;
  return 0;
}

int cmd_metric_failure(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  write_text((fs::path(config.out_dir) / "resolved_config.json").string(), config.to_json());

  const ExperimentConfig& c = config;
  AdaptationCell cell = build_cell(c, c.seeds.empty() ? 1 : c.seeds.front());
  const std::string metric = config.method == "kmp" ? "mle" : "mse";
  const LossFn cost_fn = make_cost_fn(cell, nullptr, metric);

  struct SweepRow {
    Hyperparams theta;
    double cost = std::numeric_limits<double>::quiet_NaN();
    double distortion = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
  };
  const int grid = config.sweep_grid;
  std::vector<SweepRow> rows(grid * grid);
  for_each_cell(grid * grid, [&](int idx) {
    const int i = idx / grid;
    const int j = idx % grid;
    SweepRow row;
    row.theta.log10_kernel_width =
        config.bounds.lo.log10_kernel_width +
        (config.bounds.hi.log10_kernel_width - config.bounds.lo.log10_kernel_width) * i /
            (grid - 1);
    row.theta.log10_regularization =
        config.bounds.lo.log10_regularization +
        (config.bounds.hi.log10_regularization - config.bounds.lo.log10_regularization) * j /
            (grid - 1);
    try {
      const Trajectory adapted = run_adaptation(cell, row.theta);
      row.cost = cost_fn(row.theta);
      row.distortion = shape_distortion(cell.anchor, adapted);
      row.ok = std::isfinite(row.cost) && std::isfinite(row.distortion);
    } catch (const std::exception&) {
    }
    rows[idx] = row;
  });

  std::ofstream table((fs::path(config.out_dir) / "sweep.csv").string());
  table << "idx,log10_kh,log10_lambda," << metric << ",shape_distortion,status\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    table << i << "," << fmt17(rows[i].theta.log10_kernel_width) << ","
          << fmt17(rows[i].theta.log10_regularization) << "," << fmt17(rows[i].cost) << ","
          << fmt17(rows[i].distortion) << "," << (rows[i].ok ? "ok" : "error") << "\n";
  }
  table.close();

  // Certified inversion: the better-shaped adaptation has the higher cost.
  double sd_lo = std::numeric_limits<double>::infinity(), sd_hi = 0.0;
  double cost_lo = std::numeric_limits<double>::infinity(), cost_hi = 0.0;
  for (const auto& row : rows)
    if (row.ok) {
      sd_lo = std::min(sd_lo, row.distortion);
      sd_hi = std::max(sd_hi, row.distortion);
      cost_lo = std::min(cost_lo, row.cost);
      cost_hi = std::max(cost_hi, row.cost);
    }
  const double sd_scale = std::max(sd_hi - sd_lo, 1e-12);
  const double cost_scale = std::max(cost_hi - cost_lo, 1e-12);

  int best_a = -1, best_b = -1;
  double best_score = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (!rows[a].ok) continue;
    for (std::size_t b = 0; b < rows.size(); ++b) {
      if (!rows[b].ok || a == b) continue;
      if (rows[a].distortion < rows[b].distortion && rows[a].cost > rows[b].cost) {
        const double score = (rows[b].distortion - rows[a].distortion) / sd_scale +
                             (rows[a].cost - rows[b].cost) / cost_scale;
        if (score > best_score) {
          best_score = score;
          best_a = static_cast<int>(a);
          best_b = static_cast<int>(b);
        }
      }
    }
  }

  if (best_a < 0) {
    std::cout << "metric-failure: no inversion pair found on the " << grid << "x" << grid
              << " grid (see sweep.csv)\n";
    return 2;
  }

  const SweepRow& a = rows[best_a];
  const SweepRow& b = rows[best_b];
  const Trajectory traj_a = run_adaptation(cell, a.theta);
  const Trajectory traj_b = run_adaptation(cell, b.theta);
  save_trajectory_csv(traj_a, (fs::path(config.out_dir) / "adaptation_a.csv").string());
  save_trajectory_csv(traj_b, (fs::path(config.out_dir) / "adaptation_b.csv").string());
  save_trajectory_csv(cell.anchor, (fs::path(config.out_dir) / "demo.csv").string());

  emit_svg({series_of("demonstration", "#7f7f7f", cell.anchor, true),
            series_of("A: better shape, higher " + metric, "#d62728", traj_a),
            series_of("B: worse shape, lower " + metric, "#1f77b4", traj_b)},
           cell.constraints.points, (fs::path(config.out_dir) / "overlay.svg").string());

  nlohmann::json j;
  j["metric"] = metric;
  j["pair"] = {{"a", {{"idx", best_a},
                      {"theta", theta_json(a.theta)},
                      {"cost", a.cost},
                      {"shape_distortion", a.distortion}}},
               {"b", {{"idx", best_b},
                      {"theta", theta_json(b.theta)},
                      {"cost", b.cost},
                      {"shape_distortion", b.distortion}}}};
  write_text((fs::path(config.out_dir) / "inversion.json").string(), j.dump(2));

  char line[200];
  std::snprintf(line, sizeof(line),
                "metric-failure: certified pair sd %.4f<%.4f while %s %.4f>%.4f\n", a.distortion,
                b.distortion, metric.c_str(), a.cost, b.cost);
  std::cout << line;
  return 0;
}

namespace {

RunReport run_one_auto_cell(const ExperimentConfig& config, const EncoderParams& encoder,
                            std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  const AdaptationCell cell = build_cell(config, seed);
  const LossFn loss = make_cost_fn(cell, &encoder, config.metric);

  RunReport report;
  report.seed = seed;
  report.method = config.method;
  report.optimizer = config.optimizer;
  report.theta_initial = named_init(config.init);
  report.cost_initial = loss(report.theta_initial);

  if (config.optimizer == "bo") {
    const BoResult result = bo_optimize(loss, config.bounds, config.budget, seed);
    report.trace = result.observations.items;
    report.theta_final = result.best;
  } else if (config.optimizer == "gd") {
    const GdResult result =
        gd_optimize(loss, report.theta_initial, config.gd_learning_rate, config.gd_steps,
                    config.bounds);
    report.trace = result.history;
    report.theta_final = result.best;
  } else {
    throw std::invalid_argument("unknown optimizer '" + config.optimizer + "'");
  }

  // Intermediate = incumbent halfway through the trace.
  const int half = std::max(1, static_cast<int>(report.trace.size()) / 2);
  int mid = 0;
  for (int i = 1; i < half; ++i)
    if (report.trace[i].cost < report.trace[mid].cost) mid = i;
  report.mid_iter = mid;
  int final_iter = 0;
  for (int i = 1; i < static_cast<int>(report.trace.size()); ++i)
    if (report.trace[i].cost < report.trace[final_iter].cost) final_iter = i;
  report.final_iter = final_iter;
  report.cost_final = report.trace[final_iter].cost;

  const Trajectory initial = run_adaptation(cell, report.theta_initial);
  const Trajectory middle = run_adaptation(cell, report.trace[mid].theta);
  const Trajectory final_traj = run_adaptation(cell, report.theta_final);

  report.metrics_initial = evaluate_metrics(encoder, cell.reference, cell.anchor, initial);
  report.metrics_final = evaluate_metrics(encoder, cell.reference, cell.anchor, final_traj);
  report.endpoint_error_rel = constraint_error_rel(cell, final_traj, false);
  report.via_error_rel = constraint_error_rel(cell, final_traj, true);

  save_trajectory_csv(cell.anchor, (dir / "demo.csv").string());
  save_trajectory_csv(initial, (dir / "adapted_initial.csv").string());
  save_trajectory_csv(middle, (dir / "adapted_mid.csv").string());
  save_trajectory_csv(final_traj, (dir / "adapted_final.csv").string());
  write_trace_csv(report.trace, (dir / "trace.csv").string());
  if (config.method == "kmp")
    save_reference_json(cell.reference, (dir / "reference.json").string());

  emit_svg({series_of("demonstration", "#7f7f7f", cell.anchor, true),
            series_of("initial", "#ff7f0e", initial, true),
            series_of("intermediate", "#1f77b4", middle),
            series_of("final", "#d62728", final_traj)},
           cell.constraints.points, (dir / "overlay.svg").string());
  write_text((dir / "report.json").string(), report_to_json(report));
  return report;
}

}  // namespace

int cmd_auto(const ExperimentConfig& config, std::vector<RunReport>* reports) {
  fs::create_directories(config.out_dir);
  write_text((fs::path(config.out_dir) / "resolved_config.json").string(), config.to_json());
  const EncoderParams encoder = load_encoder_json(config.encoder_path);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<RunReport> all(config.seeds.size());
  for_each_cell(static_cast<int>(config.seeds.size()), [&](int i) {
    const std::uint64_t seed = config.seeds[i];
    const fs::path dir = fs::path(config.out_dir) / ("seed_" + std::to_string(seed));
    all[i] = run_one_auto_cell(config, encoder, seed, dir);
  });

  std::ofstream summary((fs::path(config.out_dir) / "summary.csv").string());
  summary << "seed,cost_initial,cost_final,shape_distortion_final,endpoint_error_rel,"
             "via_error_rel\n";
  for (const auto& r : all) {
    summary << r.seed << "," << fmt17(r.cost_initial) << "," << fmt17(r.cost_final) << ","
            << fmt17(r.metrics_final.shape_distortion) << "," << fmt17(r.endpoint_error_rel)
            << "," << fmt17(r.via_error_rel) << "\n";
  }
  summary.close();

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "auto: " << config.seeds.size() << " cells in " << seconds << " s\n";
  for (const auto& r : all) {
    char line[200];
    std::snprintf(line, sizeof(line),
                  "auto[%s/%s seed %llu]: cost %.4f -> %.4f, distortion %.4f\n",
                  config.method.c_str(), config.optimizer.c_str(),
                  static_cast<unsigned long long>(r.seed), r.cost_initial, r.cost_final,
                  r.metrics_final.shape_distortion);
    std::cout << line;
  }
  if (reports) *reports = std::move(all);
  return 0;
}

int cmd_compare(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  write_text((fs::path(config.out_dir) / "resolved_config.json").string(), config.to_json());
  const EncoderParams encoder = load_encoder_json(config.encoder_path);

  struct Arm {
    std::string name;
    Hyperparams theta_final;
    double cost = 0.0;
    double distortion = 0.0;
  };
  std::vector<std::array<Arm, 3>> cells(config.seeds.size());

  for_each_cell(static_cast<int>(config.seeds.size()), [&](int i) {
    const std::uint64_t seed = config.seeds[i];
    const AdaptationCell cell = build_cell(config, seed);
    const LossFn loss = make_cost_fn(cell, &encoder, config.metric);

    auto finish = [&](const std::string& name, const Hyperparams& theta, double cost) {
      Arm arm;
      arm.name = name;
      arm.theta_final = theta;
      arm.cost = cost;
      arm.distortion = shape_distortion(cell.anchor, run_adaptation(cell, theta));
      return arm;
    };

    const GdResult good = gd_optimize(loss, named_init("good"), config.gd_learning_rate,
                                      config.gd_steps, config.bounds);
    cells[i][0] = finish("gd-good", good.best, good.history.back().cost);

    const GdResult bad = gd_optimize(loss, named_init("adversarial"), config.gd_learning_rate,
                                     config.gd_steps, config.bounds);
    cells[i][1] = finish("gd-bad", bad.best, bad.history.back().cost);

    const BoResult bo = bo_optimize(loss, config.bounds, config.budget, seed);
    cells[i][2] = finish("bo", bo.best, bo.observations.incumbent().cost);

    const fs::path dir = fs::path(config.out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    emit_svg({series_of("demonstration", "#7f7f7f", cell.anchor, true),
              series_of("gd-good", "#1f77b4", run_adaptation(cell, good.best)),
              series_of("gd-bad", "#ff7f0e", run_adaptation(cell, bad.best)),
              series_of("bo", "#d62728", run_adaptation(cell, bo.best))},
             cell.constraints.points, (dir / "overlay.svg").string());
  });

  std::ofstream table((fs::path(config.out_dir) / "comparison.csv").string());
  table << "seed,arm,final_cost,shape_distortion\n";
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (const Arm& arm : cells[i])
      table << config.seeds[i] << "," << arm.name << "," << fmt17(arm.cost) << ","
            << fmt17(arm.distortion) << "\n";
  table.close();

  int bo_not_worse_than_bad = 0;
  double worst_good_gap = 0.0;
  nlohmann::json per_seed = nlohmann::json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Arm& good = cells[i][0];
    const Arm& bad = cells[i][1];
    const Arm& bo = cells[i][2];
    if (bo.cost <= bad.cost) ++bo_not_worse_than_bad;
    const double gap = std::abs(good.cost - bo.cost) / std::max(bo.cost, 1e-12);
    worst_good_gap = std::max(worst_good_gap, gap);
    per_seed.push_back({{"seed", config.seeds[i]},
                        {"gd_good", {{"cost", good.cost}, {"distortion", good.distortion}}},
                        {"gd_bad", {{"cost", bad.cost}, {"distortion", bad.distortion}}},
                        {"bo", {{"cost", bo.cost}, {"distortion", bo.distortion}}}});
  }
  nlohmann::json j;
  j["per_seed"] = per_seed;
  j["bo_final_cost_not_worse_than_bad_gd"] = bo_not_worse_than_bad;
  j["worst_good_init_relative_gap"] = worst_good_gap;
  write_text((fs::path(config.out_dir) / "comparison.json").string(), j.dump(2));

  char line[160];
  std::snprintf(line, sizeof(line),
                "compare: bo <= gd-bad on %d/%zu seeds, worst good-init gap %.4f\n",
                bo_not_worse_than_bad, cells.size(), worst_good_gap);
  std::cout << line;
  return 0;
}

}  // namespace autolfd
