#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "autolfd/harness.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string letter;
  std::string method;
  std::string optimizer;
  int budget = -1;
};

void attach_common(CLI::App* app, CommonOptions* opts) {
  app->add_option("--config", opts->config_path, "JSON config file");
  app->add_option("--seed", opts->seed, "seed (replaces the config seed list)");
  app->add_option("--out", opts->out_dir, "output directory");
  app->add_option("--letter", opts->letter, "letter id (A, C, G, S, U)");
  app->add_option("--method", opts->method, "adaptation method: dmp | kmp");
  app->add_option("--optimizer", opts->optimizer, "optimizer: gd | bo");
  app->add_option("--budget", opts->budget, "BO evaluation budget");
}

autolfd::ExperimentConfig resolve(const CommonOptions& opts) {
  autolfd::ExperimentConfig config;
  if (!opts.config_path.empty())
    config = autolfd::ExperimentConfig::from_json_file(opts.config_path);
  if (opts.seed) {
    config.seeds = {*opts.seed};
    config.corpus_seed = *opts.seed;
    config.train_seed = *opts.seed;
  }
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (!opts.letter.empty()) config.letter = opts.letter;
  if (!opts.method.empty()) config.method = opts.method;
  if (!opts.optimizer.empty()) config.optimizer = opts.optimizer;
  if (opts.budget > 0) config.budget = opts.budget;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"auto-LfD: trajectory adaptation with learned-metric hyperparameter tuning"};
  app.require_subcommand(1);

  CommonOptions gen_opts, train_opts, failure_opts, auto_opts, compare_opts;
  int triplets = -1;
  std::string preset;
  std::string encoder_path;
  std::string init;

  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic letter corpus as CSV");
  attach_common(gen, &gen_opts);

  CLI::App* train = app.add_subcommand("train-encoder", "synthesize triplets and train the encoder");
  attach_common(train, &train_opts);
  train->add_option("--triplets", triplets, "triplet count (default 3026)");
  train->add_option("--preset", preset, "training preset: desk | paper");

  CLI::App* failure =
      app.add_subcommand("metric-failure", "sweep hyperparameters and certify an MSE/MLE inversion");
  attach_common(failure, &failure_opts);

  CLI::App* auto_cmd = app.add_subcommand("auto", "optimize hyperparameters with the latent metric");
  attach_common(auto_cmd, &auto_opts);
  auto_cmd->add_option("--encoder", encoder_path, "trained encoder JSON");
  auto_cmd->add_option("--init", init, "initialization preset: adversarial | good");

  CLI::App* compare = app.add_subcommand("compare", "GD (good/adversarial init) versus BO");
  attach_common(compare, &compare_opts);
  compare->add_option("--encoder", encoder_path, "trained encoder JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return autolfd::cmd_gen_data(resolve(gen_opts));
    if (train->parsed()) {
      autolfd::ExperimentConfig config = resolve(train_opts);
      if (triplets > 0) config.triplet_count = triplets;
      if (!preset.empty()) config.train_preset = preset;
      return autolfd::cmd_train_encoder(config);
    }
    if (failure->parsed()) return autolfd::cmd_metric_failure(resolve(failure_opts));
    if (auto_cmd->parsed()) {
      autolfd::ExperimentConfig config = resolve(auto_opts);
      if (!encoder_path.empty()) config.encoder_path = encoder_path;
      if (!init.empty()) config.init = init;
      return autolfd::cmd_auto(config);
    }
    if (compare->parsed()) {
      autolfd::ExperimentConfig config = resolve(compare_opts);
      if (!encoder_path.empty()) config.encoder_path = encoder_path;
      return autolfd::cmd_compare(config);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
