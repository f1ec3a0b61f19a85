#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlcsim/baseline.hpp"
#include "vlcsim/bo.hpp"
#include "vlcsim/config.hpp"
#include "vlcsim/env.hpp"
#include "vlcsim/io.hpp"
#include "vlcsim/ppo.hpp"

namespace {

using namespace vlcsim;

// Exit codes: 0 ok, 1 configuration error, 2 runtime error.
constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

// Relative output directories are rooted at $VLCSIM_OUT_ROOT when set.
std::filesystem::path resolve_out_dir(const std::string& out) {
  std::filesystem::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv("VLCSIM_OUT_ROOT")) p = std::filesystem::path(root) / p;
  }
  std::filesystem::create_directories(p);
  return p;
}

void write_eval_outputs(const std::filesystem::path& dir, const SimConfig& cfg,
                        std::uint64_t seed, const std::string& command, const EvalResult& ev) {
  write_text_file((dir / "manifest.json").string(), manifest_json(cfg, seed, command));
  write_text_file((dir / "metrics.csv").string(), episode_metrics_csv(ev.episodes));
  write_text_file((dir / "samples.csv").string(), db_samples_csv(ev.episodes));
  write_text_file((dir / "summary.json").string(), summary_json(ev.episodes));
}

int cmd_train(const std::string& algo, const std::string& config_path, std::uint64_t seed,
              std::int64_t steps, const std::string& out) {
  SimConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
  if (steps > 0) cfg.ppo.total_steps = steps;
  validate_config(cfg);
  const std::filesystem::path dir = resolve_out_dir(out);

  const TrainResult res = algo == "mappo" ? train_mappo(cfg, seed) : train_cenppo(cfg, seed);

  write_text_file((dir / "manifest.json").string(), manifest_json(cfg, seed, "train " + algo));
  write_text_file((dir / "learning_curve.csv").string(), learning_curve_csv(res.curve));
  write_text_file((dir / "diagnostics.csv").string(), diagnostics_csv(res.diagnostics));
  Checkpoint ck;
  ck.algo = algo;
  ck.config_json = config_to_json(cfg);
  ck.actors = res.actors;
  ck.critic = res.critic;
  save_checkpoint(ck, (dir / "checkpoint.bin").string());

  if (res.diverged) {
    std::cerr << "training diverged after " << res.total_env_steps
              << " env steps: " << res.divergence_note
              << "\ncheckpoint and diagnostics written to " << dir << "\n";
    return kRuntimeError;
  }
  std::cout << "trained " << algo << " for " << res.total_env_steps << " env steps; outputs in "
            << dir << "\n";
  return kOk;
}

int cmd_evaluate(const std::string& checkpoint_path, int episodes, std::uint64_t seed,
                 const std::string& out) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const SimConfig cfg = parse_config(ck.config_json);
  validate_config(cfg);
  const std::filesystem::path dir = resolve_out_dir(out);

  const EvalResult ev =
      evaluate_policy(cfg, greedy_policy(ck.actors, ObsNormalizer(cfg)), episodes, seed);
  write_eval_outputs(dir, cfg, seed, "evaluate " + ck.algo, ev);
  std::cout << "evaluated " << episodes << " episodes; outputs in " << dir << "\n";
  return kOk;
}

int cmd_baseline(const std::string& config_path, int episodes, std::uint64_t seed,
                 const std::string& out) {
  SimConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
  validate_config(cfg);
  const std::filesystem::path dir = resolve_out_dir(out);

  const JointPolicy policy = [](const VlcEnv& env, const std::vector<std::vector<double>>&) {
    return baseline_joint_action(env);
  };
  const EvalResult ev = evaluate_policy(cfg, policy, episodes, seed);
  write_eval_outputs(dir, cfg, seed, "baseline", ev);
  std::cout << "baseline evaluated over " << episodes << " episodes; outputs in " << dir << "\n";
  return kOk;
}

int cmd_tune_weights(const std::string& config_path, int trials, std::uint64_t seed,
                     const std::string& out) {
  SimConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
  if (trials > 0) cfg.bo.n_trials = trials;
  validate_config(cfg);
  const std::filesystem::path dir = resolve_out_dir(out);

  const BoResult res = run_bo(cfg.bo, make_training_objective(cfg, seed));

  write_text_file((dir / "manifest.json").string(), manifest_json(cfg, seed, "tune-weights"));
  write_text_file((dir / "trials.csv").string(), bo_trials_csv(res.trials));
  SimConfig tuned = cfg;
  tuned.reward.w_qos = res.best_w_qos;
  tuned.reward.w_stab = res.best_w_stab;
  save_config(tuned, (dir / "best_config.json").string());
  std::cout << "best weights (w_qos, w_stab) = (" << res.best_w_qos << ", " << res.best_w_stab
            << ") with score " << res.best_score << "; outputs in " << dir << "\n";
  return kOk;
}

int cmd_validate(const std::string& config_path) {
  const SimConfig cfg = load_config(config_path);
  validate_config(cfg);
  std::cout << "config ok (hash " << config_hash(cfg) << ")\n";
  return kOk;
}

int cmd_export_defaults(const std::string& out) {
  const std::string text = config_to_json(default_config());
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
    std::cout << "defaults written to " << out << "\n";
  }
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor VLC-NOMA network simulator and multi-agent RL suite"};
  app.require_subcommand(1);

  std::string algo = "mappo", config_path, checkpoint_path, out_dir = "run_out";
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  int episodes = 20, trials = 0;

  CLI::App* train = app.add_subcommand("train", "Train a policy and write curve + checkpoint");
  train->add_option("--algo", algo, "mappo or cenppo")
      ->check(CLI::IsMember({"mappo", "cenppo"}));
  train->add_option("--config", config_path, "config JSON (defaults when omitted)");
  train->add_option("--seed", seed, "master seed");
  train->add_option("--steps", steps, "override total env steps");
  train->add_option("--out", out_dir, "output directory");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Greedy-evaluate a checkpoint");
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  evaluate->add_option("--episodes", episodes, "evaluation episodes");
  evaluate->add_option("--seed", seed, "evaluation seed");
  evaluate->add_option("--out", out_dir, "output directory");

  CLI::App* baseline = app.add_subcommand("baseline", "Evaluate the rule-based baseline");
  baseline->add_option("--config", config_path, "config JSON (defaults when omitted)");
  baseline->add_option("--episodes", episodes, "evaluation episodes");
  baseline->add_option("--seed", seed, "evaluation seed");
  baseline->add_option("--out", out_dir, "output directory");

  CLI::App* tune = app.add_subcommand("tune-weights", "Search the reward main weights");
  tune->add_option("--config", config_path, "config JSON (defaults when omitted)");
  tune->add_option("--trials", trials, "override trial budget");
  tune->add_option("--seed", seed, "master seed shared by all trials");
  tune->add_option("--out", out_dir, "output directory");

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate-config", "Check a config file");
  validate->add_option("file", validate_path, "config JSON")->required();

  std::string export_path;
  CLI::App* defaults = app.add_subcommand("export-defaults", "Write the default configuration");
  defaults->add_option("--out", export_path, "target file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (train->parsed()) return cmd_train(algo, config_path, seed, steps, out_dir);
    if (evaluate->parsed()) return cmd_evaluate(checkpoint_path, episodes, seed, out_dir);
    if (baseline->parsed()) return cmd_baseline(config_path, episodes, seed, out_dir);
    if (tune->parsed()) return cmd_tune_weights(config_path, trials, seed, out_dir);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (defaults->parsed()) return cmd_export_defaults(export_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}
