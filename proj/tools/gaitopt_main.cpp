// CLI for the gait-optimization experiments. Each subcommand runs one
// experiment from a config file (or built-in defaults) and writes CSV metrics
// plus the resolved config into the output directory.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gaitopt/gaitopt.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (key = value)");
  cmd->add_option("--seed", args.seed, "seed override");
  cmd->add_option("--out", args.out_dir, "output directory override");
  cmd->add_option("--threads", args.threads,
                  "worker threads for trajectory evaluation (results are identical "
                  "for any value)");
}

gaitopt::ExperimentConfig load(const CommonArgs& args, const std::string& kind) {
  gaitopt::ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = gaitopt::ExperimentConfig::from_file(args.config_path);
  cfg.kind = kind;
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  cfg.finalize();
  return cfg;
}

void print_table(const gaitopt::SummaryTable& table) {
  std::cout << "cost of transport (rows: method, columns: m/s)\n";
  std::cout << "method";
  for (double v : table.speeds) std::cout << "\t" << v;
  std::cout << "\n";
  for (std::size_t r = 0; r < table.methods.size(); ++r) {
    std::cout << table.methods[r];
    for (double c : table.cot[r]) std::cout << "\t" << c;
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint action/gait optimization experiments on the surrogate quadruped"};
  app.require_subcommand(1);

  CommonArgs ablation_args, adaptive_args, ramp_args, train_args, oracle_args;
  auto* ablation = app.add_subcommand("ablation", "fixed-gait grid over the speed range");
  add_common(ablation, ablation_args);
  auto* adaptive = app.add_subcommand("adaptive", "planner-in-the-loop per speed");
  add_common(adaptive, adaptive_args);
  auto* ramp = app.add_subcommand("ramp", "continuously increasing velocity command");
  add_common(ramp, ramp_args);
  auto* train = app.add_subcommand("train", "learned-model pipeline and evaluation");
  add_common(train, train_args);
  auto* oracle = app.add_subcommand("oracle-check", "brute-force verification suite");
  add_common(oracle, oracle_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ablation->parsed()) {
      const auto cfg = load(ablation_args, "ablation");
      print_table(gaitopt::run_ablation(cfg));
    } else if (adaptive->parsed()) {
      const auto cfg = load(adaptive_args, "adaptive");
      const auto report = gaitopt::run_adaptive(cfg, adaptive_args.threads);
      print_table(report.table);
      std::cout << "steady-state gait distance to canonicals per speed in "
                << cfg.out_dir << "/adaptive_gaits.csv\n";
    } else if (ramp->parsed()) {
      const auto cfg = load(ramp_args, "ramp");
      const auto report = gaitopt::run_ramp(cfg, ramp_args.threads);
      std::cout << "ramp episode: CoT " << report.episode.cot << ", max tracking error "
                << report.episode.max_tracking_error << ", max per-component gait step "
                << report.episode.max_gait_step << "\n"
                << "final-second gait distance: trot " << report.final_dist_trot
                << ", pronk " << report.final_dist_pronk << "\n";
    } else if (train->parsed()) {
      const auto cfg = load(train_args, "train");
      const auto outcome = gaitopt::run_train(cfg, train_args.threads);
      for (const auto& [head, rep] : outcome.reports.per_head)
        std::cout << head << ": train mse " << rep.train_mse << ", val mse "
                  << rep.val_mse << "\n";
      std::cout << "model reload bit-identical: "
                << (outcome.reload_bitwise_identical ? "yes" : "NO") << "\n";
      print_table(outcome.learned_adaptive.table);
    } else if (oracle->parsed()) {
      const auto cfg = load(oracle_args, "oracle-check");
      const auto report = gaitopt::run_oracle_checks(cfg, oracle_args.threads);
      return report.all_passed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
