#pragma once

// Experiment runners behind the CLI: fixed-gait ablation grid, adaptive
// planning, the velocity ramp, the learned-model pipeline, and the oracle
// check suite. Every runner writes its resolved config next to its CSVs so a
// run is reproducible from the output directory alone.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaitopt/config.hpp"
#include "gaitopt/csv.hpp"
#include "gaitopt/learner.hpp"
#include "gaitopt/planner.hpp"
#include "gaitopt/surrogate_env.hpp"

namespace gaitopt {

inline const std::vector<std::string> kMetricsColumns{
    "time",  "v_cmd", "v",  "tracking_error", "power",      "cot_so_far", "g1",
    "g2",    "g3",    "gait_change",          "contact_fl", "contact_fr", "contact_rl",
    "contact_rr"};

/// One metrics row per control step, in kMetricsColumns order.
inline void write_metrics_csv(const std::string& path, const RolloutTrace& trace,
                              const SurrogateParams& p) {
  CsvWriter csv(path);
  csv.header(kMetricsColumns);
  const GaitCommand* prev_gait = &trace.initial.obs.gait;
  const Observation* obs = &trace.initial.obs;
  double time = trace.initial.time;
  for (const StepOutcome& out : trace.steps) {
    const GaitCommand& g = out.next.obs.gait;  // gait commanded at this step
    const double cot_so_far =
        out.next.distance > 0.0
            ? out.next.cumulative_energy / (p.mass * p.gravity * out.next.distance)
            : 0.0;
    csv.row({time, obs->v_cmd, obs->v, std::fabs(obs->v - obs->v_cmd), out.power,
             cot_so_far, g[0], g[1], g[2], gait_distance(g, *prev_gait),
             out.contacts.stance[0] ? 1.0 : 0.0, out.contacts.stance[1] ? 1.0 : 0.0,
             out.contacts.stance[2] ? 1.0 : 0.0, out.contacts.stance[3] ? 1.0 : 0.0});
    prev_gait = &g;
    obs = &out.next.obs;
    time = out.next.time;
  }
  csv.close();
}

inline void write_contacts_csv(const std::string& path, const RolloutTrace& trace) {
  CsvWriter csv(path);
  csv.header({"time", "FL", "FR", "RL", "RR"});
  double time = trace.initial.time;
  for (const StepOutcome& out : trace.steps) {
    csv.row({time, out.contacts.stance[0] ? 1.0 : 0.0, out.contacts.stance[1] ? 1.0 : 0.0,
             out.contacts.stance[2] ? 1.0 : 0.0, out.contacts.stance[3] ? 1.0 : 0.0});
    time = out.next.time;
  }
  csv.close();
}

struct EpisodeMetrics {
  double cot = 0.0;
  double mean_tracking_error = 0.0;
  double max_tracking_error = 0.0;
  double max_gait_step = 0.0;
  RolloutTrace trace;
};

/// Methods-by-speeds table mirroring the calibration grid layout.
struct SummaryTable {
  std::vector<std::string> methods;
  std::vector<double> speeds;
  std::vector<std::vector<double>> cot;       // [method][speed]
  std::vector<std::vector<double>> tracking;  // [method][speed]

  void write(const std::string& dir) const {
    namespace fs = std::filesystem;
    for (const auto& [name, table] :
         {std::make_pair(std::string("summary_cot.csv"), &cot),
          std::make_pair(std::string("summary_tracking.csv"), &tracking)}) {
      CsvWriter csv((fs::path(dir) / name).string());
      std::vector<std::string> head{"method"};
      for (double v : speeds) head.push_back("v" + csv_double(v));
      csv.header(head);
      for (std::size_t r = 0; r < methods.size(); ++r) csv.row_mixed(methods[r], (*table)[r]);
      csv.close();
    }
  }
};

namespace detail {

inline Controller fixed_gait_controller(const SurrogateParams& p, const GaitCommand& g) {
  return [p, g](const Observation& o) {
    return std::make_pair(Action(std::vector<double>{clamp_unit(p.k_p * (o.v_cmd - o.v))}), g);
  };
}

inline EpisodeMetrics run_fixed_episode(const ExperimentConfig& cfg, const GaitCommand& gait,
                                        double v_cmd) {
  SurrogateEnv env(cfg.env, cfg.weights);
  const int steps = static_cast<int>(std::round(cfg.episode_seconds / cfg.env.dt));
  EnvState s0 = env.reset(v_cmd, CommandProfile::constant(v_cmd), gait);
  EpisodeMetrics m;
  m.trace = env.rollout(s0, fixed_gait_controller(cfg.env, gait), steps, cfg.env.dt);
  const RolloutSummary sum = m.trace.summarize(cfg.env);
  m.cot = sum.cot;
  m.mean_tracking_error = sum.mean_tracking_error;
  m.max_tracking_error = sum.max_tracking_error;
  m.max_gait_step = sum.max_gait_step;
  return m;
}

inline EpisodeMetrics run_planner_episode(const ExperimentConfig& cfg,
                                          const ModelBundle& bundle,
                                          const CommandProfile& profile, double seconds,
                                          double v0, int threads) {
  SurrogateEnv env(cfg.env, cfg.weights);
  MppiPlanner planner(bundle, cfg.planner, cfg.seed, threads);
  const int steps = static_cast<int>(std::round(seconds / cfg.env.dt));
  EnvState s0 = env.reset(v0, profile, gaits::trot);
  PlannerState ps = PlannerState::initial(cfg.planner);
  const Controller controller = [&](const Observation& o) {
    PlanResult r = planner.plan(o, ps);
    ps = std::move(r.state);
    return std::make_pair(r.action, r.gait);
  };
  EpisodeMetrics m;
  m.trace = env.rollout(s0, controller, steps, cfg.env.dt);
  const RolloutSummary sum = m.trace.summarize(cfg.env);
  m.cot = sum.cot;
  m.mean_tracking_error = sum.mean_tracking_error;
  m.max_tracking_error = sum.max_tracking_error;
  m.max_gait_step = sum.max_gait_step;
  return m;
}

inline void prepare_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  cfg.to_file((std::filesystem::path(cfg.out_dir) / "config.txt").string());
}

}  // namespace detail

/// Fixed-gait grid: every canonical gait at every configured speed.
inline SummaryTable run_ablation(const ExperimentConfig& cfg) {
  detail::prepare_out_dir(cfg);
  SummaryTable table;
  table.speeds = cfg.speeds;
  for (int gi = 0; gi < kNumCanonicalGaits; ++gi) {
    table.methods.emplace_back(canonical_gait_name(gi));
    std::vector<double> cot_row, err_row;
    for (double v : cfg.speeds) {
      const EpisodeMetrics m = detail::run_fixed_episode(cfg, canonical_gaits()[gi], v);
      cot_row.push_back(m.cot);
      err_row.push_back(m.mean_tracking_error);
      write_metrics_csv((std::filesystem::path(cfg.out_dir) /
                         ("ablation_" + std::string(canonical_gait_name(gi)) + "_v" +
                          csv_double(v) + ".csv"))
                            .string(),
                        m.trace, cfg.env);
    }
    table.cot.push_back(std::move(cot_row));
    table.tracking.push_back(std::move(err_row));
  }
  table.write(cfg.out_dir);
  return table;
}

struct AdaptiveReport {
  SummaryTable table;  // fixed-gait rows plus the trailing adaptive row
  std::vector<std::array<double, 4>> gait_distances;  // per speed, to each canonical
  std::vector<GaitCommand> steady_gaits;              // per speed
};

/// Circular per-component mean of the gaits commanded over the last window_s
/// seconds of a trace.
inline GaitCommand steady_state_gait(const RolloutTrace& trace, double window_s = 2.0) {
  const std::size_t n = trace.steps.size();
  const std::size_t window =
      std::min<std::size_t>(n, std::max<std::size_t>(1, static_cast<std::size_t>(
                                                            window_s / trace.dt)));
  std::array<double, 3> sin_sum{}, cos_sum{};
  for (std::size_t t = n - window; t < n; ++t) {
    const GaitCommand& g = trace.steps[t].next.obs.gait;
    for (int i = 0; i < 3; ++i) {
      sin_sum[i] += std::sin(kTwoPi * g[i]);
      cos_sum[i] += std::cos(kTwoPi * g[i]);
    }
  }
  std::array<double, 3> mean{};
  for (int i = 0; i < 3; ++i) mean[i] = std::atan2(sin_sum[i], cos_sum[i]) / kTwoPi;
  return GaitCommand::wrap(mean);
}

/// Planner-in-the-loop episode per speed, reported against the fixed-gait
/// grid. A learned bundle can be substituted for the analytic one.
inline AdaptiveReport run_adaptive(const ExperimentConfig& cfg, int threads = 1,
                                   const ModelBundle* bundle_override = nullptr,
                                   const std::string& method_name = "adaptive") {
  detail::prepare_out_dir(cfg);
  AdaptiveReport report;
  report.table = run_ablation(cfg);

  const ModelBundle bundle = bundle_override
                                 ? *bundle_override
                                 : make_analytic_bundle(cfg.env, cfg.weights,
                                                        cfg.planner.gamma);
  std::vector<double> cot_row, err_row;
  CsvWriter gait_csv((std::filesystem::path(cfg.out_dir) / "adaptive_gaits.csv").string());
  gait_csv.header({"v_cmd", "g1", "g2", "g3", "dist_trot", "dist_pace", "dist_bound",
                   "dist_pronk"});
  for (double v : cfg.speeds) {
    const EpisodeMetrics m = detail::run_planner_episode(
        cfg, bundle, CommandProfile::constant(v), cfg.episode_seconds, v, threads);
    cot_row.push_back(m.cot);
    err_row.push_back(m.mean_tracking_error);
    write_metrics_csv((std::filesystem::path(cfg.out_dir) /
                       (method_name + "_v" + csv_double(v) + ".csv"))
                          .string(),
                      m.trace, cfg.env);
    const GaitCommand steady = steady_state_gait(m.trace);
    report.steady_gaits.push_back(steady);
    std::array<double, 4> dists{};
    for (int gi = 0; gi < kNumCanonicalGaits; ++gi)
      dists[gi] = gait_distance(steady, canonical_gaits()[gi]);
    report.gait_distances.push_back(dists);
    gait_csv.row({v, steady[0], steady[1], steady[2], dists[0], dists[1], dists[2],
                  dists[3]});
  }
  gait_csv.close();
  report.table.methods.push_back(method_name);
  report.table.cot.push_back(std::move(cot_row));
  report.table.tracking.push_back(std::move(err_row));
  report.table.write(cfg.out_dir);
  return report;
}

struct RampReport {
  EpisodeMetrics episode;
  double final_dist_trot = 0.0;   // mean over the final second
  double final_dist_pronk = 0.0;
};

/// Velocity-ramp episode with per-step metrics and the gait-diagram CSV.
inline RampReport run_ramp(const ExperimentConfig& cfg, int threads = 1,
                           const ModelBundle* bundle_override = nullptr) {
  detail::prepare_out_dir(cfg);
  const ModelBundle bundle = bundle_override
                                 ? *bundle_override
                                 : make_analytic_bundle(cfg.env, cfg.weights,
                                                        cfg.planner.gamma);
  const CommandProfile profile =
      ramp_profile(cfg.ramp_v_start, cfg.ramp_v_end, cfg.ramp_duration);
  const double seconds = cfg.ramp_duration + cfg.ramp_hold;
  RampReport report;
  report.episode = detail::run_planner_episode(cfg, bundle, profile, seconds,
                                               cfg.ramp_v_start, threads);
  write_metrics_csv((std::filesystem::path(cfg.out_dir) / "ramp_metrics.csv").string(),
                    report.episode.trace, cfg.env);
  write_contacts_csv((std::filesystem::path(cfg.out_dir) / "ramp_contacts.csv").string(),
                     report.episode.trace);

  const auto& steps = report.episode.trace.steps;
  const std::size_t window = std::min<std::size_t>(
      steps.size(), static_cast<std::size_t>(std::round(1.0 / cfg.env.dt)));
  double trot_sum = 0.0, pronk_sum = 0.0;
  for (std::size_t t = steps.size() - window; t < steps.size(); ++t) {
    trot_sum += gait_distance(steps[t].next.obs.gait, gaits::trot);
    pronk_sum += gait_distance(steps[t].next.obs.gait, gaits::pronk);
  }
  report.final_dist_trot = trot_sum / static_cast<double>(window);
  report.final_dist_pronk = pronk_sum / static_cast<double>(window);
  return report;
}

struct TrainOutcome {
  TrainReports reports;
  AdaptiveReport learned_adaptive;
  AdaptiveReport perfect_adaptive;
  bool reload_bitwise_identical = false;
};

/// Full learned-model pipeline: collect, fit, persist, reload, then repeat the
/// adaptive experiment with the learned bundle and report the degradation
/// against the perfect-model run.
inline TrainOutcome run_train(const ExperimentConfig& cfg, int threads = 1) {
  detail::prepare_out_dir(cfg);
  namespace fs = std::filesystem;

  CollectConfig collect;
  collect.episodes = cfg.train_episodes;
  collect.steps_per_episode = cfg.train_steps;
  collect.action_noise = cfg.train_action_noise;
  collect.gait_resample_interval = cfg.train_gait_interval;
  const Dataset data =
      collect_dataset(cfg.env, cfg.weights, collect, cfg.planner.gamma, cfg.seed);
  export_dataset_csv((fs::path(cfg.out_dir) / "dataset.csv").string(), data);

  FitConfig fit = cfg.fit;
  fit.seed = cfg.seed;
  TrainOutcome outcome;
  TrainedBundle trained = train_bundle(data, cfg.env, fit);
  outcome.reports = trained.reports;

  const std::string model_dir = (fs::path(cfg.out_dir) / "models").string();
  save_bundle(model_dir, trained.bundle);
  const ModelBundle reloaded = load_bundle(model_dir, cfg.env);
  {
    // round trip must preserve parameters bit for bit
    const auto& a = dynamic_cast<const LearnedDynamics&>(*trained.bundle.dynamics).head();
    const auto& b = dynamic_cast<const LearnedDynamics&>(*reloaded.dynamics).head();
    outcome.reload_bitwise_identical =
        a.reg.params() == b.reg.params() && a.in_norm.mean == b.in_norm.mean &&
        a.in_norm.stddev == b.in_norm.stddev && a.out_norm.mean == b.out_norm.mean &&
        a.out_norm.stddev == b.out_norm.stddev;
  }

  CsvWriter report_csv((fs::path(cfg.out_dir) / "train_report.csv").string());
  report_csv.header({"head", "train_mse", "val_mse", "epochs"});
  for (const auto& [head, rep] : outcome.reports.per_head)
    report_csv.row_mixed(head, {rep.train_mse, rep.val_mse, static_cast<double>(rep.epochs)});
  report_csv.close();

  ExperimentConfig learned_cfg = cfg;
  learned_cfg.out_dir = (fs::path(cfg.out_dir) / "learned").string();
  outcome.learned_adaptive = run_adaptive(learned_cfg, threads, &reloaded, "adaptive_learned");

  ExperimentConfig perfect_cfg = cfg;
  perfect_cfg.out_dir = (fs::path(cfg.out_dir) / "perfect").string();
  outcome.perfect_adaptive = run_adaptive(perfect_cfg, threads);

  CsvWriter deg((fs::path(cfg.out_dir) / "learned_vs_perfect.csv").string());
  deg.header({"v_cmd", "cot_learned", "cot_perfect", "cot_excess", "tracking_learned",
              "tracking_perfect"});
  const auto& lt = outcome.learned_adaptive.table;
  const auto& pt = outcome.perfect_adaptive.table;
  for (std::size_t i = 0; i < cfg.speeds.size(); ++i)
    deg.row({cfg.speeds[i], lt.cot.back()[i], pt.cot.back()[i],
             lt.cot.back()[i] - pt.cot.back()[i], lt.tracking.back()[i],
             pt.tracking.back()[i]});
  deg.close();
  return outcome;
}

}  // namespace gaitopt
