// Acceptance suite: one pass/fail line per criterion, covering calibration,
// adaptive dominance, gait selection, the ramp scenario, planner oracles,
// unit contracts, learner accuracy, determinism and throughput.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gaitopt/gaitopt.hpp"

namespace fs = std::filesystem;
using namespace gaitopt;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report(int criterion, const std::string& what, bool pass, const std::string& detail,
            double seconds) {
  if (!pass) ++failures;
  std::printf("[%s] criterion %d: %s (%s; %.1f s)\n", pass ? "PASS" : "FAIL", criterion,
              what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

void report_info(int criterion, const std::string& what, const std::string& detail,
                 double seconds) {
  std::printf("[INFO] criterion %d: %s (%s; %.1f s)\n", criterion, what.c_str(),
              detail.c_str(), seconds);
  std::fflush(stdout);
}

fs::path work_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("gaitopt_acceptance_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.finalize();
  return cfg;
}

// 1. Every (gait, speed) calibration entry round-trips through a fixed-gait
//    constant-speed episode within +-0.02, transient excluded.
void criterion_1() {
  Timer timer;
  ExperimentConfig cfg = base_config();
  cfg.episode_seconds = 6.0;
  double worst = 0.0;
  std::string worst_name;
  int pass_count = 0;
  for (int gi = 0; gi < kNumCanonicalGaits; ++gi)
    for (std::size_t si = 0; si < kCotSpeeds.size(); ++si) {
      const EpisodeMetrics m =
          detail::run_fixed_episode(cfg, canonical_gaits()[gi], kCotSpeeds[si]);
      const double err = std::fabs(m.cot - kCotTable[gi][si]);
      if (err <= 0.02) ++pass_count;
      if (err > worst) {
        worst = err;
        worst_name = std::string(canonical_gait_name(gi)) + "@" + csv_double(kCotSpeeds[si]);
      }
    }
  std::ostringstream detail;
  detail << pass_count << "/16 entries within 0.02, worst |error| " << worst << " at "
         << worst_name;
  report(1, "calibration grid round-trip", pass_count == 16 && timer.seconds() < 30.0,
         detail.str(), timer.seconds());
}

// 2. Adaptive CoT per speed <= 1.05 x the best fixed gait, and the adaptive
//    four-speed average beats every fixed gait's average.
void criterion_2() {
  Timer timer;
  ExperimentConfig cfg = base_config();
  cfg.out_dir = work_dir("adaptive").string();
  const AdaptiveReport rep = run_adaptive(cfg);
  const auto& table = rep.table;
  const std::size_t adaptive = table.methods.size() - 1;
  bool per_speed = true;
  std::ostringstream detail;
  for (std::size_t si = 0; si < table.speeds.size(); ++si) {
    double best_fixed = 1e300;
    for (std::size_t mi = 0; mi < adaptive; ++mi)
      best_fixed = std::min(best_fixed, table.cot[mi][si]);
    const double ratio = table.cot[adaptive][si] / best_fixed;
    per_speed = per_speed && ratio <= 1.05;
    detail << "v" << table.speeds[si] << " ratio " << csv_double(ratio) << " ";
  }
  double adaptive_avg = 0.0;
  for (double c : table.cot[adaptive]) adaptive_avg += c;
  adaptive_avg /= static_cast<double>(table.speeds.size());
  bool beats_all = true;
  for (std::size_t mi = 0; mi < adaptive; ++mi) {
    double avg = 0.0;
    for (double c : table.cot[mi]) avg += c;
    avg /= static_cast<double>(table.speeds.size());
    beats_all = beats_all && adaptive_avg < avg;
  }
  detail << "avg " << csv_double(adaptive_avg);
  report(2, "per-speed CoT dominance", per_speed && beats_all && timer.seconds() < 300.0,
         detail.str(), timer.seconds());
}

// 3. Steady-state gait within 0.15 of trot at 0.5 m/s and pronk at 2.0 m/s,
//    for at least 18 of 20 seeds.
void criterion_3() {
  Timer timer;
  int passes = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    ExperimentConfig cfg = base_config();
    cfg.seed = seed;
    cfg.episode_seconds = 8.0;
    const ModelBundle bundle = make_analytic_bundle(cfg.env, cfg.weights, cfg.planner.gamma);
    const EpisodeMetrics slow = detail::run_planner_episode(
        cfg, bundle, CommandProfile::constant(0.5), cfg.episode_seconds, 0.5, 1);
    const EpisodeMetrics fast = detail::run_planner_episode(
        cfg, bundle, CommandProfile::constant(2.0), cfg.episode_seconds, 2.0, 1);
    const double d_trot = gait_distance(steady_state_gait(slow.trace), gaits::trot);
    const double d_pronk = gait_distance(steady_state_gait(fast.trace), gaits::pronk);
    if (d_trot <= 0.15 && d_pronk <= 0.15) ++passes;
  }
  std::ostringstream detail;
  detail << passes << "/20 seeds within 0.15 of trot@0.5 and pronk@2.0";
  report(3, "gait selection correctness", passes >= 18, detail.str(), timer.seconds());
}

// 4. Ramp: tracking error < 0.15 throughout, max per-component gait step
//    <= 0.1, and the final second sits closer to pronk than to trot.
void criterion_4() {
  Timer timer;
  ExperimentConfig cfg = base_config();
  cfg.out_dir = work_dir("ramp").string();
  const RampReport rep = run_ramp(cfg);
  const bool tracking = rep.episode.max_tracking_error < 0.15;
  const bool smooth = rep.episode.max_gait_step <= 0.1;
  const bool transitioned = rep.final_dist_pronk < rep.final_dist_trot;
  std::ostringstream detail;
  detail << "max tracking " << csv_double(rep.episode.max_tracking_error)
         << ", max gait step " << csv_double(rep.episode.max_gait_step)
         << ", final dist trot/pronk " << csv_double(rep.final_dist_trot) << "/"
         << csv_double(rep.final_dist_pronk);
  report(4, "ramp transition", tracking && smooth && transitioned && timer.seconds() < 120.0,
         detail.str(), timer.seconds());
}

// 5. Planner within 2% of exhaustive search on the H=1 and H=2 problems,
//    every seed of 20.
void criterion_5() {
  Timer timer;
  double worst1 = 0.0, worst2 = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto q1 = oracle::quadratic_action_problem(seed);
    worst1 = std::max(worst1, (q1.best_return - q1.planner_return) / std::fabs(q1.best_return));
    const auto q2 = oracle::two_step_integrator_problem(seed);
    worst2 = std::max(worst2, (q2.best_return - q2.planner_return) / std::fabs(q2.best_return));
  }
  std::ostringstream detail;
  detail << "worst relative gap H=1 " << csv_double(worst1) << ", H=2 " << csv_double(worst2);
  report(5, "MPPI oracle equivalence",
         worst1 < 0.02 && worst2 < 0.02 && timer.seconds() < 60.0, detail.str(),
         timer.seconds());
}

// 6. Unit contracts: infinite-lambda hold, H=1 one-step maximization, and
//    the hand-evaluated trajectory return.
void criterion_6() {
  Timer timer;
  const bool hold = oracle::lambda_infinity_returns_previous_gait(3) &&
                    oracle::lambda_infinity_returns_previous_gait(11);
  double action_err = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed)
    action_err = std::max(action_err,
                          std::fabs(oracle::quadratic_action_problem(seed).planner_action - 0.3));
  const double hand_err = std::fabs(oracle::hand_check_return() - (-11.791));
  std::ostringstream detail;
  detail << "lambda-inf hold " << (hold ? "exact" : "VIOLATED") << ", H=1 action error "
         << csv_double(action_err) << ", hand-check error " << csv_double(hand_err);
  report(6, "planner unit contracts", hold && action_err < 0.03 && hand_err < 1e-9,
         detail.str(), timer.seconds());
}

// 7. Learner: gradient checks, the geometric-series value oracle, and the
//    trained bundle weakly dominating the worst fixed gait per speed.
void criterion_7() {
  Timer timer;
  ExperimentConfig cfg = base_config();
  cfg.out_dir = work_dir("train").string();

  // gradient check on the shipped architectures
  const OracleReport oracles = [&] {
    ExperimentConfig ocfg = base_config();
    ocfg.out_dir = work_dir("train_oracle").string();
    OracleReport r;
    const int m = ocfg.env.action_dim;
    const int in_obs = encoded_obs_dim(m);
    const std::vector<std::vector<int>> architectures{
        {in_obs + m, 64, 64, 4}, {in_obs + m, 64, 64, 1}, {in_obs, 64, 64, 1},
        {in_obs, 64, 64, m}};
    double worst = 0.0;
    RngStream rs(1, 77);
    for (const auto& arch : architectures) {
      Regressor reg(arch, 7);
      Matrix X, Y;
      for (int s = 0; s < 8; ++s) {
        std::vector<double> x(arch.front()), y(arch.back());
        for (double& v : x) v = rs.normal();
        for (double& v : y) v = rs.normal();
        X.push_back(std::move(x));
        Y.push_back(std::move(y));
      }
      std::vector<std::size_t> idx(X.size());
      std::iota(idx.begin(), idx.end(), 0);
      worst = std::max(worst, grad_check(reg, X, Y, idx, 1e-5));
    }
    r.add("grad", worst, 1e-4, worst < 1e-4);
    return r;
  }();
  const double grad_err = oracles.checks[0].measured;

  // geometric-series oracle on constant-reward episodes
  double value_rel_err = 0.0;
  {
    const double gamma = 0.99, r = -0.4;
    Dataset data;
    data.action_dim = 1;
    Observation o;
    o.v = 1.0;
    o.v_cmd = 1.0;
    o.a_prev = {0.0};
    RngStream rs(2, 9);
    for (int e = 0; e < 4; ++e) {
      data.episode_starts.push_back(data.transitions.size());
      for (int t = 0; t < 600; ++t) {
        Transition tr;
        Observation oe = o;
        oe.phase = rs.uniform();
        tr.obs = oe.flatten();
        tr.action = {0.0};
        tr.next_obs = oe.flatten();
        tr.reward = r;
        tr.cloned_target = {0.0};
        data.transitions.push_back(tr);
      }
    }
    compute_mc_returns(data, gamma);
    FitConfig fit;
    fit.hidden = {32, 32};
    fit.epochs = 60;
    const TrainedBundle tb = train_bundle(data, cfg.env, fit);
    value_rel_err =
        std::fabs(tb.bundle.value->value(o) - r / (1.0 - gamma)) / std::fabs(r / (1.0 - gamma));
  }

  // full pipeline with the learned bundle in the loop
  const TrainOutcome outcome = run_train(cfg);
  const auto& table = outcome.learned_adaptive.table;
  const std::size_t adaptive = table.methods.size() - 1;
  bool weak_dominance = true;
  for (std::size_t si = 0; si < table.speeds.size(); ++si) {
    double worst_fixed = 0.0;
    for (std::size_t mi = 0; mi < adaptive; ++mi)
      worst_fixed = std::max(worst_fixed, table.cot[mi][si]);
    weak_dominance = weak_dominance && table.cot[adaptive][si] <= worst_fixed;
  }
  const double dyn_mse = outcome.reports.per_head.at("dynamics").val_mse;

  std::ostringstream detail;
  detail << "grad err " << csv_double(grad_err) << ", value oracle rel err "
         << csv_double(value_rel_err) << ", dynamics val mse " << csv_double(dyn_mse)
         << ", reload " << (outcome.reload_bitwise_identical ? "bit-identical" : "DIFFERS");
  report(7, "learner correctness",
         grad_err < 1e-4 && value_rel_err < 0.05 && dyn_mse < 1e-3 && weak_dominance &&
             outcome.reload_bitwise_identical,
         detail.str(), timer.seconds());
}

// 8. Byte-identical CSVs for identical config and seed, across thread counts.
void criterion_8() {
  Timer timer;
  ExperimentConfig cfg = base_config();
  cfg.episode_seconds = 3.0;
  cfg.speeds = {1.0, 2.0};
  cfg.ramp_duration = 5.0;
  cfg.ramp_hold = 1.0;
  cfg.seed = 4242;

  const fs::path d1 = work_dir("det1"), d2 = work_dir("det2");
  cfg.out_dir = d1.string();
  run_adaptive(cfg, 1);
  run_ramp(cfg, 1);
  ExperimentConfig cfg2 = ExperimentConfig::from_file((d1 / "config.txt").string());
  cfg2.out_dir = d2.string();
  cfg2.finalize();
  run_adaptive(cfg2, 4);
  run_ramp(cfg2, 4);

  bool identical = true;
  std::string first_diff;
  for (const char* name :
       {"summary_cot.csv", "summary_tracking.csv", "adaptive_gaits.csv", "adaptive_v1.csv",
        "adaptive_v2.csv", "ramp_metrics.csv", "ramp_contacts.csv"}) {
    if (slurp(d1 / name) != slurp(d2 / name)) {
      identical = false;
      if (first_diff.empty()) first_diff = name;
    }
  }
  report(8, "deterministic reproduction across worker counts", identical,
         identical ? "all CSVs byte-identical" : ("first difference in " + first_diff),
         timer.seconds());
}

// 9. Informative: planner throughput with the deployment settings.
void criterion_9() {
  Timer timer;
  ExperimentConfig cfg = base_config();
  const ModelBundle b = make_analytic_bundle(cfg.env, cfg.weights, cfg.planner.gamma);
  MppiPlanner planner(b, cfg.planner, 1);
  Observation o;
  o.v = 1.0;
  o.v_cmd = 1.5;
  o.a_prev = {0.0};
  PlannerState st = PlannerState::initial(cfg.planner);
  const int plans = 50;
  Timer bench;
  for (int i = 0; i < plans; ++i) {
    PlanResult r = planner.plan(o, st);
    st = std::move(r.state);
    o = b.dynamics->step(o, r.action);
    o.gait = r.gait;
  }
  const double rate = plans / bench.seconds();
  std::ostringstream detail;
  detail << csv_double(rate) << " plans/s (target 50, informative)";
  report_info(9, "planner throughput", detail.str(), timer.seconds());
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  if (failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", failures);
  return failures;
}
