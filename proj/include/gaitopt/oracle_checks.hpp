#pragma once

// Brute-force and closed-form oracles for the planner and learner, aggregated
// into a machine-readable pass/fail report. These checks are deliberately
// independent of the code paths they verify: grid search instead of MPPI,
// finite differences instead of backprop, direct arithmetic instead of the
// calibrated tables.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "gaitopt/config.hpp"
#include "gaitopt/csv.hpp"
#include "gaitopt/harness.hpp"
#include "gaitopt/learner.hpp"
#include "gaitopt/planner.hpp"

namespace gaitopt {

struct OracleCheck {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool informative = false;  // reported but not gating
};

struct OracleReport {
  std::vector<OracleCheck> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.informative && !c.pass) return false;
    return true;
  }

  void add(const std::string& name, double measured, double threshold, bool pass,
           bool informative = false) {
    checks.push_back({name, measured, threshold, pass, informative});
  }
};

// ---------------------------------------------------------------------------
// Test fixtures: tiny hand-specified model bundles

namespace oracle {

/// Dynamics that returns the observation unchanged.
class IdentityDynamics final : public DynamicsModel {
 public:
  explicit IdentityDynamics(int m) : m_(m) {}
  Observation step(const Observation& o, const Action&) const override { return o; }
  int action_dim() const override { return m_; }

 private:
  int m_;
};

/// Reward -(a0 - target)^2 + offset, independent of the observation and gait.
class QuadraticActionReward final : public RewardModel {
 public:
  QuadraticActionReward(double target, double offset, int m)
      : target_(target), offset_(offset), m_(m) {}
  double reward(const Observation&, const Action& a) const override {
    return offset_ - square(a[0] - target_);
  }
  int action_dim() const override { return m_; }

 private:
  double target_, offset_;
  int m_;
};

class ZeroValue final : public ValueModel {
 public:
  double value(const Observation&) const override { return 0.0; }
};

class ZeroPolicy final : public PolicyModel {
 public:
  explicit ZeroPolicy(int m) : m_(m) {}
  Action act(const std::vector<Observation>&) const override { return Action::zeros(m_); }
  int action_dim() const override { return m_; }

 private:
  int m_;
};

/// Scalar integrator x' = x + 0.5 a0, exposed through the velocity field.
class IntegratorDynamics final : public DynamicsModel {
 public:
  explicit IntegratorDynamics(int m) : m_(m) {}
  Observation step(const Observation& o, const Action& a) const override {
    Observation n = o;
    n.v = o.v + 0.5 * clamp_unit(a[0]);
    n.a_prev = a.clamped().values;
    return n;
  }
  int action_dim() const override { return m_; }

 private:
  int m_;
};

/// Reward -(x - target)^2 + offset on the integrator state.
class QuadraticStateReward final : public RewardModel {
 public:
  QuadraticStateReward(double target, double offset, int m)
      : target_(target), offset_(offset), m_(m) {}
  double reward(const Observation& o, const Action&) const override {
    return offset_ - square(o.v - target_);
  }
  int action_dim() const override { return m_; }

 private:
  double target_, offset_;
  int m_;
};

inline Observation blank_observation(int m) {
  Observation o;
  o.a_prev.assign(m, 0.0);
  return o;
}

inline PlannerConfig small_planner_config(int horizon) {
  PlannerConfig cfg;
  cfg.horizon = horizon;
  cfg.lambda = 0.0;     // no gait coupling in the oracle problems
  cfg.alpha_div = 0.0;  // no policy coupling either
  return cfg;
}

/// Planner return of the final mean on the H=1 quadratic problem, plus the
/// exhaustive optimum over the clamped action interval.
struct QuadraticOracleResult {
  double planner_return = 0.0;
  double best_return = 0.0;
  double planner_action = 0.0;
};

inline QuadraticOracleResult quadratic_action_problem(uint64_t seed) {
  constexpr double target = 0.3, offset = -1.0;
  ModelBundle b;
  b.dynamics = std::make_shared<IdentityDynamics>(1);
  b.reward = std::make_shared<QuadraticActionReward>(target, offset, 1);
  b.value = std::make_shared<ZeroValue>();
  b.policy = std::make_shared<ZeroPolicy>(1);
  const PlannerConfig cfg = small_planner_config(1);
  MppiPlanner planner(b, cfg, seed);
  const PlanResult res = planner.plan(blank_observation(1), PlannerState::initial(cfg));

  QuadraticOracleResult out;
  out.planner_action = res.action[0];
  out.planner_return = offset - square(res.action[0] - target);
  // independent oracle: dense grid over the action interval
  out.best_return = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 4000; ++i) {
    const double a = -1.0 + 2.0 * i / 4000.0;
    out.best_return = std::max(out.best_return, offset - square(a - target));
  }
  return out;
}

/// H=2 integrator problem scored against a dense 2-D action grid evaluated by
/// direct arithmetic (not through evaluate_trajectory).
struct TwoStepOracleResult {
  double planner_return = 0.0;
  double best_return = 0.0;
};

inline TwoStepOracleResult two_step_integrator_problem(uint64_t seed) {
  constexpr double target = 0.4, offset = -1.0, gamma = 0.99;
  ModelBundle b;
  b.dynamics = std::make_shared<IntegratorDynamics>(1);
  b.reward = std::make_shared<QuadraticStateReward>(target, offset, 1);
  b.value = std::make_shared<ZeroValue>();
  b.policy = std::make_shared<ZeroPolicy>(1);
  PlannerConfig cfg = small_planner_config(2);
  cfg.gamma = gamma;
  MppiPlanner planner(b, cfg, seed);
  const Observation o0 = blank_observation(1);
  const PlanResult res = planner.plan(o0, PlannerState::initial(cfg));

  const auto score = [&](double a0, double a1) {
    double x = 0.0;
    double ret = offset - square(x - target);  // reward at (x0, a0)
    x += 0.5 * a0;
    ret += gamma * (offset - square(x - target));
    x += 0.5 * a1;  // final state unused: V = 0
    return ret;
  };

  TwoStepOracleResult out;
  // executed plan: first action from the final mean, second from the same
  // distribution's second step
  const double a0 = res.action[0];
  const double a1 = clamp_unit(res.state.prev.mu_at(1, 0));
  out.planner_return = score(a0, a1);
  out.best_return = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j)
      out.best_return = std::max(
          out.best_return, score(-1.0 + 2.0 * i / 400.0, -1.0 + 2.0 * j / 400.0));
  return out;
}

/// Hand-evaluated discounted sum: H=2, gamma=0.99, rewards (-1, -1),
/// terminal value -10, no penalties -> -11.791.
inline double hand_check_return() {
  class ConstReward final : public RewardModel {
   public:
    double reward(const Observation&, const Action&) const override { return -1.0; }
    int action_dim() const override { return 1; }
  };
  class ConstValue final : public ValueModel {
   public:
    double value(const Observation&) const override { return -10.0; }
  };
  ModelBundle b;
  b.dynamics = std::make_shared<IdentityDynamics>(1);
  b.reward = std::make_shared<ConstReward>();
  b.value = std::make_shared<ConstValue>();
  b.policy = std::make_shared<ZeroPolicy>(1);
  PlannerConfig cfg = small_planner_config(2);
  cfg.gamma = 0.99;
  MppiPlanner planner(b, cfg, 0);

  TrajectorySample sample;
  sample.actions = {0.0, 0.0};
  sample.gaits = {gaits::trot, gaits::trot};  // equals g_cmd_prev: no penalty
  sample.raw.assign(2 * cfg.joint_dim(), 0.0);
  return planner.evaluate_trajectory(blank_observation(1), sample,
                                     PlannerState::initial(cfg));
}

/// Exact gait hold in the infinite-penalty limit.
inline bool lambda_infinity_returns_previous_gait(uint64_t seed) {
  SurrogateParams p;
  RewardWeights w;
  const ModelBundle b = make_analytic_bundle(p, w, 0.99);
  PlannerConfig cfg;
  cfg.lambda = std::numeric_limits<double>::infinity();
  MppiPlanner planner(b, cfg, seed);
  Observation o = blank_observation(1);
  o.v = 1.0;
  o.v_cmd = 1.4;
  const GaitCommand held = GaitCommand::wrap({0.37, 0.82, 0.11});
  PlannerState st = PlannerState::initial(cfg, held);
  st.g_cmd_prev = held;
  const PlanResult res = planner.plan(o, st);
  return res.gait == held;
}

}  // namespace oracle

// ---------------------------------------------------------------------------

/// Runs every oracle, writes oracle_report.csv, prints one line per check.
inline OracleReport run_oracle_checks(const ExperimentConfig& cfg, int threads = 1,
                                      bool quiet = false) {
  detail::prepare_out_dir(cfg);
  OracleReport report;

  // calibration grid round trip through a real constant-speed episode
  {
    double worst = 0.0;
    ExperimentConfig fixed = cfg;
    fixed.episode_seconds = 4.0;
    for (int gi = 0; gi < kNumCanonicalGaits; ++gi)
      for (std::size_t si = 0; si < kCotSpeeds.size(); ++si) {
        const EpisodeMetrics m =
            detail::run_fixed_episode(fixed, canonical_gaits()[gi], kCotSpeeds[si]);
        worst = std::max(worst, std::fabs(m.cot - kCotTable[gi][si]));
      }
    report.add("table_roundtrip_max_abs_error", worst, 1e-9, worst < 1e-9);
  }

  // MPPI vs exhaustive search
  {
    double worst_gap = 0.0, worst_action = 0.0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const auto q = oracle::quadratic_action_problem(seed);
      worst_gap = std::max(worst_gap,
                           (q.best_return - q.planner_return) / std::fabs(q.best_return));
      worst_action = std::max(worst_action, std::fabs(q.planner_action - 0.3));
    }
    report.add("mppi_h1_quadratic_relative_gap", worst_gap, 0.02, worst_gap < 0.02);
    report.add("mppi_h1_quadratic_action_error", worst_action, 0.03, worst_action < 0.03);
    double worst2 = 0.0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const auto q = oracle::two_step_integrator_problem(seed);
      worst2 = std::max(worst2, (q.best_return - q.planner_return) / std::fabs(q.best_return));
    }
    report.add("mppi_h2_integrator_relative_gap", worst2, 0.02, worst2 < 0.02);
  }

  // hand-evaluated trajectory return
  {
    const double r = oracle::hand_check_return();
    const double err = std::fabs(r - (-11.791));
    report.add("evaluate_trajectory_hand_check", err, 1e-9, err < 1e-9);
  }

  // infinite gait penalty holds the previous gait exactly
  report.add("lambda_infinity_exact_hold", oracle::lambda_infinity_returns_previous_gait(3)
                                               ? 0.0
                                               : 1.0,
             0.5, oracle::lambda_infinity_returns_previous_gait(3));

  // gradient check on every shipped head architecture
  {
    const int m = cfg.env.action_dim;
    const int in_obs = encoded_obs_dim(m);
    const std::vector<std::vector<int>> architectures{
        {in_obs + m, cfg.fit.hidden[0], cfg.fit.hidden.back(), 4},  // dynamics
        {in_obs + m, cfg.fit.hidden[0], cfg.fit.hidden.back(), 1},  // reward
        {in_obs, cfg.fit.hidden[0], cfg.fit.hidden.back(), 1},      // value
        {in_obs, cfg.fit.hidden[0], cfg.fit.hidden.back(), m},      // policy
    };
    double worst = 0.0;
    RngStream rs(cfg.seed ^ kStreamTrain, 77);
    for (const auto& arch : architectures) {
      Regressor reg(arch, cfg.seed + 7);
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
    report.add("grad_check_max_relative_error", worst, 1e-4, worst < 1e-4);
  }

  // planner throughput with the deployment settings (informative, not a gate)
  {
    const ModelBundle b = make_analytic_bundle(cfg.env, cfg.weights, cfg.planner.gamma);
    MppiPlanner planner(b, cfg.planner, cfg.seed, threads);
    Observation o = oracle::blank_observation(cfg.env.action_dim);
    o.v = 1.0;
    o.v_cmd = 1.5;
    PlannerState st = PlannerState::initial(cfg.planner);
    const auto t0 = std::chrono::steady_clock::now();
    const int plans = 25;
    for (int i = 0; i < plans; ++i) {
      PlanResult r = planner.plan(o, st);
      st = std::move(r.state);
      o = b.dynamics->step(o, r.action);
      o.gait = r.gait;
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0).count();
    report.add("planner_plans_per_second", plans / secs, 50.0, plans / secs >= 50.0,
               /*informative=*/true);
  }

  CsvWriter csv((std::filesystem::path(cfg.out_dir) / "oracle_report.csv").string());
  csv.header({"check", "measured", "threshold", "pass", "informative"});
  for (const auto& c : report.checks) {
    csv.row_mixed(c.name, {c.measured, c.threshold, c.pass ? 1.0 : 0.0,
                           c.informative ? 1.0 : 0.0});
    if (!quiet)
      std::cout << (c.pass ? "[PASS] " : (c.informative ? "[INFO] " : "[FAIL] "))
                << c.name << ": measured " << c.measured << " vs threshold "
                << c.threshold << "\n";
  }
  csv.close();
  return report;
}

}  // namespace gaitopt
