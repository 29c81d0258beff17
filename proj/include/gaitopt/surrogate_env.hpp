#pragma once

// Ground-truth environment for closed-loop evaluation. Steps the same
// surrogate law as AnalyticDynamics (bit-identical by construction), accrues
// energy and distance, and samples the commanded velocity from a profile.

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gaitopt/common.hpp"
#include "gaitopt/gait.hpp"
#include "gaitopt/models.hpp"
#include "gaitopt/rewards.hpp"

namespace gaitopt {

/// Piecewise-linear commanded-velocity profile. Clamp-extends beyond the
/// first and last breakpoints.
struct CommandProfile {
  std::vector<std::pair<double, double>> points;  // (time s, v_cmd m/s)

  static CommandProfile constant(double v_cmd) {
    CommandProfile p;
    p.points = {{0.0, v_cmd}};
    p.validate();
    return p;
  }

  double sample(double t) const {
    require(!points.empty(), "command profile: empty");
    if (t <= points.front().first) return points.front().second;
    if (t >= points.back().first) return points.back().second;
    for (std::size_t k = 1; k < points.size(); ++k) {
      if (t <= points[k].first) {
        const auto& [t0, v0] = points[k - 1];
        const auto& [t1, v1] = points[k];
        return v0 + (t - t0) / (t1 - t0) * (v1 - v0);
      }
    }
    return points.back().second;
  }

  void validate() const {
    require(!points.empty(), "command profile: needs at least one breakpoint");
    for (std::size_t k = 0; k < points.size(); ++k) {
      require(std::isfinite(points[k].first) && std::isfinite(points[k].second) &&
                  points[k].second >= 0.0,
              "command profile: breakpoints must be finite with v_cmd >= 0");
      if (k > 0)
        require(points[k].first > points[k - 1].first,
                "command profile: times must be strictly increasing");
    }
  }
};

/// Two-breakpoint linear ramp from v_start to v_end over duration seconds.
inline CommandProfile ramp_profile(double v_start, double v_end, double duration) {
  require(std::isfinite(duration) && duration > 0.0, "ramp_profile: duration must be > 0");
  CommandProfile p;
  p.points = {{0.0, v_start}, {duration, v_end}};
  p.validate();
  return p;
}

struct EnvState {
  Observation obs;
  double time = 0.0;
  double cumulative_energy = 0.0;  // joules
  double distance = 0.0;           // meters
};

struct StepOutcome {
  EnvState next;
  RewardBreakdown reward;  // r_div is not observable by the environment (0)
  double power = 0.0;      // watts, at the pre-step velocity and active gait
  ContactState contacts;
};

using Controller = std::function<std::pair<Action, GaitCommand>(const Observation&)>;

struct RolloutSummary {
  double duration = 0.0;             // seconds
  double mean_tracking_error = 0.0;  // mean |v - v_cmd|, transient excluded
  double max_tracking_error = 0.0;   // over the whole episode
  double cot = 0.0;                  // episode CoT, transient excluded
  double mean_velocity = 0.0;
  double mean_power = 0.0;
  double mean_gait_change = 0.0;     // mean circular gait step between controls
  double max_gait_step = 0.0;        // max per-component circular gait step
};

struct RolloutTrace {
  EnvState initial;
  std::vector<StepOutcome> steps;
  double dt = 0.0;

  RolloutSummary summarize(const SurrogateParams& p, double transient_s = 1.0) const;
};

class SurrogateEnv {
 public:
  SurrogateEnv(SurrogateParams params, RewardWeights weights)
      : params_(params), weights_(weights) {
    params_.validate();
    weights_.validate();
  }

  const SurrogateParams& params() const { return params_; }
  const RewardWeights& weights() const { return weights_; }
  const CommandProfile& profile() const { return profile_; }

  /// State at time zero with empty accumulators. The nominal initial gait is
  /// trot, matching the planner's own initialization.
  EnvState reset(double v0, CommandProfile profile, GaitCommand gait0 = gaits::trot) {
    require(std::isfinite(v0) && v0 >= 0.0, "reset: v0 must be >= 0");
    profile.validate();
    profile_ = std::move(profile);
    EnvState s;
    s.obs.v = v0;
    s.obs.omega = 0.0;
    s.obs.phase = 0.0;
    s.obs.v_cmd = profile_.sample(0.0);
    s.obs.gait = gait0;
    s.obs.a_prev.assign(params_.action_dim, 0.0);
    return s;
  }

  /// Advances the true dynamics one control period under action a and gait g.
  StepOutcome step(const EnvState& s, const Action& a, const GaitCommand& g,
                   double dt) const {
    require(std::isfinite(dt) && dt > 0.0, "step: dt must be > 0");
    require(all_finite(a.values), "step: non-finite action");

    const Action ac = a.clamped();
    const double power = power_model(s.obs.v, g, params_);

    RewardBreakdown b;
    b.r_vel = reward_velocity(s.obs.v, s.obs.v_cmd);
    b.r_energy = reward_energy(power);
    b.r_ang = reward_angular(s.obs.omega);
    b.r_cont = reward_continuity(ac.values, s.obs.a_prev);
    b.r_div = 0.0;
    b.r_gait = reward_gait(g, s.obs.gait);

    StepOutcome out;
    out.power = power;
    out.reward = total_reward(b, weights_);
    out.contacts = contact_schedule(g, s.obs.phase, params_.duty);

    Observation o_in = s.obs;
    o_in.gait = g;
    SurrogateParams step_params = params_;
    step_params.dt = dt;
    out.next.obs = advance_observation(o_in, a, step_params);
    out.next.obs.v_cmd = profile_.sample(s.time + dt);
    out.next.time = s.time + dt;
    out.next.cumulative_energy = s.cumulative_energy + power * dt;
    out.next.distance = s.distance + s.obs.v * dt;
    return out;
  }

  /// Closed-loop episode of T control steps. Controller failures are rethrown
  /// with the failing step index attached.
  RolloutTrace rollout(EnvState s0, const Controller& controller, int T, double dt) const {
    require(T >= 1, "rollout: need at least one step");
    RolloutTrace trace;
    trace.initial = s0;
    trace.dt = dt;
    trace.steps.reserve(T);
    EnvState s = std::move(s0);
    for (int t = 0; t < T; ++t) {
      std::pair<Action, GaitCommand> cmd;
      try {
        cmd = controller(s.obs);
      } catch (const std::exception& e) {
        throw std::runtime_error("rollout: controller failed at step " + std::to_string(t) +
                                 ": " + e.what());
      }
      trace.steps.push_back(step(s, cmd.first, cmd.second, dt));
      s = trace.steps.back().next;
    }
    return trace;
  }

 private:
  SurrogateParams params_;
  RewardWeights weights_;
  CommandProfile profile_ = CommandProfile::constant(0.0);
};

/// Episode CoT from the accumulators, skipping the first transient_s seconds.
/// Equals cost_of_transport(mean power, m, g, mean velocity) over the kept
/// window by construction.
inline double episode_cot(const RolloutTrace& trace, const SurrogateParams& p,
                          double transient_s = 1.0) {
  require(!trace.steps.empty(), "episode_cot: empty trace");
  const double total_s = static_cast<double>(trace.steps.size()) * trace.dt;
  const double skip_s = total_s > 2.0 * transient_s ? transient_s : 0.0;
  const std::size_t skip = static_cast<std::size_t>(skip_s / trace.dt);
  const EnvState& from = skip == 0 ? trace.initial : trace.steps[skip - 1].next;
  const EnvState& to = trace.steps.back().next;
  const double dist = to.distance - from.distance;
  const double energy = to.cumulative_energy - from.cumulative_energy;
  if (dist <= 0.0) throw std::domain_error("episode_cot: no forward progress");
  return energy / (p.mass * p.gravity * dist);
}

inline RolloutSummary RolloutTrace::summarize(const SurrogateParams& p,
                                              double transient_s) const {
  RolloutSummary s;
  if (steps.empty()) return s;
  s.duration = static_cast<double>(steps.size()) * dt;
  const double skip_s = s.duration > 2.0 * transient_s ? transient_s : 0.0;
  const std::size_t skip = static_cast<std::size_t>(skip_s / dt);

  const Observation* prev_obs = &initial.obs;
  const GaitCommand* prev_gait = &initial.obs.gait;
  double err_sum = 0.0, gait_sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const double err = std::fabs(prev_obs->v - prev_obs->v_cmd);
    s.max_tracking_error = std::max(s.max_tracking_error, err);
    const GaitCommand& g = steps[t].next.obs.gait;
    for (int i = 0; i < 3; ++i)
      s.max_gait_step = std::max(s.max_gait_step, circular_delta(g[i], (*prev_gait)[i]));
    if (t >= skip) {
      err_sum += err;
      gait_sum += gait_distance(g, *prev_gait);
      ++kept;
    }
    prev_gait = &g;
    prev_obs = &steps[t].next.obs;
  }
  if (kept > 0) {
    s.mean_tracking_error = err_sum / static_cast<double>(kept);
    s.mean_gait_change = gait_sum / static_cast<double>(kept);
  }
  const EnvState& from = skip == 0 ? initial : steps[skip - 1].next;
  const EnvState& to = steps.back().next;
  const double window = to.time - from.time;
  if (window > 0.0) {
    s.mean_velocity = (to.distance - from.distance) / window;
    s.mean_power = (to.cumulative_energy - from.cumulative_energy) / window;
  }
  if (to.distance - from.distance > 0.0) s.cot = episode_cot(*this, p, transient_s);
  return s;
}

}  // namespace gaitopt
