#pragma once

// Model interfaces used by the planner (dynamics, reward, value, policy) and
// their analytic surrogate implementations.
//
// The surrogate plant is a 1-D longitudinal locomotion template: the action is
// a commanded acceleration scaled to a_max, velocity integrates with a
// kinematic clamp, and a phase clock advances at the stepping frequency. Its
// energy landscape is calibrated so that the cost of transport of each
// canonical gait at 0.5/1.0/1.5/2.0 m/s matches the reference table in
// power_model below, which is what makes gait adaptation measurable without
// physics simulation.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "gaitopt/common.hpp"
#include "gaitopt/gait.hpp"
#include "gaitopt/rewards.hpp"

namespace gaitopt {

/// Control action, m components in [-1, 1]. Component 0 drives longitudinal
/// acceleration in the surrogate; extra components only enter the continuity
/// and divergence penalties.
struct Action {
  std::vector<double> values;

  Action() = default;
  explicit Action(std::vector<double> v) : values(std::move(v)) {}
  static Action zeros(int dim) { return Action(std::vector<double>(dim, 0.0)); }

  int dim() const { return static_cast<int>(values.size()); }
  double operator[](std::size_t i) const { return values[i]; }

  Action clamped() const {
    Action a = *this;
    for (double& v : a.values) v = clamp_unit(v);
    return a;
  }

  friend bool operator==(const Action&, const Action&) = default;
};

/// Surrogate locomotion state as seen by the models.
struct Observation {
  double v = 0.0;      // forward velocity, m/s
  double omega = 0.0;  // yaw rate, rad/s (held at zero by the surrogate)
  double phase = 0.0;  // global gait clock in [0, 1)
  double v_cmd = 0.0;  // commanded forward velocity, m/s
  GaitCommand gait;    // commanded gait
  std::vector<double> a_prev;  // previous action, m components

  static constexpr int kFixedFields = 7;  // v, omega, phase, v_cmd, g1..g3

  int action_dim() const { return static_cast<int>(a_prev.size()); }
  static int flat_dim(int action_dim) { return kFixedFields + action_dim; }

  /// Lossless fixed-length encoding: (v, omega, phase, v_cmd, g1, g2, g3, a_prev...).
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(kFixedFields + a_prev.size());
    out.push_back(v);
    out.push_back(omega);
    out.push_back(phase);
    out.push_back(v_cmd);
    for (int i = 0; i < 3; ++i) out.push_back(gait[i]);
    out.insert(out.end(), a_prev.begin(), a_prev.end());
    return out;
  }

  static Observation unflatten(std::span<const double> data, int action_dim) {
    require(static_cast<int>(data.size()) == flat_dim(action_dim),
            "Observation::unflatten: wrong vector length");
    Observation o;
    o.v = data[0];
    o.omega = data[1];
    o.phase = wrap_unit(data[2]);
    o.v_cmd = data[3];
    o.gait = GaitCommand::wrap({data[4], data[5], data[6]});
    o.a_prev.assign(data.begin() + kFixedFields, data.end());
    return o;
  }
};

/// Physical and control parameters of the surrogate plant.
struct SurrogateParams {
  double mass = 12.0;     // kg
  double gravity = 9.81;  // m/s^2
  double dt = 0.02;       // control period, s
  double a_max = 2.0;     // m/s^2 at full action
  double f_step = 2.5;    // stepping frequency, Hz (integer steps per period)
  double duty = 0.5;      // stance fraction
  double v_max = 3.0;     // kinematic velocity clamp, m/s
  double k_p = 1.0;       // proportional tracking gain of the reference policy
  double kappa = 0.1;     // CoT inflation per unit distance from a canonical gait
  double sigma_w = 0.25;  // softmin temperature for canonical interpolation
  int action_dim = 1;

  void validate() const {
    require(mass > 0 && gravity > 0 && dt > 0 && a_max > 0 && v_max > 0,
            "surrogate params: mass, gravity, dt, a_max, v_max must be > 0");
    require(duty > 0 && duty < 1, "surrogate params: duty must lie in (0, 1)");
    require(f_step > 0 && k_p >= 0 && kappa >= 0 && sigma_w > 0,
            "surrogate params: f_step, sigma_w must be > 0; k_p, kappa >= 0");
    require(action_dim >= 1, "surrogate params: action_dim must be >= 1");
  }
};

// Cost-of-transport calibration grid: rows follow canonical_gaits() order
// (trot, pace, bound, pronk), columns are the speeds below.
inline constexpr std::array<double, 4> kCotSpeeds{0.5, 1.0, 1.5, 2.0};
inline constexpr std::array<std::array<double, 4>, 4> kCotTable{{
    {1.09, 0.98, 1.07, 1.16},  // trot
    {1.28, 1.00, 1.11, 1.19},  // pace
    {1.55, 1.29, 1.29, 1.28},  // bound
    {1.49, 1.09, 1.04, 1.08},  // pronk
}};

/// CoT of canonical gait i at speed v: piecewise-linear through the table row,
/// held constant outside [0.5, 2.0] m/s.
inline double canonical_cot(int gait_index, double v) {
  const auto& row = kCotTable[gait_index];
  if (v <= kCotSpeeds.front()) return row.front();
  if (v >= kCotSpeeds.back()) return row.back();
  for (std::size_t k = 1; k < kCotSpeeds.size(); ++k) {
    if (v <= kCotSpeeds[k]) {
      const double t = (v - kCotSpeeds[k - 1]) / (kCotSpeeds[k] - kCotSpeeds[k - 1]);
      return row[k - 1] + t * (row[k] - row[k - 1]);
    }
  }
  return row.back();
}

/// Instantaneous mechanical power (watts) of the surrogate at velocity v under
/// gait g: softmin-interpolated canonical CoT plus a penalty proportional to
/// the distance from the nearest canonical gait, converted through m*g*v.
/// Exactly on a canonical gait the interpolation collapses to that gait's row,
/// so the calibration grid round-trips through cost_of_transport.
inline double power_model(double v, const GaitCommand& g, const SurrogateParams& p) {
  require(std::isfinite(v) && v >= 0.0, "power_model: velocity must be >= 0");
  if (v == 0.0) return 0.0;

  std::array<double, 4> d2{};
  int nearest = 0;
  for (int i = 0; i < kNumCanonicalGaits; ++i) {
    d2[i] = gait_distance_sq(g, canonical_gaits()[i]);
    if (d2[i] < d2[nearest]) nearest = i;
  }

  double cot;
  if (d2[nearest] < 1e-18) {
    cot = canonical_cot(nearest, v);
  } else {
    const std::array<double, 4> w = canonical_weights(g, p.sigma_w);
    cot = 0.0;
    for (int i = 0; i < kNumCanonicalGaits; ++i) cot += w[i] * canonical_cot(i, v);
  }
  cot += p.kappa * std::sqrt(d2[nearest]);
  return cot * p.mass * p.gravity * v;
}

/// One step of the surrogate law, shared verbatim by the analytic dynamics
/// model and the ground-truth environment so the two agree bit-for-bit.
/// The commanded fields (v_cmd, gait) pass through unchanged.
inline Observation advance_observation(const Observation& o, const Action& a,
                                       const SurrogateParams& p) {
  require(a.dim() == p.action_dim, "advance_observation: action dimension mismatch");
  require(all_finite(a.values), "advance_observation: non-finite action");
  Observation n = o;
  const double accel = clamp_unit(a[0]) * p.a_max;
  n.v = std::clamp(o.v + accel * p.dt, 0.0, p.v_max);
  n.phase = wrap_unit(o.phase + p.f_step * p.dt);
  n.omega = 0.0;
  n.a_prev = a.clamped().values;
  return n;
}

// ---------------------------------------------------------------------------
// Model interfaces

class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  /// Deterministic next observation. The gait field passes through unchanged;
  /// gait changes only through planner resampling.
  virtual Observation step(const Observation& o, const Action& a) const = 0;
  virtual int action_dim() const = 0;
};

class RewardModel {
 public:
  virtual ~RewardModel() = default;
  /// Per-step reward of taking action a in observation o (velocity, energy,
  /// angular and continuity terms; divergence and gait-continuity penalties
  /// are applied by the planner, not the model).
  virtual double reward(const Observation& o, const Action& a) const = 0;
  virtual int action_dim() const = 0;
};

class ValueModel {
 public:
  virtual ~ValueModel() = default;
  /// Infinite-horizon value estimate used as terminal bootstrap.
  virtual double value(const Observation& o) const = 0;
};

class PolicyModel {
 public:
  virtual ~PolicyModel() = default;
  /// Action from an observation history (newest last, at most 30 entries kept).
  virtual Action act(const std::vector<Observation>& history) const = 0;
  virtual int action_dim() const = 0;
};

/// The four models the planner consumes. All members are immutable after
/// construction and safe to share read-only across rollout workers.
struct ModelBundle {
  std::shared_ptr<const DynamicsModel> dynamics;
  std::shared_ptr<const RewardModel> reward;
  std::shared_ptr<const ValueModel> value;
  std::shared_ptr<const PolicyModel> policy;

  int action_dim() const { return dynamics->action_dim(); }

  void validate() const {
    require(dynamics && reward && value && policy, "model bundle: missing member");
    require(dynamics->action_dim() == reward->action_dim() &&
                dynamics->action_dim() == policy->action_dim(),
            "model bundle: member action dimensions disagree");
  }
};

// ---------------------------------------------------------------------------
// Analytic surrogates

namespace detail {
inline void check_finite_obs(const Observation& o, const char* who) {
  if (!(std::isfinite(o.v) && std::isfinite(o.omega) && std::isfinite(o.phase) &&
        std::isfinite(o.v_cmd) && all_finite(o.a_prev)))
    throw ModelDivergenceError(std::string(who) + ": non-finite observation");
}
}  // namespace detail

class AnalyticDynamics final : public DynamicsModel {
 public:
  explicit AnalyticDynamics(SurrogateParams p) : p_(p) { p_.validate(); }

  Observation step(const Observation& o, const Action& a) const override {
    Observation n = advance_observation(o, a, p_);
    detail::check_finite_obs(n, "dynamics");
    return n;
  }
  int action_dim() const override { return p_.action_dim; }

 private:
  SurrogateParams p_;
};

class AnalyticReward final : public RewardModel {
 public:
  AnalyticReward(SurrogateParams p, RewardWeights w) : p_(p), w_(w) {
    p_.validate();
    w_.validate();
  }

  double reward(const Observation& o, const Action& a) const override {
    const Action ac = a.clamped();
    const double r = w_.alpha[0] * reward_velocity(o.v, o.v_cmd) +
                     w_.alpha[1] * reward_energy(power_model(o.v, o.gait, p_)) +
                     w_.alpha[2] * reward_angular(o.omega) +
                     w_.alpha[3] * reward_continuity(ac.values, o.a_prev);
    if (!std::isfinite(r)) throw ModelDivergenceError("reward: non-finite output");
    return r;
  }
  int action_dim() const override { return p_.action_dim; }

 private:
  SurrogateParams p_;
  RewardWeights w_;
};

/// Steady-state value heuristic: the per-step reward with velocity and gait
/// held fixed, summed as a geometric series.
class AnalyticValue final : public ValueModel {
 public:
  AnalyticValue(SurrogateParams p, RewardWeights w, double gamma)
      : p_(p), w_(w), gamma_(gamma) {
    p_.validate();
    w_.validate();
    require(gamma > 0.0 && gamma < 1.0, "analytic value: gamma must lie in (0, 1)");
  }

  double value(const Observation& o) const override {
    const double r_ss = w_.alpha[0] * reward_velocity(o.v, o.v_cmd) +
                        w_.alpha[1] * reward_energy(power_model(o.v, o.gait, p_)) +
                        w_.alpha[2] * reward_angular(o.omega);
    const double v = r_ss / (1.0 - gamma_);
    if (!std::isfinite(v)) throw ModelDivergenceError("value: non-finite output");
    return v;
  }

 private:
  SurrogateParams p_;
  RewardWeights w_;
  double gamma_;
};

/// Proportional velocity-tracking controller on the latest observation.
class AnalyticPolicy final : public PolicyModel {
 public:
  explicit AnalyticPolicy(SurrogateParams p) : p_(p) { p_.validate(); }

  Action act(const std::vector<Observation>& history) const override {
    require(!history.empty(), "policy: empty observation history");
    const Observation& o = history.back();
    Action a = Action::zeros(p_.action_dim);
    a.values[0] = clamp_unit(p_.k_p * (o.v_cmd - o.v));
    return a;
  }
  int action_dim() const override { return p_.action_dim; }

 private:
  SurrogateParams p_;
};

inline ModelBundle make_analytic_bundle(const SurrogateParams& p, const RewardWeights& w,
                                        double gamma) {
  ModelBundle b;
  b.dynamics = std::make_shared<AnalyticDynamics>(p);
  b.reward = std::make_shared<AnalyticReward>(p, w);
  b.value = std::make_shared<AnalyticValue>(p, w, gamma);
  b.policy = std::make_shared<AnalyticPolicy>(p);
  b.validate();
  return b;
}

}  // namespace gaitopt
