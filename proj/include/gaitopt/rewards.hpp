#pragma once

// Deployment reward terms. Every term is a penalty (<= 0); the total is the
// alpha-weighted sum. Cost of transport is the energy-efficiency metric used
// to compare gaits: |P| / (m * g * v), dimensionless, lower is better.

#include <array>
#include <cmath>
#include <span>

#include "gaitopt/common.hpp"
#include "gaitopt/gait.hpp"

namespace gaitopt {

/// Weights alpha1..alpha6 for (velocity, energy, angular, continuity,
/// divergence, gait). The gait-continuity weight used inside the planner loop
/// is the same storage as alpha6.
struct RewardWeights {
  std::array<double, 6> alpha{1.0, 0.001, 0.3, 0.05, 0.1, 15.0};

  double lambda_gait() const { return alpha[5]; }

  void validate() const {
    for (double a : alpha)
      require(a >= 0.0 && !std::isnan(a), "reward weights must be non-negative");
  }
};

struct RewardBreakdown {
  double r_vel = 0.0;
  double r_energy = 0.0;
  double r_ang = 0.0;
  double r_cont = 0.0;
  double r_div = 0.0;
  double r_gait = 0.0;
  double total = 0.0;
};

/// -||v_robot - v_target||^2
inline double reward_velocity(std::span<const double> v_robot, std::span<const double> v_target) {
  return -squared_distance(v_robot, v_target);
}

inline double reward_velocity(double v_robot, double v_target) {
  return -square(v_robot - v_target);
}

/// -P for instantaneous mechanical power P >= 0 (watts).
inline double reward_energy(double power) {
  require(std::isfinite(power) && power >= 0.0, "reward_energy: power must be >= 0");
  return -power;
}

/// -omega^2 for yaw rate omega (rad/s).
inline double reward_angular(double omega) { return -square(omega); }

/// -||a_t - a_prev||^2
inline double reward_continuity(std::span<const double> a, std::span<const double> a_prev) {
  return -squared_distance(a, a_prev);
}

/// -||a_t - a_cloned||^2
inline double reward_divergence(std::span<const double> a, std::span<const double> a_cloned) {
  return -squared_distance(a, a_cloned);
}

/// -||g_t - g_prev||^2 with circular per-component differences.
inline double reward_gait(const GaitCommand& g, const GaitCommand& g_prev) {
  return -gait_distance_sq(g, g_prev);
}

/// Fills total = sum_i alpha_i * r_i, keeping the per-term breakdown.
inline RewardBreakdown total_reward(RewardBreakdown b, const RewardWeights& w) {
  b.total = w.alpha[0] * b.r_vel + w.alpha[1] * b.r_energy + w.alpha[2] * b.r_ang +
            w.alpha[3] * b.r_cont + w.alpha[4] * b.r_div + w.alpha[5] * b.r_gait;
  return b;
}

/// |P| / (m * g * v). Undefined at standstill: mean_velocity must be > 0.
inline double cost_of_transport(double mean_power, double mass, double gravity,
                                double mean_velocity) {
  require(std::isfinite(mass) && mass > 0.0, "cost_of_transport: mass must be > 0");
  require(std::isfinite(gravity) && gravity > 0.0, "cost_of_transport: gravity must be > 0");
  if (!(std::isfinite(mean_velocity) && mean_velocity > 0.0))
    throw std::domain_error("cost_of_transport: undefined for mean velocity <= 0");
  return std::fabs(mean_power) / (mass * gravity * mean_velocity);
}

}  // namespace gaitopt
