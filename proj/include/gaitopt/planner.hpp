#pragma once

// Sampling-based MPC over the joint (action, gait) trajectory space.
//
// Each control step: warm-start the proposal distribution from cloned-policy
// rollouts through the dynamics model, then iterate sample -> wrap gaits ->
// score by discounted model reward with gait-continuity and actor-divergence
// penalties and a terminal value bootstrap -> refit the distribution to the
// elite samples with a momentum update. The first step of the final mean is
// executed and the distribution is kept for the next control step.
//
// Proposal means and stds live in unwrapped gait coordinates so the Gaussian
// updates stay well-defined; gaits are wrapped at sample time and on output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "gaitopt/common.hpp"
#include "gaitopt/gait.hpp"
#include "gaitopt/models.hpp"
#include "gaitopt/parallel.hpp"
#include "gaitopt/rng.hpp"

namespace gaitopt {

struct PlannerConfig {
  int horizon = 6;         // H
  int iterations = 6;      // N
  int samples = 500;       // M
  int policy_samples = 30; // M_pi
  int elites = 60;         // M_elite
  double gamma = 0.99;
  double beta = 0.95;       // momentum on the elite refit
  double temperature = 0.5; // exponential elite weighting
  double lambda = 15.0;     // gait-continuity weight (RewardWeights alpha6)
  double alpha_div = 0.1;   // actor-divergence weight (RewardWeights alpha5)
  double sigma_floor = 0.05;
  double gait_sigma = 0.15;       // fresh per-step gait exploration std
  double warm_start_blend = 0.5;  // policy stats vs shifted previous distribution
  int action_dim = 1;
  bool weighted_elite_fit = true;  // false: plain mean/std of the elites
  bool sample_output = false;      // true: draw the output instead of taking the mean

  static constexpr int gait_dim = 3;
  int joint_dim() const { return action_dim + gait_dim; }

  void validate() const {
    require(horizon >= 1 && iterations >= 1 && samples >= 1, "planner: H, N, M must be >= 1");
    require(elites >= 1 && elites <= samples, "planner: need 1 <= M_elite <= M");
    require(policy_samples >= 1 && policy_samples <= samples,
            "planner: need 1 <= M_pi <= M");
    require(gamma > 0.0 && gamma < 1.0, "planner: gamma must lie in (0, 1)");
    require(beta >= 0.0 && beta <= 1.0, "planner: beta must lie in [0, 1]");
    require(temperature > 0.0, "planner: temperature must be > 0");
    require(sigma_floor > 0.0 && gait_sigma > 0.0, "planner: stds must be > 0");
    require(lambda >= 0.0 && alpha_div >= 0.0, "planner: penalty weights must be >= 0");
    require(warm_start_blend >= 0.0 && warm_start_blend <= 1.0,
            "planner: warm_start_blend must lie in [0, 1]");
    require(action_dim >= 1, "planner: action_dim must be >= 1");
  }
};

/// Per-step Gaussian over the joint (action, gait) coordinates, row-major
/// horizon x (action_dim + 3). Gait columns come after the action columns.
struct ProposalDistribution {
  int horizon = 0;
  int dim = 0;
  std::vector<double> mu;
  std::vector<double> sigma;

  ProposalDistribution() = default;
  ProposalDistribution(int h, int d)
      : horizon(h), dim(d), mu(static_cast<std::size_t>(h) * d, 0.0),
        sigma(static_cast<std::size_t>(h) * d, 0.0) {}

  double& mu_at(int k, int d_) { return mu[static_cast<std::size_t>(k) * dim + d_]; }
  double mu_at(int k, int d_) const { return mu[static_cast<std::size_t>(k) * dim + d_]; }
  double& sigma_at(int k, int d_) { return sigma[static_cast<std::size_t>(k) * dim + d_]; }
  double sigma_at(int k, int d_) const { return sigma[static_cast<std::size_t>(k) * dim + d_]; }
};

/// One sampled trajectory: raw unwrapped draws (kept for the refit), the
/// clamped actions and wrapped gaits actually evaluated, and the return.
struct TrajectorySample {
  std::vector<double> raw;          // H x dim
  std::vector<double> actions;      // H x action_dim, clamped
  std::vector<GaitCommand> gaits;   // H, wrapped
  double ret = 0.0;
};

struct PlannerState {
  ProposalDistribution prev;
  GaitCommand g_cmd_prev = gaits::trot;  // nominal gait at step 0
  uint64_t step_index = 0;

  static PlannerState initial(const PlannerConfig& cfg,
                              const GaitCommand& g0 = gaits::trot) {
    PlannerState s;
    s.g_cmd_prev = g0;
    s.prev = ProposalDistribution(cfg.horizon, cfg.joint_dim());
    for (int k = 0; k < cfg.horizon; ++k) {
      for (int d = 0; d < cfg.action_dim; ++d) s.prev.sigma_at(k, d) = cfg.sigma_floor;
      for (int d = 0; d < PlannerConfig::gait_dim; ++d) {
        s.prev.mu_at(k, cfg.action_dim + d) = g0[d];
        s.prev.sigma_at(k, cfg.action_dim + d) = cfg.gait_sigma;
      }
    }
    return s;
  }
};

struct PlanDiagnostics {
  std::vector<double> best_return_per_iteration;
  double elite_spread = 0.0;  // best minus worst elite return, final iteration
  std::array<double, 3> gait_mean{};
  int divergent_samples = 0;
  int warm_start_fallbacks = 0;
};

struct PlanResult {
  Action action;
  GaitCommand gait;
  PlannerState state;
  PlanDiagnostics diagnostics;
};

class MppiPlanner {
 public:
  MppiPlanner(ModelBundle bundle, PlannerConfig cfg, uint64_t seed, int threads = 1)
      : bundle_(std::move(bundle)), cfg_(cfg), seed_(seed), threads_(threads) {
    cfg_.validate();
    bundle_.validate();
    require(bundle_.action_dim() == cfg_.action_dim,
            "planner: bundle and config action dimensions disagree");
    gamma_pow_.resize(cfg_.horizon + 1);
    gamma_pow_[0] = 1.0;
    for (int k = 1; k <= cfg_.horizon; ++k) gamma_pow_[k] = gamma_pow_[k - 1] * cfg_.gamma;
  }

  const PlannerConfig& config() const { return cfg_; }

  void set_log(std::function<void(const std::string&)> log) { log_ = std::move(log); }

  /// Receding-horizon reuse of the previous distribution: drop step 0, append
  /// a fresh step holding the previous final mean at exploration-scale std.
  static ProposalDistribution shift_distribution(const ProposalDistribution& d,
                                                 const PlannerConfig& cfg) {
    ProposalDistribution out(d.horizon, d.dim);
    for (int k = 0; k < d.horizon - 1; ++k)
      for (int c = 0; c < d.dim; ++c) {
        out.mu_at(k, c) = d.mu_at(k + 1, c);
        out.sigma_at(k, c) = d.sigma_at(k + 1, c);
      }
    const int last = d.horizon - 1;
    for (int c = 0; c < d.dim; ++c) {
      out.mu_at(last, c) = d.mu_at(last, c);
      out.sigma_at(last, c) = c < cfg.action_dim ? cfg.sigma_floor : cfg.gait_sigma;
    }
    for (auto& s : out.sigma) s = std::max(s, cfg.sigma_floor);
    return out;
  }

  /// Initial proposal for one control step: empirical per-step statistics of
  /// policy rollouts through the dynamics model on the action columns, blended
  /// with the time-shifted previous distribution; gait columns re-centered on
  /// the previous gait command at fresh exploration std.
  ProposalDistribution warm_start(const Observation& o, const PlannerState& state,
                                  PlanDiagnostics* diag = nullptr) const {
    ProposalDistribution shifted = shift_distribution(state.prev, cfg_);
    ProposalDistribution out = shifted;

    const int H = cfg_.horizon;
    const int m = cfg_.action_dim;
    try {
      // M_pi rollouts alternating policy and dynamics; the policy trajectories
      // keep the current gait command.
      std::vector<double> sum(static_cast<std::size_t>(H) * m, 0.0);
      std::vector<double> sum_sq(static_cast<std::size_t>(H) * m, 0.0);
      for (int r = 0; r < cfg_.policy_samples; ++r) {
        Observation ohat = o;
        ohat.gait = state.g_cmd_prev;
        std::vector<Observation> history{ohat};
        for (int k = 0; k < H; ++k) {
          const Action a = bundle_.policy->act(history);
          for (int d = 0; d < m; ++d) {
            const double v = clamp_unit(a.values[d]);
            sum[static_cast<std::size_t>(k) * m + d] += v;
            sum_sq[static_cast<std::size_t>(k) * m + d] += v * v;
          }
          ohat = bundle_.dynamics->step(ohat, a);
          history.push_back(ohat);
          if (history.size() > kPolicyHistory) history.erase(history.begin());
        }
      }
      const double inv_n = 1.0 / cfg_.policy_samples;
      const double blend = cfg_.warm_start_blend;
      for (int k = 0; k < H; ++k)
        for (int d = 0; d < m; ++d) {
          const std::size_t i = static_cast<std::size_t>(k) * m + d;
          const double mean = sum[i] * inv_n;
          const double var = std::max(0.0, sum_sq[i] * inv_n - mean * mean);
          out.mu_at(k, d) = blend * mean + (1.0 - blend) * shifted.mu_at(k, d);
          out.sigma_at(k, d) =
              blend * std::sqrt(var) + (1.0 - blend) * shifted.sigma_at(k, d);
        }
    } catch (const ModelDivergenceError& e) {
      out = shifted;  // keep the receding-horizon prior
      if (diag) ++diag->warm_start_fallbacks;
      if (log_) log_(std::string("warm start fell back to shifted prior: ") + e.what());
    }

    const bool freeze_gait = !std::isfinite(cfg_.lambda);
    for (int k = 0; k < H; ++k)
      for (int d = 0; d < PlannerConfig::gait_dim; ++d) {
        out.mu_at(k, m + d) = state.g_cmd_prev[d];
        out.sigma_at(k, m + d) = freeze_gait ? 0.0 : cfg_.gait_sigma;
      }
    for (int k = 0; k < H; ++k)
      for (int d = 0; d < out.dim; ++d)
        if (!(freeze_gait && d >= m))
          out.sigma_at(k, d) = std::max(out.sigma_at(k, d), cfg_.sigma_floor);
    return out;
  }

  /// Discounted return of one sampled trajectory under the model bundle:
  ///   sum_k gamma^k R(o_k, a_k) - lambda ||g_k - g_{k-1}||^2
  ///   - alpha_div ||a_0 - a_cloned||^2 + gamma^H V(o_H),
  /// where g_{-1} is the previously executed gait command. Model divergence
  /// scores the trajectory -inf so it can never be selected as an elite.
  double evaluate_trajectory(const Observation& o, const TrajectorySample& sample,
                             const PlannerState& state, const Action& a_cloned) const {
    const int H = cfg_.horizon;
    const int m = cfg_.action_dim;
    double ret = 0.0;
    try {
      Observation ohat = o;
      const GaitCommand* g_prev = &state.g_cmd_prev;
      Action a(std::vector<double>(m, 0.0));
      for (int k = 0; k < H; ++k) {
        ohat.gait = sample.gaits[k];
        for (int d = 0; d < m; ++d)
          a.values[d] = sample.actions[static_cast<std::size_t>(k) * m + d];
        ret += gamma_pow_[k] * bundle_.reward->reward(ohat, a);
        const double d2 = gait_distance_sq(sample.gaits[k], *g_prev);
        if (d2 != 0.0) ret -= cfg_.lambda * d2;  // inf * 0 guard
        if (k == 0 && cfg_.alpha_div > 0.0)
          ret -= cfg_.alpha_div * squared_distance(a.values, a_cloned.values);
        ohat = bundle_.dynamics->step(ohat, a);
        g_prev = &sample.gaits[k];
      }
      ret += gamma_pow_[H] * bundle_.value->value(ohat);
    } catch (const ModelDivergenceError&) {
      return -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(ret)) return -std::numeric_limits<double>::infinity();
    return ret;
  }

  double evaluate_trajectory(const Observation& o, const TrajectorySample& sample,
                             const PlannerState& state) const {
    return evaluate_trajectory(o, sample, state, bundle_.policy->act({o}));
  }

  /// One full control-step solve. Deterministic for fixed (seed, inputs,
  /// config), independent of thread count.
  PlanResult plan(const Observation& o, const PlannerState& state) const {
    const int H = cfg_.horizon;
    const int m = cfg_.action_dim;
    const int D = cfg_.joint_dim();
    const int M = cfg_.samples;

    PlanResult result;
    ProposalDistribution dist = warm_start(o, state, &result.diagnostics);
    const Action a_cloned = bundle_.policy->act({o}).clamped();

    std::vector<TrajectorySample> samples(M);
    std::vector<int> order(M);
    std::vector<double> weights(cfg_.elites);

    for (int iter = 1; iter <= cfg_.iterations; ++iter) {
      parallel_for(M, threads_, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
          TrajectorySample& s = samples[j];
          draw_sample(dist, static_cast<uint32_t>(state.step_index),
                      static_cast<uint32_t>(iter), static_cast<uint32_t>(j), s);
          s.ret = evaluate_trajectory(o, s, state, a_cloned);
        }
      });

      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (samples[a].ret != samples[b].ret) return samples[a].ret > samples[b].ret;
        return a < b;  // deterministic tie-break
      });

      int usable = 0;
      while (usable < cfg_.elites && std::isfinite(samples[order[usable]].ret)) ++usable;
      if (usable == 0)
        throw PlannerError("planner: all " + std::to_string(M) +
                           " samples diverged at control step " +
                           std::to_string(state.step_index) + ", iteration " +
                           std::to_string(iter));

      const double best = samples[order[0]].ret;
      result.diagnostics.best_return_per_iteration.push_back(best);
      if (iter == cfg_.iterations)
        result.diagnostics.elite_spread = best - samples[order[usable - 1]].ret;

      // Exponentially weighted elite statistics, w_j ~ exp((R_j - R_max)/T).
      double wsum = 0.0;
      for (int e = 0; e < usable; ++e) {
        weights[e] = cfg_.weighted_elite_fit
                         ? std::exp((samples[order[e]].ret - best) / cfg_.temperature)
                         : 1.0;
        wsum += weights[e];
      }
      const bool freeze_gait = !std::isfinite(cfg_.lambda);
      for (int k = 0; k < H; ++k) {
        for (int c = 0; c < D; ++c) {
          if (freeze_gait && c >= m) continue;  // gait pinned to g_cmd_prev
          const std::size_t idx = static_cast<std::size_t>(k) * D + c;
          double mean = 0.0;
          for (int e = 0; e < usable; ++e) mean += weights[e] * samples[order[e]].raw[idx];
          mean /= wsum;
          double var = 0.0;
          for (int e = 0; e < usable; ++e)
            var += weights[e] * square(samples[order[e]].raw[idx] - mean);
          var /= wsum;
          dist.mu[idx] = cfg_.beta * mean + (1.0 - cfg_.beta) * dist.mu[idx];
          dist.sigma[idx] = std::max(
              cfg_.beta * std::sqrt(var) + (1.0 - cfg_.beta) * dist.sigma[idx],
              cfg_.sigma_floor);
        }
      }
      for (auto& s : samples)
        result.diagnostics.divergent_samples += std::isfinite(s.ret) ? 0 : 1;
    }

    // Executed command: first step of the final distribution. Taking the mean
    // is deterministic; sampling is available behind the config flag.
    std::vector<double> first(D);
    if (cfg_.sample_output) {
      RngStream rs(seed_ ^ kStreamPlannerOut, static_cast<uint32_t>(state.step_index));
      for (int c = 0; c < D; ++c)
        first[c] = dist.mu_at(0, c) + dist.sigma_at(0, c) * rs.normal();
    } else {
      for (int c = 0; c < D; ++c) first[c] = dist.mu_at(0, c);
    }
    result.action = Action(std::vector<double>(first.begin(), first.begin() + m)).clamped();
    result.gait = GaitCommand::wrap({first[m], first[m + 1], first[m + 2]});
    result.diagnostics.gait_mean = result.gait.offsets();

    result.state.prev = dist;
    result.state.g_cmd_prev = result.gait;
    result.state.step_index = state.step_index + 1;
    return result;
  }

 private:
  static constexpr std::size_t kPolicyHistory = 30;

  void draw_sample(const ProposalDistribution& dist, uint32_t step, uint32_t iter,
                   uint32_t j, TrajectorySample& s) const {
    const int H = cfg_.horizon;
    const int m = cfg_.action_dim;
    const int D = cfg_.joint_dim();
    s.raw.resize(static_cast<std::size_t>(H) * D);
    s.actions.resize(static_cast<std::size_t>(H) * m);
    s.gaits.resize(H);
    // Stream (seed ^ planner, step, iter, sample): identical draws regardless
    // of which worker evaluates the sample.
    RngStream rs(seed_ ^ kStreamPlanner ^ (static_cast<uint64_t>(step) << 32), step, iter, j);
    for (int k = 0; k < H; ++k) {
      for (int c = 0; c < D; ++c) {
        const std::size_t idx = static_cast<std::size_t>(k) * D + c;
        const double sigma = dist.sigma[idx];
        s.raw[idx] = sigma == 0.0 ? dist.mu[idx] : dist.mu[idx] + sigma * rs.normal();
      }
      for (int d = 0; d < m; ++d)
        s.actions[static_cast<std::size_t>(k) * m + d] =
            clamp_unit(s.raw[static_cast<std::size_t>(k) * D + d]);
      s.gaits[k] = GaitCommand::wrap({s.raw[static_cast<std::size_t>(k) * D + m],
                                      s.raw[static_cast<std::size_t>(k) * D + m + 1],
                                      s.raw[static_cast<std::size_t>(k) * D + m + 2]});
    }
  }

  ModelBundle bundle_;
  PlannerConfig cfg_;
  uint64_t seed_;
  int threads_;
  std::vector<double> gamma_pow_;
  std::function<void(const std::string&)> log_;
};

}  // namespace gaitopt
