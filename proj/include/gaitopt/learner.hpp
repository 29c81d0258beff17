#pragma once

// Dreamer-lite: collects transition datasets from the surrogate environment
// and fits one regressor per planner model (dynamics, reward, value, policy).
//
// Learned heads consume an encoded observation in which the periodic fields
// (phase clock and gait components) appear as sin/cos pairs, so the circular
// topology is structural instead of something the network has to discover.
// The dynamics head predicts only the fields the plant actually evolves
// (v, omega, phase); the commanded fields and a_prev pass through exactly as
// the dynamics contract requires.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gaitopt/common.hpp"
#include "gaitopt/mlp.hpp"
#include "gaitopt/models.hpp"
#include "gaitopt/rng.hpp"
#include "gaitopt/surrogate_env.hpp"

namespace gaitopt {

struct Transition {
  std::vector<double> obs;        // flattened Observation
  std::vector<double> action;
  std::vector<double> next_obs;   // flattened Observation
  double reward = 0.0;            // the four model-side reward terms, weighted
  double mc_return = 0.0;         // discounted Monte-Carlo return, terminal -> 0
  std::vector<double> cloned_target;  // expert action to imitate
};

struct Dataset {
  std::vector<Transition> transitions;
  std::vector<std::size_t> episode_starts;
  int action_dim = 1;
};

/// mc_return_t = reward_t + gamma * mc_return_{t+1} within each episode; the
/// step after an episode's last transition bootstraps to zero.
inline void compute_mc_returns(Dataset& data, double gamma) {
  for (std::size_t e = 0; e < data.episode_starts.size(); ++e) {
    const std::size_t begin = data.episode_starts[e];
    const std::size_t end = e + 1 < data.episode_starts.size()
                                ? data.episode_starts[e + 1]
                                : data.transitions.size();
    double running = 0.0;
    for (std::size_t t = end; t-- > begin;) {
      running = data.transitions[t].reward + gamma * running;
      data.transitions[t].mc_return = running;
    }
  }
}

struct CollectConfig {
  int episodes = 50;
  int steps_per_episode = 600;
  double action_noise = 0.2;        // std of the Gaussian exploration noise
  int gait_resample_interval = 100; // steps between behavior gait changes
  double v_cmd_min = 0.25;
  double v_cmd_max = 2.25;
};

namespace detail {
/// Behavior gait sampler: half the draws sit on a jittered canonical gait so
/// the planner-relevant corners of gait space are always covered, the other
/// half are uniform.
inline GaitCommand sample_behavior_gait(RngStream& rs) {
  if (rs.uniform() < 0.5) {
    const GaitCommand& base = canonical_gaits()[rs.below(kNumCanonicalGaits)];
    return GaitCommand::wrap({base[0] + 0.05 * rs.normal(), base[1] + 0.05 * rs.normal(),
                              base[2] + 0.05 * rs.normal()});
  }
  return GaitCommand::wrap({rs.uniform(), rs.uniform(), rs.uniform()});
}

inline double model_side_reward(const RewardBreakdown& b, const RewardWeights& w) {
  return w.alpha[0] * b.r_vel + w.alpha[1] * b.r_energy + w.alpha[2] * b.r_ang +
         w.alpha[3] * b.r_cont;
}
}  // namespace detail

/// Drives the environment with the proportional controller plus exploration
/// noise and periodic gait resampling. Deterministic under a fixed seed.
inline Dataset collect_dataset(const SurrogateParams& params, const RewardWeights& weights,
                               const CollectConfig& cfg, double gamma, uint64_t seed) {
  require(cfg.episodes >= 1, "collect_dataset: need at least one episode");
  require(cfg.steps_per_episode >= 1, "collect_dataset: need at least one step");
  SurrogateEnv env(params, weights);
  AnalyticPolicy expert(params);

  Dataset data;
  data.action_dim = params.action_dim;
  data.transitions.reserve(static_cast<std::size_t>(cfg.episodes) * cfg.steps_per_episode);
  for (int e = 0; e < cfg.episodes; ++e) {
    RngStream rs(seed ^ kStreamDataset, static_cast<uint32_t>(e));
    data.episode_starts.push_back(data.transitions.size());
    const double v_cmd = rs.uniform(cfg.v_cmd_min, cfg.v_cmd_max);
    GaitCommand gait = detail::sample_behavior_gait(rs);
    EnvState s = env.reset(rs.uniform(0.0, params.v_max * 0.8),
                           CommandProfile::constant(v_cmd), gait);
    for (int t = 0; t < cfg.steps_per_episode; ++t) {
      if (t > 0 && t % cfg.gait_resample_interval == 0)
        gait = detail::sample_behavior_gait(rs);
      const Action expert_a = expert.act({s.obs});
      Action a = expert_a;
      for (double& v : a.values) v = clamp_unit(v + cfg.action_noise * rs.normal());
      const StepOutcome out = env.step(s, a, gait, params.dt);

      Transition tr;
      Observation labeled = s.obs;
      labeled.gait = gait;  // the reward/dynamics inputs see the active gait
      tr.obs = labeled.flatten();
      tr.action = a.values;
      tr.next_obs = out.next.obs.flatten();
      tr.reward = detail::model_side_reward(out.reward, weights);
      tr.cloned_target = expert_a.clamped().values;
      data.transitions.push_back(std::move(tr));
      s = out.next;
    }
  }
  compute_mc_returns(data, gamma);
  return data;
}

// ---------------------------------------------------------------------------
// Observation encoding for learned heads

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// (v, omega, sin/cos phase, v_cmd, sin/cos of each gait component, a_prev...)
inline std::vector<double> encode_observation(std::span<const double> flat_obs) {
  std::vector<double> out;
  out.reserve(flat_obs.size() + 4);
  out.push_back(flat_obs[0]);            // v
  out.push_back(flat_obs[1]);            // omega
  out.push_back(std::sin(kTwoPi * flat_obs[2]));
  out.push_back(std::cos(kTwoPi * flat_obs[2]));
  out.push_back(flat_obs[3]);            // v_cmd
  for (int g = 0; g < 3; ++g) {
    out.push_back(std::sin(kTwoPi * flat_obs[4 + g]));
    out.push_back(std::cos(kTwoPi * flat_obs[4 + g]));
  }
  for (std::size_t i = Observation::kFixedFields; i < flat_obs.size(); ++i)
    out.push_back(flat_obs[i]);          // a_prev
  return out;
}

inline int encoded_obs_dim(int action_dim) { return 11 + action_dim; }

/// Dynamics regression targets: the evolved fields only.
inline std::vector<double> dynamics_target(const Observation& next) {
  return {next.v, next.omega, std::sin(kTwoPi * next.phase), std::cos(kTwoPi * next.phase)};
}

// ---------------------------------------------------------------------------
// Learned model wrappers

class LearnedDynamics final : public DynamicsModel {
 public:
  LearnedDynamics(TrainedHead head, SurrogateParams params)
      : head_(std::move(head)), params_(params) {
    require(head_.reg.input_dim() == encoded_obs_dim(params_.action_dim) + params_.action_dim,
            "learned dynamics: input dimension mismatch");
    require(head_.reg.output_dim() == 4, "learned dynamics: output dimension mismatch");
  }

  Observation step(const Observation& o, const Action& a) const override {
    require(a.dim() == params_.action_dim, "learned dynamics: action dimension mismatch");
    std::vector<double> x = encode_observation(o.flatten());
    const Action ac = a.clamped();
    x.insert(x.end(), ac.values.begin(), ac.values.end());
    const std::vector<double> y = head_.predict(x);
    if (!all_finite(y)) throw ModelDivergenceError("learned dynamics: non-finite output");
    Observation n = o;  // commanded fields pass through
    n.v = std::clamp(y[0], 0.0, params_.v_max);
    n.omega = y[1];
    n.phase = wrap_unit(std::atan2(y[2], y[3]) / kTwoPi);
    n.a_prev = ac.values;
    return n;
  }
  int action_dim() const override { return params_.action_dim; }

  const TrainedHead& head() const { return head_; }

 private:
  TrainedHead head_;
  SurrogateParams params_;
};

class LearnedReward final : public RewardModel {
 public:
  LearnedReward(TrainedHead head, int action_dim)
      : head_(std::move(head)), action_dim_(action_dim) {
    require(head_.reg.output_dim() == 1, "learned reward: output must be scalar");
  }

  double reward(const Observation& o, const Action& a) const override {
    std::vector<double> x = encode_observation(o.flatten());
    const Action ac = a.clamped();
    x.insert(x.end(), ac.values.begin(), ac.values.end());
    const double r = head_.predict(x)[0];
    if (!std::isfinite(r)) throw ModelDivergenceError("learned reward: non-finite output");
    return r;
  }
  int action_dim() const override { return action_dim_; }

  const TrainedHead& head() const { return head_; }

 private:
  TrainedHead head_;
  int action_dim_;
};

class LearnedValue final : public ValueModel {
 public:
  explicit LearnedValue(TrainedHead head) : head_(std::move(head)) {
    require(head_.reg.output_dim() == 1, "learned value: output must be scalar");
  }

  double value(const Observation& o) const override {
    const double v = head_.predict(encode_observation(o.flatten()))[0];
    if (!std::isfinite(v)) throw ModelDivergenceError("learned value: non-finite output");
    return v;
  }

  const TrainedHead& head() const { return head_; }

 private:
  TrainedHead head_;
};

class LearnedPolicy final : public PolicyModel {
 public:
  LearnedPolicy(TrainedHead head, int action_dim)
      : head_(std::move(head)), action_dim_(action_dim) {
    require(head_.reg.output_dim() == action_dim, "learned policy: output dimension mismatch");
  }

  Action act(const std::vector<Observation>& history) const override {
    require(!history.empty(), "policy: empty observation history");
    const std::vector<double> y =
        head_.predict(encode_observation(history.back().flatten()));
    if (!all_finite(y)) throw ModelDivergenceError("learned policy: non-finite output");
    return Action(y).clamped();
  }
  int action_dim() const override { return action_dim_; }

  const TrainedHead& head() const { return head_; }

 private:
  TrainedHead head_;
  int action_dim_;
};

// ---------------------------------------------------------------------------
// Bundle training

struct TrainReports {
  std::map<std::string, FitReport> per_head;
};

struct TrainedBundle {
  ModelBundle bundle;
  TrainReports reports;
};

namespace detail {
inline TrainedHead fit_head(const std::string& name, Matrix X, Matrix Y,
                            const FitConfig& cfg, TrainReports& reports) {
  require(!X.empty(), "train_bundle: empty dataset for head " + name);
  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(X[0].size()));
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(static_cast<int>(Y[0].size()));

  TrainedHead head{Regressor(sizes, cfg.seed), Normalizer::fit(X), Normalizer::fit(Y)};
  for (auto& row : X) row = head.in_norm.normalize(row);
  for (auto& row : Y) row = head.out_norm.normalize(row);
  reports.per_head[name] = fit_regressor(head.reg, X, Y, cfg, name);
  return head;
}
}  // namespace detail

/// Number of trailing steps whose Monte-Carlo labels are dropped for the
/// value head: gamma^300 < 0.05, so kept labels carry < 5% truncation bias.
inline constexpr int kValueLabelMinRemaining = 300;

/// Fits the four planner heads on a collected dataset. Heads are trained on
/// standardized inputs/targets; the value head skips transitions too close to
/// an episode end for the Monte-Carlo label to be trustworthy.
inline TrainedBundle train_bundle(const Dataset& data, const SurrogateParams& params,
                                  const FitConfig& cfg) {
  require(!data.transitions.empty(), "train_bundle: empty dataset");
  const std::size_t n = data.transitions.size();
  const int m = data.action_dim;

  TrainedBundle out;

  Matrix X_dyn, Y_dyn, X_rew, Y_rew, X_val, Y_val, X_pol, Y_pol;
  X_dyn.reserve(n);
  for (std::size_t e = 0; e < data.episode_starts.size(); ++e) {
    const std::size_t begin = data.episode_starts[e];
    const std::size_t end = e + 1 < data.episode_starts.size() ? data.episode_starts[e + 1] : n;
    for (std::size_t t = begin; t < end; ++t) {
      const Transition& tr = data.transitions[t];
      std::vector<double> x = encode_observation(tr.obs);
      X_pol.push_back(x);
      Y_pol.push_back(tr.cloned_target);
      if (end - t >= kValueLabelMinRemaining) {
        X_val.push_back(x);
        Y_val.push_back({tr.mc_return});
      }
      x.insert(x.end(), tr.action.begin(), tr.action.end());
      X_rew.push_back(x);
      Y_rew.push_back({tr.reward});
      X_dyn.push_back(std::move(x));
      Y_dyn.push_back(dynamics_target(Observation::unflatten(tr.next_obs, m)));
    }
  }
  require(!X_val.empty(),
          "train_bundle: episodes shorter than the value-label horizon; "
          "increase steps_per_episode");

  auto dynamics_head = detail::fit_head("dynamics", std::move(X_dyn), std::move(Y_dyn),
                                        cfg, out.reports);
  auto reward_head = detail::fit_head("reward", std::move(X_rew), std::move(Y_rew),
                                      cfg, out.reports);
  auto value_head = detail::fit_head("value", std::move(X_val), std::move(Y_val),
                                     cfg, out.reports);
  auto policy_head = detail::fit_head("policy", std::move(X_pol), std::move(Y_pol),
                                      cfg, out.reports);

  out.bundle.dynamics = std::make_shared<LearnedDynamics>(std::move(dynamics_head), params);
  out.bundle.reward = std::make_shared<LearnedReward>(std::move(reward_head), m);
  out.bundle.value = std::make_shared<LearnedValue>(std::move(value_head));
  out.bundle.policy = std::make_shared<LearnedPolicy>(std::move(policy_head), m);
  out.bundle.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_bundle(const std::string& dir, const ModelBundle& bundle) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto* dyn = dynamic_cast<const LearnedDynamics*>(bundle.dynamics.get());
  const auto* rew = dynamic_cast<const LearnedReward*>(bundle.reward.get());
  const auto* val = dynamic_cast<const LearnedValue*>(bundle.value.get());
  const auto* pol = dynamic_cast<const LearnedPolicy*>(bundle.policy.get());
  require(dyn && rew && val && pol, "save_bundle: bundle is not a learned bundle");
  save_head((fs::path(dir) / "dynamics.bin").string(), dyn->head());
  save_head((fs::path(dir) / "reward.bin").string(), rew->head());
  save_head((fs::path(dir) / "value.bin").string(), val->head());
  save_head((fs::path(dir) / "policy.bin").string(), pol->head());
}

inline ModelBundle load_bundle(const std::string& dir, const SurrogateParams& params) {
  namespace fs = std::filesystem;
  ModelBundle b;
  b.dynamics = std::make_shared<LearnedDynamics>(
      load_head((fs::path(dir) / "dynamics.bin").string()), params);
  b.reward = std::make_shared<LearnedReward>(
      load_head((fs::path(dir) / "reward.bin").string()), params.action_dim);
  b.value = std::make_shared<LearnedValue>(load_head((fs::path(dir) / "value.bin").string()));
  b.policy = std::make_shared<LearnedPolicy>(
      load_head((fs::path(dir) / "policy.bin").string()), params.action_dim);
  b.validate();
  return b;
}

// ---------------------------------------------------------------------------
// Dataset CSV round trip

inline void export_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream f(path);
  require(f.good(), "export_dataset_csv: cannot open " + path);
  const int m = data.action_dim;
  f << "episode";
  const char* obs_names[Observation::kFixedFields] = {"v",    "omega", "phase", "v_cmd",
                                                      "g1",   "g2",    "g3"};
  for (const char* s : obs_names) f << ",obs_" << s;
  for (int d = 0; d < m; ++d) f << ",obs_a_prev_" << d;
  for (int d = 0; d < m; ++d) f << ",action_" << d;
  for (const char* s : obs_names) f << ",next_" << s;
  for (int d = 0; d < m; ++d) f << ",next_a_prev_" << d;
  f << ",reward,mc_return";
  for (int d = 0; d < m; ++d) f << ",cloned_" << d;
  f << "\n";
  char buf[32];
  const auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, ",%.17g", x);
    f << buf;
  };
  std::size_t episode = 0;
  for (std::size_t t = 0; t < data.transitions.size(); ++t) {
    while (episode + 1 < data.episode_starts.size() && t >= data.episode_starts[episode + 1])
      ++episode;
    const Transition& tr = data.transitions[t];
    f << episode;
    for (double x : tr.obs) put(x);
    for (double x : tr.action) put(x);
    for (double x : tr.next_obs) put(x);
    put(tr.reward);
    put(tr.mc_return);
    for (double x : tr.cloned_target) put(x);
    f << "\n";
  }
  require(f.good(), "export_dataset_csv: write failed for " + path);
}

inline Dataset import_dataset_csv(const std::string& path, int action_dim) {
  std::ifstream f(path);
  require(f.good(), "import_dataset_csv: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(f, line)), "import_dataset_csv: empty file");
  Dataset data;
  data.action_dim = action_dim;
  const int obs_dim = Observation::flat_dim(action_dim);
  long last_episode = -1;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    require(static_cast<int>(cells.size()) == 1 + 2 * obs_dim + 2 * action_dim + 2,
            "import_dataset_csv: wrong column count");
    std::size_t c = 0;
    const long episode = static_cast<long>(cells[c++]);
    Transition tr;
    tr.obs.assign(cells.begin() + c, cells.begin() + c + obs_dim);
    c += obs_dim;
    tr.action.assign(cells.begin() + c, cells.begin() + c + action_dim);
    c += action_dim;
    tr.next_obs.assign(cells.begin() + c, cells.begin() + c + obs_dim);
    c += obs_dim;
    tr.reward = cells[c++];
    tr.mc_return = cells[c++];
    tr.cloned_target.assign(cells.begin() + c, cells.begin() + c + action_dim);
    if (episode != last_episode) {
      data.episode_starts.push_back(data.transitions.size());
      last_episode = episode;
    }
    data.transitions.push_back(std::move(tr));
  }
  return data;
}

}  // namespace gaitopt
