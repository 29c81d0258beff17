#pragma once

// Flat key-value experiment configuration with dotted section prefixes
// (e.g. "planner.horizon = 6"). Unknown keys are errors; omitted keys keep
// their defaults. A run is reproducible from the emitted file plus the seed.

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gaitopt/common.hpp"
#include "gaitopt/mlp.hpp"
#include "gaitopt/models.hpp"
#include "gaitopt/planner.hpp"
#include "gaitopt/rewards.hpp"

namespace gaitopt {

struct ExperimentConfig {
  std::string kind = "ablation";  // ablation | adaptive | ramp | train | oracle-check
  uint64_t seed = 0;
  std::string out_dir = "out";

  SurrogateParams env;
  RewardWeights weights;
  PlannerConfig planner;  // lambda/alpha_div mirror weights.alpha[5]/alpha[4]

  std::vector<double> speeds{0.5, 1.0, 1.5, 2.0};
  double episode_seconds = 10.0;  // fixed-gait and adaptive episodes
  double ramp_v_start = 0.5;
  double ramp_v_end = 2.0;
  double ramp_duration = 20.0;
  double ramp_hold = 5.0;

  int train_episodes = 50;
  int train_steps = 600;
  double train_action_noise = 0.2;
  int train_gait_interval = 100;
  FitConfig fit;

  /// Keeps the single-storage coupling between the reward weights and the
  /// planner's penalty terms, and re-checks all invariants.
  void finalize() {
    planner.lambda = weights.alpha[5];
    planner.alpha_div = weights.alpha[4];
    planner.action_dim = env.action_dim;
    env.validate();
    weights.validate();
    planner.validate();
    require(kind == "ablation" || kind == "adaptive" || kind == "ramp" || kind == "train" ||
                kind == "oracle-check",
            "config: unknown experiment kind '" + kind + "'");
    require(!speeds.empty(), "config: speeds list must not be empty");
    for (double v : speeds) require(v > 0, "config: speeds must be > 0");
    require(episode_seconds > 0 && ramp_duration > 0 && ramp_hold >= 0,
            "config: durations must be positive");
    require(train_episodes >= 1 && train_steps >= 1, "config: train sizes must be >= 1");
    fit.validate();
  }

  static ExperimentConfig from_file(const std::string& path);
  void to_file(const std::string& path) const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct ConfigBinding {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    require(used == v.size(), "config: trailing characters in value for " + key);
    return x;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("config: bad numeric value '" + v + "' for " + key);
  }
}

inline const std::map<std::string, ConfigBinding>& config_bindings() {
  static const std::map<std::string, ConfigBinding> table = [] {
    std::map<std::string, ConfigBinding> t;
    const auto add_double = [&t](const std::string& key, auto member) {
      t[key] = {[member, key](ExperimentConfig& c, const std::string& v) {
                  c.*member = parse_double(v, key);
                },
                [member](const ExperimentConfig& c) { return format_double(c.*member); }};
    };
    const auto add_env = [&t](const std::string& key, auto member) {
      t[key] = {[member, key](ExperimentConfig& c, const std::string& v) {
                  c.env.*member = parse_double(v, key);
                },
                [member](const ExperimentConfig& c) { return format_double(c.env.*member); }};
    };
    const auto add_planner_int = [&t](const std::string& key, auto member) {
      t[key] = {[member, key](ExperimentConfig& c, const std::string& v) {
                  c.planner.*member = static_cast<int>(parse_double(v, key));
                },
                [member](const ExperimentConfig& c) {
                  return std::to_string(c.planner.*member);
                }};
    };
    const auto add_planner_double = [&t](const std::string& key, auto member) {
      t[key] = {[member, key](ExperimentConfig& c, const std::string& v) {
                  c.planner.*member = parse_double(v, key);
                },
                [member](const ExperimentConfig& c) {
                  return format_double(c.planner.*member);
                }};
    };

    t["experiment.kind"] = {[](ExperimentConfig& c, const std::string& v) { c.kind = v; },
                            [](const ExperimentConfig& c) { return c.kind; }};
    t["experiment.seed"] = {
        [](ExperimentConfig& c, const std::string& v) { c.seed = std::stoull(v); },
        [](const ExperimentConfig& c) { return std::to_string(c.seed); }};
    t["experiment.out"] = {[](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
                           [](const ExperimentConfig& c) { return c.out_dir; }};
    t["experiment.speeds"] = {
        [](ExperimentConfig& c, const std::string& v) {
          c.speeds.clear();
          std::stringstream ss(v);
          std::string tok;
          while (ss >> tok) c.speeds.push_back(parse_double(tok, "experiment.speeds"));
        },
        [](const ExperimentConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.speeds.size(); ++i)
            out += (i ? " " : "") + format_double(c.speeds[i]);
          return out;
        }};
    add_double("experiment.episode_seconds", &ExperimentConfig::episode_seconds);

    add_env("env.mass", &SurrogateParams::mass);
    add_env("env.gravity", &SurrogateParams::gravity);
    add_env("env.dt", &SurrogateParams::dt);
    add_env("env.a_max", &SurrogateParams::a_max);
    add_env("env.f_step", &SurrogateParams::f_step);
    add_env("env.duty", &SurrogateParams::duty);
    add_env("env.v_max", &SurrogateParams::v_max);
    add_env("env.k_p", &SurrogateParams::k_p);
    add_env("env.kappa", &SurrogateParams::kappa);
    add_env("env.sigma_w", &SurrogateParams::sigma_w);
    t["env.action_dim"] = {[](ExperimentConfig& c, const std::string& v) {
                             c.env.action_dim = static_cast<int>(std::stol(v));
                           },
                           [](const ExperimentConfig& c) {
                             return std::to_string(c.env.action_dim);
                           }};

    for (int i = 0; i < 6; ++i) {
      const std::string key = "rewards.alpha" + std::to_string(i + 1);
      t[key] = {[i, key](ExperimentConfig& c, const std::string& v) {
                  c.weights.alpha[i] = parse_double(v, key);
                },
                [i](const ExperimentConfig& c) { return format_double(c.weights.alpha[i]); }};
    }

    add_planner_int("planner.horizon", &PlannerConfig::horizon);
    add_planner_int("planner.iterations", &PlannerConfig::iterations);
    add_planner_int("planner.samples", &PlannerConfig::samples);
    add_planner_int("planner.policy_samples", &PlannerConfig::policy_samples);
    add_planner_int("planner.elites", &PlannerConfig::elites);
    add_planner_double("planner.gamma", &PlannerConfig::gamma);
    add_planner_double("planner.beta", &PlannerConfig::beta);
    add_planner_double("planner.temperature", &PlannerConfig::temperature);
    add_planner_double("planner.sigma_floor", &PlannerConfig::sigma_floor);
    add_planner_double("planner.gait_sigma", &PlannerConfig::gait_sigma);
    add_planner_double("planner.warm_start_blend", &PlannerConfig::warm_start_blend);
    t["planner.weighted_elite_fit"] = {
        [](ExperimentConfig& c, const std::string& v) {
          require(v == "true" || v == "false", "config: planner.weighted_elite_fit is boolean");
          c.planner.weighted_elite_fit = v == "true";
        },
        [](const ExperimentConfig& c) {
          return std::string(c.planner.weighted_elite_fit ? "true" : "false");
        }};
    t["planner.sample_output"] = {
        [](ExperimentConfig& c, const std::string& v) {
          require(v == "true" || v == "false", "config: planner.sample_output is boolean");
          c.planner.sample_output = v == "true";
        },
        [](const ExperimentConfig& c) {
          return std::string(c.planner.sample_output ? "true" : "false");
        }};

    add_double("ramp.v_start", &ExperimentConfig::ramp_v_start);
    add_double("ramp.v_end", &ExperimentConfig::ramp_v_end);
    add_double("ramp.duration", &ExperimentConfig::ramp_duration);
    add_double("ramp.hold", &ExperimentConfig::ramp_hold);

    t["train.episodes"] = {[](ExperimentConfig& c, const std::string& v) {
                             c.train_episodes = static_cast<int>(std::stol(v));
                           },
                           [](const ExperimentConfig& c) {
                             return std::to_string(c.train_episodes);
                           }};
    t["train.steps"] = {[](ExperimentConfig& c, const std::string& v) {
                          c.train_steps = static_cast<int>(std::stol(v));
                        },
                        [](const ExperimentConfig& c) { return std::to_string(c.train_steps); }};
    add_double("train.action_noise", &ExperimentConfig::train_action_noise);
    t["train.gait_interval"] = {[](ExperimentConfig& c, const std::string& v) {
                                  c.train_gait_interval = static_cast<int>(std::stol(v));
                                },
                                [](const ExperimentConfig& c) {
                                  return std::to_string(c.train_gait_interval);
                                }};
    t["train.epochs"] = {[](ExperimentConfig& c, const std::string& v) {
                           c.fit.epochs = static_cast<int>(std::stol(v));
                         },
                         [](const ExperimentConfig& c) { return std::to_string(c.fit.epochs); }};
    t["train.batch_size"] = {[](ExperimentConfig& c, const std::string& v) {
                               c.fit.batch_size = static_cast<int>(std::stol(v));
                             },
                             [](const ExperimentConfig& c) {
                               return std::to_string(c.fit.batch_size);
                             }};
    t["train.learning_rate"] = {
        [](ExperimentConfig& c, const std::string& v) {
          c.fit.learning_rate = parse_double(v, "train.learning_rate");
        },
        [](const ExperimentConfig& c) { return format_double(c.fit.learning_rate); }};
    t["train.momentum"] = {
        [](ExperimentConfig& c, const std::string& v) {
          c.fit.momentum = parse_double(v, "train.momentum");
        },
        [](const ExperimentConfig& c) { return format_double(c.fit.momentum); }};
    t["train.validation_fraction"] = {
        [](ExperimentConfig& c, const std::string& v) {
          c.fit.validation_fraction = parse_double(v, "train.validation_fraction");
        },
        [](const ExperimentConfig& c) { return format_double(c.fit.validation_fraction); }};
    t["train.hidden"] = {
        [](ExperimentConfig& c, const std::string& v) {
          c.fit.hidden.clear();
          std::stringstream ss(v);
          std::string tok;
          while (ss >> tok) c.fit.hidden.push_back(static_cast<int>(std::stol(tok)));
          require(!c.fit.hidden.empty(), "config: train.hidden must list at least one size");
        },
        [](const ExperimentConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.fit.hidden.size(); ++i)
            out += (i ? " " : "") + std::to_string(c.fit.hidden[i]);
          return out;
        }};
    return t;
  }();
  return table;
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "config: cannot open " + path);
  ExperimentConfig cfg;
  const auto& bindings = detail::config_bindings();
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config: line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto it = bindings.find(key);
    if (it == bindings.end())
      throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                  std::to_string(line_no));
    it->second.set(cfg, value);
  }
  cfg.finalize();
  return cfg;
}

inline void ExperimentConfig::to_file(const std::string& path) const {
  std::ofstream f(path);
  require(f.good(), "config: cannot write " + path);
  for (const auto& [key, binding] : detail::config_bindings())
    f << key << " = " << binding.get(*this) << "\n";
  require(f.good(), "config: write failed for " + path);
}

}  // namespace gaitopt
