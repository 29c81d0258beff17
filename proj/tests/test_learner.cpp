#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "gaitopt/learner.hpp"
#include "gaitopt/mlp.hpp"
#include "gaitopt/rng.hpp"

using namespace gaitopt;

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

TEST_CASE("regressor parameter count and forward shape", "[learner]") {
  Regressor reg({3, 8, 5, 2}, 1);
  CHECK(reg.param_count() == (3 + 1) * 8 + (8 + 1) * 5 + (5 + 1) * 2);
  const auto y = reg.forward(std::vector<double>{0.1, -0.2, 0.3});
  CHECK(y.size() == 2);
  CHECK(all_finite(y));
}

TEST_CASE("normalizer round-trips", "[learner]") {
  RngStream rs(3, 1);
  Matrix rows;
  for (int r = 0; r < 50; ++r)
    rows.push_back({rs.uniform(-5, 5), rs.uniform(0, 100), 7.0});  // constant column too
  const Normalizer n = Normalizer::fit(rows);
  for (const auto& row : rows) {
    const auto back = n.denormalize(n.normalize(row));
    for (std::size_t i = 0; i < row.size(); ++i)
      CHECK(back[i] == Catch::Approx(row[i]).margin(1e-12));
  }
}

TEST_CASE("gradients match central differences", "[learner]") {
  RngStream rs(17, 2);

  SECTION("tanh MLP stays under 1e-4 at epsilon 1e-5") {
    Regressor reg({4, 16, 8, 3}, 5);
    Matrix X, Y;
    for (int s = 0; s < 10; ++s) {
      std::vector<double> x(4), y(3);
      for (double& v : x) v = rs.normal();
      for (double& v : y) v = rs.normal();
      X.push_back(x);
      Y.push_back(y);
    }
    CHECK(grad_check(reg, X, Y, all_indices(X.size()), 1e-5) < 1e-4);
  }

  SECTION("single linear layer agrees to machine precision") {
    Regressor reg({3, 2}, 9);
    Matrix X, Y;
    for (int s = 0; s < 6; ++s) {
      std::vector<double> x(3), y(2);
      for (double& v : x) v = rs.normal();
      for (double& v : y) v = rs.normal();
      X.push_back(x);
      Y.push_back(y);
    }
    CHECK(grad_check(reg, X, Y, all_indices(X.size()), 1e-5) < 1e-8);
  }

  SECTION("a corrupted gradient is detected") {
    Regressor reg({3, 6, 1}, 11);
    Matrix X, Y;
    for (int s = 0; s < 6; ++s) {
      std::vector<double> x(3), y(1);
      for (double& v : x) v = rs.normal();
      for (double& v : y) v = rs.normal();
      X.push_back(x);
      Y.push_back(y);
    }
    const auto idx = all_indices(X.size());
    std::vector<double> analytic(reg.param_count());
    reg.loss_and_gradient(X, Y, idx, analytic);
    const auto numeric = numeric_gradient(reg, X, Y, idx, 1e-5);
    std::vector<double> corrupted = analytic;
    corrupted[0] = corrupted[0] * 2.0 + 0.5;
    CHECK(max_relative_error(corrupted, numeric) > 1e-2);
    CHECK(max_relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("fit_regressor sanity oracles", "[learner]") {
  RngStream rs(23, 3);

  SECTION("exact linear data is learned to high accuracy") {
    Matrix X, Y;
    for (int s = 0; s < 400; ++s) {
      const double x0 = rs.uniform(-1, 1), x1 = rs.uniform(-1, 1);
      X.push_back({x0, x1});
      Y.push_back({0.7 * x0 - 0.3 * x1 + 0.1});
    }
    Regressor reg({2, 32, 1}, 1);
    FitConfig cfg;
    cfg.epochs = 300;
    cfg.learning_rate = 0.05;
    const FitReport rep = fit_regressor(reg, X, Y, cfg);
    CHECK(rep.val_mse < 1e-4);
  }

  SECTION("zero targets collapse to the zero function") {
    Matrix X, Y;
    for (int s = 0; s < 100; ++s) {
      X.push_back({rs.uniform(-1, 1)});
      Y.push_back({0.0});
    }
    Regressor reg({1, 8, 1}, 2);
    FitConfig cfg;
    cfg.epochs = 1000;
    cfg.learning_rate = 0.1;
    CHECK(fit_regressor(reg, X, Y, cfg).val_mse < 1e-6);
  }

  SECTION("a single sample is interpolated") {
    Matrix X{{0.4, -0.2}}, Y{{0.9}};
    Regressor reg({2, 8, 1}, 3);
    FitConfig cfg;
    cfg.epochs = 2000;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 1;
    const FitReport rep = fit_regressor(reg, X, Y, cfg);
    CHECK(rep.train_mse < 1e-8);
  }

  SECTION("training is deterministic under a fixed seed") {
    Matrix X, Y;
    for (int s = 0; s < 64; ++s) {
      X.push_back({rs.uniform(-1, 1)});
      Y.push_back({std::sin(3.0 * X.back()[0])});
    }
    FitConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 99;
    Regressor a({1, 16, 1}, cfg.seed);
    Regressor b({1, 16, 1}, cfg.seed);
    fit_regressor(a, X, Y, cfg);
    fit_regressor(b, X, Y, cfg);
    CHECK(a.params() == b.params());  // bitwise
  }

  SECTION("divergent training reports the epoch") {
    Matrix X, Y;
    for (int s = 0; s < 32; ++s) {
      X.push_back({rs.uniform(-1, 1)});
      Y.push_back({1e3 * rs.normal()});
    }
    Regressor reg({1, 8, 1}, 4);
    FitConfig cfg;
    cfg.learning_rate = 1e6;  // guaranteed blow-up
    cfg.epochs = 50;
    CHECK_THROWS_AS(fit_regressor(reg, X, Y, cfg, "test-head"), TrainingError);
  }
}

TEST_CASE("dataset collection: counts, determinism, coverage", "[learner]") {
  SurrogateParams params;
  RewardWeights weights;
  CollectConfig cfg;
  cfg.episodes = 2;
  cfg.steps_per_episode = 150;
  const Dataset d1 = collect_dataset(params, weights, cfg, 0.99, 42);
  CHECK(d1.transitions.size() == 300);
  CHECK(d1.episode_starts == std::vector<std::size_t>{0, 150});

  const Dataset d2 = collect_dataset(params, weights, cfg, 0.99, 42);
  REQUIRE(d2.transitions.size() == d1.transitions.size());
  for (std::size_t i = 0; i < d1.transitions.size(); ++i) {
    CHECK(d1.transitions[i].obs == d2.transitions[i].obs);
    CHECK(d1.transitions[i].action == d2.transitions[i].action);
    CHECK(d1.transitions[i].mc_return == d2.transitions[i].mc_return);
  }

  // gait coverage: with >= 50 episodes every canonical gait is approached
  CollectConfig big = cfg;
  big.episodes = 50;
  big.steps_per_episode = 150;
  const Dataset d3 = collect_dataset(params, weights, big, 0.99, 7);
  std::array<double, 4> best{1e9, 1e9, 1e9, 1e9};
  for (const auto& tr : d3.transitions) {
    const Observation o = Observation::unflatten(tr.obs, params.action_dim);
    for (int gi = 0; gi < kNumCanonicalGaits; ++gi)
      best[gi] = std::min(best[gi], gait_distance(o.gait, canonical_gaits()[gi]));
  }
  for (int gi = 0; gi < kNumCanonicalGaits; ++gi) CHECK(best[gi] < 0.1);
}

TEST_CASE("monte-carlo returns satisfy the recursion", "[learner]") {
  SurrogateParams params;
  RewardWeights weights;
  CollectConfig cfg;
  cfg.episodes = 3;
  cfg.steps_per_episode = 80;
  const double gamma = 0.97;
  const Dataset d = collect_dataset(params, weights, cfg, gamma, 5);
  for (std::size_t e = 0; e < d.episode_starts.size(); ++e) {
    const std::size_t begin = d.episode_starts[e];
    const std::size_t end =
        e + 1 < d.episode_starts.size() ? d.episode_starts[e + 1] : d.transitions.size();
    for (std::size_t t = begin; t + 1 < end; ++t)
      CHECK(d.transitions[t].mc_return ==
            Catch::Approx(d.transitions[t].reward + gamma * d.transitions[t + 1].mc_return)
                .margin(1e-12));
    CHECK(d.transitions[end - 1].mc_return == d.transitions[end - 1].reward);
  }
}

TEST_CASE("value head matches the geometric-series oracle", "[learner]") {
  // synthetic episodes with constant reward and indistinguishable observations
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
      oe.phase = rs.uniform();  // only the clock varies
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
  const TrainedBundle tb = train_bundle(data, SurrogateParams{}, fit);
  const double predicted = tb.bundle.value->value(o);
  CHECK(predicted == Catch::Approx(r / (1.0 - gamma)).epsilon(0.05));
}

TEST_CASE("trained bundle heads hit their accuracy targets", "[learner]") {
  SurrogateParams params;
  RewardWeights weights;
  CollectConfig cfg;
  cfg.episodes = 25;
  cfg.steps_per_episode = 400;
  const double gamma = 0.99;
  const Dataset data = collect_dataset(params, weights, cfg, gamma, 11);

  FitConfig fit;
  fit.epochs = 200;
  fit.learning_rate = 0.03;
  fit.seed = 1;
  const TrainedBundle tb = train_bundle(data, params, fit);

  // dynamics one-step validation error on normalized targets
  CHECK(tb.reports.per_head.at("dynamics").val_mse < 1e-3);

  // policy clone: max action error on a held-out validation set drawn from
  // the same behavior distribution (fresh seed)
  AnalyticPolicy expert(params);
  CollectConfig held = cfg;
  held.episodes = 2;
  const Dataset val = collect_dataset(params, weights, held, gamma, 1234);
  double worst = 0.0;
  for (std::size_t s = 0; s < val.transitions.size(); s += 3) {
    const Observation o = Observation::unflatten(val.transitions[s].obs, params.action_dim);
    worst = std::max(worst, std::fabs(tb.bundle.policy->act({o}).values[0] -
                                      expert.act({o}).values[0]));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("dataset CSV export/import round-trips", "[learner]") {
  SurrogateParams params;
  RewardWeights weights;
  CollectConfig cfg;
  cfg.episodes = 2;
  cfg.steps_per_episode = 40;
  const Dataset d = collect_dataset(params, weights, cfg, 0.99, 3);
  const auto path = std::filesystem::temp_directory_path() / "gaitopt_dataset_test.csv";
  export_dataset_csv(path.string(), d);
  const Dataset back = import_dataset_csv(path.string(), params.action_dim);
  REQUIRE(back.transitions.size() == d.transitions.size());
  CHECK(back.episode_starts == d.episode_starts);
  for (std::size_t i = 0; i < d.transitions.size(); ++i) {
    CHECK(back.transitions[i].obs == d.transitions[i].obs);
    CHECK(back.transitions[i].next_obs == d.transitions[i].next_obs);
    CHECK(back.transitions[i].action == d.transitions[i].action);
    CHECK(back.transitions[i].reward == d.transitions[i].reward);
    CHECK(back.transitions[i].mc_return == d.transitions[i].mc_return);
  }
  std::filesystem::remove(path);
}

TEST_CASE("trained head serialization is bit-identical", "[learner]") {
  RngStream rs(41, 8);
  Matrix X, Y;
  for (int s = 0; s < 60; ++s) {
    X.push_back({rs.uniform(-1, 1), rs.uniform(-1, 1)});
    Y.push_back({X.back()[0] * 0.5 - X.back()[1]});
  }
  TrainedHead head{Regressor({2, 8, 1}, 5), Normalizer::fit(X), Normalizer::fit(Y)};
  FitConfig cfg;
  cfg.epochs = 30;
  fit_regressor(head.reg, X, Y, cfg);

  const auto path = std::filesystem::temp_directory_path() / "gaitopt_head_test.bin";
  save_head(path.string(), head);
  const TrainedHead back = load_head(path.string());
  CHECK(back.reg.layer_sizes() == head.reg.layer_sizes());
  CHECK(back.reg.params() == head.reg.params());
  CHECK(back.in_norm.mean == head.in_norm.mean);
  CHECK(back.in_norm.stddev == head.in_norm.stddev);
  CHECK(back.out_norm.mean == head.out_norm.mean);
  CHECK(back.out_norm.stddev == head.out_norm.stddev);
  std::filesystem::remove(path);
}

TEST_CASE("encoded observations expose the circular topology", "[learner]") {
  Observation a;
  a.a_prev = {0.0};
  a.phase = 0.999;
  a.gait = wrap({0.999, 0.0, 0.5});
  Observation b = a;
  b.phase = 0.001;
  b.gait = wrap({0.001, 0.0, 0.5});
  const auto ea = encode_observation(a.flatten());
  const auto eb = encode_observation(b.flatten());
  REQUIRE(ea.size() == static_cast<std::size_t>(encoded_obs_dim(1)));
  double gap = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) gap = std::max(gap, std::fabs(ea[i] - eb[i]));
  CHECK(gap < 0.02);  // wrap-adjacent observations encode nearly identically
}
