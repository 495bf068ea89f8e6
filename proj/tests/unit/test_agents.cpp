#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "laql/baselines.hpp"
#include "laql/error.hpp"

using namespace laql;
using laql::testing::small_env;

TEST_CASE("state keys") {
  const PlacementDims d{2, 2, 4};
  CHECK(encode_state(CachePlacement::zeros(2, 2, 4)) == "0000");
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) {
    const auto p = random_placement(d, rng);
    CHECK(decode_state(encode_state(p), d) == p);
    CHECK(placement_from_rank(placement_rank(p), d) == p);
  }
  CHECK_THROWS_AS(decode_state("00z0", d), ParseError);
  CHECK_THROWS_AS(decode_state("000", d), ParseError);
  CHECK(state_space_size({10, 4, 10}) == BigInt("10000000000000000000000000000000000000000"));
  CHECK(state_space_size(d) == 256);
}

TEST_CASE("state keys for large libraries") {
  const PlacementDims d{2, 2, 100};
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const auto p = random_placement(d, rng);
    CHECK(decode_state(encode_state(p), d) == p);
  }
  CHECK(encode_state(CachePlacement(1, 2, 100, {7, 99})) == "7.99");
}

TEST_CASE("distinct placements have distinct keys") {
  const PlacementDims d{2, 2, 4};
  std::set<StateKey> keys;
  for (std::uint64_t r = 0; r < 256; ++r) keys.insert(encode_state(placement_from_rank(r, d)));
  CHECK(keys.size() == 256);
}

TEST_CASE("actions") {
  const auto p = CachePlacement::from_one_based({{1, 4}, {2, 3}}, 4);
  const PlacementDims d = dims_of(p);
  CHECK(d.num_actions() == 9);
  CHECK(apply_action(p, d.noop_action()) == p);
  // Slot 1 holds content 4 (= F): +1 wraps to content 1.
  CHECK(apply_action(p, 2).at(0, 1) == 0);
  CHECK(apply_action(p, 1).at(0, 0) == 3);  // content 1 - 1 wraps to F
  for (std::size_t k = 0; k < d.num_slots(); ++k) {
    CHECK(apply_action(apply_action(p, 2 * k), 2 * k + 1) == p);
    CHECK(apply_action(apply_action(p, 2 * k + 1), 2 * k) == p);
  }
  CHECK_THROWS(apply_action(p, 9));
}

TEST_CASE("non-noop actions are bijections on the placement set") {
  const PlacementDims d{2, 2, 3};
  for (std::size_t a = 0; a < d.noop_action(); ++a) {
    std::set<std::uint64_t> image;
    for (std::uint64_t r = 0; r < 81; ++r) image.insert(placement_rank(apply_action(placement_from_rank(r, d), a)));
    CHECK(image.size() == 81);
  }
}

TEST_CASE("reward polarity") {
  CHECK(reward(3.0, 3.0, true) == 0);
  CHECK(reward(3.0, 2.9, true) == 1);
  CHECK(reward(3.0, 3.1, true) == 0);
  CHECK(reward(3.0, 3.1, false) == 1);
  CHECK(reward(3.0, 3.1, false, false) == 0);
  CHECK(bellman_reward(0, 1.0, 2.0, RewardMode::kBinary) == 1.0);
  CHECK(bellman_reward(1, 2.0, 1.0, RewardMode::kBinary) == 0.0);
  CHECK(bellman_reward(1, 2.0, 1.5, RewardMode::kShaped) == -0.5);
}

TEST_CASE("Bellman update") {
  AgentConfig cfg;
  QTable q(3);
  q_update(q, "s", 1, 1.0, "t", cfg);
  CHECK(q.get("s", 1) == 0.75);

  // Fixed point: Q = r + gamma max Q(s').
  QTable f(2);
  f.set("t", 0, 1.0);
  f.set("s", 0, 0.5 + 0.6 * 1.0);
  q_update(f, "s", 0, 0.5, "t", cfg);
  CHECK(f.get("s", 0) == doctest::Approx(1.1).epsilon(1e-15));

  // Repeated self-transition converges to 1 / (1 - gamma).
  QTable g(1);
  for (int k = 0; k < 200; ++k) q_update(g, "s", 0, 1.0, "s", cfg);
  CHECK(std::abs(g.get("s", 0) - 2.5) < 1e-6);
  // Geometric-series oracle for the iterate: Q_k = 2.5 (1 - (1 - alpha (1 - gamma))^k).
  const double rate = 1.0 - 0.75 * (1.0 - 0.6);
  QTable h(1);
  for (int k = 1; k <= 30; ++k) {
    q_update(h, "s", 0, 1.0, "s", cfg);
    CHECK(h.get("s", 0) == doctest::Approx(2.5 * (1.0 - std::pow(rate, k))).epsilon(1e-12));
  }
}

TEST_CASE("Q table defaults and greedy tie-break") {
  QTable q(4);
  CHECK(q.get("x", 3) == 0.0);
  CHECK(q.greedy_action("x") == 0);
  q.set("x", 2, 0.5);
  q.set("x", 3, 0.5);
  CHECK(q.greedy_action("x") == 2);
  CHECK(q.max_value("x") == 0.5);
}

TEST_CASE("agent config validation") {
  AgentConfig c;
  CHECK_NOTHROW(c.validate());
  c.learning_rate = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.discount = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.epsilon = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.kappa = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("single-content MDP") {
  auto env = small_env(1, 1, 3, 5, 1);
  AgentConfig cfg;
  cfg.episodes = 2;
  cfg.steps_per_episode = 50;
  const auto out = train_laql(env, cfg, 1);
  CHECK(out.best_placement == CachePlacement::zeros(1, 1, 1));
  CHECK(out.best_sum_mos == doctest::Approx(env.sum_mos(out.best_placement)));
}

TEST_CASE("LAQL reaches the exhaustive optimum on the tiny instance (seed 7)") {
  auto env = small_env(4, 2, 7);
  const auto oracle = optimal_exhaustive(env);
  AgentConfig cfg;  // 10 episodes x 1000 steps
  const auto out = train_laql(env, cfg, 7);
  CHECK(out.best_sum_mos >= 0.98 * oracle.score);
  CHECK(out.best_sum_mos <= oracle.score + 1e-9);
  CHECK(out.best_sum_mos == doctest::Approx(env.sum_mos(out.best_placement)).epsilon(1e-14));
}

TEST_CASE("update accounting without early stop") {
  auto env = small_env(4, 2, 1);
  AgentConfig cfg;
  cfg.episodes = 3;
  cfg.steps_per_episode = 400;
  cfg.stability_window = 0;
  const auto la = train_laql(env, cfg, 5);
  CHECK(la.ops.q_updates == 1200);
  CHECK(la.ops.la_updates == 1200);
  CHECK(la.reward_curve.size() == 1200);
  const auto q = train_qlearning(env, cfg, 5);
  CHECK(q.ops.q_updates == 1200);
  CHECK(q.ops.la_updates == 0);
}

TEST_CASE("training invariants") {
  auto env = small_env(4, 2, 2);
  AgentConfig cfg;
  cfg.episodes = 3;
  cfg.steps_per_episode = 2000;
  const auto out = train_laql(env, cfg, 11);
  double prev = -1.0;
  for (const auto& pt : out.reward_curve) {
    CHECK(pt.best_sum_mos >= prev);
    prev = pt.best_sum_mos;
  }
  for (const auto& [key, la] : out.automata) {
    CHECK(la.n_actions() == 9);
    const auto p = la.probs();
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-12);
  }
  for (const auto& [key, row] : out.q_table.rows()) {
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 2.5 + 1e-12);
    }
  }
}

TEST_CASE("epsilon = 1 explores uniformly") {
  auto env = small_env(4, 2, 3);
  AgentConfig cfg;
  cfg.epsilon = 1.0;
  cfg.episodes = 10;
  cfg.steps_per_episode = 10000;
  cfg.stability_window = 0;
  const auto out = train_qlearning(env, cfg, 19);
  REQUIRE(out.reward_curve.size() == 100000);
  std::vector<double> counts(9, 0.0);
  for (const auto& pt : out.reward_curve) counts[pt.action] += 1.0;
  const double expected = 100000.0 / 9.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Upper 1% point of chi-square with 8 degrees of freedom.
  CHECK(chi2 < 20.090);
}

TEST_CASE("epsilon = 0 from a zero table always takes action 0") {
  auto env = small_env(4, 2, 3);
  AgentConfig cfg;
  cfg.epsilon = 0.0;
  cfg.episodes = 1;
  cfg.steps_per_episode = 300;
  cfg.stability_window = 0;
  const auto out = train_qlearning(env, cfg, 2);
  for (const auto& pt : out.reward_curve) CHECK(pt.action == 0);
}

TEST_CASE("training is deterministic per seed") {
  auto env_a = small_env(4, 2, 4);
  auto env_b = small_env(4, 2, 4);
  AgentConfig cfg;
  cfg.episodes = 2;
  cfg.steps_per_episode = 500;
  const auto a = train_qlearning(env_a, cfg, 8);
  const auto b = train_qlearning(env_b, cfg, 8);
  REQUIRE(a.reward_curve.size() == b.reward_curve.size());
  for (std::size_t k = 0; k < a.reward_curve.size(); ++k) {
    CHECK(a.reward_curve[k].action == b.reward_curve[k].action);
    CHECK(a.reward_curve[k].sum_mos == b.reward_curve[k].sum_mos);
  }
  const auto c = train_laql(env_a, cfg, 8);
  const auto d = train_laql(env_b, cfg, 8);
  CHECK(c.best_placement == d.best_placement);
  CHECK(c.reward_curve.size() == d.reward_curve.size());
}

TEST_CASE("shaped reward mode trains") {
  auto env = small_env(4, 2, 6);
  AgentConfig cfg;
  cfg.reward_mode = RewardMode::kShaped;
  cfg.episodes = 2;
  cfg.steps_per_episode = 500;
  const auto out = train_laql(env, cfg, 3);
  CHECK(std::isfinite(out.best_sum_mos));
}

TEST_CASE("infeasible states are penalized") {
  NetworkScenario sc;
  sc.bs_positions = {{1000.0, 2000.0}, {3000.0, 2000.0}};
  sc.user_positions = {{1100.0, 2000.0}, {2900.0, 2100.0}};
  sc.cache_slots = 1;
  sc.num_contents = 3;
  sc.min_rate_bps = 1e12;  // unattainable: every placement infeasible
  CachingEnv env(sc, FadingRealization::expectation(2, 2), zipf_popularity(3));
  const auto e = env.evaluate(CachePlacement::zeros(2, 1, 3));
  CHECK_FALSE(e.feasible);
  AgentConfig cfg;
  cfg.episodes = 1;
  cfg.steps_per_episode = 50;
  cfg.stability_window = 0;
  const auto out = train_qlearning(env, cfg, 1);
  for (const auto& pt : out.reward_curve) CHECK(pt.reward == 0.0);
}

TEST_CASE("test stage") {
  auto env = small_env(4, 2, 7);
  AgentConfig cfg;
  const auto trained = train_laql(env, cfg, 7);

  const auto zero = test_stage(trained, env, 0, 42);
  CHECK(zero.best == zero.initial);
  CHECK(zero.mos_trace.size() == 1);
  Rng rng(42);
  // The initial placement is the seed's first random placement.
  CHECK(zero.initial == random_placement(env.dims(), rng));

  const auto a = test_stage(trained, env, 100, 5);
  const auto b = test_stage(trained, env, 100, 5);
  CHECK(a.best == b.best);
  CHECK(a.mos_trace == b.mos_trace);

  // Converged automata (every one collapsed onto its best estimate) started
  // at the trained best placement never move to a worse state.
  TrainOutcome converged = trained;
  for (auto& [key, la] : converged.automata) {
    std::vector<double> one_hot(la.n_actions(), 0.0);
    one_hot[la.best_estimate()] = 1.0;
    la.set_probs(one_hot);
  }
  const auto run = test_stage(converged, env, 200, 9, trained.best_placement);
  for (double m : run.mos_trace) CHECK(m >= trained.best_sum_mos - 1e-9);
  CHECK(run.best_sum_mos == doctest::Approx(trained.best_sum_mos));
}

TEST_CASE("environment memoizes evaluations") {
  auto env = small_env(4, 2, 8);
  const auto p = CachePlacement::from_one_based({{1, 2}, {3, 4}}, 4);
  const auto first = env.evaluate(p);
  const auto count = env.evaluations();
  const auto again = env.evaluate(p);
  CHECK(env.evaluations() == count);
  CHECK(first.sum_mos == again.sum_mos);
  CHECK(env.evaluate_uncached(p).sum_mos == first.sum_mos);
}
