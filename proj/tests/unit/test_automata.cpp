#include <doctest.h>

#include <numeric>
#include <sstream>

#include "laql/automata.hpp"
#include "laql/error.hpp"

using namespace laql;

namespace {

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::size_t converged_runs(std::uint32_t kappa, std::size_t runs, std::size_t steps) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng(derive_seed(2024, {r}));
    PursuitAutomaton la(2, kappa);
    const double d[2] = {0.8, 0.2};
    for (std::size_t t = 0; t < steps; ++t) {
      const auto a = la.select(rng);
      la.update(a, rng.uniform() < d[a] ? 0 : 1);
    }
    hits += la.probs()[0] > 0.95 ? 1 : 0;
  }
  return hits;
}

}  // namespace

TEST_CASE("construction") {
  PursuitAutomaton la(5, 10);
  CHECK(la.delta() == doctest::Approx(0.02).epsilon(1e-15));
  PursuitAutomaton four(4, 3);
  for (double p : four.probs()) CHECK(p == 0.25);
  for (std::size_t i = 0; i < 4; ++i) CHECK(four.estimate(i) == 0.5);
  CHECK_THROWS_AS(PursuitAutomaton(1, 10), ConfigError);
  CHECK_THROWS_AS(PursuitAutomaton(3, 0), ConfigError);
}

TEST_CASE("selection") {
  PursuitAutomaton la(3, 1);
  la.set_probs({1.0, 0.0, 0.0});
  Rng rng(1);
  for (int k = 0; k < 1000; ++k) CHECK(la.select(rng) == 0);

  PursuitAutomaton u(4, 1);
  std::vector<int> counts(4, 0);
  for (int k = 0; k < 100000; ++k) ++counts[u.select(rng)];
  for (int c : counts) {
    CHECK(c >= 24000);
    CHECK(c <= 26000);
  }

  Rng a(9), b(9);
  for (int k = 0; k < 100; ++k) CHECK(u.select(a) == u.select(b));
}

TEST_CASE("rewarded update pursues the best estimate") {
  PursuitAutomaton la(4, 1);  // delta = 0.25
  la.update(1, 0);            // estimates: action 1 -> 2/3, best
  const auto p = la.probs();
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 1.0);
  CHECK(p[2] == 0.0);
  CHECK(p[3] == 0.0);
}

TEST_CASE("rewarded update arithmetic with delta 0.1") {
  PursuitAutomaton la(10, 1);  // delta = 0.1
  std::vector<double> start(10, 0.0);
  start[0] = start[1] = start[2] = start[3] = 0.25;
  la.set_probs(start);
  la.update(1, 0);
  const auto p = la.probs();
  CHECK(p[0] == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.55).epsilon(1e-15));
  CHECK(p[2] == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(p[3] == doctest::Approx(0.15).epsilon(1e-15));
  for (std::size_t i = 4; i < 10; ++i) CHECK(p[i] == 0.0);
  CHECK(sum(p) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("penalty leaves probabilities unchanged") {
  PursuitAutomaton la(3, 5);
  const std::vector<double> before(la.probs().begin(), la.probs().end());
  la.update(2, 1);
  CHECK(std::vector<double>(la.probs().begin(), la.probs().end()) == before);
  CHECK(la.select_counts()[2] == 3.0);
  CHECK(la.reward_counts()[2] == 1.0);
}

TEST_CASE("estimate is u over v") {
  PursuitAutomaton la(2, 1);
  la.update(0, 0);
  la.update(0, 0);  // u = 3, v = 4
  CHECK(la.estimate(0) == 0.75);
}

TEST_CASE("invalid arguments") {
  PursuitAutomaton la(3, 1);
  CHECK_THROWS(la.update(3, 0));
  CHECK_THROWS(la.update(0, 2));
  CHECK_THROWS(la.set_probs({0.5, 0.5}));
  CHECK_THROWS(la.set_probs({0.5, 0.6, -0.1}));
}

TEST_CASE("converged") {
  PursuitAutomaton la(2, 1);
  la.set_probs({0.96, 0.04});
  CHECK(la.converged() == 0);
  la.set_probs({0.5, 0.5});
  CHECK_FALSE(la.converged().has_value());
  la.set_probs({1.0, 0.0});
  CHECK(la.converged(1.0) == 0);
}

TEST_CASE("invariants under random operation") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(15);
    PursuitAutomaton la(n, 1 + static_cast<std::uint32_t>(rng.index(20)));
    for (int step = 0; step < 500; ++step) {
      const std::vector<double> before(la.probs().begin(), la.probs().end());
      const std::size_t a = la.select(rng);
      const int r = rng.uniform() < 0.5 ? 0 : 1;
      la.update(a, r);
      const auto p = la.probs();
      CHECK(std::abs(sum(p) - 1.0) <= 1e-12);
      for (double v : p) CHECK(v >= 0.0);
      if (r == 0) {
        const std::size_t h = la.best_estimate();
        CHECK(p[h] >= before[h]);
        for (std::size_t i = 0; i < n; ++i) {
          if (i != h) CHECK(p[i] <= before[i]);
        }
      }
      for (std::size_t i = 0; i < n; ++i) CHECK(la.reward_counts()[i] <= la.select_counts()[i]);
    }
    const auto v = la.select_counts();
    CHECK(sum(v) == doctest::Approx(2.0 * static_cast<double>(n) + 500.0));
  }
}

TEST_CASE("two-action Bernoulli environment converges to the better action") {
  CHECK(converged_runs(10, 100, 10000) >= 95);
}

TEST_CASE("larger kappa does not lower the convergence frequency") {
  const auto k10 = converged_runs(10, 100, 10000);
  const auto k100 = converged_runs(100, 100, 10000);
  CHECK(k100 >= k10);
}

TEST_CASE("CSV export") {
  PursuitAutomaton la(2, 10);
  std::ostringstream os;
  la.write_csv_rows(os, "x,");
  CHECK(os.str() == "x,0,0.5,1,2\nx,1,0.5,1,2\n");
}
