#include <doctest.h>

#include <cmath>

#include "laql/config.hpp"
#include "laql/error.hpp"

using namespace laql;

TEST_CASE("defaults are the reference scenario") {
  const ExperimentConfig c;
  CHECK(c.scenario.num_contents == 10);
  CHECK(c.scenario.num_bs == 2);
  CHECK(c.scenario.num_users == 100);
  CHECK(c.scenario.cache_slots == 4);
  CHECK(c.scenario.bandwidth_hz == 20e6);
  CHECK(c.scenario.tx_power_w == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(c.scenario.pathloss_exponent == 3.0);
  CHECK(watts_to_dbm(c.scenario.noise_w) == doctest::Approx(-95.0).epsilon(1e-12));
  CHECK(c.agent.learning_rate == 0.75);
  CHECK(c.agent.discount == 0.6);
  CHECK(c.agent.kappa == 10);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parsing keys, comments and power units") {
  const auto c = parse_config(
      "# small\n"
      "num_contents = 6   # library\n"
      "num_bs=3\n"
      "cache_slots = 2\n"
      "tx_power_dbm = 25\n"
      "noise_dbm = -100\n"
      "fading = rayleigh\n"
      "methods = laql, random\n"
      "seeds = 3, 4, 5\n"
      "forecast = truth\n"
      "reward_mode = shaped\n"
      "sweep_axis = tx_power\n"
      "sweep_values = 10, 20\n"
      "emit_timing = true\n"
      "\n");
  CHECK(c.scenario.num_contents == 6);
  CHECK(c.scenario.num_bs == 3);
  CHECK(c.scenario.cache_slots == 2);
  CHECK(c.scenario.tx_power_w == doctest::Approx(std::pow(10.0, -0.5)).epsilon(1e-12));
  CHECK(c.scenario.noise_w == doctest::Approx(1e-13).epsilon(1e-12));
  CHECK(c.scenario.fading == FadingMode::kRayleigh);
  CHECK(c.methods == std::vector<Method>{Method::kLaql, Method::kRandom});
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4, 5});
  CHECK(c.forecast.mode == ForecastMode::kTruth);
  CHECK(c.agent.reward_mode == RewardMode::kShaped);
  CHECK(c.sweep_axis == SweepAxis::kTxPower);
  CHECK(c.sweep_values == std::vector<double>{10, 20});
  CHECK(c.emit_timing);
}

TEST_CASE("unknown keys and bad values name the line") {
  try {
    parse_config("num_bs = 2\nbogus = 1\n", "cfg.txt");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("cfg.txt:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("num_bs = two\n"), ParseError);
  CHECK_THROWS_AS(parse_config("num_bs\n"), ParseError);
  CHECK_THROWS_AS(parse_config("methods = laql, laql\n"), ParseError);
}

TEST_CASE("validation") {
  ExperimentConfig c;
  c.scenario.cache_slots = 6;  // 12 slots > 10 contents
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.scenario.pathloss_exponent = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.agent.discount = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("method names") {
  for (Method m : {Method::kLaql, Method::kEpsGreedy, Method::kNonCooperative, Method::kRandom, Method::kOptimal}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK_THROWS(parse_method("greedy"));
}

TEST_CASE("rendered text parses back to the same configuration") {
  ExperimentConfig c;
  c.scenario.num_users = 37;
  c.scenario.tx_power_w = dbm_to_watts(17.5);
  c.methods = {Method::kOptimal, Method::kLaql};
  c.forecast.mobility_hidden = {8, 4};
  c.seeds = {9, 10};
  const auto back = parse_config(to_config_text(c));
  CHECK(to_config_text(back) == to_config_text(c));
  CHECK(back.scenario.num_users == 37);
  CHECK(back.scenario.tx_power_w == doctest::Approx(c.scenario.tx_power_w).epsilon(1e-12));
  CHECK(back.methods == c.methods);
  CHECK(back.forecast.mobility_hidden == c.forecast.mobility_hidden);
}
