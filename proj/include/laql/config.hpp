#pragma once

// Experiment configuration and its key = value text format.
//
//   # comment
//   num_contents = 10
//   tx_power_dbm = 20
//   methods = laql, eps_q, noncoop, random
//
// One key per line, `#` starts a comment, unknown keys are rejected. Powers
// are given in dBm and stored in watts.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "laql/agents.hpp"
#include "laql/netmodel.hpp"

namespace laql {

enum class Method { kLaql, kEpsGreedy, kNonCooperative, kRandom, kOptimal };
enum class FadingMode { kExpectation, kRayleigh };
enum class ForecastMode { kNeuralNet, kPersistence, kTruth };
enum class SweepAxis { kNone, kTxPower, kNumBs, kNumUsers };

std::string_view method_name(Method m);
Method parse_method(std::string_view text);
std::vector<Method> parse_methods(std::string_view list);
std::string_view sweep_axis_name(SweepAxis a);

struct ScenarioConfig {
  std::size_t num_contents = 10;
  std::size_t num_bs = 2;
  std::size_t num_users = 100;
  std::size_t cache_slots = 4;
  double bandwidth_hz = 20e6;
  double tx_power_w = 0.1;
  double pathloss_exponent = 3.0;
  double noise_w = 3.1622776601683794e-13;
  double region_side_m = 4000.0;
  double fronthaul_max_bps = std::numeric_limits<double>::infinity();
  double min_rate_bps = 0.0;
  FadingMode fading = FadingMode::kExpectation;
};

struct DemandConfig {
  double user_step_sigma_m = 100.0;
  double popularity_jitter = 0.005;
  double zipf_exponent = 0.8;
  std::size_t history_steps = 48;
};

struct ForecastConfig {
  ForecastMode mode = ForecastMode::kNeuralNet;
  std::size_t epochs = 200;
  double learning_rate = 0.1;
  std::size_t mobility_window = 12;
  std::size_t popularity_window = 5;
  std::vector<std::size_t> mobility_hidden = {16, 16};
  std::vector<std::size_t> popularity_hidden = {16, 16, 16};
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  QoeParams qoe;
  AgentConfig agent;
  DemandConfig demand;
  ForecastConfig forecast;

  std::vector<Method> methods = {Method::kLaql, Method::kEpsGreedy, Method::kNonCooperative,
                                 Method::kRandom, Method::kOptimal};
  std::vector<std::uint64_t> seeds = {1};
  std::size_t slots = 1;  // placements per trial, one per prediction step
  std::uint64_t oracle_cap = 1'000'000;
  SweepAxis sweep_axis = SweepAxis::kNone;
  std::vector<double> sweep_values;  // dBm for tx power, counts otherwise
  std::size_t heatmap_resolution = 40;
  std::size_t curve_stride = 10;
  std::size_t threads = 0;  // 0: hardware concurrency
  bool emit_timing = false;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

/// Parses the key = value text. Keys not present keep their defaults.
ExperimentConfig parse_config(std::string_view text, std::string_view origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Renders every key in the parse format.
std::string to_config_text(const ExperimentConfig& config);

}  // namespace laql
