#pragma once

// Experiment orchestration: per-trial demand generation, forecasting,
// placement by each method, scoring against the realized next slot, sweeps
// and CSV output.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "laql/agents.hpp"
#include "laql/config.hpp"
#include "laql/demand.hpp"
#include "laql/predictor.hpp"

namespace laql {

struct RunRecord {
  Method method = Method::kRandom;
  SweepAxis sweep_axis = SweepAxis::kNone;
  std::size_t sweep_index = 0;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  std::size_t slot = 0;
  double sum_mos = 0.0;
  double wall_seconds = 0.0;  // kept out of runs.csv, which must be reproducible
  std::uint64_t iterations = 0;
  bool feasible = true;
  CachePlacement placement;
};

struct TrialCurve {
  std::string trial;
  Method method = Method::kLaql;
  std::vector<CurvePoint> points;
};

struct AutomatonSnapshot {
  std::string trial;
  StateKey state;
  PursuitAutomaton automaton;
};

struct HeatmapCell {
  Method method = Method::kLaql;
  double x = 0.0;
  double y = 0.0;
  double mos = 0.0;
};

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<TrialCurve> curves;
  std::vector<AutomatonSnapshot> automata;
  std::vector<HeatmapCell> heatmap;
  std::vector<std::string> notes;  // e.g. optimal skipped above the cap
};

/// BS sites at the centers of a near-square grid of cells covering the region.
std::vector<Point> bs_grid(std::size_t num_bs, double region_side_m);

/// Moves `p` into the region and at least kMinLinkDistance away from every BS.
Point sanitize_user_position(Point p, const std::vector<Point>& bs, double region_side_m);

/// MOS a single user at `pos` would see under `placement`.
double probe_mos(const NetworkScenario& scenario, const CachePlacement& placement,
                 std::span<const double> popularity, const QoeParams& qoe, Point pos);

/// Environment of the realized (true) state at `slot` of the trial for `seed`.
CachingEnv realized_env(const ExperimentConfig& config, std::uint64_t seed, std::size_t slot = 0);

/// Every seed of `config` at its own parameters (no sweep).
ExperimentResult run_pipeline(const ExperimentConfig& config);

/// run_pipeline at every value of the configured sweep axis. With no axis
/// this is run_pipeline. Warns on stderr if median LAQL MOS falls with
/// transmit power by more than `monotonic_tolerance` (relative).
ExperimentResult sweep(const ExperimentConfig& config, double monotonic_tolerance = 0.01);

/// Writes runs.csv, reward_curves.csv, la_convergence.csv and mos_heatmap.csv
/// (plus timing.csv when `emit_timing`). Reward curves keep every
/// `curve_stride`-th iteration and the last one.
void emit_outputs(const ExperimentResult& result, const std::filesystem::path& dir,
                  std::size_t curve_stride = 10, bool emit_timing = false);

/// Median sum MOS of one method over all records matching the sweep index.
std::optional<double> median_sum_mos(const std::vector<RunRecord>& records, Method method,
                                     std::size_t sweep_index = 0);

// ---- automaton benchmark ---------------------------------------------------

struct LaBenchConfig {
  std::vector<double> reward_probs = {0.8, 0.2};
  std::uint32_t kappa = 10;
  std::size_t steps = 10'000;
  std::size_t runs = 100;
  std::uint64_t seed = 1;
};

struct LaBenchRun {
  std::size_t run = 0;
  double p_best = 0.0;
  bool converged = false;  // p_best > 0.95
};

/// Stationary Bernoulli environment: action i is rewarded (response 0) with
/// probability reward_probs[i].
std::vector<LaBenchRun> la_bench(const LaBenchConfig& config);

// ---- predictor runs ---------------------------------------------------------

struct PredictOptions {
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> gps_csv;
  std::size_t walk_steps = 500;
};

struct PredictResult {
  TrainReport mobility;
  TrainReport popularity;
  Mlp mobility_net;
  Mlp popularity_net;
};

/// Trains both forecasters on a synthetic (or GPS) trace and a synthetic
/// popularity walk. When `out_dir` is given, writes the epoch curves and
/// model snapshots there.
PredictResult run_predict(const ExperimentConfig& config, const PredictOptions& options,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace laql
