#pragma once

// MDP over cache placements and the two tabular learners that search it:
// Q-learning with epsilon-greedy exploration, and Q-learning whose action
// selection is delegated to one pursuit automaton per visited state.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "laql/automata.hpp"
#include "laql/netmodel.hpp"
#include "laql/rng.hpp"

namespace laql {

using BigInt = boost::multiprecision::cpp_int;

struct PlacementDims {
  std::size_t num_bs = 1;
  std::size_t slots = 1;
  std::size_t num_contents = 1;

  std::size_t num_slots() const { return num_bs * slots; }
  /// 2 * S * M + 1: +1/-1 on every slot, plus the no-op.
  std::size_t num_actions() const { return 2 * num_slots() + 1; }
  std::size_t noop_action() const { return 2 * num_slots(); }

  friend bool operator==(const PlacementDims&, const PlacementDims&) = default;
};

PlacementDims dims_of(const CachePlacement& p);

/// Canonical state encoding: one base-F digit per slot, row-major. Digits
/// use 0-9a-zA-Z when F <= 62, otherwise dot-separated decimal fields.
using StateKey = std::string;

StateKey encode_state(const CachePlacement& placement);
CachePlacement decode_state(const StateKey& key, const PlacementDims& dims);

/// Row-major rank of the placement in [0, F^(S*M)).
std::uint64_t placement_rank(const CachePlacement& placement);
CachePlacement placement_from_rank(std::uint64_t rank, const PlacementDims& dims);

/// F^(S*M), exact.
BigInt state_space_size(const PlacementDims& dims);

/// Action 2k adds one to slot k, 2k+1 subtracts one (both modulo F);
/// action 2*S*M is the no-op.
CachePlacement apply_action(const CachePlacement& placement, std::size_t action);

// ---- environment -----------------------------------------------------------

struct Evaluation {
  double sum_mos = 0.0;
  bool feasible = true;
};

/// One stationary MDP instance: scenario, fading and popularity frozen for
/// the trial. Memoizes evaluations by state, so it is owned by one run.
class CachingEnv {
 public:
  CachingEnv(NetworkScenario scenario, FadingRealization fading,
             std::vector<double> popularity, QoeParams qoe = {});

  const NetworkScenario& scenario() const { return scenario_; }
  const FadingRealization& fading() const { return fading_; }
  const std::vector<double>& popularity() const { return popularity_; }
  const QoeParams& qoe() const { return qoe_; }
  PlacementDims dims() const {
    return {scenario_.num_bs(), scenario_.cache_slots, scenario_.num_contents};
  }

  Evaluation evaluate(const CachePlacement& placement);
  double sum_mos(const CachePlacement& placement) { return evaluate(placement).sum_mos; }

  /// Placements scored without consulting the memo table.
  Evaluation evaluate_uncached(const CachePlacement& placement) const;

  std::size_t evaluations() const { return evaluations_; }
  std::size_t cache_size() const { return memo_.size(); }

 private:
  NetworkScenario scenario_;
  FadingRealization fading_;
  std::vector<double> popularity_;
  QoeParams qoe_;
  ChannelGains gains_;
  std::vector<std::size_t> association_;
  bool constraints_active_;
  std::unordered_map<StateKey, Evaluation> memo_;
  std::size_t evaluations_ = 0;
};

// ---- learning --------------------------------------------------------------

enum class RewardMode { kBinary, kShaped };

struct AgentConfig {
  double learning_rate = 0.75;  // Bellman step size
  double discount = 0.6;
  double epsilon = 0.1;         // epsilon-greedy baseline only
  std::uint32_t kappa = 10;
  std::size_t episodes = 10;
  std::size_t steps_per_episode = 1000;
  /// End an episode once the state has been unchanged this many steps; 0 disables.
  std::size_t stability_window = 500;
  bool infeasible_penalty = true;
  RewardMode reward_mode = RewardMode::kBinary;

  void validate() const;
};

/// Q table keyed by state; unvisited entries read as zero.
class QTable {
 public:
  explicit QTable(std::size_t num_actions) : num_actions_(num_actions) {}

  double get(const StateKey& s, std::size_t a) const;
  void set(const StateKey& s, std::size_t a, double v);
  double max_value(const StateKey& s) const;
  /// Lowest-index argmax; 0 for unvisited states.
  std::size_t greedy_action(const StateKey& s) const;

  std::size_t num_actions() const { return num_actions_; }
  std::size_t num_states() const { return rows_.size(); }
  const std::unordered_map<StateKey, std::vector<double>>& rows() const { return rows_; }

 private:
  std::size_t num_actions_;
  std::unordered_map<StateKey, std::vector<double>> rows_;
};

/// Environment response: 0 when the next state's MOS is at least the current
/// one (a reward), else 1. Infeasible next states are penalized when enabled.
int reward(double mos_prev, double mos_next, bool feasible_next, bool infeasible_penalty = true);

/// Reward consumed by the Bellman update: the success indicator 1 - r in
/// binary mode, the MOS difference in shaped mode.
double bellman_reward(int response, double mos_prev, double mos_next, RewardMode mode);

/// Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r_q + gamma max_a' Q(s',a')).
void q_update(QTable& q, const StateKey& s, std::size_t a, double r_q, const StateKey& s_next,
              const AgentConfig& config);

struct OpsCounter {
  std::uint64_t q_updates = 0;
  std::uint64_t la_updates = 0;
  std::uint64_t env_evaluations = 0;
};

struct CurvePoint {
  std::uint64_t iteration = 0;
  std::size_t action = 0;
  double reward = 0.0;    // Bellman reward of the step
  double sum_mos = 0.0;   // MOS of the state reached
  double best_sum_mos = 0.0;
};

enum class LearnerKind { kLaql, kEpsilonGreedy };

struct TrainOutcome {
  LearnerKind kind = LearnerKind::kLaql;
  QTable q_table{1};
  std::map<StateKey, PursuitAutomaton> automata;  // LAQL only
  CachePlacement best_placement;
  double best_sum_mos = 0.0;
  std::vector<CurvePoint> reward_curve;
  OpsCounter ops;
};

TrainOutcome train_laql(CachingEnv& env, const AgentConfig& config, std::uint64_t seed);
TrainOutcome train_qlearning(CachingEnv& env, const AgentConfig& config, std::uint64_t seed);

struct TestStageResult {
  CachePlacement initial;
  CachePlacement best;
  double best_sum_mos = 0.0;
  std::vector<double> mos_trace;  // MOS of every visited state, start included
};

/// Greedy roll-out with the trained selector (the state's automaton, or
/// argmax Q for the epsilon-greedy learner). States without an automaton
/// fall back to uniform selection. Starts from a random placement unless
/// `start` is given; returns the best placement encountered.
TestStageResult test_stage(const TrainOutcome& trained, CachingEnv& env, std::size_t iterations,
                           std::uint64_t seed,
                           const std::optional<CachePlacement>& start = std::nullopt);

/// Uniform random placement (each slot uniform over the library).
CachePlacement random_placement(const PlacementDims& dims, Rng& rng);

}  // namespace laql
