#include "laql/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string_view>

#include "laql/error.hpp"

namespace laql {

namespace {

constexpr std::string_view kDigits =
    "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

int digit_value(char c) {
  const auto pos = kDigits.find(c);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

// Every stored Q value must stay inside [0, 1/(1-gamma)] in binary mode.
void check_q_bounds(const QTable& q, double discount) {
  const double hi = 1.0 / (1.0 - discount) + 1e-9;
  for (const auto& [key, row] : q.rows()) {
    for (double v : row) {
      if (!std::isfinite(v) || v < -1e-12 || v > hi) {
        throw std::logic_error("Q value " + std::to_string(v) + " at state " + key +
                               " outside [0, 1/(1-gamma)]");
      }
    }
  }
}

struct StepResult {
  CachePlacement next;
  Evaluation eval;
  int response = 0;
  double r_q = 0.0;
};

StepResult step(CachingEnv& env, const CachePlacement& s, const Evaluation& s_eval,
                std::size_t action, const AgentConfig& cfg) {
  StepResult out{apply_action(s, action), {}, 0, 0.0};
  out.eval = env.evaluate(out.next);
  out.response = reward(s_eval.sum_mos, out.eval.sum_mos, out.eval.feasible, cfg.infeasible_penalty);
  out.r_q = bellman_reward(out.response, s_eval.sum_mos, out.eval.sum_mos, cfg.reward_mode);
  return out;
}

// Shared training loop; `choose` picks an action for the current state and
// `observe` lets the learner react to the environment's response.
template <typename Choose, typename Observe>
TrainOutcome run_training(CachingEnv& env, const AgentConfig& cfg, Rng& rng, LearnerKind kind,
                          Choose&& choose, Observe&& observe, TrainOutcome out) {
  cfg.validate();
  const PlacementDims dims = env.dims();
  out.kind = kind;
  out.q_table = QTable(dims.num_actions());
  out.best_sum_mos = -std::numeric_limits<double>::infinity();
  out.reward_curve.reserve(cfg.episodes * cfg.steps_per_episode);

  std::uint64_t iteration = 0;
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    CachePlacement s = random_placement(dims, rng);
    StateKey s_key = encode_state(s);
    Evaluation s_eval = env.evaluate(s);
    if (s_eval.sum_mos > out.best_sum_mos) {
      out.best_sum_mos = s_eval.sum_mos;
      out.best_placement = s;
    }

    std::size_t unchanged = 0;
    for (std::size_t t = 0; t < cfg.steps_per_episode; ++t) {
      const std::size_t a = choose(out, s_key);
      StepResult r = step(env, s, s_eval, a, cfg);
      StateKey next_key = encode_state(r.next);

      observe(out, s_key, a, r.response);
      q_update(out.q_table, s_key, a, r.r_q, next_key, cfg);
      ++out.ops.q_updates;
      ++iteration;
      if (cfg.reward_mode == RewardMode::kBinary && out.ops.q_updates % 1000 == 0) {
        check_q_bounds(out.q_table, cfg.discount);
      }

      if (r.eval.sum_mos > out.best_sum_mos) {
        out.best_sum_mos = r.eval.sum_mos;
        out.best_placement = r.next;
      }
      out.reward_curve.push_back({iteration, a, r.r_q, r.eval.sum_mos, out.best_sum_mos});

      unchanged = next_key == s_key ? unchanged + 1 : 0;
      s = std::move(r.next);
      s_key = std::move(next_key);
      s_eval = r.eval;
      if (cfg.stability_window > 0 && unchanged >= cfg.stability_window) break;
    }
  }
  out.ops.env_evaluations = env.evaluations();
  return out;
}

}  // namespace

PlacementDims dims_of(const CachePlacement& p) {
  return {p.num_bs(), p.slots(), p.num_contents()};
}

StateKey encode_state(const CachePlacement& placement) {
  StateKey key;
  if (placement.num_contents() <= kDigits.size()) {
    key.reserve(placement.size());
    for (auto c : placement.entries()) key.push_back(kDigits[c]);
  } else {
    for (std::size_t k = 0; k < placement.size(); ++k) {
      if (k) key.push_back('.');
      key += std::to_string(placement.entries()[k]);
    }
  }
  return key;
}

CachePlacement decode_state(const StateKey& key, const PlacementDims& dims) {
  std::vector<std::uint32_t> entries;
  entries.reserve(dims.num_slots());
  if (dims.num_contents <= kDigits.size()) {
    for (char c : key) {
      const int v = digit_value(c);
      if (v < 0 || static_cast<std::size_t>(v) >= dims.num_contents) {
        throw ParseError("malformed state key '" + key + "'");
      }
      entries.push_back(static_cast<std::uint32_t>(v));
    }
  } else {
    std::size_t pos = 0;
    while (pos <= key.size()) {
      const auto dot = std::min(key.find('.', pos), key.size());
      const std::string field = key.substr(pos, dot - pos);
      if (field.empty() || field.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError("malformed state key '" + key + "'");
      }
      const auto v = std::stoull(field);
      if (v >= dims.num_contents) throw ParseError("malformed state key '" + key + "'");
      entries.push_back(static_cast<std::uint32_t>(v));
      pos = dot + 1;
    }
  }
  if (entries.size() != dims.num_slots()) {
    throw ParseError("state key '" + key + "' has " + std::to_string(entries.size()) +
                     " slots, expected " + std::to_string(dims.num_slots()));
  }
  return CachePlacement(dims.num_bs, dims.slots, dims.num_contents, std::move(entries));
}

std::uint64_t placement_rank(const CachePlacement& placement) {
  if (state_space_size(dims_of(placement)) > std::numeric_limits<std::uint64_t>::max()) {
    throw TooLargeError("state space does not fit a 64-bit rank");
  }
  std::uint64_t rank = 0;
  for (auto c : placement.entries()) rank = rank * placement.num_contents() + c;
  return rank;
}

CachePlacement placement_from_rank(std::uint64_t rank, const PlacementDims& dims) {
  std::vector<std::uint32_t> entries(dims.num_slots());
  for (std::size_t k = entries.size(); k-- > 0;) {
    entries[k] = static_cast<std::uint32_t>(rank % dims.num_contents);
    rank /= dims.num_contents;
  }
  if (rank != 0) throw ConfigError("rank outside the state space");
  return CachePlacement(dims.num_bs, dims.slots, dims.num_contents, std::move(entries));
}

BigInt state_space_size(const PlacementDims& dims) {
  BigInt n = 1;
  for (std::size_t k = 0; k < dims.num_slots(); ++k) n *= dims.num_contents;
  return n;
}

CachePlacement apply_action(const CachePlacement& placement, std::size_t action) {
  const PlacementDims dims = dims_of(placement);
  if (action >= dims.num_actions()) {
    throw ConfigError("action " + std::to_string(action) + " outside [0, " +
                      std::to_string(dims.num_actions()) + ")");
  }
  if (action == dims.noop_action()) return placement;
  const std::size_t slot = action / 2;
  const std::size_t bs = slot / dims.slots;
  const std::size_t k = slot % dims.slots;
  const auto f = static_cast<std::uint32_t>(dims.num_contents);
  const std::uint32_t cur = placement.at(bs, k);
  CachePlacement next = placement;
  next.set(bs, k, action % 2 == 0 ? (cur + 1) % f : (cur + f - 1) % f);
  return next;
}

CachePlacement random_placement(const PlacementDims& dims, Rng& rng) {
  std::vector<std::uint32_t> entries(dims.num_slots());
  for (auto& e : entries) e = static_cast<std::uint32_t>(rng.index(dims.num_contents));
  return CachePlacement(dims.num_bs, dims.slots, dims.num_contents, std::move(entries));
}

// ---- environment -----------------------------------------------------------

CachingEnv::CachingEnv(NetworkScenario scenario, FadingRealization fading,
                       std::vector<double> popularity, QoeParams qoe)
    : scenario_(std::move(scenario)),
      fading_(std::move(fading)),
      popularity_(std::move(popularity)),
      qoe_(qoe),
      gains_((scenario_.validate(), qoe_.validate(), ChannelGains(scenario_, fading_))),
      association_(associate_users(scenario_)),
      constraints_active_(std::isfinite(scenario_.fronthaul_max_bps) ||
                          scenario_.min_rate_bps > 0.0) {
  if (popularity_.size() != scenario_.num_contents) {
    throw ConfigError("popularity vector must have one entry per content");
  }
}

Evaluation CachingEnv::evaluate_uncached(const CachePlacement& placement) const {
  if (dims_of(placement) != dims()) throw ConfigError("placement does not match environment");
  const BinaryMatrix x = indicator_matrix(placement, scenario_.num_contents);
  Evaluation e;
  e.sum_mos = laql::sum_mos(gains_, x, popularity_, scenario_.bandwidth_hz, qoe_);
  if (constraints_active_) {
    e.feasible = check_constraints(scenario_, gains_, x, popularity_, association_).feasible;
  }
  return e;
}

Evaluation CachingEnv::evaluate(const CachePlacement& placement) {
  StateKey key = encode_state(placement);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  const Evaluation e = evaluate_uncached(placement);
  ++evaluations_;
  memo_.emplace(std::move(key), e);
  return e;
}

// ---- learning --------------------------------------------------------------

void AgentConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate < 1.0)) throw ConfigError("agent learning rate must be in (0,1)");
  if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("discount must be in (0,1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0,1]");
  if (kappa < 1) throw ConfigError("kappa must be >= 1");
}

double QTable::get(const StateKey& s, std::size_t a) const {
  auto it = rows_.find(s);
  return it == rows_.end() ? 0.0 : it->second[a];
}

void QTable::set(const StateKey& s, std::size_t a, double v) {
  auto [it, inserted] = rows_.try_emplace(s, num_actions_, 0.0);
  it->second[a] = v;
}

double QTable::max_value(const StateKey& s) const {
  auto it = rows_.find(s);
  if (it == rows_.end()) return 0.0;
  return *std::max_element(it->second.begin(), it->second.end());
}

std::size_t QTable::greedy_action(const StateKey& s) const {
  auto it = rows_.find(s);
  if (it == rows_.end()) return 0;
  return static_cast<std::size_t>(std::max_element(it->second.begin(), it->second.end()) -
                                  it->second.begin());
}

int reward(double mos_prev, double mos_next, bool feasible_next, bool infeasible_penalty) {
  if (infeasible_penalty && !feasible_next) return 1;
  return mos_next >= mos_prev ? 0 : 1;
}

double bellman_reward(int response, double mos_prev, double mos_next, RewardMode mode) {
  return mode == RewardMode::kBinary ? static_cast<double>(1 - response) : mos_next - mos_prev;
}

void q_update(QTable& q, const StateKey& s, std::size_t a, double r_q, const StateKey& s_next,
              const AgentConfig& config) {
  const double target = r_q + config.discount * q.max_value(s_next);
  const double old = q.get(s, a);
  q.set(s, a, (1.0 - config.learning_rate) * old + config.learning_rate * target);
}

TrainOutcome train_laql(CachingEnv& env, const AgentConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n_actions = env.dims().num_actions();
  auto automaton_for = [&](TrainOutcome& out, const StateKey& s) -> PursuitAutomaton& {
    return out.automata.try_emplace(s, n_actions, config.kappa).first->second;
  };
  auto choose = [&](TrainOutcome& out, const StateKey& s) {
    return automaton_for(out, s).select(rng);
  };
  auto observe = [&](TrainOutcome& out, const StateKey& s, std::size_t a, int response) {
    automaton_for(out, s).update(a, response);
    ++out.ops.la_updates;
  };
  return run_training(env, config, rng, LearnerKind::kLaql, choose, observe, TrainOutcome{});
}

TrainOutcome train_qlearning(CachingEnv& env, const AgentConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n_actions = env.dims().num_actions();
  auto choose = [&](TrainOutcome& out, const StateKey& s) {
    if (rng.uniform() < config.epsilon) return rng.index(n_actions);
    return out.q_table.greedy_action(s);
  };
  auto observe = [](TrainOutcome&, const StateKey&, std::size_t, int) {};
  return run_training(env, config, rng, LearnerKind::kEpsilonGreedy, choose, observe,
                      TrainOutcome{});
}

TestStageResult test_stage(const TrainOutcome& trained, CachingEnv& env, std::size_t iterations,
                           std::uint64_t seed, const std::optional<CachePlacement>& start) {
  Rng rng(seed);
  const PlacementDims dims = env.dims();
  TestStageResult res;
  res.initial = start ? *start : random_placement(dims, rng);
  CachePlacement s = res.initial;
  double s_mos = env.sum_mos(s);
  res.best = s;
  res.best_sum_mos = s_mos;
  res.mos_trace.push_back(s_mos);

  for (std::size_t it = 0; it < iterations; ++it) {
    const StateKey key = encode_state(s);
    std::size_t a = 0;
    if (trained.kind == LearnerKind::kLaql) {
      auto la = trained.automata.find(key);
      a = la != trained.automata.end() ? la->second.select(rng) : rng.index(dims.num_actions());
    } else {
      a = trained.q_table.greedy_action(key);
    }
    s = apply_action(s, a);
    s_mos = env.sum_mos(s);
    res.mos_trace.push_back(s_mos);
    if (s_mos > res.best_sum_mos) {
      res.best_sum_mos = s_mos;
      res.best = s;
    }
  }
  return res;
}

}  // namespace laql
