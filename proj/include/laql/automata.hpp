#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "laql/rng.hpp"

namespace laql {

/// Discretized pursuit learning automaton.
///
/// Keeps an action-probability vector plus maximum-likelihood estimates of
/// each action's reward probability (u_i rewarded selections over v_i
/// selections). On a rewarded step every non-best action loses
/// delta = 1 / (n_actions * kappa) (floored at zero) and the best-estimated
/// action receives the exact complement, so the vector stays normalized.
/// Penalized steps leave the probabilities untouched.
///
/// Responses follow the environment convention: 0 means reward, 1 penalty.
class PursuitAutomaton {
 public:
  PursuitAutomaton(std::size_t n_actions, std::uint32_t kappa, double prior_u = 1.0,
                   double prior_v = 2.0);

  std::size_t n_actions() const { return probs_.size(); }
  std::uint32_t kappa() const { return kappa_; }
  double delta() const { return delta_; }

  std::span<const double> probs() const { return probs_; }
  std::span<const double> reward_counts() const { return u_; }
  std::span<const double> select_counts() const { return v_; }
  double estimate(std::size_t action) const { return u_[action] / v_[action]; }

  /// Inverse-CDF sampling from one uniform draw.
  std::size_t select(Rng& rng) const;

  void update(std::size_t chosen, int response);

  /// Action with probability >= threshold, if any.
  std::optional<std::size_t> converged(double threshold = 0.95) const;

  /// Lowest-index argmax of the reward estimates.
  std::size_t best_estimate() const;

  /// Replaces the probability vector (test fixtures, snapshots). Must be a
  /// valid distribution of the same length.
  void set_probs(std::vector<double> probs);

  /// One CSV row per action: action,prob,u,v.
  void write_csv_rows(std::ostream& os, std::string_view prefix) const;

 private:
  std::vector<double> probs_;
  std::vector<double> u_;
  std::vector<double> v_;
  std::uint32_t kappa_;
  double delta_;
};

}  // namespace laql
