#include "laql/automata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "laql/error.hpp"

namespace laql {

PursuitAutomaton::PursuitAutomaton(std::size_t n_actions, std::uint32_t kappa, double prior_u,
                                   double prior_v)
    : probs_(n_actions, n_actions ? 1.0 / static_cast<double>(n_actions) : 0.0),
      u_(n_actions, prior_u),
      v_(n_actions, prior_v),
      kappa_(kappa),
      delta_(0.0) {
  if (n_actions < 2) throw ConfigError("automaton needs at least 2 actions");
  if (kappa < 1) throw ConfigError("automaton resolution kappa must be >= 1");
  if (!(prior_v > 0.0) || prior_u < 0.0 || prior_u > prior_v) {
    throw ConfigError("automaton priors must satisfy 0 <= u <= v, v > 0");
  }
  delta_ = 1.0 / (static_cast<double>(n_actions) * static_cast<double>(kappa));
}

std::size_t PursuitAutomaton::select(Rng& rng) const {
  const double draw = rng.uniform();
  double cdf = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (probs_[i] <= 0.0) continue;
    last_positive = i;
    cdf += probs_[i];
    if (draw < cdf) return i;
  }
  // Rounding left the cumulative sum a hair below 1.
  return last_positive;
}

std::size_t PursuitAutomaton::best_estimate() const {
  std::size_t best = 0;
  double best_d = estimate(0);
  for (std::size_t i = 1; i < probs_.size(); ++i) {
    const double d = estimate(i);
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

void PursuitAutomaton::update(std::size_t chosen, int response) {
  if (chosen >= probs_.size()) {
    throw ConfigError("action " + std::to_string(chosen) + " out of range for " +
                      std::to_string(probs_.size()) + " actions");
  }
  if (response != 0 && response != 1) throw ConfigError("automaton response must be 0 or 1");

  u_[chosen] += static_cast<double>(1 - response);
  v_[chosen] += 1.0;
  if (response == 1) return;

  const std::size_t h = best_estimate();
  double others = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (i == h) continue;
    probs_[i] = std::max(probs_[i] - delta_, 0.0);
    others += probs_[i];
  }
  probs_[h] = 1.0 - others;
}

std::optional<std::size_t> PursuitAutomaton::converged(double threshold) const {
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (probs_[i] >= threshold && probs_[i] > 0.0) return i;
  }
  return std::nullopt;
}

void PursuitAutomaton::set_probs(std::vector<double> probs) {
  if (probs.size() != probs_.size()) throw ConfigError("probability vector length mismatch");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw ConfigError("probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("probabilities must sum to 1");
  probs_ = std::move(probs);
}

void PursuitAutomaton::write_csv_rows(std::ostream& os, std::string_view prefix) const {
  char buf[96];
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.17g,%.17g\n", i, probs_[i], u_[i], v_[i]);
    os << prefix << buf;
  }
}

}  // namespace laql
