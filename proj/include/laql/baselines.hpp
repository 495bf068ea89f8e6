#pragma once

// Reference placement policies: exhaustive optimum (also the test oracle),
// non-cooperative most-popular caching, random caching, and the
// per-method operation counts.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "laql/agents.hpp"

namespace laql {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

struct OracleResult {
  CachePlacement placement;
  double score = 0.0;
  std::uint64_t evaluations = 0;
};

/// Scores every placement and keeps the best, lowest rank winning ties.
/// Refuses with TooLargeError when F^(S*M) exceeds `cap`.
OracleResult optimal_exhaustive(const CachingEnv& env,
                                std::uint64_t cap = kDefaultEnumerationCap,
                                std::size_t workers = 1);

/// Every BS caches the top-S contents by popularity (ties: lower index).
CachePlacement non_cooperative(const PlacementDims& dims, std::span<const double> popularity);

CachePlacement random_placement(const CachingEnv& env, Rng& rng);

struct OpsBudget {
  BigInt optimal;       // F^(SM)
  BigInt eps_greedy_q;  // F*S*M
  BigInt laql;          // F*S*M * 2*S*M
};

OpsBudget ops_budget(std::uint64_t num_contents, std::uint64_t slots, std::uint64_t num_bs);

/// Stable 64-bit digests used to key cached oracle results.
std::uint64_t scenario_hash(const NetworkScenario& scenario, const QoeParams& qoe);
std::uint64_t popularity_hash(std::span<const double> popularity);

/// CSV-backed cache of exhaustive results, keyed by
/// (scenario hash, popularity hash, fading mode).
class OracleCache {
 public:
  explicit OracleCache(std::filesystem::path file);

  std::optional<OracleResult> find(const CachingEnv& env) const;
  void store(const CachingEnv& env, const OracleResult& result);

 private:
  struct Entry {
    std::uint64_t scenario;
    std::uint64_t popularity;
    std::string fading;
    double score;
    std::string placement_key;
    std::uint64_t evaluations;
  };
  std::filesystem::path file_;
  std::vector<Entry> entries_;
};

}  // namespace laql
