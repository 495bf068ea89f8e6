#pragma once

#include <cstdint>

#include "laql/agents.hpp"
#include "laql/demand.hpp"

namespace laql::testing {

/// F contents, two BSs at the grid sites of a 4 km square, users uniform
/// over the square, Zipf(0.8) popularity, expectation fading.
inline CachingEnv small_env(std::size_t num_contents, std::size_t slots, std::uint64_t seed,
                            std::size_t num_users = 20, std::size_t num_bs = 2) {
  NetworkScenario sc;
  for (std::size_t m = 0; m < num_bs; ++m) {
    sc.bs_positions.push_back({(static_cast<double>(m) + 0.5) * 4000.0 / static_cast<double>(num_bs), 2000.0});
  }
  Rng rng(seed);
  while (sc.user_positions.size() < num_users) {
    const Point p{rng.uniform() * 4000.0, rng.uniform() * 4000.0};
    bool ok = true;
    for (const Point& b : sc.bs_positions) ok = ok && distance(p, b) >= 1.0;
    if (ok) sc.user_positions.push_back(p);
  }
  sc.cache_slots = slots;
  sc.num_contents = num_contents;
  return CachingEnv(sc, FadingRealization::expectation(num_bs, num_users), zipf_popularity(num_contents));
}

}  // namespace laql::testing
