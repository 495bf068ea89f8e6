#include "laql/baselines.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "laql/error.hpp"

namespace laql {

namespace {

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void number(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g;", v);
    bytes(buf, static_cast<std::size_t>(n));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::string fading_tag(const FadingRealization& fading) {
  if (fading.mode() == FadingRealization::Mode::kExpectation) return "expectation";
  Fnv1a h;
  for (std::size_t m = 0; m < fading.num_bs(); ++m) {
    for (std::size_t i = 0; i < fading.num_users(); ++i) h.number(fading.at(m, i));
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "rayleigh-%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

struct Candidate {
  std::uint64_t rank = 0;
  double score = -std::numeric_limits<double>::infinity();
};

}  // namespace

OracleResult optimal_exhaustive(const CachingEnv& env, std::uint64_t cap, std::size_t workers) {
  const PlacementDims dims = env.dims();
  const BigInt total_big = state_space_size(dims);
  if (total_big > cap) {
    std::ostringstream os;
    os << "exhaustive search over F^(S*M) = " << dims.num_contents << "^" << dims.num_slots()
       << " = " << total_big << " placements exceeds the enumeration cap " << cap;
    throw TooLargeError(os.str());
  }
  const auto total = static_cast<std::uint64_t>(total_big);
  workers = std::clamp<std::size_t>(workers, 1, static_cast<std::size_t>(std::max<std::uint64_t>(total, 1)));

  std::vector<Candidate> best(workers);
  auto scan = [&](std::size_t w) {
    const std::uint64_t lo = total * w / workers;
    const std::uint64_t hi = total * (w + 1) / workers;
    for (std::uint64_t r = lo; r < hi; ++r) {
      const double s = env.evaluate_uncached(placement_from_rank(r, dims)).sum_mos;
      if (s > best[w].score) best[w] = {r, s};
    }
  };
  if (workers == 1) {
    scan(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(scan, w);
    for (auto& t : pool) t.join();
  }
  // Ranges are ascending, so a strict comparison keeps the lowest rank on ties.
  Candidate winner = best.front();
  for (const auto& c : best) {
    if (c.score > winner.score) winner = c;
  }
  return {placement_from_rank(winner.rank, dims), winner.score, total};
}

CachePlacement non_cooperative(const PlacementDims& dims, std::span<const double> popularity) {
  if (popularity.size() != dims.num_contents) {
    throw ConfigError("popularity vector must have one entry per content");
  }
  if (dims.slots > dims.num_contents) throw ConfigError("non-cooperative caching needs S <= F");
  std::vector<std::uint32_t> order(dims.num_contents);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return popularity[a] > popularity[b]; });
  std::vector<std::uint32_t> entries;
  entries.reserve(dims.num_slots());
  for (std::size_t m = 0; m < dims.num_bs; ++m) {
    entries.insert(entries.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(dims.slots));
  }
  return CachePlacement(dims.num_bs, dims.slots, dims.num_contents, std::move(entries));
}

CachePlacement random_placement(const CachingEnv& env, Rng& rng) {
  return random_placement(env.dims(), rng);
}

OpsBudget ops_budget(std::uint64_t num_contents, std::uint64_t slots, std::uint64_t num_bs) {
  if (num_contents == 0 || slots == 0 || num_bs == 0) throw ConfigError("dimensions must be positive");
  OpsBudget b;
  const BigInt sm = BigInt(slots) * num_bs;
  b.optimal = boost::multiprecision::pow(BigInt(num_contents), static_cast<unsigned>(slots * num_bs));
  b.eps_greedy_q = BigInt(num_contents) * sm;
  b.laql = b.eps_greedy_q * 2 * sm;
  return b;
}

std::uint64_t scenario_hash(const NetworkScenario& sc, const QoeParams& qoe) {
  Fnv1a h;
  for (const auto& p : sc.bs_positions) {
    h.number(p.x);
    h.number(p.y);
  }
  h.bytes("|", 1);
  for (const auto& p : sc.user_positions) {
    h.number(p.x);
    h.number(p.y);
  }
  h.bytes("|", 1);
  for (double v : {sc.tx_power_w, sc.pathloss_exponent, sc.noise_w, sc.bandwidth_hz,
                   static_cast<double>(sc.cache_slots), sc.fronthaul_max_bps, sc.min_rate_bps,
                   static_cast<double>(sc.num_contents), qoe.rtt_s, qoe.page_size_bits, qoe.mss_bits,
                   qoe.c1, qoe.c2, qoe.mos_min, qoe.mos_max, qoe.delay_floor_s}) {
    h.number(v);
  }
  return h.value();
}

std::uint64_t popularity_hash(std::span<const double> popularity) {
  Fnv1a h;
  for (double v : popularity) h.number(v);
  return h.value();
}

OracleCache::OracleCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::istringstream is(line);
    std::string f[6];
    for (auto& s : f) {
      if (!std::getline(is, s, ',')) {
        throw ParseError(file_.string() + ":" + std::to_string(line_no) + ": malformed oracle cache row");
      }
    }
    try {
      entries_.push_back({std::stoull(f[0], nullptr, 16), std::stoull(f[1], nullptr, 16), f[2],
                          std::stod(f[3]), f[4], std::stoull(f[5])});
    } catch (const std::exception&) {
      throw ParseError(file_.string() + ":" + std::to_string(line_no) + ": malformed oracle cache row");
    }
  }
}

std::optional<OracleResult> OracleCache::find(const CachingEnv& env) const {
  const auto sh = scenario_hash(env.scenario(), env.qoe());
  const auto ph = popularity_hash(env.popularity());
  const auto tag = fading_tag(env.fading());
  for (const auto& e : entries_) {
    if (e.scenario == sh && e.popularity == ph && e.fading == tag) {
      return OracleResult{decode_state(e.placement_key, env.dims()), e.score, e.evaluations};
    }
  }
  return std::nullopt;
}

void OracleCache::store(const CachingEnv& env, const OracleResult& result) {
  entries_.push_back({scenario_hash(env.scenario(), env.qoe()), popularity_hash(env.popularity()),
                      fading_tag(env.fading()), result.score, encode_state(result.placement),
                      result.evaluations});
  std::ofstream out(file_, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write oracle cache " + file_.string());
  out << "scenario_hash,popularity_hash,fading_mode,score,placement,evaluations\n";
  char buf[64];
  for (const auto& e : entries_) {
    std::snprintf(buf, sizeof buf, "%016llx,%016llx,", static_cast<unsigned long long>(e.scenario),
                  static_cast<unsigned long long>(e.popularity));
    out << buf << e.fading << ',';
    std::snprintf(buf, sizeof buf, "%.17g", e.score);
    out << buf << ',' << e.placement_key << ',' << e.evaluations << '\n';
  }
}

}  // namespace laql
