#include "laql/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "laql/error.hpp"

namespace laql {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

void NetworkScenario::validate() const {
  if (bs_positions.empty()) throw ConfigError("scenario needs at least one BS");
  if (user_positions.empty()) throw ConfigError("scenario needs at least one user");
  if (num_contents == 0) throw ConfigError("scenario needs at least one content");
  if (cache_slots == 0) throw ConfigError("cache_slots must be positive");
  if (!(pathloss_exponent >= 2.0)) throw ConfigError("pathloss exponent must be >= 2");
  if (!(tx_power_w > 0.0) || !(noise_w > 0.0)) throw ConfigError("powers must be positive");
  if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
  if (!(fronthaul_max_bps > 0.0)) throw ConfigError("fronthaul capacity must be positive");
  if (!(min_rate_bps >= 0.0)) throw ConfigError("minimum rate must be non-negative");
  // Total cache size may not exceed the library size (unit-size contents).
  if (cache_slots * num_bs() > num_contents) {
    throw ConfigError("total cache capacity " + std::to_string(cache_slots * num_bs()) +
                      " exceeds library size " + std::to_string(num_contents));
  }
  for (std::size_t i = 0; i < user_positions.size(); ++i) {
    const Point u = user_positions[i];
    if (!std::isfinite(u.x) || !std::isfinite(u.y)) {
      throw DomainError("user " + std::to_string(i) + " has a non-finite position");
    }
    for (std::size_t m = 0; m < bs_positions.size(); ++m) {
      if (distance(u, bs_positions[m]) < kMinLinkDistance) {
        throw DomainError("user " + std::to_string(i) + " is within " +
                          std::to_string(kMinLinkDistance) + " m of BS " + std::to_string(m));
      }
    }
  }
}

CachePlacement::CachePlacement(std::size_t num_bs, std::size_t slots, std::size_t num_contents,
                               std::vector<std::uint32_t> entries)
    : num_bs_(num_bs), slots_(slots), num_contents_(num_contents), entries_(std::move(entries)) {
  if (num_bs == 0 || slots == 0 || num_contents == 0) {
    throw ConfigError("placement dimensions must be positive");
  }
  if (entries_.size() != num_bs * slots) {
    throw ConfigError("placement has " + std::to_string(entries_.size()) + " entries, expected " +
                      std::to_string(num_bs * slots));
  }
  for (auto e : entries_) {
    if (e >= num_contents) {
      throw ConfigError("content index " + std::to_string(e + 1) + " outside [1, " +
                        std::to_string(num_contents) + "]");
    }
  }
}

CachePlacement CachePlacement::zeros(std::size_t num_bs, std::size_t slots,
                                     std::size_t num_contents) {
  return CachePlacement(num_bs, slots, num_contents,
                        std::vector<std::uint32_t>(num_bs * slots, 0));
}

CachePlacement CachePlacement::from_one_based(const std::vector<std::vector<std::uint32_t>>& rows,
                                              std::size_t num_contents) {
  if (rows.empty()) throw ConfigError("placement needs at least one row");
  const std::size_t slots = rows.front().size();
  std::vector<std::uint32_t> entries;
  entries.reserve(rows.size() * slots);
  for (const auto& r : rows) {
    if (r.size() != slots) throw ConfigError("ragged placement rows");
    for (auto v : r) {
      if (v == 0) throw ConfigError("1-based content index must be >= 1");
      entries.push_back(v - 1);
    }
  }
  return CachePlacement(rows.size(), slots, num_contents, std::move(entries));
}

void CachePlacement::set(std::size_t bs, std::size_t slot, std::uint32_t content) {
  if (content >= num_contents_) throw ConfigError("content index out of range");
  entries_[bs * slots_ + slot] = content;
}

std::string CachePlacement::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t m = 0; m < num_bs_; ++m) {
    if (m) os << ',';
    os << '[';
    for (std::size_t k = 0; k < slots_; ++k) {
      if (k) os << ',';
      os << at(m, k) + 1;
    }
    os << ']';
  }
  os << ']';
  return os.str();
}

FadingRealization FadingRealization::expectation(std::size_t num_bs, std::size_t num_users) {
  FadingRealization f;
  f.num_bs_ = num_bs;
  f.num_users_ = num_users;
  f.mode_ = Mode::kExpectation;
  f.magnitudes_.assign(num_bs * num_users, 1.0);
  return f;
}

FadingRealization FadingRealization::rayleigh(std::size_t num_bs, std::size_t num_users,
                                              Rng& rng) {
  FadingRealization f;
  f.num_bs_ = num_bs;
  f.num_users_ = num_users;
  f.mode_ = Mode::kRayleigh;
  f.magnitudes_.resize(num_bs * num_users);
  for (auto& h : f.magnitudes_) {
    // |h|^2 ~ Exp(1)
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    h = std::sqrt(-std::log(u));
  }
  return f;
}

FadingRealization FadingRealization::from_values(std::size_t num_bs, std::size_t num_users,
                                                 std::vector<double> magnitudes) {
  if (magnitudes.size() != num_bs * num_users) throw ConfigError("fading matrix size mismatch");
  for (double h : magnitudes) {
    if (!(h >= 0.0) || !std::isfinite(h)) throw ConfigError("fading magnitudes must be >= 0");
  }
  FadingRealization f;
  f.num_bs_ = num_bs;
  f.num_users_ = num_users;
  f.mode_ = Mode::kRayleigh;
  f.magnitudes_ = std::move(magnitudes);
  return f;
}

void QoeParams::validate() const {
  if (!(rtt_s > 0.0) || !(page_size_bits > 0.0) || !(mss_bits > 0.0) || !(delay_floor_s > 0.0)) {
    throw ConfigError("QoE rtt, page size, mss and delay floor must be positive");
  }
  if (!(c1 > 0.0)) throw ConfigError("QoE c1 must be positive");
  if (!(mos_min < mos_max)) throw ConfigError("QoE mos_min must be below mos_max");
}

BinaryMatrix indicator_matrix(const CachePlacement& placement, std::size_t num_contents) {
  BinaryMatrix x(placement.num_bs(), std::vector<std::uint8_t>(num_contents, 0));
  for (std::size_t m = 0; m < placement.num_bs(); ++m) {
    for (auto c : placement.row(m)) {
      if (c >= num_contents) throw ConfigError("placement content outside library");
      x[m][c] = 1;
    }
  }
  return x;
}

ChannelGains::ChannelGains(const NetworkScenario& scenario, const FadingRealization& fading)
    : bs_(scenario.num_bs()), users_(scenario.num_users()), noise_(scenario.noise_w) {
  if (fading.num_bs() != bs_ || fading.num_users() != users_) {
    throw ConfigError("fading realization does not match scenario dimensions");
  }
  amp_.resize(bs_ * users_);
  pow_.resize(bs_ * users_);
  const double sqrt_rho = std::sqrt(scenario.tx_power_w);
  for (std::size_t m = 0; m < bs_; ++m) {
    for (std::size_t i = 0; i < users_; ++i) {
      const double r = distance(scenario.bs_positions[m], scenario.user_positions[i]);
      if (r < kMinLinkDistance) {
        throw DomainError("user " + std::to_string(i) + " co-located with BS " +
                          std::to_string(m) + " (pathloss singular)");
      }
      const double a = sqrt_rho * fading.at(m, i) * std::pow(r, -scenario.pathloss_exponent / 2.0);
      amp_[m * users_ + i] = a;
      pow_[m * users_ + i] = a * a;
    }
  }
}

double sinr(const ChannelGains& gains, const BinaryMatrix& indicator, std::size_t user,
            std::size_t content) {
  double coherent = 0.0;
  double interference = 0.0;
  bool any = false;
  for (std::size_t m = 0; m < gains.num_bs(); ++m) {
    if (indicator[m][content]) {
      coherent += gains.amplitude(m, user);
      any = true;
    } else {
      interference += gains.power(m, user);
    }
  }
  if (!any) return 0.0;
  return coherent * coherent / (interference + gains.noise_w());
}

double sinr(const NetworkScenario& scenario, const CachePlacement& placement,
            const FadingRealization& fading, std::size_t user, std::size_t content) {
  if (user >= scenario.num_users()) throw ConfigError("user index out of range");
  if (content >= scenario.num_contents) throw ConfigError("content index out of range");
  const ChannelGains gains(scenario, fading);
  return sinr(gains, indicator_matrix(placement, scenario.num_contents), user, content);
}

double user_rate(const ChannelGains& gains, const BinaryMatrix& indicator,
                 std::span<const double> popularity, double bandwidth_hz, std::size_t user) {
  double acc = 0.0;
  for (std::size_t f = 0; f < popularity.size(); ++f) {
    std::size_t holders = 0;
    for (std::size_t m = 0; m < gains.num_bs(); ++m) holders += indicator[m][f];
    if (holders == 0) continue;
    // Every caching BS contributes one term with the cooperative SINR.
    acc += popularity[f] * static_cast<double>(holders) *
           std::log2(1.0 + sinr(gains, indicator, user, f));
  }
  return bandwidth_hz * acc;
}

double user_rate(const NetworkScenario& scenario, const CachePlacement& placement,
                 const FadingRealization& fading, std::span<const double> popularity,
                 std::size_t user) {
  if (popularity.size() != scenario.num_contents) {
    throw ConfigError("popularity vector must have one entry per content");
  }
  if (user >= scenario.num_users()) throw ConfigError("user index out of range");
  const ChannelGains gains(scenario, fading);
  return user_rate(gains, indicator_matrix(placement, scenario.num_contents), popularity,
                   scenario.bandwidth_hz, user);
}

DelayBreakdown page_delay(double rate_bps, const QoeParams& qoe) {
  if (!(rate_bps > 0.0)) throw DomainError("page delay undefined for non-positive rate (unreachable user)");
  DelayBreakdown d;
  d.l1 = std::log2(rate_bps * qoe.rtt_s / qoe.mss_bits + 1.0) - 1.0;
  d.l2 = std::log2(qoe.page_size_bits / (2.0 * qoe.mss_bits) + 1.0) - 1.0;
  d.l_effective = std::max(0.0, std::min(d.l1, d.l2));
  const double l = d.l_effective;
  const double raw = 3.0 * qoe.rtt_s + qoe.page_size_bits / rate_bps +
                     l * (qoe.mss_bits / rate_bps + qoe.rtt_s) -
                     2.0 * qoe.mss_bits * (std::exp2(l) - 1.0) / rate_bps;
  d.delay_s = std::max(qoe.delay_floor_s, raw);
  return d;
}

double mos(double rate_bps, const QoeParams& qoe) {
  if (rate_bps < 0.0 || std::isnan(rate_bps)) throw DomainError("rate must be non-negative");
  if (rate_bps == 0.0) return qoe.mos_min;
  const double raw = -qoe.c1 * std::log(page_delay(rate_bps, qoe).delay_s) + qoe.c2;
  return std::clamp(raw, qoe.mos_min, qoe.mos_max);
}

double sum_mos(const ChannelGains& gains, const BinaryMatrix& indicator,
               std::span<const double> popularity, double bandwidth_hz, const QoeParams& qoe) {
  double total = 0.0;
  for (std::size_t i = 0; i < gains.num_users(); ++i) {
    total += mos(user_rate(gains, indicator, popularity, bandwidth_hz, i), qoe);
  }
  return total;
}

double sum_mos(const NetworkScenario& scenario, const CachePlacement& placement,
               const FadingRealization& fading, std::span<const double> popularity,
               const QoeParams& qoe) {
  if (popularity.size() != scenario.num_contents) {
    throw ConfigError("popularity vector must have one entry per content");
  }
  const ChannelGains gains(scenario, fading);
  return sum_mos(gains, indicator_matrix(placement, scenario.num_contents), popularity,
                 scenario.bandwidth_hz, qoe);
}

std::vector<std::size_t> associate_users(const NetworkScenario& scenario) {
  std::vector<std::size_t> out(scenario.num_users(), 0);
  for (std::size_t i = 0; i < scenario.num_users(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < scenario.num_bs(); ++m) {
      const double r = distance(scenario.user_positions[i], scenario.bs_positions[m]);
      if (r < best) {
        best = r;
        out[i] = m;
      }
    }
  }
  return out;
}

FeasibilityReport check_constraints(const NetworkScenario& scenario, const ChannelGains& gains,
                                    const BinaryMatrix& indicator,
                                    std::span<const double> popularity,
                                    std::span<const std::size_t> association) {
  const std::size_t num_bs = gains.num_bs();
  const std::size_t num_users = gains.num_users();
  FeasibilityReport rep;
  rep.per_bs_fronthaul_load.assign(num_bs, 0.0);
  rep.per_user_rate.assign(num_users, 0.0);

  std::vector<double> log_sinr(popularity.size());
  for (std::size_t i = 0; i < num_users; ++i) {
    for (std::size_t f = 0; f < popularity.size(); ++f) {
      log_sinr[f] = std::log2(1.0 + sinr(gains, indicator, i, f));
    }
    double rate = 0.0;
    double own_load = 0.0;
    const std::size_t home = association[i];
    for (std::size_t f = 0; f < popularity.size(); ++f) {
      for (std::size_t m = 0; m < num_bs; ++m) {
        if (!indicator[m][f]) continue;
        rate += popularity[f] * log_sinr[f];
        if (m == home) own_load += popularity[f] * log_sinr[f];
      }
    }
    rep.per_user_rate[i] = scenario.bandwidth_hz * rate;
    rep.per_bs_fronthaul_load[home] += scenario.bandwidth_hz * own_load;
  }

  rep.fronthaul_ok.resize(num_bs);
  rep.min_rate_ok.resize(num_users);
  rep.feasible = true;
  for (std::size_t m = 0; m < num_bs; ++m) {
    rep.fronthaul_ok[m] = rep.per_bs_fronthaul_load[m] <= scenario.fronthaul_max_bps;
    rep.feasible = rep.feasible && rep.fronthaul_ok[m];
  }
  for (std::size_t i = 0; i < num_users; ++i) {
    rep.min_rate_ok[i] = rep.per_user_rate[i] >= scenario.min_rate_bps;
    rep.feasible = rep.feasible && rep.min_rate_ok[i];
  }
  return rep;
}

FeasibilityReport check_constraints(const NetworkScenario& scenario,
                                    const CachePlacement& placement,
                                    const FadingRealization& fading,
                                    std::span<const double> popularity) {
  if (popularity.size() != scenario.num_contents) {
    throw ConfigError("popularity vector must have one entry per content");
  }
  const ChannelGains gains(scenario, fading);
  const auto assoc = associate_users(scenario);
  return check_constraints(scenario, gains, indicator_matrix(placement, scenario.num_contents),
                           popularity, assoc);
}

}  // namespace laql
