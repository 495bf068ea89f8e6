#pragma once

// Physical layer and QoE model for cooperative cache-enabled base stations:
// distances, cooperative SINR, per-user rate, page delay, MOS, the sum-MOS
// objective and the fronthaul / minimum-rate constraint checks.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "laql/rng.hpp"

namespace laql {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

/// Users closer than this to any BS are rejected (pathloss singularity).
inline constexpr double kMinLinkDistance = 1.0;

/// Geometry, radio parameters and capacity limits. All quantities in SI
/// units: meters, watts, hertz, bits per second.
struct NetworkScenario {
  std::vector<Point> bs_positions;
  std::vector<Point> user_positions;
  double tx_power_w = 0.1;
  double pathloss_exponent = 3.0;
  double noise_w = 3.1622776601683794e-13;
  double bandwidth_hz = 20e6;
  std::size_t cache_slots = 4;
  double fronthaul_max_bps = std::numeric_limits<double>::infinity();
  double min_rate_bps = 0.0;
  std::size_t num_contents = 10;

  std::size_t num_bs() const { return bs_positions.size(); }
  std::size_t num_users() const { return user_positions.size(); }

  /// Throws ConfigError / DomainError when an invariant does not hold,
  /// including any user closer than kMinLinkDistance to a BS.
  void validate() const;
};

/// M x S matrix of content indices (0-based), one row per BS.
class CachePlacement {
 public:
  CachePlacement() = default;
  CachePlacement(std::size_t num_bs, std::size_t slots, std::size_t num_contents,
                 std::vector<std::uint32_t> entries);

  /// All slots hold content 0.
  static CachePlacement zeros(std::size_t num_bs, std::size_t slots, std::size_t num_contents);
  /// Builds from 1-based rows, the notation used in the model description.
  static CachePlacement from_one_based(const std::vector<std::vector<std::uint32_t>>& rows,
                                       std::size_t num_contents);

  std::size_t num_bs() const { return num_bs_; }
  std::size_t slots() const { return slots_; }
  std::size_t num_contents() const { return num_contents_; }
  std::size_t size() const { return entries_.size(); }

  std::uint32_t at(std::size_t bs, std::size_t slot) const { return entries_[bs * slots_ + slot]; }
  void set(std::size_t bs, std::size_t slot, std::uint32_t content);

  std::span<const std::uint32_t> entries() const { return entries_; }
  std::span<const std::uint32_t> row(std::size_t bs) const {
    return std::span<const std::uint32_t>(entries_).subspan(bs * slots_, slots_);
  }

  std::string to_string() const;  // "[[1,2],[3,4]]", 1-based

  friend bool operator==(const CachePlacement&, const CachePlacement&) = default;

 private:
  std::size_t num_bs_ = 0;
  std::size_t slots_ = 0;
  std::size_t num_contents_ = 0;
  std::vector<std::uint32_t> entries_;
};

/// |h_mi| small-scale fading magnitudes, M x N_u.
class FadingRealization {
 public:
  enum class Mode { kExpectation, kRayleigh };

  /// Every magnitude equals 1.
  static FadingRealization expectation(std::size_t num_bs, std::size_t num_users);
  /// Rayleigh magnitudes with unit mean power, E|h|^2 = 1.
  static FadingRealization rayleigh(std::size_t num_bs, std::size_t num_users, Rng& rng);
  static FadingRealization from_values(std::size_t num_bs, std::size_t num_users,
                                       std::vector<double> magnitudes);

  double at(std::size_t bs, std::size_t user) const { return magnitudes_[bs * num_users_ + user]; }
  std::size_t num_bs() const { return num_bs_; }
  std::size_t num_users() const { return num_users_; }
  Mode mode() const { return mode_; }

 private:
  std::size_t num_bs_ = 0;
  std::size_t num_users_ = 0;
  Mode mode_ = Mode::kExpectation;
  std::vector<double> magnitudes_;
};

struct QoeParams {
  double rtt_s = 0.1;
  double page_size_bits = 1e6;
  double mss_bits = 11680.0;
  double c1 = 1.120;
  double c2 = 4.6746;
  double mos_min = 1.0;
  double mos_max = 5.0;
  double delay_floor_s = 1e-3;

  void validate() const;
};

struct DelayBreakdown {
  double l1 = 0.0;
  double l2 = 0.0;
  double l_effective = 0.0;
  double delay_s = 0.0;
};

struct FeasibilityReport {
  std::vector<double> per_bs_fronthaul_load;
  std::vector<double> per_user_rate;
  std::vector<bool> fronthaul_ok;
  std::vector<bool> min_rate_ok;
  bool feasible = true;
};

using BinaryMatrix = std::vector<std::vector<std::uint8_t>>;

/// Entry (m, f) is 1 iff content f appears in row m.
BinaryMatrix indicator_matrix(const CachePlacement& placement, std::size_t num_contents);

/// Per-link amplitudes sqrt(rho)|h| r^(-alpha/2) and powers rho|h|^2 r^(-alpha).
/// Precomputing these once per (scenario, fading) is what makes repeated
/// objective evaluations cheap.
class ChannelGains {
 public:
  ChannelGains(const NetworkScenario& scenario, const FadingRealization& fading);

  double amplitude(std::size_t bs, std::size_t user) const { return amp_[bs * users_ + user]; }
  double power(std::size_t bs, std::size_t user) const { return pow_[bs * users_ + user]; }
  std::size_t num_bs() const { return bs_; }
  std::size_t num_users() const { return users_; }
  double noise_w() const { return noise_; }

 private:
  std::size_t bs_;
  std::size_t users_;
  double noise_;
  std::vector<double> amp_;
  std::vector<double> pow_;
};

/// Cooperative SINR of user i for content f given the caching BS set.
double sinr(const ChannelGains& gains, const BinaryMatrix& indicator, std::size_t user,
            std::size_t content);
double sinr(const NetworkScenario& scenario, const CachePlacement& placement,
            const FadingRealization& fading, std::size_t user, std::size_t content);

double user_rate(const ChannelGains& gains, const BinaryMatrix& indicator,
                 std::span<const double> popularity, double bandwidth_hz, std::size_t user);
double user_rate(const NetworkScenario& scenario, const CachePlacement& placement,
                 const FadingRealization& fading, std::span<const double> popularity,
                 std::size_t user);

/// Throws DomainError for rate <= 0 (unreachable user).
DelayBreakdown page_delay(double rate_bps, const QoeParams& qoe);

/// Clamped to [mos_min, mos_max]; a zero rate scores mos_min.
double mos(double rate_bps, const QoeParams& qoe);

double sum_mos(const ChannelGains& gains, const BinaryMatrix& indicator,
               std::span<const double> popularity, double bandwidth_hz, const QoeParams& qoe);
double sum_mos(const NetworkScenario& scenario, const CachePlacement& placement,
               const FadingRealization& fading, std::span<const double> popularity,
               const QoeParams& qoe = {});

/// Index of the nearest BS for each user; ties go to the lowest BS index.
std::vector<std::size_t> associate_users(const NetworkScenario& scenario);

FeasibilityReport check_constraints(const NetworkScenario& scenario, const ChannelGains& gains,
                                    const BinaryMatrix& indicator,
                                    std::span<const double> popularity,
                                    std::span<const std::size_t> association);
FeasibilityReport check_constraints(const NetworkScenario& scenario,
                                    const CachePlacement& placement,
                                    const FadingRealization& fading,
                                    std::span<const double> popularity);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

}  // namespace laql
