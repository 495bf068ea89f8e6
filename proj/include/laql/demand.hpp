#pragma once

// Exogenous processes: user mobility and content popularity. Generates
// synthetic traces, ingests GPS CSV files and windows series into
// supervised samples for the predictor.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "laql/netmodel.hpp"
#include "laql/rng.hpp"

namespace laql {

struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 4000.0;
  double y_max = 4000.0;

  bool contains(Point p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
};

/// Mobility time step: 12 positions per hour.
inline constexpr double kMobilityStepSeconds = 300.0;
inline constexpr double kPopularityFloor = 1e-4;

struct TrajectorySample {
  double t = 0.0;
  Point pos;
};

struct Trajectory {
  enum class Source { kSynthetic, kGpsCsv };

  std::vector<TrajectorySample> samples;
  Source source = Source::kSynthetic;

  std::size_t size() const { return samples.size(); }
};

using PopularityVector = std::vector<double>;

struct PopularitySeries {
  std::vector<PopularityVector> steps;
};

/// Gaussian step per axis, reflected back into `bounds`.
Point random_walk_step(Point pos, double step_sigma, const Rect& bounds, Rng& rng);

/// `steps` samples starting at `start`, `dt` seconds apart.
Trajectory synthetic_walk(Point start, std::size_t steps, double step_sigma, const Rect& bounds,
                          Rng& rng, double dt = kMobilityStepSeconds);

/// p_f proportional to 1 / f^exponent (f 1-based), normalized.
PopularityVector zipf_popularity(std::size_t num_contents, double exponent = 0.8);

/// normalize(clamp(p + N(0, sigma^2), floor, 1)).
PopularityVector popularity_step(std::span<const double> p, double jitter_sigma, Rng& rng);

PopularitySeries popularity_walk(PopularityVector initial, std::size_t steps,
                                 double jitter_sigma, Rng& rng);

/// Entries strictly inside (0,1) and unit sum within 1e-9.
bool is_valid_popularity(std::span<const double> p);

// ---- GPS traces ----------------------------------------------------------

struct GeoOrigin {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

struct GpsTrace {
  std::vector<Trajectory> trajectories;
  GeoOrigin origin;            // centroid used for the projection
  std::size_t dropped_rows = 0;  // non-increasing timestamps
};

/// Reads `timestamp,latitude,longitude` rows (header required). Timestamps
/// are epoch seconds or ISO-8601. Positions are projected to local meters
/// about the centroid of the trace (equirectangular).
GpsTrace load_gps_csv(const std::filesystem::path& path);

/// Inverse projection about `origin`; timestamps written as epoch seconds.
void write_gps_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                   const GeoOrigin& origin);

Point project_equirectangular(double lat_deg, double lon_deg, const GeoOrigin& origin);
void unproject_equirectangular(Point p, const GeoOrigin& origin, double& lat_deg,
                               double& lon_deg);

/// Parses epoch seconds or ISO-8601 (`YYYY-MM-DD[T ]hh:mm:ss[.fff][Z|+hh:mm]`).
std::optional<double> parse_timestamp(std::string_view text);

// ---- windowing -------------------------------------------------------------

/// Per-feature min-max scaling to [0,1]. Constant features map to 0.5.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  static MinMaxScaler fit(const std::vector<std::vector<double>>& rows);

  double transform(std::size_t feature, double v) const;
  double inverse(std::size_t feature, double v) const;
  std::size_t num_features() const { return min_.size(); }
  double min(std::size_t feature) const { return min_[feature]; }
  double max(std::size_t feature) const { return max_[feature]; }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

struct WindowedDataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  std::size_t window_in = 0;
  std::size_t window_out = 0;
  std::size_t feature_dim = 0;
  MinMaxScaler scaler;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
};

inline constexpr std::size_t kMobilityWindowIn = 12;
inline constexpr std::size_t kPopularityWindowIn = 5;

/// Sliding windows with stride 1 over a T x feature_dim series. When
/// `scaler` is absent it is fit on `series` itself, which the caller must
/// therefore pass as the training split.
WindowedDataset windowize(const std::vector<std::vector<double>>& series, std::size_t window_in,
                          std::size_t window_out, const MinMaxScaler* scaler = nullptr);
WindowedDataset windowize(const Trajectory& trajectory, std::size_t window_in = kMobilityWindowIn,
                          std::size_t window_out = 1, const MinMaxScaler* scaler = nullptr);
/// Univariate windows over one content's popularity column.
WindowedDataset windowize(const PopularitySeries& series, std::size_t content,
                          std::size_t window_in = kPopularityWindowIn, std::size_t window_out = 1,
                          const MinMaxScaler* scaler = nullptr);

/// Concatenates datasets sharing a window shape (and, by contract, a scaler).
WindowedDataset concat(std::span<const WindowedDataset> parts);

}  // namespace laql
