#include "laql/demand.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>

#include "laql/error.hpp"

namespace laql {

namespace {

// Reflects x into [lo, hi], folding repeatedly for draws wider than the box.
double reflect(double x, double lo, double hi) {
  const double w = hi - lo;
  if (w <= 0.0) return lo;
  double y = std::fmod(x - lo, 2.0 * w);
  if (y < 0.0) y += 2.0 * w;
  if (y > w) y = 2.0 * w - y;
  return lo + y;
}

constexpr double kEarthRadiusM = 6371008.8;
constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

}  // namespace

Point random_walk_step(Point pos, double step_sigma, const Rect& bounds, Rng& rng) {
  if (step_sigma <= 0.0) return pos;
  const double dx = rng.normal(0.0, step_sigma);
  const double dy = rng.normal(0.0, step_sigma);
  return {reflect(pos.x + dx, bounds.x_min, bounds.x_max),
          reflect(pos.y + dy, bounds.y_min, bounds.y_max)};
}

Trajectory synthetic_walk(Point start, std::size_t steps, double step_sigma, const Rect& bounds,
                          Rng& rng, double dt) {
  Trajectory tr;
  tr.source = Trajectory::Source::kSynthetic;
  tr.samples.reserve(steps);
  Point p = start;
  for (std::size_t k = 0; k < steps; ++k) {
    if (k > 0) p = random_walk_step(p, step_sigma, bounds, rng);
    tr.samples.push_back({static_cast<double>(k) * dt, p});
  }
  return tr;
}

PopularityVector zipf_popularity(std::size_t num_contents, double exponent) {
  if (num_contents == 0) throw ConfigError("zipf popularity needs at least one content");
  PopularityVector p(num_contents);
  for (std::size_t f = 0; f < num_contents; ++f) {
    p[f] = 1.0 / std::pow(static_cast<double>(f + 1), exponent);
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return p;
}

PopularityVector popularity_step(std::span<const double> p, double jitter_sigma, Rng& rng) {
  PopularityVector out(p.begin(), p.end());
  if (jitter_sigma <= 0.0) return out;
  for (auto& v : out) v = std::clamp(v + rng.normal(0.0, jitter_sigma), kPopularityFloor, 1.0);
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (auto& v : out) v /= total;
  return out;
}

PopularitySeries popularity_walk(PopularityVector initial, std::size_t steps,
                                 double jitter_sigma, Rng& rng) {
  PopularitySeries s;
  s.steps.reserve(steps);
  if (steps == 0) return s;
  s.steps.push_back(std::move(initial));
  while (s.steps.size() < steps) s.steps.push_back(popularity_step(s.steps.back(), jitter_sigma, rng));
  return s;
}

bool is_valid_popularity(std::span<const double> p) {
  if (p.empty()) return false;
  double total = 0.0;
  for (double v : p) {
    if (!(v > 0.0) || !(v < 1.0 || p.size() == 1)) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= 1e-9;
}

// ---- GPS -----------------------------------------------------------------

Point project_equirectangular(double lat_deg, double lon_deg, const GeoOrigin& origin) {
  const double k = std::cos(origin.lat_deg * kDegToRad);
  return {kEarthRadiusM * (lon_deg - origin.lon_deg) * kDegToRad * k,
          kEarthRadiusM * (lat_deg - origin.lat_deg) * kDegToRad};
}

void unproject_equirectangular(Point p, const GeoOrigin& origin, double& lat_deg,
                               double& lon_deg) {
  const double k = std::cos(origin.lat_deg * kDegToRad);
  lat_deg = origin.lat_deg + p.y / (kEarthRadiusM * kDegToRad);
  lon_deg = origin.lon_deg + p.x / (kEarthRadiusM * kDegToRad * k);
}

std::optional<double> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (auto v = parse_double(text)) return v;

  // ISO-8601: YYYY-MM-DD[T ]hh:mm:ss[.fff][Z|+hh:mm|-hh:mm]
  int year = 0, mon = 0, day = 0, hh = 0, mm = 0;
  double ss = 0.0;
  const std::string s(text);
  int consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%lf%n", &year, &mon, &day, &hh, &mm, &ss,
                  &consumed) != 6) {
    return std::nullopt;
  }
  if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss < 0 || ss >= 61) {
    return std::nullopt;
  }
  double offset = 0.0;
  std::string_view rest = std::string_view(s).substr(static_cast<std::size_t>(consumed));
  if (!rest.empty()) {
    if (rest == "Z") {
    } else if ((rest.front() == '+' || rest.front() == '-') && rest.size() == 6 && rest[3] == ':') {
      const int oh = std::stoi(std::string(rest.substr(1, 2)));
      const int om = std::stoi(std::string(rest.substr(4, 2)));
      offset = (rest.front() == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
    } else {
      return std::nullopt;
    }
  }
  const long long days = days_from_civil(year, static_cast<unsigned>(mon), static_cast<unsigned>(day));
  return static_cast<double>(days) * 86400.0 + hh * 3600.0 + mm * 60.0 + ss - offset;
}

GpsTrace load_gps_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open GPS file " + path.string());

  struct Row {
    double t, lat, lon;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (v.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto c1 = v.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : v.find(',', c1 + 1);
    if (c2 == std::string_view::npos || v.find(',', c2 + 1) != std::string_view::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 3 fields timestamp,latitude,longitude");
    }
    const auto t = parse_timestamp(v.substr(0, c1));
    const auto lat = parse_double(v.substr(c1 + 1, c2 - c1 - 1));
    const auto lon = parse_double(v.substr(c2 + 1));
    if (!t || !lat || !lon || std::abs(*lat) > 90.0 || std::abs(*lon) > 180.0) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    rows.push_back({*t, *lat, *lon});
  }
  if (rows.empty()) throw EmptyDatasetError("GPS file " + path.string() + " has no data rows");

  GpsTrace trace;
  std::vector<Row> kept;
  kept.reserve(rows.size());
  for (const auto& r : rows) {
    if (!kept.empty() && !(r.t > kept.back().t)) {
      ++trace.dropped_rows;
      continue;
    }
    kept.push_back(r);
  }
  if (trace.dropped_rows > 0) {
    std::cerr << "warning: " << path.string() << ": dropped " << trace.dropped_rows
              << " rows with non-increasing timestamps\n";
  }

  double lat_sum = 0.0, lon_sum = 0.0;
  for (const auto& r : kept) {
    lat_sum += r.lat;
    lon_sum += r.lon;
  }
  trace.origin = {lat_sum / static_cast<double>(kept.size()),
                  lon_sum / static_cast<double>(kept.size())};

  Trajectory tr;
  tr.source = Trajectory::Source::kGpsCsv;
  tr.samples.reserve(kept.size());
  for (const auto& r : kept) {
    tr.samples.push_back({r.t, project_equirectangular(r.lat, r.lon, trace.origin)});
  }
  trace.trajectories.push_back(std::move(tr));
  return trace;
}

void write_gps_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                   const GeoOrigin& origin) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write GPS file " + path.string());
  out << "timestamp,latitude,longitude\n";
  char buf[128];
  for (const auto& s : trajectory.samples) {
    double lat = 0.0, lon = 0.0;
    unproject_equirectangular(s.pos, origin, lat, lon);
    std::snprintf(buf, sizeof buf, "%.6f,%.12f,%.12f\n", s.t, lat, lon);
    out << buf;
  }
}

// ---- windowing -------------------------------------------------------------

MinMaxScaler MinMaxScaler::fit(const std::vector<std::vector<double>>& rows) {
  MinMaxScaler s;
  if (rows.empty()) return s;
  const std::size_t d = rows.front().size();
  s.min_.assign(d, std::numeric_limits<double>::infinity());
  s.max_.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto& r : rows) {
    if (r.size() != d) throw ConfigError("ragged series rows");
    for (std::size_t j = 0; j < d; ++j) {
      s.min_[j] = std::min(s.min_[j], r[j]);
      s.max_[j] = std::max(s.max_[j], r[j]);
    }
  }
  return s;
}

double MinMaxScaler::transform(std::size_t feature, double v) const {
  const double span = max_[feature] - min_[feature];
  if (span <= 0.0) return 0.5;
  return (v - min_[feature]) / span;
}

double MinMaxScaler::inverse(std::size_t feature, double v) const {
  const double span = max_[feature] - min_[feature];
  if (span <= 0.0) return min_[feature];
  return min_[feature] + v * span;
}

WindowedDataset windowize(const std::vector<std::vector<double>>& series, std::size_t window_in,
                          std::size_t window_out, const MinMaxScaler* scaler) {
  if (window_in == 0 || window_out == 0) throw ConfigError("window sizes must be positive");
  if (series.size() < window_in + window_out) {
    throw ConfigError("series of length " + std::to_string(series.size()) +
                      " is shorter than window_in + window_out = " +
                      std::to_string(window_in + window_out));
  }
  WindowedDataset ds;
  ds.window_in = window_in;
  ds.window_out = window_out;
  ds.feature_dim = series.front().size();
  ds.scaler = scaler ? *scaler : MinMaxScaler::fit(series);
  if (ds.scaler.num_features() != ds.feature_dim) throw ConfigError("scaler feature count mismatch");

  const std::size_t n = series.size() - window_in - window_out + 1;
  ds.inputs.reserve(n);
  ds.targets.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> in, out;
    in.reserve(window_in * ds.feature_dim);
    out.reserve(window_out * ds.feature_dim);
    for (std::size_t t = k; t < k + window_in; ++t) {
      for (std::size_t j = 0; j < ds.feature_dim; ++j) in.push_back(ds.scaler.transform(j, series[t][j]));
    }
    for (std::size_t t = k + window_in; t < k + window_in + window_out; ++t) {
      for (std::size_t j = 0; j < ds.feature_dim; ++j) out.push_back(ds.scaler.transform(j, series[t][j]));
    }
    ds.inputs.push_back(std::move(in));
    ds.targets.push_back(std::move(out));
  }
  return ds;
}

WindowedDataset windowize(const Trajectory& trajectory, std::size_t window_in,
                          std::size_t window_out, const MinMaxScaler* scaler) {
  std::vector<std::vector<double>> series;
  series.reserve(trajectory.size());
  for (const auto& s : trajectory.samples) series.push_back({s.pos.x, s.pos.y});
  return windowize(series, window_in, window_out, scaler);
}

WindowedDataset windowize(const PopularitySeries& series, std::size_t content,
                          std::size_t window_in, std::size_t window_out,
                          const MinMaxScaler* scaler) {
  std::vector<std::vector<double>> col;
  col.reserve(series.steps.size());
  for (const auto& p : series.steps) {
    if (content >= p.size()) throw ConfigError("content index out of range");
    col.push_back({p[content]});
  }
  return windowize(col, window_in, window_out, scaler);
}

WindowedDataset concat(std::span<const WindowedDataset> parts) {
  WindowedDataset out;
  if (parts.empty()) return out;
  out.window_in = parts.front().window_in;
  out.window_out = parts.front().window_out;
  out.feature_dim = parts.front().feature_dim;
  out.scaler = parts.front().scaler;
  for (const auto& p : parts) {
    if (p.window_in != out.window_in || p.window_out != out.window_out ||
        p.feature_dim != out.feature_dim) {
      throw ConfigError("cannot concatenate datasets with different window shapes");
    }
    out.inputs.insert(out.inputs.end(), p.inputs.begin(), p.inputs.end());
    out.targets.insert(out.targets.end(), p.targets.begin(), p.targets.end());
  }
  return out;
}

}  // namespace laql
