#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "laql/demand.hpp"
#include "laql/error.hpp"

using namespace laql;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  auto dir = fs::temp_directory_path() / "laql_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("random walk with zero sigma stays put") {
  Rng rng(1);
  const Rect r;
  const Point p{1234.5, 678.9};
  CHECK(random_walk_step(p, 0.0, r, rng) == p);
}

TEST_CASE("reflection keeps positions inside the region") {
  Rng rng(2);
  const Rect r;
  Point p{0.0, 4000.0};
  for (int k = 0; k < 100000; ++k) {
    p = random_walk_step(p, 3000.0, r, rng);
    REQUIRE(r.contains(p));
  }
  // Boundary start with a large draw still lands inside.
  Point edge{4000.0, 4000.0};
  for (int k = 0; k < 1000; ++k) CHECK(r.contains(random_walk_step(edge, 1e5, r, rng)));
}

TEST_CASE("mean step displacement matches a Monte-Carlo oracle") {
  constexpr double kSigma = 50.0;
  // Oracle: 1e6 independent 2-D Gaussian steps, no boundaries.
  Rng oracle_rng(12345);
  double oracle = 0.0;
  for (int k = 0; k < 1000000; ++k) oracle += std::hypot(oracle_rng.normal(0, kSigma), oracle_rng.normal(0, kSigma));
  oracle /= 1e6;
  CHECK(oracle == doctest::Approx(kSigma * std::sqrt(std::numbers::pi / 2.0)).epsilon(0.01));

  Rng rng(99);
  const Rect r;
  Point p{2000.0, 2000.0};
  double acc = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Point q = random_walk_step(p, kSigma, r, rng);
    acc += distance(p, q);
    p = q;
  }
  CHECK(std::abs(acc / 1e4 - oracle) <= 0.1 * oracle);
}

TEST_CASE("synthetic walk timestamps and length") {
  Rng rng(3);
  const auto tr = synthetic_walk({100, 100}, 50, 20.0, Rect{}, rng);
  REQUIRE(tr.size() == 50);
  CHECK(tr.samples[0].pos == Point{100, 100});
  for (std::size_t k = 1; k < tr.size(); ++k) CHECK(tr.samples[k].t == tr.samples[k - 1].t + kMobilityStepSeconds);
}

TEST_CASE("Zipf popularity") {
  const auto p = zipf_popularity(10, 0.8);
  CHECK(is_valid_popularity(p));
  double norm = 0.0;
  for (int f = 1; f <= 10; ++f) norm += std::pow(f, -0.8);
  for (int f = 1; f <= 10; ++f) CHECK(p[f - 1] == doctest::Approx(std::pow(f, -0.8) / norm).epsilon(1e-14));
}

TEST_CASE("popularity step keeps a valid distribution") {
  Rng rng(4);
  auto p = zipf_popularity(10);
  CHECK(popularity_step(p, 0.0, rng) == p);
  for (int k = 0; k < 2000; ++k) {
    p = popularity_step(p, 0.2, rng);
    REQUIRE(is_valid_popularity(p));
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("popularity step matches a clamp-then-normalize recomputation (seed 42)") {
  const auto start = zipf_popularity(10, 0.8);
  Rng rng(42);
  const auto p = popularity_step(start, 0.01, rng);
  // Same draws, replayed by hand: one N(0, 0.01) per content in index order.
  Rng replay(42);
  std::vector<double> expect(10);
  double total = 0.0;
  for (int f = 0; f < 10; ++f) {
    expect[f] = std::min(1.0, std::max(kPopularityFloor, start[f] + 0.01 * replay.normal()));
    total += expect[f];
  }
  for (int f = 0; f < 10; ++f) CHECK(p[f] == doctest::Approx(expect[f] / total).epsilon(1e-14));
  // The jitter is small next to the Zipf gaps at the head of the library.
  CHECK(p[0] > p[1]);
}

TEST_CASE("popularity walk") {
  Rng rng(5);
  const auto s = popularity_walk(zipf_popularity(6), 30, 0.02, rng);
  REQUIRE(s.steps.size() == 30);
  for (const auto& p : s.steps) CHECK(is_valid_popularity(p));
}

TEST_CASE("timestamps: epoch seconds and ISO-8601") {
  CHECK(parse_timestamp("0").value() == 0.0);
  CHECK(parse_timestamp("1700000000.5").value() == 1700000000.5);
  CHECK(parse_timestamp("1970-01-01T00:00:00Z").value() == 0.0);
  CHECK(parse_timestamp("2000-03-01T12:30:15Z").value() == 951913815.0);
  CHECK(parse_timestamp("2000-03-01 12:30:15").value() == 951913815.0);
  CHECK(parse_timestamp("2000-03-01T14:30:15+02:00").value() == 951913815.0);
  CHECK(parse_timestamp("2000-03-01T12:30:15.25Z").value() == 951913815.25);
  CHECK_FALSE(parse_timestamp("yesterday").has_value());
  CHECK_FALSE(parse_timestamp("2000-13-01T00:00:00Z").has_value());
}

TEST_CASE("GPS: identical coordinates one second apart") {
  const auto path = temp_file("still.csv");
  write_text(path, "timestamp,latitude,longitude\n100,52.0,13.0\n101,52.0,13.0\n");
  const auto trace = load_gps_csv(path);
  REQUIRE(trace.trajectories.size() == 1);
  const auto& tr = trace.trajectories[0];
  REQUIRE(tr.size() == 2);
  CHECK(distance(tr.samples[0].pos, tr.samples[1].pos) == 0.0);
  CHECK(tr.source == Trajectory::Source::kGpsCsv);
}

TEST_CASE("GPS: header-only file is an empty dataset") {
  const auto path = temp_file("empty.csv");
  write_text(path, "timestamp,latitude,longitude\n");
  CHECK_THROWS_AS(load_gps_csv(path), EmptyDatasetError);
}

TEST_CASE("GPS: malformed row names its line") {
  const auto path = temp_file("bad.csv");
  write_text(path, "timestamp,latitude,longitude\n1,52.0,13.0\n2,north,13.0\n");
  try {
    load_gps_csv(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
}

TEST_CASE("GPS: non-increasing timestamps are dropped and counted") {
  const auto path = temp_file("order.csv");
  write_text(path, "timestamp,latitude,longitude\n1,52.0,13.0\n3,52.0,13.001\n2,52.0,13.002\n3,52.0,13.003\n4,52.0,13.004\n");
  const auto trace = load_gps_csv(path);
  CHECK(trace.dropped_rows == 2);
  CHECK(trace.trajectories.at(0).size() == 3);
}

TEST_CASE("GPS round trip recovers a 4 km walk within 0.5 m") {
  Rng rng(8);
  const auto walk = synthetic_walk({2000, 2000}, 100, 400.0, Rect{}, rng);
  const GeoOrigin origin{48.137, 11.575};
  // Re-centre the walk so its centroid sits on the origin; the loader
  // projects about the centroid of the file.
  Trajectory centred = walk;
  double cx = 0.0, cy = 0.0;
  for (const auto& s : walk.samples) {
    cx += s.pos.x;
    cy += s.pos.y;
  }
  cx /= 100;
  cy /= 100;
  for (auto& s : centred.samples) s.pos = {s.pos.x - cx, s.pos.y - cy};

  const auto path = temp_file("walk.csv");
  write_gps_csv(path, centred, origin);
  const auto trace = load_gps_csv(path);
  REQUIRE(trace.trajectories.size() == 1);
  const auto& back = trace.trajectories[0];
  REQUIRE(back.size() == 100);
  double worst = 0.0;
  for (std::size_t k = 0; k < 100; ++k) {
    worst = std::max(worst, distance(back.samples[k].pos, centred.samples[k].pos));
    CHECK(back.samples[k].t == doctest::Approx(centred.samples[k].t).epsilon(1e-12));
  }
  CHECK(worst < 0.5);
}

TEST_CASE("projection inverse") {
  const GeoOrigin o{-33.87, 151.21};
  double lat = 0, lon = 0;
  unproject_equirectangular({1234.0, -567.0}, o, lat, lon);
  const Point p = project_equirectangular(lat, lon, o);
  CHECK(p.x == doctest::Approx(1234.0).epsilon(1e-9));
  CHECK(p.y == doctest::Approx(-567.0).epsilon(1e-9));
}

TEST_CASE("windowize counts and strides") {
  std::vector<std::vector<double>> series;
  for (int t = 0; t < 100; ++t) series.push_back({static_cast<double>(t), static_cast<double>(2 * t)});
  const auto ds = windowize(series, 12, 1);
  CHECK(ds.size() == 88);
  CHECK(ds.inputs[0].size() == 24);
  CHECK(ds.targets[0].size() == 2);
  for (std::size_t k = 0; k + 1 < ds.size(); ++k) {
    // Sample k+1's input is sample k's input shifted by one step.
    for (std::size_t j = 0; j + 2 < 24; ++j) CHECK(ds.inputs[k + 1][j] == ds.inputs[k][j + 2]);
    CHECK(ds.inputs[k + 1][22] == ds.targets[k][0]);
  }
  const auto exact = windowize(std::vector<std::vector<double>>(series.begin(), series.begin() + 13), 12, 1);
  CHECK(exact.size() == 1);
  CHECK_THROWS_AS(windowize(std::vector<std::vector<double>>(series.begin(), series.begin() + 12), 12, 1),
                  ConfigError);
}

TEST_CASE("windowize scales to [0,1] and maps constant features to 0.5") {
  std::vector<std::vector<double>> series;
  for (int t = 0; t < 20; ++t) series.push_back({static_cast<double>(t), 7.0});
  const auto ds = windowize(series, 5, 1);
  for (const auto& in : ds.inputs) {
    for (std::size_t j = 0; j < in.size(); ++j) {
      CHECK(in[j] >= 0.0);
      CHECK(in[j] <= 1.0);
      if (j % 2 == 1) CHECK(in[j] == 0.5);
    }
  }
  CHECK(ds.scaler.inverse(0, ds.scaler.transform(0, 13.0)) == doctest::Approx(13.0));
}

TEST_CASE("windowize on trajectories and popularity columns") {
  Rng rng(6);
  const auto tr = synthetic_walk({1000, 1000}, 40, 50.0, Rect{}, rng);
  const auto ds = windowize(tr);
  CHECK(ds.window_in == 12);
  CHECK(ds.size() == 40 - 13 + 1);
  const auto pop = popularity_walk(zipf_popularity(4), 30, 0.01, rng);
  const auto pd = windowize(pop, 2);
  CHECK(pd.window_in == 5);
  CHECK(pd.feature_dim == 1);
  CHECK(pd.size() == 30 - 6 + 1);
  const WindowedDataset parts[] = {pd, pd};
  CHECK(concat(parts).size() == 2 * pd.size());
}

TEST_CASE("windowize is deterministic") {
  Rng a(10), b(10);
  const auto ta = synthetic_walk({1000, 1000}, 60, 50.0, Rect{}, a);
  const auto tb = synthetic_walk({1000, 1000}, 60, 50.0, Rect{}, b);
  CHECK(windowize(ta).inputs == windowize(tb).inputs);
}
