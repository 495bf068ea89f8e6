#include "laql/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "laql/baselines.hpp"
#include "laql/error.hpp"

namespace laql {

namespace {

// Stream tags for derive_seed; each consumer of randomness has its own.
enum : std::uint64_t {
  kTagDemand = 1,
  kTagFading = 2,
  kTagLaql = 3,
  kTagEpsGreedy = 4,
  kTagRandom = 5,
  kTagMobilityNet = 6,
  kTagPopularityNet = 7,
  kTagPredictWalk = 8,
};

struct DemandTrace {
  std::vector<std::vector<Point>> positions;  // [time][user]
  std::vector<PopularityVector> popularity;   // [time]
};

Rect region_of(double side) { return Rect{0.0, 0.0, side, side}; }

DemandTrace generate_demand(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::size_t horizon = cfg.demand.history_steps + cfg.slots;
  const Rect rect = region_of(cfg.scenario.region_side_m);
  Rng rng(derive_seed(seed, {kTagDemand}));

  DemandTrace d;
  d.positions.assign(horizon, std::vector<Point>(cfg.scenario.num_users));
  for (std::size_t u = 0; u < cfg.scenario.num_users; ++u) {
    const Point start{rect.x_min + rng.uniform() * (rect.x_max - rect.x_min),
                      rect.y_min + rng.uniform() * (rect.y_max - rect.y_min)};
    const Trajectory walk = synthetic_walk(start, horizon, cfg.demand.user_step_sigma_m, rect, rng);
    for (std::size_t t = 0; t < horizon; ++t) d.positions[t][u] = walk.samples[t].pos;
  }
  PopularitySeries pop = popularity_walk(zipf_popularity(cfg.scenario.num_contents, cfg.demand.zipf_exponent),
                                         horizon, cfg.demand.popularity_jitter, rng);
  pop.steps.resize(horizon);
  d.popularity = std::move(pop.steps);
  return d;
}

std::vector<std::size_t> net_shape(std::size_t in, const std::vector<std::size_t>& hidden,
                                   std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

PopularityVector renormalize(PopularityVector p) {
  double total = 0.0;
  for (double& v : p) {
    v = std::clamp(v, kPopularityFloor, 1.0);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

// Forecasts time t from observations strictly before t.
class Forecaster {
 public:
  Forecaster(const ExperimentConfig& cfg, const DemandTrace& demand, std::uint64_t seed)
      : cfg_(cfg), demand_(demand) {
    if (cfg.forecast.mode != ForecastMode::kNeuralNet) return;
    const std::size_t hist = cfg.demand.history_steps;
    const auto& fc = cfg.forecast;

    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < hist; ++t) {
      for (const Point& p : demand.positions[t]) rows.push_back({p.x, p.y});
    }
    pos_scaler_ = MinMaxScaler::fit(rows);
    std::vector<WindowedDataset> parts;
    for (std::size_t u = 0; u < cfg.scenario.num_users; ++u) {
      std::vector<std::vector<double>> series;
      for (std::size_t t = 0; t < hist; ++t) series.push_back({demand.positions[t][u].x, demand.positions[t][u].y});
      parts.push_back(windowize(series, fc.mobility_window, 1, &pos_scaler_));
    }
    mobility_ = Mlp::init(net_shape(2 * fc.mobility_window, fc.mobility_hidden, 2),
                          derive_seed(seed, {kTagMobilityNet}));
    train(mobility_, concat(parts), TrainConfig{fc.learning_rate, fc.epochs, std::nullopt, seed, false});

    rows.clear();
    for (std::size_t t = 0; t < hist; ++t) {
      for (double v : demand.popularity[t]) rows.push_back({v});
    }
    pop_scaler_ = MinMaxScaler::fit(rows);
    const PopularitySeries history{{demand.popularity.begin(),
                                    demand.popularity.begin() + static_cast<std::ptrdiff_t>(hist)}};
    parts.clear();
    for (std::size_t f = 0; f < cfg.scenario.num_contents; ++f) {
      parts.push_back(windowize(history, f, fc.popularity_window, 1, &pop_scaler_));
    }
    popularity_ = Mlp::init(net_shape(fc.popularity_window, fc.popularity_hidden, 1),
                            derive_seed(seed, {kTagPopularityNet}));
    train(popularity_, concat(parts), TrainConfig{fc.learning_rate, fc.epochs, std::nullopt, seed, false});
  }

  std::vector<Point> positions(std::size_t t) const {
    switch (cfg_.forecast.mode) {
      case ForecastMode::kTruth: return demand_.positions[t];
      case ForecastMode::kPersistence: return demand_.positions[t - 1];
      case ForecastMode::kNeuralNet: break;
    }
    const std::size_t win = cfg_.forecast.mobility_window;
    std::vector<Point> out(cfg_.scenario.num_users);
    std::vector<double> x(2 * win);
    for (std::size_t u = 0; u < out.size(); ++u) {
      for (std::size_t k = 0; k < win; ++k) {
        const Point& p = demand_.positions[t - win + k][u];
        x[2 * k] = pos_scaler_.transform(0, p.x);
        x[2 * k + 1] = pos_scaler_.transform(1, p.y);
      }
      const auto y = mobility_.forward(x);
      out[u] = {pos_scaler_.inverse(0, y[0]), pos_scaler_.inverse(1, y[1])};
    }
    return out;
  }

  PopularityVector popularity(std::size_t t) const {
    switch (cfg_.forecast.mode) {
      case ForecastMode::kTruth: return demand_.popularity[t];
      case ForecastMode::kPersistence: return demand_.popularity[t - 1];
      case ForecastMode::kNeuralNet: break;
    }
    const std::size_t win = cfg_.forecast.popularity_window;
    PopularityVector out(cfg_.scenario.num_contents);
    std::vector<double> x(win);
    for (std::size_t f = 0; f < out.size(); ++f) {
      for (std::size_t k = 0; k < win; ++k) x[k] = pop_scaler_.transform(0, demand_.popularity[t - win + k][f]);
      out[f] = pop_scaler_.inverse(0, popularity_.forward(x)[0]);
    }
    return renormalize(std::move(out));
  }

 private:
  const ExperimentConfig& cfg_;
  const DemandTrace& demand_;
  MinMaxScaler pos_scaler_;
  MinMaxScaler pop_scaler_;
  Mlp mobility_;
  Mlp popularity_;
};

NetworkScenario make_scenario(const ExperimentConfig& cfg, const std::vector<Point>& bs,
                              const std::vector<Point>& users) {
  NetworkScenario sc;
  sc.bs_positions = bs;
  sc.user_positions.reserve(users.size());
  for (const Point& p : users) {
    sc.user_positions.push_back(sanitize_user_position(p, bs, cfg.scenario.region_side_m));
  }
  sc.tx_power_w = cfg.scenario.tx_power_w;
  sc.pathloss_exponent = cfg.scenario.pathloss_exponent;
  sc.noise_w = cfg.scenario.noise_w;
  sc.bandwidth_hz = cfg.scenario.bandwidth_hz;
  sc.cache_slots = cfg.scenario.cache_slots;
  sc.fronthaul_max_bps = cfg.scenario.fronthaul_max_bps;
  sc.min_rate_bps = cfg.scenario.min_rate_bps;
  sc.num_contents = cfg.scenario.num_contents;
  return sc;
}

struct TrialJob {
  ExperimentConfig cfg;
  std::size_t sweep_index = 0;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  bool heatmap = false;
};

struct TrialOutput {
  std::vector<RunRecord> records;
  std::vector<TrialCurve> curves;
  std::vector<AutomatonSnapshot> automata;
  std::vector<HeatmapCell> heatmap;
  std::vector<std::string> notes;
};

std::string trial_id(const TrialJob& job, std::size_t slot) {
  return "p" + std::to_string(job.sweep_index) + "-s" + std::to_string(job.seed) + "-t" +
         std::to_string(slot);
}

void add_heatmap(TrialOutput& out, Method method, const NetworkScenario& truth,
                 const CachePlacement& placement, std::span<const double> popularity,
                 const ExperimentConfig& cfg) {
  const std::size_t res = cfg.heatmap_resolution;
  const double cell = cfg.scenario.region_side_m / static_cast<double>(res);
  for (std::size_t iy = 0; iy < res; ++iy) {
    for (std::size_t ix = 0; ix < res; ++ix) {
      const Point p{(static_cast<double>(ix) + 0.5) * cell, (static_cast<double>(iy) + 0.5) * cell};
      out.heatmap.push_back({method, p.x, p.y, probe_mos(truth, placement, popularity, cfg.qoe, p)});
    }
  }
}

TrialOutput run_trial(const TrialJob& job) {
  const ExperimentConfig& cfg = job.cfg;
  TrialOutput out;
  const auto bs = bs_grid(cfg.scenario.num_bs, cfg.scenario.region_side_m);
  const DemandTrace demand = generate_demand(cfg, job.seed);
  const Forecaster forecaster(cfg, demand, job.seed);
  bool optimal_noted = false;

  for (std::size_t slot = 0; slot < cfg.slots; ++slot) {
    const std::size_t t = cfg.demand.history_steps + slot;
    const NetworkScenario truth_sc = make_scenario(cfg, bs, demand.positions[t]);
    const NetworkScenario plan_sc = make_scenario(cfg, bs, forecaster.positions(t));

    // Future small-scale fading is unknown when planning, so plans use its
    // expectation and only the realized slot draws Rayleigh magnitudes.
    FadingRealization truth_fading = FadingRealization::expectation(bs.size(), truth_sc.num_users());
    if (cfg.scenario.fading == FadingMode::kRayleigh) {
      Rng frng(derive_seed(job.seed, {kTagFading, slot}));
      truth_fading = FadingRealization::rayleigh(bs.size(), truth_sc.num_users(), frng);
    }
    CachingEnv plan_env(plan_sc, FadingRealization::expectation(bs.size(), plan_sc.num_users()),
                        forecaster.popularity(t), cfg.qoe);
    const CachingEnv truth_env(truth_sc, truth_fading, demand.popularity[t], cfg.qoe);
    const std::string trial = trial_id(job, slot);

    for (Method method : cfg.methods) {
      const auto t0 = std::chrono::steady_clock::now();
      RunRecord rec;
      rec.method = method;
      rec.sweep_axis = cfg.sweep_axis;
      rec.sweep_index = job.sweep_index;
      rec.sweep_value = job.sweep_value;
      rec.seed = job.seed;
      rec.slot = slot;

      switch (method) {
        case Method::kLaql:
        case Method::kEpsGreedy: {
          const bool laql = method == Method::kLaql;
          const std::uint64_t s = derive_seed(job.seed, {laql ? kTagLaql : kTagEpsGreedy, slot});
          TrainOutcome trained =
              laql ? train_laql(plan_env, cfg.agent, s) : train_qlearning(plan_env, cfg.agent, s);
          rec.placement = trained.best_placement;
          rec.iterations = trained.reward_curve.size();
          if (laql) {
            const auto it = trained.automata.find(encode_state(trained.best_placement));
            if (it != trained.automata.end()) out.automata.push_back({trial, it->first, it->second});
          }
          out.curves.push_back({trial, method, std::move(trained.reward_curve)});
          break;
        }
        case Method::kNonCooperative:
          rec.placement = non_cooperative(plan_env.dims(), plan_env.popularity());
          break;
        case Method::kRandom: {
          Rng rrng(derive_seed(job.seed, {kTagRandom, slot}));
          rec.placement = random_placement(plan_env, rrng);
          break;
        }
        case Method::kOptimal: {
          try {
            OracleResult o = optimal_exhaustive(plan_env, cfg.oracle_cap);
            rec.placement = std::move(o.placement);
            rec.iterations = o.evaluations;
          } catch (const TooLargeError& e) {
            if (!optimal_noted) out.notes.push_back("optimal skipped for trial " + trial + ": " + e.what());
            optimal_noted = true;
            continue;
          }
          break;
        }
      }
      const Evaluation score = truth_env.evaluate_uncached(rec.placement);
      rec.sum_mos = score.sum_mos;
      rec.feasible = score.feasible;
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (job.heatmap && slot == 0) {
        add_heatmap(out, method, truth_sc, rec.placement, demand.popularity[t], cfg);
      }
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

ExperimentConfig apply_sweep_value(ExperimentConfig cfg, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::kNone: break;
    case SweepAxis::kTxPower: cfg.scenario.tx_power_w = dbm_to_watts(v); break;
    case SweepAxis::kNumBs: cfg.scenario.num_bs = static_cast<std::size_t>(v); break;
    case SweepAxis::kNumUsers: cfg.scenario.num_users = static_cast<std::size_t>(v); break;
  }
  return cfg;
}

ExperimentResult run_trials(const std::vector<TrialJob>& jobs, std::size_t threads) {
  std::vector<TrialOutput> outputs(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        outputs[i] = run_trial(jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult result;
  for (auto& o : outputs) {
    std::move(o.records.begin(), o.records.end(), std::back_inserter(result.records));
    std::move(o.curves.begin(), o.curves.end(), std::back_inserter(result.curves));
    std::move(o.automata.begin(), o.automata.end(), std::back_inserter(result.automata));
    std::move(o.heatmap.begin(), o.heatmap.end(), std::back_inserter(result.heatmap));
    std::move(o.notes.begin(), o.notes.end(), std::back_inserter(result.notes));
  }
  return result;
}

std::vector<TrialJob> trials_for(const ExperimentConfig& cfg, std::size_t sweep_index, double value,
                                  bool heatmap_first) {
  std::vector<TrialJob> jobs;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    jobs.push_back({cfg, sweep_index, value, cfg.seeds[i], heatmap_first && i == 0});
  }
  return jobs;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::vector<Point> bs_grid(std::size_t num_bs, double side) {
  if (num_bs == 0) throw ConfigError("need at least one BS");
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(num_bs))));
  const std::size_t rows = (num_bs + cols - 1) / cols;
  std::vector<Point> out;
  for (std::size_t k = 0; k < num_bs; ++k) {
    const std::size_t r = k / cols;
    const std::size_t c = k % cols;
    // The last row may be partial; spread its sites over the full width.
    const std::size_t in_row = (r + 1 == rows) ? num_bs - r * cols : cols;
    out.push_back({(static_cast<double>(c) + 0.5) * side / static_cast<double>(in_row),
                   (static_cast<double>(r) + 0.5) * side / static_cast<double>(rows)});
  }
  return out;
}

Point sanitize_user_position(Point p, const std::vector<Point>& bs, double side) {
  p.x = std::clamp(p.x, 0.0, side);
  p.y = std::clamp(p.y, 0.0, side);
  for (int pass = 0; pass < 4; ++pass) {
    bool moved = false;
    for (const Point& b : bs) {
      const double d = distance(p, b);
      if (d >= kMinLinkDistance) continue;
      // Push radially outwards; a user exactly on the site goes towards the center.
      double dx = p.x - b.x;
      double dy = p.y - b.y;
      if (d == 0.0) {
        dx = side / 2.0 - b.x;
        dy = side / 2.0 - b.y;
        if (dx == 0.0 && dy == 0.0) dx = 1.0;
      }
      const double n = std::hypot(dx, dy);
      p = {b.x + dx / n * kMinLinkDistance * 1.0000001, b.y + dy / n * kMinLinkDistance * 1.0000001};
      moved = true;
    }
    if (!moved) break;
  }
  return p;
}

double probe_mos(const NetworkScenario& scenario, const CachePlacement& placement,
                 std::span<const double> popularity, const QoeParams& qoe, Point pos) {
  NetworkScenario one = scenario;
  one.user_positions = {pos};
  for (const Point& b : one.bs_positions) {
    if (distance(pos, b) < kMinLinkDistance) {
      one.user_positions[0] = {b.x + kMinLinkDistance, b.y};
    }
  }
  return sum_mos(one, placement, FadingRealization::expectation(one.num_bs(), 1), popularity, qoe);
}

CachingEnv realized_env(const ExperimentConfig& config, std::uint64_t seed, std::size_t slot) {
  config.validate();
  if (slot >= config.slots) throw ConfigError("slot index beyond the configured slots");
  const auto bs = bs_grid(config.scenario.num_bs, config.scenario.region_side_m);
  const DemandTrace demand = generate_demand(config, seed);
  const std::size_t t = config.demand.history_steps + slot;
  const NetworkScenario sc = make_scenario(config, bs, demand.positions[t]);
  FadingRealization fading = FadingRealization::expectation(bs.size(), sc.num_users());
  if (config.scenario.fading == FadingMode::kRayleigh) {
    Rng frng(derive_seed(seed, {kTagFading, slot}));
    fading = FadingRealization::rayleigh(bs.size(), sc.num_users(), frng);
  }
  return CachingEnv(sc, fading, demand.popularity[t], config.qoe);
}

ExperimentResult run_pipeline(const ExperimentConfig& config) {
  config.validate();
  return run_trials(trials_for(config, 0, 0.0, true), config.threads);
}

ExperimentResult sweep(const ExperimentConfig& config, double tol) {
  if (config.sweep_axis == SweepAxis::kNone) return run_pipeline(config);
  config.validate();
  std::vector<TrialJob> jobs;
  for (std::size_t i = 0; i < config.sweep_values.size(); ++i) {
    const ExperimentConfig point = apply_sweep_value(config, config.sweep_axis, config.sweep_values[i]);
    point.validate();
    auto part = trials_for(point, i, config.sweep_values[i], i == 0);
    jobs.insert(jobs.end(), part.begin(), part.end());
  }
  ExperimentResult result = run_trials(jobs, config.threads);

  if (config.sweep_axis == SweepAxis::kTxPower) {
    std::vector<std::size_t> order(config.sweep_values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return config.sweep_values[a] < config.sweep_values[b];
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
      const auto lo = median_sum_mos(result.records, Method::kLaql, order[k - 1]);
      const auto hi = median_sum_mos(result.records, Method::kLaql, order[k]);
      if (lo && hi && *hi < *lo * (1.0 - tol)) {
        const std::string msg = "warning: median LAQL MOS drops from " + fmt(*lo) + " at " +
                                fmt(config.sweep_values[order[k - 1]]) + " dBm to " + fmt(*hi) +
                                " at " + fmt(config.sweep_values[order[k]]) + " dBm";
        std::cerr << msg << '\n';
        result.notes.push_back(msg);
      }
    }
  }
  return result;
}

std::optional<double> median_sum_mos(const std::vector<RunRecord>& records, Method method,
                                     std::size_t sweep_index) {
  std::vector<double> v;
  for (const auto& r : records) {
    if (r.method == method && r.sweep_index == sweep_index) v.push_back(r.sum_mos);
  }
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void emit_outputs(const ExperimentResult& result, const std::filesystem::path& dir,
                  std::size_t curve_stride, bool emit_timing) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  if (curve_stride == 0) curve_stride = 1;

  {
    auto out = open_csv(dir / "runs.csv");
    out << "method,sweep_axis,sweep_value,seed,slot,sum_mos,iterations,feasible,placement\n";
    for (const auto& r : result.records) {
      out << method_name(r.method) << ',' << sweep_axis_name(r.sweep_axis) << ',' << fmt(r.sweep_value)
          << ',' << r.seed << ',' << r.slot << ',' << fmt(r.sum_mos) << ',' << r.iterations << ','
          << (r.feasible ? 1 : 0) << ",\"" << r.placement.to_string() << "\"\n";
    }
  }
  {
    auto out = open_csv(dir / "reward_curves.csv");
    out << "trial,method,iteration,reward,sum_mos,best_sum_mos\n";
    for (const auto& c : result.curves) {
      for (std::size_t i = 0; i < c.points.size(); ++i) {
        if (i % curve_stride != 0 && i + 1 != c.points.size()) continue;
        const auto& p = c.points[i];
        out << c.trial << ',' << method_name(c.method) << ',' << p.iteration << ',' << fmt(p.reward)
            << ',' << fmt(p.sum_mos) << ',' << fmt(p.best_sum_mos) << '\n';
      }
    }
  }
  {
    auto out = open_csv(dir / "la_convergence.csv");
    out << "trial,state,action,prob,u,v\n";
    for (const auto& s : result.automata) s.automaton.write_csv_rows(out, s.trial + "," + s.state + ",");
  }
  {
    auto out = open_csv(dir / "mos_heatmap.csv");
    out << "method,x,y,mos\n";
    for (const auto& h : result.heatmap) {
      out << method_name(h.method) << ',' << fmt(h.x) << ',' << fmt(h.y) << ',' << fmt(h.mos) << '\n';
    }
  }
  if (emit_timing) {
    auto out = open_csv(dir / "timing.csv");
    out << "method,sweep_value,seed,slot,wall_seconds\n";
    for (const auto& r : result.records) {
      out << method_name(r.method) << ',' << fmt(r.sweep_value) << ',' << r.seed << ',' << r.slot << ','
          << fmt(r.wall_seconds) << '\n';
    }
  }
}

std::vector<LaBenchRun> la_bench(const LaBenchConfig& cfg) {
  if (cfg.reward_probs.size() < 2) throw ConfigError("la-bench needs at least two actions");
  for (double d : cfg.reward_probs) {
    if (!(d >= 0.0 && d <= 1.0)) throw ConfigError("reward probabilities must lie in [0,1]");
  }
  const auto best = static_cast<std::size_t>(
      std::max_element(cfg.reward_probs.begin(), cfg.reward_probs.end()) - cfg.reward_probs.begin());
  std::vector<LaBenchRun> runs;
  runs.reserve(cfg.runs);
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    Rng rng(derive_seed(cfg.seed, {r}));
    PursuitAutomaton la(cfg.reward_probs.size(), cfg.kappa);
    for (std::size_t t = 0; t < cfg.steps; ++t) {
      const std::size_t a = la.select(rng);
      la.update(a, rng.uniform() < cfg.reward_probs[a] ? 0 : 1);
    }
    const double p = la.probs()[best];
    runs.push_back({r, p, p > 0.95});
  }
  return runs;
}

PredictResult run_predict(const ExperimentConfig& cfg, const PredictOptions& opt,
                          const std::optional<std::filesystem::path>& out_dir) {
  const auto& fc = cfg.forecast;
  const Rect rect = region_of(cfg.scenario.region_side_m);
  Rng rng(derive_seed(opt.seed, {kTagPredictWalk}));

  std::vector<Trajectory> tracks;
  if (opt.gps_csv) {
    tracks = load_gps_csv(*opt.gps_csv).trajectories;
  } else {
    const Point start{(rect.x_min + rect.x_max) / 2.0, (rect.y_min + rect.y_max) / 2.0};
    tracks.push_back(synthetic_walk(start, opt.walk_steps, cfg.demand.user_step_sigma_m, rect, rng));
  }
  std::vector<std::vector<double>> rows;
  for (const auto& tr : tracks) {
    for (const auto& s : tr.samples) rows.push_back({s.pos.x, s.pos.y});
  }
  const MinMaxScaler pos_scaler = MinMaxScaler::fit(rows);
  std::vector<WindowedDataset> parts;
  for (const auto& tr : tracks) {
    if (tr.size() >= fc.mobility_window + 1) parts.push_back(windowize(tr, fc.mobility_window, 1, &pos_scaler));
  }
  if (parts.empty()) throw EmptyDatasetError("trace is shorter than one mobility window");

  PredictResult res;
  const TrainConfig tc{fc.learning_rate, fc.epochs, std::nullopt, opt.seed, false};
  res.mobility_net = Mlp::init(net_shape(2 * fc.mobility_window, fc.mobility_hidden, 2),
                               derive_seed(opt.seed, {kTagMobilityNet}));
  res.mobility = train(res.mobility_net, concat(parts), tc);

  const PopularitySeries pop = popularity_walk(
      zipf_popularity(cfg.scenario.num_contents, cfg.demand.zipf_exponent), opt.walk_steps,
      cfg.demand.popularity_jitter, rng);
  rows.clear();
  for (const auto& p : pop.steps) {
    for (double v : p) rows.push_back({v});
  }
  const MinMaxScaler pop_scaler = MinMaxScaler::fit(rows);
  parts.clear();
  for (std::size_t f = 0; f < cfg.scenario.num_contents; ++f) {
    parts.push_back(windowize(pop, f, fc.popularity_window, 1, &pop_scaler));
  }
  res.popularity_net = Mlp::init(net_shape(fc.popularity_window, fc.popularity_hidden, 1),
                                 derive_seed(opt.seed, {kTagPopularityNet}));
  res.popularity = train(res.popularity_net, concat(parts), tc);

  if (out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir->string());
    auto curve = [&](const char* name, const TrainReport& rep) {
      auto out = open_csv(*out_dir / name);
      out << "epoch,rmse\n";
      for (std::size_t e = 0; e < rep.epoch_rmse.size(); ++e) out << e + 1 << ',' << fmt(rep.epoch_rmse[e]) << '\n';
    };
    curve("mobility_curve.csv", res.mobility);
    curve("popularity_curve.csv", res.popularity);
    res.mobility_net.save(*out_dir / "mobility_model.txt");
    res.popularity_net.save(*out_dir / "popularity_model.txt");
  }
  return res;
}

}  // namespace laql
