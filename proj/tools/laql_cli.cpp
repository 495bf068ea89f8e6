// laql: command-line front end.
//
//   laql run      --config exp.cfg --seed 7 --out results/
//   laql sweep    --config exp.cfg --axis tx_power --values 10,15,20,25
//   laql oracle   --config exp.cfg --seed 7 --out results/
//   laql predict  --config exp.cfg [--gps trace.csv] --out models/
//   laql la-bench --kappa 10 --steps 10000 --runs 100
//
// Exit status: 0 on success, otherwise the error category code
// (2 config, 3 domain, 4 parse, 5 too large, 6 diverged, 7 io, 1 other).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "laql/baselines.hpp"
#include "laql/config.hpp"
#include "laql/error.hpp"
#include "laql/harness.hpp"

namespace fs = std::filesystem;
using namespace laql;

namespace {

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string methods;
};

void add_common(CLI::App* sub, CommonOpts& o, bool with_methods) {
  sub->add_option("--config", o.config, "Experiment config (key = value text)")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Run a single seed instead of the configured list");
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  if (with_methods) {
    sub->add_option("--methods", o.methods, "Comma-separated: laql,eps_q,noncoop,random,optimal");
  }
}

ExperimentConfig resolve(const CommonOpts& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.methods.empty()) cfg.methods = parse_methods(o.methods);
  cfg.validate();
  return cfg;
}

ExperimentConfig sweep_config(const CommonOpts& o, const std::string& axis, const std::vector<double>& values) {
  ExperimentConfig cfg = resolve(o);
  if (axis == "tx_power") cfg.sweep_axis = SweepAxis::kTxPower;
  if (axis == "num_bs") cfg.sweep_axis = SweepAxis::kNumBs;
  if (axis == "num_users") cfg.sweep_axis = SweepAxis::kNumUsers;
  if (!values.empty()) cfg.sweep_values = values;
  cfg.validate();
  return cfg;
}

void report(const ExperimentConfig& cfg, const ExperimentResult& res, std::size_t points) {
  std::set<std::string> seen;
  for (const auto& n : res.notes) {
    if (seen.insert(n).second) std::cerr << "note: " << n << '\n';
  }
  for (std::size_t p = 0; p < points; ++p) {
    for (Method m : cfg.methods) {
      if (auto med = median_sum_mos(res.records, m, p)) {
        if (points > 1) std::printf("point %zu (%g) ", p, cfg.sweep_values[p]);
        std::printf("%-8s median sum MOS %.4f\n", std::string(method_name(m)).c_str(), *med);
      }
    }
  }
}

int run_main(int argc, char** argv) {
  CLI::App app{"Cooperative edge caching with learning-automata Q-learning"};
  app.require_subcommand(1);

  CommonOpts run_o;
  auto* run = app.add_subcommand("run", "Forecast, place and score every configured method");
  add_common(run, run_o, true);

  CommonOpts sweep_o;
  std::string axis;
  std::vector<double> values;
  auto* sw = app.add_subcommand("sweep", "Repeat the pipeline along one scenario axis");
  add_common(sw, sweep_o, true);
  sw->add_option("--axis", axis, "tx_power | num_bs | num_users")
      ->check(CLI::IsMember({"tx_power", "num_bs", "num_users"}));
  sw->add_option("--values", values, "Grid values (dBm for tx_power)")->delimiter(',');

  CommonOpts oracle_o;
  std::size_t oracle_slot = 0;
  std::size_t workers = 1;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive optimum for the realized slot state");
  add_common(oracle, oracle_o, false);
  oracle->add_option("--slot", oracle_slot, "Slot index")->capture_default_str();
  oracle->add_option("--workers", workers, "Enumeration threads")->capture_default_str();

  CommonOpts predict_o;
  std::string gps;
  std::size_t walk_steps = 500;
  auto* predict = app.add_subcommand("predict", "Train the mobility and popularity forecasters");
  add_common(predict, predict_o, false);
  predict->add_option("--gps", gps, "GPS CSV (timestamp,latitude,longitude)")->check(CLI::ExistingFile);
  predict->add_option("--steps", walk_steps, "Synthetic trace length")->capture_default_str();

  LaBenchConfig bench;
  std::string bench_out;
  auto* la = app.add_subcommand("la-bench", "Pursuit automaton in a stationary Bernoulli environment");
  la->add_option("--probs", bench.reward_probs, "Reward probability per action")->delimiter(',');
  la->add_option("--kappa", bench.kappa, "Resolution parameter")->capture_default_str();
  la->add_option("--steps", bench.steps, "Steps per run")->capture_default_str();
  la->add_option("--runs", bench.runs, "Independent runs")->capture_default_str();
  la->add_option("--seed", bench.seed, "Base seed")->capture_default_str();
  la->add_option("--out", bench_out, "Directory for la_bench.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorCategory::kConfig);
  }

  if (*run) {
    ExperimentConfig cfg = resolve(run_o);
    cfg.sweep_axis = SweepAxis::kNone;
    const auto res = run_pipeline(cfg);
    emit_outputs(res, run_o.out, cfg.curve_stride, cfg.emit_timing);
    report(cfg, res, 1);
  } else if (*sw) {
    ExperimentConfig cfg = sweep_config(sweep_o, axis, values);
    const auto res = sweep(cfg);
    emit_outputs(res, sweep_o.out, cfg.curve_stride, cfg.emit_timing);
    report(cfg, res, cfg.sweep_axis == SweepAxis::kNone ? 1 : cfg.sweep_values.size());
  } else if (*oracle) {
    const ExperimentConfig cfg = resolve(oracle_o);
    const std::uint64_t seed = cfg.seeds.front();
    const CachingEnv env = realized_env(cfg, seed, oracle_slot);
    fs::create_directories(oracle_o.out);
    OracleCache cache(fs::path(oracle_o.out) / "oracle_cache.csv");
    std::optional<OracleResult> hit = cache.find(env);
    if (!hit) {
      hit = optimal_exhaustive(env, cfg.oracle_cap, workers);
      cache.store(env, *hit);
    } else {
      std::cerr << "note: cached result\n";
    }
    std::printf("seed %llu slot %zu: optimum %s sum MOS %.6f (%llu placements)\n",
                static_cast<unsigned long long>(seed), oracle_slot, hit->placement.to_string().c_str(),
                hit->score, static_cast<unsigned long long>(hit->evaluations));
  } else if (*predict) {
    const ExperimentConfig cfg = resolve(predict_o);
    PredictOptions opt;
    opt.seed = cfg.seeds.front();
    opt.walk_steps = walk_steps;
    if (!gps.empty()) opt.gps_csv = gps;
    const auto res = run_predict(cfg, opt, fs::path(predict_o.out));
    std::printf("mobility   rmse epoch 1 %.6f -> epoch %zu %.6f\n", res.mobility.epoch_rmse.front(),
                res.mobility.epoch_rmse.size(), res.mobility.epoch_rmse.back());
    std::printf("popularity rmse epoch 1 %.6f -> epoch %zu %.6f\n", res.popularity.epoch_rmse.front(),
                res.popularity.epoch_rmse.size(), res.popularity.epoch_rmse.back());
  } else if (*la) {
    const auto runs = la_bench(bench);
    std::size_t converged = 0;
    for (const auto& r : runs) converged += r.converged ? 1 : 0;
    std::printf("kappa %u: %zu of %zu runs with p_best > 0.95 after %zu steps\n", bench.kappa, converged,
                runs.size(), bench.steps);
    if (!bench_out.empty()) {
      fs::create_directories(bench_out);
      std::FILE* f = std::fopen((fs::path(bench_out) / "la_bench.csv").string().c_str(), "wb");
      if (!f) throw IoError("cannot write la_bench.csv");
      std::fprintf(f, "run,p_best,converged\n");
      for (const auto& r : runs) std::fprintf(f, "%zu,%.12g,%d\n", r.run, r.p_best, r.converged ? 1 : 0);
      std::fclose(f);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
