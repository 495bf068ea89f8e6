// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (capped at 255).
//
//   acceptance [--laql <exe> --config <cfg> --work <dir>]
//
// The optional arguments enable the two-process determinism check; without
// them the pipeline is run twice in-process.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "laql/baselines.hpp"
#include "laql/error.hpp"
#include "laql/harness.hpp"

using namespace laql;
namespace fs = std::filesystem;

namespace {

int g_failed = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail, double seconds) {
  std::printf("%s criterion %d: %s [%s] (%.1fs)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!ok) ++g_failed;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t converged_count(std::uint32_t kappa) {
  LaBenchConfig c;
  c.kappa = kappa;
  std::size_t hits = 0;
  for (const auto& r : la_bench(c)) hits += r.converged ? 1 : 0;
  return hits;
}

void automaton_optimality() {
  Stopwatch sw;
  const std::size_t k10 = converged_count(10);
  const std::size_t k100 = converged_count(100);
  report(1, k10 >= 95 && k100 >= k10, "pursuit automaton converges to the better arm",
         fmt("kappa=10: %zu/100 runs with p_best>0.95 (need >=95); kappa=100: %zu/100 (need >= kappa=10)", k10,
             k100),
         sw.seconds());
}

CachingEnv tiny_instance(std::uint64_t seed) {
  NetworkScenario sc;
  sc.bs_positions = bs_grid(2, 4000.0);
  sc.cache_slots = 2;
  sc.num_contents = 4;
  Rng rng(derive_seed(seed, {0xacce55}));
  for (std::size_t i = 0; i < 100; ++i) {
    sc.user_positions.push_back(
        sanitize_user_position({rng.uniform() * 4000.0, rng.uniform() * 4000.0}, sc.bs_positions, 4000.0));
  }
  return CachingEnv(sc, FadingRealization::expectation(2, 100), zipf_popularity(4, 0.8));
}

void oracle_proximity() {
  Stopwatch sw;
  AgentConfig cfg;
  cfg.episodes = 10;
  cfg.steps_per_episode = 1000;
  std::size_t within = 0;
  std::vector<double> laql, eps;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    CachingEnv env = tiny_instance(seed);
    const double best = optimal_exhaustive(env).score;
    const double a = train_laql(env, cfg, seed).best_sum_mos;
    const double b = train_qlearning(env, cfg, seed).best_sum_mos;
    within += a >= 0.98 * best ? 1 : 0;
    laql.push_back(a);
    eps.push_back(b);
  }
  const double ml = median(laql), me = median(eps);
  report(2, within >= 90 && ml >= me, "learner reaches the exhaustive optimum on the 256-state instance",
         fmt("%zu/100 seeds within 2%% of optimum (need >=90); median LAQL %.6f vs eps-greedy %.6f", within, ml, me),
         sw.seconds());
}

void scheme_ordering() {
  Stopwatch sw;
  ExperimentConfig cfg;
  cfg.scenario.cache_slots = 2;  // 10^4 placements: exhaustive search stays under the cap
  cfg.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) cfg.seeds.push_back(s);
  cfg.heatmap_resolution = 4;
  const ExperimentResult r = run_pipeline(cfg);
  auto med = [&](Method m) { return median_sum_mos(r.records, m).value_or(std::nan("")); };
  const double opt = med(Method::kOptimal), la = med(Method::kLaql), nc = med(Method::kNonCooperative),
               rnd = med(Method::kRandom);
  const bool ordered = opt >= la && la >= nc && nc >= rnd;
  const bool margins = la - rnd > 0.0 && la - nc > 0.0;
  report(3, ordered && margins, "median ordering optimal >= LAQL >= non-cooperative >= random",
         fmt("optimal %.6f, LAQL %.6f, non-coop %.6f, random %.6f; gap vs random %+.6f, gap vs non-coop %+.6f",
             opt, la, nc, rnd, la - rnd, la - nc),
         sw.seconds());
}

void ops_accounting() {
  Stopwatch sw;
  const OpsBudget o = ops_budget(10, 4, 10);
  const bool ok = o.optimal == BigInt("10000000000000000000000000000000000000000") && o.eps_greedy_q == 400 &&
                  o.laql == 32000;
  report(4, ok, "operation counts for F=10, S=4, M=10",
         "optimal " + o.optimal.str() + ", eps-greedy " + o.eps_greedy_q.str() + ", LAQL " + o.laql.str(),
         sw.seconds());
}

void predictor_correctness() {
  Stopwatch sw;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(seed, {0x9c}));
    for (const auto& shape : {kMobilityLayers, kPopularityLayers}) {
      const Mlp net = Mlp::init(shape, seed);
      std::vector<double> x(shape.front()), t(shape.back());
      for (auto& v : x) v = rng.uniform();
      for (auto& v : t) v = rng.uniform();
      worst = std::max(worst, gradient_check(net, x, t));
    }
  }
  ExperimentConfig cfg;
  cfg.forecast.epochs = 200;
  PredictOptions opt;
  opt.walk_steps = 500;
  const PredictResult pr = run_predict(cfg, opt);
  const double first = pr.mobility.epoch_rmse.front(), last = pr.mobility.epoch_rmse.back();
  report(5, worst < 1e-4 && last <= 0.5 * first, "gradient check and mobility training progress",
         fmt("max gradient relative error %.3g (need <1e-4); walk RMSE epoch 1 %.6g, epoch %zu %.6g, ratio %.3f "
             "(need <=0.5)",
             worst, first, pr.mobility.epoch_rmse.size(), last, last / first),
         sw.seconds());
}

void qoe_sanity() {
  Stopwatch sw;
  const QoeParams q;
  bool monotone = true, bounded = true;
  double prev = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double rate = std::pow(10.0, 4.0 + 4.0 * k / 99.0);
    const double m = mos(rate, q);
    bounded = bounded && m >= 1.0 && m <= 5.0;
    if (k > 0) monotone = monotone && m >= prev;
    prev = m;
  }
  QoeParams anchor;
  anchor.page_size_bits = 2.0 * anchor.mss_bits;  // no slow-start term
  const double rate = anchor.page_size_bits / (1.0 - 3.0 * anchor.rtt_s);
  const double delay = page_delay(rate, anchor).delay_s;
  const double at_one = mos(rate, anchor);
  const bool anchored = std::abs(delay - 1.0) <= 1e-12 && std::abs(at_one - anchor.c2) <= 1e-12;
  report(6, monotone && bounded && anchored, "MOS monotone, bounded and anchored at 1 s",
         fmt("monotone=%d bounded=%d; delay %.15f s gives MOS %.15f", monotone, bounded, delay, at_one),
         sw.seconds());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

void determinism(const std::string& exe, const std::string& config, const fs::path& work) {
  Stopwatch sw;
  fs::remove_all(work);
  const fs::path a = work / "a", b = work / "b";
  std::string how;
  bool ran = true;
  if (!exe.empty()) {
    how = "two CLI processes";
    for (const fs::path& d : {a, b}) {
      const std::string cmd = shell_quote(exe) + " run --config " + shell_quote(config) + " --seed 7 --out " +
                              shell_quote(d.string()) + " > /dev/null";
      ran = ran && std::system(cmd.c_str()) == 0;
    }
  } else {
    how = "two in-process runs";
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    cfg.seeds = {7};
    emit_outputs(run_pipeline(cfg), a, cfg.curve_stride);
    emit_outputs(run_pipeline(cfg), b, cfg.curve_stride);
  }
  std::size_t files = 0, same = 0;
  if (ran && fs::exists(a)) {
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      same += slurp(e.path()) == slurp(b / e.path().filename()) ? 1 : 0;
    }
  }
  report(7, ran && files >= 4 && same == files, "seeded runs are byte-identical",
         fmt("%s: %zu/%zu CSV files identical", how.c_str(), same, files), sw.seconds());
}

void bellman_fixpoint() {
  Stopwatch sw;
  AgentConfig cfg;
  QTable q(1);
  for (int k = 0; k < 200; ++k) q_update(q, "s", 0, 1.0, "s", cfg);
  const double v = q.get("s", 0);
  const double target = 1.0 / (1.0 - cfg.discount);
  report(8, std::abs(v - target) <= 1e-6, "repeated self-transition reaches 1/(1-gamma)",
         fmt("Q after 200 updates %.15f, target %.15f, error %.3g", v, target, std::abs(v - target)),
         sw.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  std::string exe, config;
  fs::path work = fs::temp_directory_path() / "laql_acceptance";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string k = argv[i];
    if (k == "--laql") exe = argv[i + 1];
    else if (k == "--config") config = argv[i + 1];
    else if (k == "--work") work = argv[i + 1];
  }
  try {
    automaton_optimality();
    oracle_proximity();
    scheme_ordering();
    ops_accounting();
    predictor_correctness();
    qoe_sanity();
    determinism(exe, config, work);
    bellman_fixpoint();
  } catch (const Error& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 255;
  }
  std::printf("%d criteria failed\n", g_failed);
  return std::min(g_failed, 255);
}
