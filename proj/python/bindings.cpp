#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "laql/baselines.hpp"
#include "laql/error.hpp"
#include "laql/harness.hpp"

namespace py = pybind11;
using namespace laql;

namespace {

py::int_ big(const BigInt& v) { return py::int_(py::module_::import("builtins").attr("int")(v.str())); }

NetworkScenario scenario_from(const std::vector<std::pair<double, double>>& bs,
                              const std::vector<std::pair<double, double>>& users, std::size_t slots,
                              std::size_t num_contents, double tx_power_dbm) {
  NetworkScenario sc;
  for (auto [x, y] : bs) sc.bs_positions.push_back({x, y});
  for (auto [x, y] : users) sc.user_positions.push_back({x, y});
  sc.cache_slots = slots;
  sc.num_contents = num_contents;
  sc.tx_power_w = dbm_to_watts(tx_power_dbm);
  return sc;
}

py::dict record_dict(const RunRecord& r) {
  py::dict d;
  d["method"] = std::string(method_name(r.method));
  d["sweep_value"] = r.sweep_value;
  d["seed"] = r.seed;
  d["slot"] = r.slot;
  d["sum_mos"] = r.sum_mos;
  d["iterations"] = r.iterations;
  d["feasible"] = r.feasible;
  d["placement"] = r.placement.to_string();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cooperative edge caching with learning-automaton-assisted Q-learning";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<TooLargeError>(m, "TooLargeError", PyExc_ValueError);
  py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "mos", [](double rate_bps) { return mos(rate_bps, QoeParams{}); }, py::arg("rate_bps"),
      "MOS of a web page fetched at `rate_bps` with the default page model.");
  m.def(
      "page_delay",
      [](double rate_bps) {
        const auto d = page_delay(rate_bps, QoeParams{});
        py::dict out;
        out["l1"] = d.l1;
        out["l2"] = d.l2;
        out["l_effective"] = d.l_effective;
        out["delay_s"] = d.delay_s;
        return out;
      },
      py::arg("rate_bps"));

  m.def(
      "sum_mos",
      [](const std::vector<std::pair<double, double>>& bs, const std::vector<std::pair<double, double>>& users,
         const std::vector<std::vector<std::uint32_t>>& placement, const std::vector<double>& popularity,
         double tx_power_dbm) {
        if (placement.empty()) throw ConfigError("placement has no rows");
        const auto sc = scenario_from(bs, users, placement.front().size(), popularity.size(), tx_power_dbm);
        const auto p = CachePlacement::from_one_based(placement, popularity.size());
        return sum_mos(sc, p, FadingRealization::expectation(sc.num_bs(), sc.num_users()), popularity);
      },
      py::arg("bs"), py::arg("users"), py::arg("placement"), py::arg("popularity"), py::arg("tx_power_dbm") = 20.0,
      "Sum MOS of users under a 1-based placement (one row per BS), expectation fading.");

  m.def(
      "optimal",
      [](const std::vector<std::pair<double, double>>& bs, const std::vector<std::pair<double, double>>& users,
         std::size_t slots, const std::vector<double>& popularity, double tx_power_dbm, std::uint64_t cap) {
        const auto sc = scenario_from(bs, users, slots, popularity.size(), tx_power_dbm);
        const CachingEnv env(sc, FadingRealization::expectation(sc.num_bs(), sc.num_users()), popularity);
        const auto r = optimal_exhaustive(env, cap);
        return py::make_tuple(r.placement.to_string(), r.score, r.evaluations);
      },
      py::arg("bs"), py::arg("users"), py::arg("slots"), py::arg("popularity"), py::arg("tx_power_dbm") = 20.0,
      py::arg("cap") = kDefaultEnumerationCap);

  m.def(
      "ops_budget",
      [](std::uint64_t f, std::uint64_t s, std::uint64_t mb) {
        const auto o = ops_budget(f, s, mb);
        return py::make_tuple(big(o.optimal), big(o.eps_greedy_q), big(o.laql));
      },
      py::arg("num_contents"), py::arg("slots"), py::arg("num_bs"),
      "(optimal, eps-greedy Q, LAQL) operation counts.");

  m.def(
      "la_bench",
      [](std::vector<double> probs, std::uint32_t kappa, std::size_t steps, std::size_t runs, std::uint64_t seed) {
        LaBenchConfig c{std::move(probs), kappa, steps, runs, seed};
        std::vector<double> out;
        for (const auto& r : la_bench(c)) out.push_back(r.p_best);
        return out;
      },
      py::arg("reward_probs") = std::vector<double>{0.8, 0.2}, py::arg("kappa") = 10, py::arg("steps") = 10000,
      py::arg("runs") = 100, py::arg("seed") = 1, "Final probability of the best arm for each run.");

  m.def(
      "run",
      [](const std::string& config_text, std::optional<std::uint64_t> seed) {
        ExperimentConfig cfg = parse_config(config_text, "<python>");
        if (seed) cfg.seeds = {*seed};
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = sweep(cfg);
        }
        py::list out;
        for (const auto& rec : r.records) out.append(record_dict(rec));
        return out;
      },
      py::arg("config_text") = "", py::arg("seed") = py::none(),
      "Runs the experiment described by key = value config text; returns one dict per record.");

  m.def("default_config", [] { return to_config_text(ExperimentConfig{}); });
}
