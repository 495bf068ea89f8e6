#include "laql/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "laql/error.hpp"

namespace laql {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

// Thrown by value parsers; the caller adds the location.
struct BadValue {
  std::string what;
};

double to_double(std::string_view v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw BadValue{"expected a number, got '" + std::string(v) + "'"};
  }
  return out;
}

std::uint64_t to_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw BadValue{"expected a non-negative integer, got '" + std::string(v) + "'"};
  }
  return out;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw BadValue{"expected true or false, got '" + std::string(v) + "'"};
}

std::vector<std::size_t> to_sizes(std::string_view v) {
  std::vector<std::size_t> out;
  for (auto item : split_list(v)) out.push_back(static_cast<std::size_t>(to_u64(item)));
  return out;
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += f(xs[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      // scenario
      {"num_contents", [](auto& c, auto v) { c.scenario.num_contents = to_u64(v); }},
      {"num_bs", [](auto& c, auto v) { c.scenario.num_bs = to_u64(v); }},
      {"num_users", [](auto& c, auto v) { c.scenario.num_users = to_u64(v); }},
      {"cache_slots", [](auto& c, auto v) { c.scenario.cache_slots = to_u64(v); }},
      {"bandwidth_hz", [](auto& c, auto v) { c.scenario.bandwidth_hz = to_double(v); }},
      {"tx_power_dbm", [](auto& c, auto v) { c.scenario.tx_power_w = dbm_to_watts(to_double(v)); }},
      {"pathloss_exponent", [](auto& c, auto v) { c.scenario.pathloss_exponent = to_double(v); }},
      {"noise_dbm", [](auto& c, auto v) { c.scenario.noise_w = dbm_to_watts(to_double(v)); }},
      {"region_side_m", [](auto& c, auto v) { c.scenario.region_side_m = to_double(v); }},
      {"fronthaul_max_bps", [](auto& c, auto v) { c.scenario.fronthaul_max_bps = to_double(v); }},
      {"min_rate_bps", [](auto& c, auto v) { c.scenario.min_rate_bps = to_double(v); }},
      {"fading",
       [](auto& c, auto v) {
         if (v == "expectation") {
           c.scenario.fading = FadingMode::kExpectation;
         } else if (v == "rayleigh") {
           c.scenario.fading = FadingMode::kRayleigh;
         } else {
           throw BadValue{"fading must be expectation or rayleigh"};
         }
       }},
      // qoe
      {"rtt_s", [](auto& c, auto v) { c.qoe.rtt_s = to_double(v); }},
      {"page_size_bits", [](auto& c, auto v) { c.qoe.page_size_bits = to_double(v); }},
      {"mss_bits", [](auto& c, auto v) { c.qoe.mss_bits = to_double(v); }},
      {"c1", [](auto& c, auto v) { c.qoe.c1 = to_double(v); }},
      {"c2", [](auto& c, auto v) { c.qoe.c2 = to_double(v); }},
      // agent
      {"alpha", [](auto& c, auto v) { c.agent.learning_rate = to_double(v); }},
      {"gamma", [](auto& c, auto v) { c.agent.discount = to_double(v); }},
      {"epsilon", [](auto& c, auto v) { c.agent.epsilon = to_double(v); }},
      {"kappa", [](auto& c, auto v) { c.agent.kappa = static_cast<std::uint32_t>(to_u64(v)); }},
      {"episodes", [](auto& c, auto v) { c.agent.episodes = to_u64(v); }},
      {"steps_per_episode", [](auto& c, auto v) { c.agent.steps_per_episode = to_u64(v); }},
      {"stability_window", [](auto& c, auto v) { c.agent.stability_window = to_u64(v); }},
      {"infeasible_penalty", [](auto& c, auto v) { c.agent.infeasible_penalty = to_bool(v); }},
      {"reward_mode",
       [](auto& c, auto v) {
         if (v == "binary") {
           c.agent.reward_mode = RewardMode::kBinary;
         } else if (v == "shaped") {
           c.agent.reward_mode = RewardMode::kShaped;
         } else {
           throw BadValue{"reward_mode must be binary or shaped"};
         }
       }},
      // demand
      {"user_step_sigma_m", [](auto& c, auto v) { c.demand.user_step_sigma_m = to_double(v); }},
      {"popularity_jitter", [](auto& c, auto v) { c.demand.popularity_jitter = to_double(v); }},
      {"zipf_exponent", [](auto& c, auto v) { c.demand.zipf_exponent = to_double(v); }},
      {"history_steps", [](auto& c, auto v) { c.demand.history_steps = to_u64(v); }},
      // predictor
      {"forecast",
       [](auto& c, auto v) {
         if (v == "nn") {
           c.forecast.mode = ForecastMode::kNeuralNet;
         } else if (v == "persistence") {
           c.forecast.mode = ForecastMode::kPersistence;
         } else if (v == "truth") {
           c.forecast.mode = ForecastMode::kTruth;
         } else {
           throw BadValue{"forecast must be nn, persistence or truth"};
         }
       }},
      {"predictor_epochs", [](auto& c, auto v) { c.forecast.epochs = to_u64(v); }},
      {"predictor_learning_rate", [](auto& c, auto v) { c.forecast.learning_rate = to_double(v); }},
      {"mobility_window", [](auto& c, auto v) { c.forecast.mobility_window = to_u64(v); }},
      {"popularity_window", [](auto& c, auto v) { c.forecast.popularity_window = to_u64(v); }},
      {"mobility_hidden", [](auto& c, auto v) { c.forecast.mobility_hidden = to_sizes(v); }},
      {"popularity_hidden", [](auto& c, auto v) { c.forecast.popularity_hidden = to_sizes(v); }},
      // run
      {"methods", [](auto& c, auto v) { c.methods = parse_methods(v); }},
      {"seeds",
       [](auto& c, auto v) {
         c.seeds.clear();
         for (auto item : split_list(v)) c.seeds.push_back(to_u64(item));
       }},
      {"slots", [](auto& c, auto v) { c.slots = to_u64(v); }},
      {"oracle_cap", [](auto& c, auto v) { c.oracle_cap = to_u64(v); }},
      {"sweep_axis",
       [](auto& c, auto v) {
         if (v == "none") {
           c.sweep_axis = SweepAxis::kNone;
         } else if (v == "tx_power") {
           c.sweep_axis = SweepAxis::kTxPower;
         } else if (v == "num_bs") {
           c.sweep_axis = SweepAxis::kNumBs;
         } else if (v == "num_users") {
           c.sweep_axis = SweepAxis::kNumUsers;
         } else {
           throw BadValue{"sweep_axis must be none, tx_power, num_bs or num_users"};
         }
       }},
      {"sweep_values",
       [](auto& c, auto v) {
         c.sweep_values.clear();
         for (auto item : split_list(v)) c.sweep_values.push_back(to_double(item));
       }},
      {"heatmap_resolution", [](auto& c, auto v) { c.heatmap_resolution = to_u64(v); }},
      {"curve_stride", [](auto& c, auto v) { c.curve_stride = to_u64(v); }},
      {"threads", [](auto& c, auto v) { c.threads = to_u64(v); }},
      {"emit_timing", [](auto& c, auto v) { c.emit_timing = to_bool(v); }},
  };
  return table;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kLaql: return "laql";
    case Method::kEpsGreedy: return "eps_q";
    case Method::kNonCooperative: return "noncoop";
    case Method::kRandom: return "random";
    case Method::kOptimal: return "optimal";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::kLaql, Method::kEpsGreedy, Method::kNonCooperative, Method::kRandom,
                   Method::kOptimal}) {
    if (text == method_name(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected laql, eps_q, noncoop, random or optimal)");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  for (auto item : split_list(list)) {
    const Method m = parse_method(item);
    for (Method seen : out) {
      if (seen == m) throw ConfigError("method '" + std::string(item) + "' listed twice");
    }
    out.push_back(m);
  }
  return out;
}

std::string_view sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::kNone: return "none";
    case SweepAxis::kTxPower: return "tx_power";
    case SweepAxis::kNumBs: return "num_bs";
    case SweepAxis::kNumUsers: return "num_users";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  const auto& s = scenario;
  if (s.num_contents == 0 || s.num_bs == 0 || s.num_users == 0 || s.cache_slots == 0) {
    throw ConfigError("num_contents, num_bs, num_users and cache_slots must be positive");
  }
  if (s.cache_slots * s.num_bs > s.num_contents) {
    throw ConfigError("cache_slots * num_bs must not exceed num_contents");
  }
  if (!(s.bandwidth_hz > 0.0) || !(s.tx_power_w > 0.0) || !(s.noise_w > 0.0)) {
    throw ConfigError("bandwidth, transmit power and noise power must be positive");
  }
  if (!(s.pathloss_exponent >= 2.0)) throw ConfigError("pathloss_exponent must be at least 2");
  if (!(s.region_side_m > 2.0 * kMinLinkDistance)) throw ConfigError("region_side_m is too small");
  if (!(s.fronthaul_max_bps > 0.0)) throw ConfigError("fronthaul_max_bps must be positive");
  if (!(s.min_rate_bps >= 0.0)) throw ConfigError("min_rate_bps must be non-negative");
  qoe.validate();
  agent.validate();
  if (!(demand.user_step_sigma_m >= 0.0) || !(demand.popularity_jitter >= 0.0)) {
    throw ConfigError("user_step_sigma_m and popularity_jitter must be non-negative");
  }
  if (!(demand.zipf_exponent >= 0.0)) throw ConfigError("zipf_exponent must be non-negative");
  if (forecast.mobility_window == 0 || forecast.popularity_window == 0) {
    throw ConfigError("forecast windows must be positive");
  }
  if (forecast.mode == ForecastMode::kNeuralNet) {
    if (demand.history_steps < forecast.mobility_window + 1 ||
        demand.history_steps < forecast.popularity_window + 1) {
      throw ConfigError("history_steps must exceed both forecast windows");
    }
    if (forecast.mobility_hidden.empty() || forecast.popularity_hidden.empty()) {
      throw ConfigError("predictor networks need at least one hidden layer");
    }
    for (auto h : forecast.mobility_hidden) {
      if (h == 0) throw ConfigError("hidden layer sizes must be positive");
    }
    for (auto h : forecast.popularity_hidden) {
      if (h == 0) throw ConfigError("hidden layer sizes must be positive");
    }
    if (forecast.epochs == 0 || !(forecast.learning_rate > 0.0)) {
      throw ConfigError("predictor_epochs and predictor_learning_rate must be positive");
    }
  } else if (demand.history_steps == 0) {
    throw ConfigError("history_steps must be positive");
  }
  if (methods.empty()) throw ConfigError("no methods selected");
  if (seeds.empty()) throw ConfigError("no seeds given");
  if (slots == 0) throw ConfigError("slots must be positive");
  if (curve_stride == 0) throw ConfigError("curve_stride must be positive");
  if (heatmap_resolution == 0) throw ConfigError("heatmap_resolution must be positive");
  if (sweep_axis != SweepAxis::kNone) {
    if (sweep_values.empty()) throw ConfigError("sweep_axis set but sweep_values is empty");
    if (sweep_axis != SweepAxis::kTxPower) {
      for (double v : sweep_values) {
        if (!(v >= 1.0) || v != std::floor(v)) {
          throw ConfigError("num_bs / num_users sweep values must be positive integers");
        }
        if (sweep_axis == SweepAxis::kNumBs &&
            static_cast<std::size_t>(v) * s.cache_slots > s.num_contents) {
          throw ConfigError("num_bs sweep value violates cache_slots * num_bs <= num_contents");
        }
      }
    }
  }
}

ExperimentConfig parse_config(std::string_view text, std::string_view origin) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError(where + "unknown key '" + std::string(key) + "'");
    if (value.empty()) throw ParseError(where + "missing value for '" + std::string(key) + "'");
    try {
      it->second(cfg, value);
    } catch (const BadValue& e) {
      throw ParseError(where + std::string(key) + ": " + e.what);
    } catch (const ConfigError& e) {
      throw ParseError(where + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto num = [](std::uint64_t v) { return std::to_string(v); };
  const auto& s = c.scenario;
  kv("num_contents", num(s.num_contents));
  kv("num_bs", num(s.num_bs));
  kv("num_users", num(s.num_users));
  kv("cache_slots", num(s.cache_slots));
  kv("bandwidth_hz", fmt_double(s.bandwidth_hz));
  kv("tx_power_dbm", fmt_double(watts_to_dbm(s.tx_power_w)));
  kv("pathloss_exponent", fmt_double(s.pathloss_exponent));
  kv("noise_dbm", fmt_double(watts_to_dbm(s.noise_w)));
  kv("region_side_m", fmt_double(s.region_side_m));
  kv("fronthaul_max_bps", fmt_double(s.fronthaul_max_bps));
  kv("min_rate_bps", fmt_double(s.min_rate_bps));
  kv("fading", s.fading == FadingMode::kRayleigh ? "rayleigh" : "expectation");
  kv("rtt_s", fmt_double(c.qoe.rtt_s));
  kv("page_size_bits", fmt_double(c.qoe.page_size_bits));
  kv("mss_bits", fmt_double(c.qoe.mss_bits));
  kv("c1", fmt_double(c.qoe.c1));
  kv("c2", fmt_double(c.qoe.c2));
  kv("alpha", fmt_double(c.agent.learning_rate));
  kv("gamma", fmt_double(c.agent.discount));
  kv("epsilon", fmt_double(c.agent.epsilon));
  kv("kappa", num(c.agent.kappa));
  kv("episodes", num(c.agent.episodes));
  kv("steps_per_episode", num(c.agent.steps_per_episode));
  kv("stability_window", num(c.agent.stability_window));
  kv("infeasible_penalty", c.agent.infeasible_penalty ? "true" : "false");
  kv("reward_mode", c.agent.reward_mode == RewardMode::kShaped ? "shaped" : "binary");
  kv("user_step_sigma_m", fmt_double(c.demand.user_step_sigma_m));
  kv("popularity_jitter", fmt_double(c.demand.popularity_jitter));
  kv("zipf_exponent", fmt_double(c.demand.zipf_exponent));
  kv("history_steps", num(c.demand.history_steps));
  const char* fc = c.forecast.mode == ForecastMode::kNeuralNet     ? "nn"
                   : c.forecast.mode == ForecastMode::kPersistence ? "persistence"
                                                                    : "truth";
  kv("forecast", fc);
  kv("predictor_epochs", num(c.forecast.epochs));
  kv("predictor_learning_rate", fmt_double(c.forecast.learning_rate));
  kv("mobility_window", num(c.forecast.mobility_window));
  kv("popularity_window", num(c.forecast.popularity_window));
  const std::function<std::string(const std::size_t&)> size_str = [](const std::size_t& v) {
    return std::to_string(v);
  };
  kv("mobility_hidden", join(c.forecast.mobility_hidden, size_str));
  kv("popularity_hidden", join(c.forecast.popularity_hidden, size_str));
  kv("methods", join<Method>(c.methods, [](const Method& m) { return std::string(method_name(m)); }));
  kv("seeds", join<std::uint64_t>(c.seeds, [](const std::uint64_t& v) { return std::to_string(v); }));
  kv("slots", num(c.slots));
  kv("oracle_cap", num(c.oracle_cap));
  kv("sweep_axis", std::string(sweep_axis_name(c.sweep_axis)));
  if (!c.sweep_values.empty()) {
    kv("sweep_values", join<double>(c.sweep_values, [](const double& v) { return fmt_double(v); }));
  }
  kv("heatmap_resolution", num(c.heatmap_resolution));
  kv("curve_stride", num(c.curve_stride));
  kv("threads", num(c.threads));
  kv("emit_timing", c.emit_timing ? "true" : "false");
  return os.str();
}

}  // namespace laql
