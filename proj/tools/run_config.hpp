#ifndef SSA_TOOLS_RUN_CONFIG_HPP
#define SSA_TOOLS_RUN_CONFIG_HPP

// JSON run configuration for the command-line front-end.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssa/io.hpp"
#include "ssa/models.hpp"
#include "ssa/shadow.hpp"

namespace ssa::cli {

using nlohmann::json;

/// Invalid configuration; the message starts with the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what) : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ModelConfig {
  std::string kind = "strauss";  // strauss | area_interaction | candy | galaxy
  double r = 0.1;
  double resolution = 0.0;  // 0 selects the model default
  bool clip_to_window = false;
  CandyParams candy{};
  std::string spines;  // galaxy only; relative to the config file
  Window window = Window::unit_square();
};

struct SimulateConfig {
  long long n_samples = 1000;
  long long burn_in = 100000;
  long long steps_between = 1000;
};

struct ErrorsConfig {
  long long n_mc = 0;  // 0 disables the asymptotic error report
  long long burn_in = 100000;
  long long steps_between = 100;
};

struct RunConfig {
  ModelConfig model;
  std::optional<ParameterVector> theta;   // generating parameter (simulate)
  std::optional<PriorBox> prior;
  std::optional<SufficientStatistics> observed;
  std::string observed_pattern;           // alternative to `observed`
  std::optional<ParameterVector> theta0;  // defaults to the prior centre
  ShadowConfig shadow;
  Schedule schedule;
  SimulateConfig simulate;
  ErrorsConfig errors;
  std::uint64_t seed = 1;
  int chains = 1;
  std::string output_dir;
  std::filesystem::path base_dir;  // resolves relative file names
};

using AnyModel = std::variant<StraussModel, AreaInteractionModel, CandyModel, GalaxyModel>;

inline std::size_t model_dimension(const std::string& kind) {
  if (kind == "strauss" || kind == "area_interaction") return 2;
  if (kind == "candy") return 4;
  return 3;
}

inline std::filesystem::path resolve(const RunConfig& c, const std::string& file) {
  std::filesystem::path p(file);
  return p.is_relative() ? c.base_dir / p : p;
}

namespace detail {

inline void known_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(where.empty() ? it.key() : where + "." + it.key(), "unknown field");
}

inline const json& object(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "expected an object");
  return j;
}

inline double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

inline long long integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field, "expected an integer");
  return j.get<long long>();
}

inline std::vector<double> numbers(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  return v;
}

template <class T, class F>
void maybe(const json& j, const char* key, T& out, F&& conv, const std::string& where) {
  if (j.contains(key)) out = conv(j.at(key), where.empty() ? std::string(key) : where + "." + key);
}

inline std::vector<double> to_log(std::vector<double> v, const std::string& field) {
  for (auto& x : v) {
    if (!(x > 0.0)) throw ConfigError(field, "raw parameters must be positive");
    x = std::log(x);
  }
  return v;
}

inline void positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ConfigError(field, "must be positive");
}

inline void at_least(long long v, long long lo, const std::string& field) {
  if (v < lo) throw ConfigError(field, "must be at least " + std::to_string(lo));
}

}  // namespace detail

/// Parses and validates a configuration document. Raw parameterization
/// (`"parameterization": "raw"`) gives exp(theta) componentwise and is converted
/// to log form on input; prior bounds follow the same rule.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  RunConfig c;
  c.base_dir = base_dir;
  object(j, "config");
  known_keys(j, "", {"model", "parameterization", "theta", "prior", "observed", "theta0", "shadow", "schedule", "mix",
                     "simulate", "errors", "seed", "chains", "output_dir", "version"});

  if (!j.contains("model")) throw ConfigError("model", "missing");
  const json& m = object(j.at("model"), "model");
  known_keys(m, "model", {"kind", "r", "resolution", "clip_to_window", "window", "spines", "r_c", "tau_c", "r_r", "tau_r",
                          "length", "connection_needs_alignment"});
  if (!m.contains("kind") || !m.at("kind").is_string()) throw ConfigError("model.kind", "expected a string");
  c.model.kind = m.at("kind").get<std::string>();
  const auto& kind = c.model.kind;
  if (kind != "strauss" && kind != "area_interaction" && kind != "candy" && kind != "galaxy")
    throw ConfigError("model.kind", "must be strauss, area_interaction, candy or galaxy");
  const int dim = kind == "galaxy" ? 3 : 2;
  if (dim == 3) c.model.window = Window::box3({0, 0, 0}, {1, 1, 1});

  if (kind != "candy") {
    if (!m.contains("r")) throw ConfigError("model.r", "missing");
    c.model.r = number(m.at("r"), "model.r");
    positive(c.model.r, "model.r");
  } else if (m.contains("r")) {
    throw ConfigError("model.r", "not used by the candy model (see r_c, r_r)");
  }
  maybe(m, "resolution", c.model.resolution, number, "model");
  if (c.model.resolution < 0.0) throw ConfigError("model.resolution", "must be non-negative");
  if (m.contains("clip_to_window")) {
    if (!m.at("clip_to_window").is_boolean()) throw ConfigError("model.clip_to_window", "expected a boolean");
    c.model.clip_to_window = m.at("clip_to_window").get<bool>();
  }
  if (m.contains("window")) {
    const json& w = object(m.at("window"), "model.window");
    known_keys(w, "model.window", {"lower", "upper"});
    if (!w.contains("lower") || !w.contains("upper")) throw ConfigError("model.window", "needs lower and upper");
    const auto lo = numbers(w.at("lower"), "model.window.lower");
    const auto hi = numbers(w.at("upper"), "model.window.upper");
    if (lo.size() != static_cast<std::size_t>(dim) || hi.size() != static_cast<std::size_t>(dim))
      throw ConfigError("model.window", "bounds must have " + std::to_string(dim) + " components");
    for (int i = 0; i < dim; ++i)
      if (!(hi[i] > lo[i])) throw ConfigError("model.window", "upper bound must exceed lower bound");
    c.model.window = Window({lo[0], lo[1], dim == 3 ? lo[2] : 0.0}, {hi[0], hi[1], dim == 3 ? hi[2] : 0.0}, dim);
  }
  if (kind == "candy") {
    auto& p = c.model.candy;
    maybe(m, "r_c", p.r_c, number, "model");
    maybe(m, "tau_c", p.tau_c, number, "model");
    maybe(m, "r_r", p.r_r, number, "model");
    maybe(m, "tau_r", p.tau_r, number, "model");
    maybe(m, "length", p.length, number, "model");
    if (m.contains("connection_needs_alignment")) p.connection_needs_alignment = m.at("connection_needs_alignment").get<bool>();
    positive(p.r_c, "model.r_c");
    positive(p.r_r, "model.r_r");
    positive(p.length, "model.length");
    if (!(p.tau_c > 0.0 && p.tau_c <= std::numbers::pi / 2)) throw ConfigError("model.tau_c", "must lie in (0, pi/2]");
    if (!(p.tau_r > 0.0 && p.tau_r <= std::numbers::pi / 2)) throw ConfigError("model.tau_r", "must lie in (0, pi/2]");
  } else {
    for (const char* k : {"r_c", "tau_c", "r_r", "tau_r", "length", "connection_needs_alignment"})
      if (m.contains(k)) throw ConfigError(std::string("model.") + k, "only used by the candy model");
  }
  if (kind == "galaxy") {
    if (!m.contains("spines") || !m.at("spines").is_string()) throw ConfigError("model.spines", "galaxy model needs a spine file");
    c.model.spines = m.at("spines").get<std::string>();
    if (!std::filesystem::exists(resolve(c, c.model.spines)))
      throw ConfigError("model.spines", "file not found: " + resolve(c, c.model.spines).string());
  } else if (m.contains("spines")) {
    throw ConfigError("model.spines", "only used by the galaxy model");
  }

  const std::size_t k = model_dimension(kind);
  bool raw = false;
  if (j.contains("parameterization")) {
    const auto& p = j.at("parameterization");
    if (!p.is_string() || (p != "log" && p != "raw")) throw ConfigError("parameterization", "must be \"log\" or \"raw\"");
    raw = p == "raw";
  }
  auto param = [&](const json& v, const std::string& field) {
    auto x = numbers(v, field);
    if (x.size() != k) throw ConfigError(field, "expected " + std::to_string(k) + " components");
    return raw ? to_log(std::move(x), field) : x;
  };
  if (j.contains("theta")) c.theta = ParameterVector(param(j.at("theta"), "theta"));
  if (j.contains("prior")) {
    const json& p = object(j.at("prior"), "prior");
    known_keys(p, "prior", {"lower", "upper"});
    if (!p.contains("lower") || !p.contains("upper")) throw ConfigError("prior", "needs lower and upper");
    const auto lo = param(p.at("lower"), "prior.lower");
    const auto hi = param(p.at("upper"), "prior.upper");
    for (std::size_t i = 0; i < k; ++i)
      if (!(hi[i] > lo[i])) throw ConfigError("prior", "upper bound must exceed lower bound");
    c.prior = PriorBox(lo, hi);
  }
  if (j.contains("theta0")) {
    c.theta0 = ParameterVector(param(j.at("theta0"), "theta0"));
    if (c.prior && !c.prior->contains(*c.theta0)) throw ConfigError("theta0", "lies outside the prior box");
  }
  if (j.contains("observed")) {
    const json& o = object(j.at("observed"), "observed");
    known_keys(o, "observed", {"statistics", "pattern", "reported"});
    if (o.contains("statistics") == o.contains("pattern"))
      throw ConfigError("observed", "give exactly one of statistics or pattern");
    if (o.contains("statistics")) {
      auto t = numbers(o.at("statistics"), "observed.statistics");
      if (t.size() != k) throw ConfigError("observed.statistics", "expected " + std::to_string(k) + " components");
      if (o.value("reported", false) && kind == "galaxy") t[2] = -t[2];
      c.observed = SufficientStatistics(t);
    } else {
      if (!o.at("pattern").is_string()) throw ConfigError("observed.pattern", "expected a file name");
      c.observed_pattern = o.at("pattern").get<std::string>();
      if (!std::filesystem::exists(resolve(c, c.observed_pattern)))
        throw ConfigError("observed.pattern", "file not found: " + resolve(c, c.observed_pattern).string());
    }
  }

  c.shadow.n_outer = 1000000;
  c.shadow.keep_every = 1000;
  c.shadow.delta0.assign(k, 0.01);
  if (j.contains("shadow")) {
    const json& s = object(j.at("shadow"), "shadow");
    known_keys(s, "shadow", {"delta0", "m", "aux_steps", "n_outer", "keep_every"});
    if (s.contains("delta0")) {
      c.shadow.delta0 = numbers(s.at("delta0"), "shadow.delta0");
      if (c.shadow.delta0.size() != k) throw ConfigError("shadow.delta0", "expected " + std::to_string(k) + " components");
      for (double d : c.shadow.delta0) positive(d, "shadow.delta0");
    }
    maybe(s, "m", c.shadow.m, integer, "shadow");
    maybe(s, "aux_steps", c.shadow.aux_steps, integer, "shadow");
    maybe(s, "n_outer", c.shadow.n_outer, integer, "shadow");
    maybe(s, "keep_every", c.shadow.keep_every, integer, "shadow");
  }
  at_least(c.shadow.m, 1, "shadow.m");
  at_least(c.shadow.aux_steps, 1, "shadow.aux_steps");
  at_least(c.shadow.n_outer, 1, "shadow.n_outer");
  at_least(c.shadow.keep_every, 1, "shadow.keep_every");

  if (j.contains("schedule")) {
    const json& s = object(j.at("schedule"), "schedule");
    known_keys(s, "schedule", {"kind", "T0", "k_T", "k_delta", "K"});
    if (s.contains("kind")) {
      const auto& v = s.at("kind");
      if (v == "geometric") c.schedule.kind = ScheduleKind::geometric;
      else if (v == "logarithmic") c.schedule.kind = ScheduleKind::logarithmic;
      else if (v == "constant") c.schedule = Schedule::constant(1.0);
      else throw ConfigError("schedule.kind", "must be geometric, logarithmic or constant");
    }
    maybe(s, "T0", c.schedule.T0, number, "schedule");
    maybe(s, "k_T", c.schedule.k_T, number, "schedule");
    maybe(s, "k_delta", c.schedule.k_delta, number, "schedule");
    maybe(s, "K", c.schedule.K, number, "schedule");
  }
  positive(c.schedule.T0, "schedule.T0");
  if (!(c.schedule.k_T > 0.0 && c.schedule.k_T <= 1.0)) throw ConfigError("schedule.k_T", "must lie in (0, 1]");
  if (!(c.schedule.k_delta > 0.0 && c.schedule.k_delta <= 1.0)) throw ConfigError("schedule.k_delta", "must lie in (0, 1]");
  if (c.schedule.K < 0.0) throw ConfigError("schedule.K", "must be non-negative");

  if (j.contains("mix")) {
    const json& x = object(j.at("mix"), "mix");
    known_keys(x, "mix", {"birth", "death", "move"});
    maybe(x, "birth", c.shadow.mix.p_birth, number, "mix");
    maybe(x, "death", c.shadow.mix.p_death, number, "mix");
    maybe(x, "move", c.shadow.mix.p_move, number, "mix");
    const auto& mx = c.shadow.mix;
    if (mx.p_birth < 0 || mx.p_death < 0 || mx.p_move < 0 || std::abs(mx.p_birth + mx.p_death + mx.p_move - 1.0) > 1e-9)
      throw ConfigError("mix", "probabilities must be non-negative and sum to one");
    if (mx.p_birth == 0.0 || mx.p_death == 0.0) throw ConfigError("mix", "birth and death probabilities must be positive");
  }

  if (j.contains("simulate")) {
    const json& s = object(j.at("simulate"), "simulate");
    known_keys(s, "simulate", {"n_samples", "burn_in", "steps_between"});
    maybe(s, "n_samples", c.simulate.n_samples, integer, "simulate");
    maybe(s, "burn_in", c.simulate.burn_in, integer, "simulate");
    maybe(s, "steps_between", c.simulate.steps_between, integer, "simulate");
  }
  at_least(c.simulate.n_samples, 1, "simulate.n_samples");
  at_least(c.simulate.burn_in, 0, "simulate.burn_in");
  at_least(c.simulate.steps_between, 0, "simulate.steps_between");

  if (j.contains("errors")) {
    const json& s = object(j.at("errors"), "errors");
    known_keys(s, "errors", {"n_mc", "burn_in", "steps_between"});
    maybe(s, "n_mc", c.errors.n_mc, integer, "errors");
    maybe(s, "burn_in", c.errors.burn_in, integer, "errors");
    maybe(s, "steps_between", c.errors.steps_between, integer, "errors");
    if (c.errors.n_mc != 0) at_least(c.errors.n_mc, 100, "errors.n_mc");
    at_least(c.errors.burn_in, 0, "errors.burn_in");
    at_least(c.errors.steps_between, 1, "errors.steps_between");
  }

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.shadow.seed = c.seed;
  if (j.contains("chains")) {
    c.chains = static_cast<int>(integer(j.at("chains"), "chains"));
    at_least(c.chains, 1, "chains");
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir", "expected a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("--config", "cannot open " + file.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string(), std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, file.parent_path());
}

/// Fully resolved configuration, parameters in log form; parse_config(to_json(c)) == c.
inline json to_json(const RunConfig& c) {
  json m{{"kind", c.model.kind}};
  const auto& w = c.model.window;
  std::vector<double> lo{w.lower().x, w.lower().y}, hi{w.upper().x, w.upper().y};
  if (w.dim() == 3) {
    lo.push_back(w.lower().z);
    hi.push_back(w.upper().z);
  }
  m["window"] = {{"lower", lo}, {"upper", hi}};
  if (c.model.kind == "candy") {
    const auto& p = c.model.candy;
    m["r_c"] = p.r_c;
    m["tau_c"] = p.tau_c;
    m["r_r"] = p.r_r;
    m["tau_r"] = p.tau_r;
    m["length"] = p.length;
    m["connection_needs_alignment"] = p.connection_needs_alignment;
  } else {
    m["r"] = c.model.r;
  }
  if (c.model.kind == "area_interaction" || c.model.kind == "galaxy") {
    m["resolution"] = c.model.resolution;
    m["clip_to_window"] = c.model.clip_to_window;
  }
  if (c.model.kind == "galaxy") m["spines"] = resolve(c, c.model.spines).string();

  json j{{"model", m}, {"parameterization", "log"}};
  if (c.theta) j["theta"] = c.theta->values();
  if (c.prior) j["prior"] = {{"lower", c.prior->lower()}, {"upper", c.prior->upper()}};
  if (c.theta0) j["theta0"] = c.theta0->values();
  if (c.observed) j["observed"] = {{"statistics", c.observed->values()}};
  else if (!c.observed_pattern.empty()) j["observed"] = {{"pattern", resolve(c, c.observed_pattern).string()}};
  j["shadow"] = {{"delta0", c.shadow.delta0},
                 {"m", c.shadow.m},
                 {"aux_steps", c.shadow.aux_steps},
                 {"n_outer", c.shadow.n_outer},
                 {"keep_every", c.shadow.keep_every}};
  j["schedule"] = {{"kind", to_string(c.schedule.kind)},
                   {"T0", c.schedule.T0},
                   {"k_T", c.schedule.k_T},
                   {"k_delta", c.schedule.k_delta},
                   {"K", c.schedule.K}};
  j["mix"] = {{"birth", c.shadow.mix.p_birth}, {"death", c.shadow.mix.p_death}, {"move", c.shadow.mix.p_move}};
  j["simulate"] = {{"n_samples", c.simulate.n_samples}, {"burn_in", c.simulate.burn_in}, {"steps_between", c.simulate.steps_between}};
  j["errors"] = {{"n_mc", c.errors.n_mc}, {"burn_in", c.errors.burn_in}, {"steps_between", c.errors.steps_between}};
  j["seed"] = c.seed;
  j["chains"] = c.chains;
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

inline AnyModel build_model(const RunConfig& c) {
  const auto& m = c.model;
  if (m.kind == "strauss") return StraussModel(m.r);
  if (m.kind == "area_interaction") return AreaInteractionModel(m.r, m.resolution, m.clip_to_window);
  if (m.kind == "candy") return CandyModel(m.candy);
  const auto path = resolve(c, m.spines);
  std::ifstream in(path);
  if (!in) throw ConfigError("model.spines", "cannot open " + path.string());
  return GalaxyModel(m.r, read_spines_csv(in, path.string()), m.resolution, m.clip_to_window);
}

}  // namespace ssa::cli

#endif  // SSA_TOOLS_RUN_CONFIG_HPP
