#ifndef SSA_TOOLS_CLI_APP_HPP
#define SSA_TOOLS_CLI_APP_HPP

// Subcommands: simulate, stats, ssa, abc-shadow, analyze.
// Exit codes: 0 ok, 1 I/O failure, 2 configuration or input error, 3 contract violation.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "run_config.hpp"
#include "ssa/analysis.hpp"
#include "ssa/io.hpp"
#include "ssa/mh_sampler.hpp"
#include "ssa/shadow.hpp"

#ifndef SSA_VERSION
#define SSA_VERSION "dev"
#endif

namespace ssa::cli {

inline constexpr const char* kOutputEnv = "SSA_OUTPUT_DIR";

enum ExitCode { ok = 0, io_error = 1, config_error = 2, contract_error = 3 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config;
  std::string replay;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
};

namespace detail {

inline std::filesystem::path output_dir(const CommonOptions& o, const RunConfig* c) {
  if (!o.out.empty()) return o.out;
  if (c && !c->output_dir.empty()) return resolve(*c, c->output_dir);
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "ssa_output";
}

inline std::ofstream open_out(const std::filesystem::path& file) {
  std::error_code ec;
  std::filesystem::create_directories(file.parent_path(), ec);
  std::ofstream f(file, std::ios::binary);
  if (!f) throw IoError("cannot write " + file.string());
  return f;
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
  auto f = open_out(file);
  f << text;
  if (!f) throw IoError("write failed: " + file.string());
}

inline RunConfig load(const CommonOptions& o) {
  RunConfig c;
  if (!o.replay.empty()) {
    std::ifstream in(o.replay);
    if (!in) throw ConfigError("--replay", "cannot open " + o.replay);
    json meta;
    try {
      meta = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("--replay", std::string("malformed JSON: ") + e.what());
    }
    if (!meta.contains("config")) throw ConfigError("--replay", "metadata has no config block");
    c = parse_config(meta.at("config"), std::filesystem::path(o.replay).parent_path());
  } else if (!o.config.empty()) {
    c = load_config(o.config);
  } else {
    throw ConfigError("--config", "a configuration file is required");
  }
  if (o.seed) {
    c.seed = *o.seed;
    c.shadow.seed = *o.seed;
  }
  if (o.chains) {
    if (*o.chains < 1) throw ConfigError("--chains", "must be at least 1");
    c.chains = *o.chains;
  }
  return c;
}

inline json metadata(const std::string& command, const RunConfig& c, const std::vector<std::string>& outputs) {
  return json{{"command", command}, {"version", SSA_VERSION}, {"config", to_json(c)}, {"outputs", outputs}};
}

template <class M>
Pattern read_pattern_file(const M& model, const Window& w, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  double length = 0.0;
  if constexpr (std::is_same_v<M, CandyModel>) length = model.params().length;
  return read_pattern_csv(in, w, model.item_kind(), length, file.string());
}

template <class M>
std::vector<typename M::Item> empty_items(const M&) {
  return {};
}

inline std::string csv_row(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s + "\n";
}

inline std::vector<std::string> parameter_labels(std::size_t k) {
  std::vector<std::string> l;
  for (std::size_t i = 1; i <= k; ++i) l.push_back("theta_" + std::to_string(i));
  return l;
}

inline std::string quartile_table(const SampleMatrix& s) {
  const double q[] = {0.25, 0.5, 0.75};
  const auto Q = quantiles(s, q);
  std::string t = "parameter,Q25,Q50,Q75\n";
  for (std::size_t j = 0; j < s.cols(); ++j)
    t += s.labels()[j] + "," + format_double(Q[0][j]) + "," + format_double(Q[1][j]) + "," + format_double(Q[2][j]) + "\n";
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_simulate(const CommonOptions& o, std::ostream& out) {
  const RunConfig c = detail::load(o);
  if (!c.theta) throw ConfigError("theta", "simulate needs the generating parameter");
  const auto dir = detail::output_dir(o, &c);
  const AnyModel any = build_model(c);
  return std::visit(
      [&](const auto& model) {
        ChainSettings cs{c.simulate.burn_in, c.simulate.steps_between, c.seed, c.shadow.mix};
        const auto res = mean_statistics(model, *c.theta, c.simulate.n_samples, cs, c.model.window);
        const auto names = model.statistic_names();
        std::string stats = detail::csv_row(names);
        for (const auto& row : res.rows) stats += join_doubles(row) + "\n";
        detail::write_text(dir / "statistics.csv", stats);
        {
          auto f = detail::open_out(dir / "pattern.csv");
          write_pattern_csv(f, res.final_pattern);
        }
        detail::write_text(dir / "metadata.json",
                           detail::metadata("simulate", c, {"statistics.csv", "pattern.csv"}).dump(2) + "\n");
        out << "statistic,mean,sd,mcse\n";
        for (std::size_t i = 0; i < names.size(); ++i) {
          std::vector<double> col;
          for (const auto& row : res.rows) col.push_back(row[i]);
          const double mcse = col.size() >= 4 ? batch_means_mcse(col) : 0.0;
          out << names[i] << ',' << format_double(res.mean[i]) << ',' << format_double(res.sd[i]) << ','
              << format_double(mcse) << '\n';
        }
        return ok;
      },
      any);
}

inline int cmd_stats(const CommonOptions& o, const std::string& pattern_file, const std::vector<double>& radii,
                     std::ostream& out) {
  RunConfig c = detail::load(o);
  if (pattern_file.empty()) throw ConfigError("--pattern", "a pattern file is required");
  if (!radii.empty() && c.model.kind == "candy") throw ConfigError("--radii", "the candy model has no radius");
  for (double r : radii)
    if (!(r > 0.0)) throw ConfigError("--radii", "radii must be positive");
  std::vector<double> rs = radii.empty() ? std::vector<double>{c.model.r} : radii;
  std::string table;
  bool first = true;
  for (double r : rs) {
    c.model.r = r;
    const AnyModel any = build_model(c);
    std::visit(
        [&](const auto& model) {
          using M = std::decay_t<decltype(model)>;
          const Pattern p = detail::read_pattern_file(model, c.model.window, pattern_file);
          auto t = sufficient_statistics(model, p);
          auto names = model.statistic_names();
          if constexpr (std::is_same_v<M, GalaxyModel>) {
            t = GalaxyModel::reported(t);
            names = {"n", "d_F", "a_r"};
          }
          if (first) {
            if constexpr (!std::is_same_v<M, CandyModel>) names.insert(names.begin(), "r");
            table += detail::csv_row(names);
            first = false;
          }
          if constexpr (!std::is_same_v<M, CandyModel>) table += format_double(r) + ",";
          table += join_doubles(t.values()) + "\n";
        },
        any);
  }
  if (!o.out.empty()) {
    detail::write_text(o.out, table);
  } else {
    out << table;
  }
  return ok;
}

inline int cmd_shadow(const CommonOptions& o, bool anneal, std::ostream& out) {
  const RunConfig c = detail::load(o);
  const std::string command = anneal ? "ssa" : "abc-shadow";
  if (!c.prior) throw ConfigError("prior", "missing");
  if (!c.observed && c.observed_pattern.empty()) throw ConfigError("observed", "missing");
  const auto dir = detail::output_dir(o, &c);
  const AnyModel any = build_model(c);
  const std::size_t k = model_dimension(c.model.kind);
  const ParameterVector theta0 = c.theta0 ? *c.theta0 : c.prior->center();
  const Schedule schedule = anneal ? c.schedule : Schedule::constant(1.0);

  std::vector<SsaTrajectory> runs(static_cast<std::size_t>(c.chains));
  std::visit(
      [&](const auto& model) {
        SufficientStatistics t_obs = c.observed ? *c.observed : SufficientStatistics{};
        if (!c.observed)
          t_obs = sufficient_statistics(model, detail::read_pattern_file(model, c.model.window, resolve(c, c.observed_pattern)));
        std::vector<std::exception_ptr> errors(runs.size());
        std::vector<std::thread> pool;
        for (std::size_t ch = 0; ch < runs.size(); ++ch) {
          pool.emplace_back([&, ch] {
            try {
              ShadowConfig sc = c.shadow;
              sc.seed = c.seed + ch;
              runs[ch] = ssa_run(model, c.model.window, t_obs, *c.prior, theta0, sc, schedule, detail::empty_items(model));
            } catch (...) {
              errors[ch] = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      },
      any);

  std::vector<std::string> outputs;
  std::vector<ParameterVector> pooled;
  std::string hats = detail::csv_row([&] {
    auto h = detail::parameter_labels(k);
    h.insert(h.begin(), "chain");
    return h;
  }());
  for (std::size_t ch = 0; ch < runs.size(); ++ch) {
    const std::string name = "trajectory_" + std::to_string(ch + 1) + ".csv";
    {
      auto f = detail::open_out(dir / name);
      write_trajectory_csv(f, runs[ch], k);
    }
    outputs.push_back(name);
    for (const auto& r : runs[ch].rows) pooled.push_back(r.theta);
    hats += std::to_string(ch + 1) + "," + join_doubles(runs[ch].theta_hat.values()) + "\n";
  }
  detail::write_text(dir / "theta_hat.csv", hats);
  outputs.push_back("theta_hat.csv");
  if (!pooled.empty()) {
    detail::write_text(dir / "quartiles.csv", detail::quartile_table(SampleMatrix::from_parameters(pooled, detail::parameter_labels(k))));
    outputs.push_back("quartiles.csv");
  }
  detail::write_text(dir / "metadata.json", detail::metadata(command, c, outputs).dump(2) + "\n");
  out << command << ": " << runs.size() << " chain(s), outputs in " << dir.string() << "\n" << hats;
  return ok;
}

struct AnalyzeOptions {
  std::vector<std::string> files;
  double burn_in_fraction = 0.0;
  std::vector<double> mu0;
  bool map = false;
  double bandwidth = 0.0;
  long long n_mc = 0;
};

inline int cmd_analyze(const CommonOptions& o, const AnalyzeOptions& a, std::ostream& out) {
  if (a.files.empty()) throw ConfigError("files", "at least one trajectory file is required");
  if (!(a.burn_in_fraction >= 0.0 && a.burn_in_fraction < 1.0)) throw ConfigError("--burn-in-fraction", "must lie in [0, 1)");
  if (a.bandwidth < 0.0) throw ConfigError("--bandwidth", "must be positive");

  std::vector<std::vector<TrajectoryRow>> chains;
  std::size_t k = 0;
  for (const auto& f : a.files) {
    std::ifstream in(f);
    if (!in) throw IoError("cannot open " + f);
    auto rows = read_trajectory_csv(in, f);
    if (rows.empty()) throw ConfigError(f, "trajectory has no rows");
    if (k == 0) k = rows.front().theta.size();
    if (rows.front().theta.size() != k) throw ConfigError(f, "parameter dimension differs from " + a.files.front());
    const auto drop = static_cast<std::size_t>(std::floor(a.burn_in_fraction * static_cast<double>(rows.size())));
    rows.erase(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(std::min(drop, rows.size() - 1)));
    chains.push_back(std::move(rows));
  }
  if (!a.mu0.empty() && a.mu0.size() != k) throw ConfigError("--mu0", "expected " + std::to_string(k) + " values");

  const auto labels = detail::parameter_labels(k);
  std::vector<ParameterVector> pooled;
  for (const auto& ch : chains)
    for (const auto& r : ch) pooled.push_back(r.theta);
  const SampleMatrix all = SampleMatrix::from_parameters(pooled, labels);
  const auto dir = detail::output_dir(o, nullptr);
  std::vector<std::string> outputs;
  std::ostringstream summary;

  const std::string quart = detail::quartile_table(all);
  detail::write_text(dir / "quartiles.csv", quart);
  outputs.push_back("quartiles.csv");
  summary << "samples: " << all.rows() << " from " << chains.size() << " chain(s)\n\nquartiles\n" << quart;

  std::string box = "chain,parameter,min,Q25,Q50,Q75,max\n";
  const double qs[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (std::size_t c = 0; c < chains.size(); ++c) {
    std::vector<ParameterVector> v;
    for (const auto& r : chains[c]) v.push_back(r.theta);
    const auto Q = quantiles(SampleMatrix::from_parameters(v, labels), qs);
    for (std::size_t j = 0; j < k; ++j) {
      box += std::to_string(c + 1) + "," + labels[j];
      for (const auto& row : Q) box += "," + format_double(row[j]);
      box += "\n";
    }
  }
  detail::write_text(dir / "boxplot.csv", box);
  outputs.push_back("boxplot.csv");

  if (a.map) {
    std::string t = "parameter,map,bandwidth\n";
    for (std::size_t j = 0; j < k; ++j) {
      const auto col = all.column(j);
      if (col.size() < 2) throw ConfigError("--map", "needs at least two samples");
      double h = a.bandwidth;
      if (h == 0.0) h = default_bandwidth(col);
      const double mode = h > 0.0 ? epanechnikov_map(col, h) : col.front();
      t += labels[j] + "," + format_double(mode) + "," + format_double(h) + "\n";
    }
    detail::write_text(dir / "map.csv", t);
    outputs.push_back("map.csv");
    summary << "\nkernel density MAP\n" << t;
  }

  if (!a.mu0.empty()) {
    std::string t = "parameter,mu0,mean,t,p_value\n";
    for (std::size_t j = 0; j < k; ++j) {
      const auto col = all.column(j);
      if (col.size() < 2) throw ConfigError("--mu0", "t test needs at least two samples");
      const auto r = one_sample_t_test(col, a.mu0[j]);
      t += labels[j] + "," + format_double(a.mu0[j]) + "," + format_double(mean(col)) + "," + format_double(r.t) + "," +
           format_double(r.p_value) + "\n";
    }
    detail::write_text(dir / "ttest.csv", t);
    outputs.push_back("ttest.csv");
    summary << "\nStudent tests\n" << t;
  }

  if (!o.config.empty() || !o.replay.empty()) {
    RunConfig c = detail::load(o);
    if (a.n_mc > 0) c.errors.n_mc = a.n_mc;
    if (c.errors.n_mc < 100) throw ConfigError("errors.n_mc", "set errors.n_mc (>= 100) or --n-mc to compute errors");
    if (model_dimension(c.model.kind) != k) throw ConfigError("model.kind", "dimension differs from the trajectories");
    ParameterVector hat(k);
    for (const auto& ch : chains) hat += ch.back().theta;
    for (std::size_t j = 0; j < k; ++j) hat[j] /= static_cast<double>(chains.size());
    const AnyModel any = build_model(c);
    const ErrorReport rep = std::visit(
        [&](const auto& model) {
          ChainSettings cs{c.errors.burn_in, c.errors.steps_between, c.seed, c.shadow.mix};
          return asymptotic_errors(model, c.model.window, hat, c.errors.n_mc, cs);
        },
        any);
    std::string t = "parameter,theta_hat,sigma,sigma_mc,n_mc\n";
    for (std::size_t j = 0; j < k; ++j)
      t += labels[j] + "," + format_double(hat[j]) + "," + format_double(rep.sigma[j]) + "," +
           format_double(rep.sigma_mc[j]) + "," + std::to_string(rep.n_mc) + "\n";
    detail::write_text(dir / "errors.csv", t);
    outputs.push_back("errors.csv");
    summary << "\nasymptotic errors at the mean final state\n" << t;
    if (rep.singular) summary << "warning: singular Fisher information, pseudo-inverse used\n";
  }

  std::ostringstream py;
  py << "import csv\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n"
     << "files = [";
  for (std::size_t i = 0; i < a.files.size(); ++i)
    py << (i ? ", " : "") << json(std::filesystem::absolute(a.files[i]).string()).dump();
  py << "]\nk = " << k << "\n\n"
     << "def load(path):\n"
     << "    with open(path) as f:\n"
     << "        rows = [r for r in csv.DictReader(l for l in f if not l.startswith('#'))]\n"
     << "    return [int(r['iter']) for r in rows], [[float(r['theta_%d' % (j + 1)]) for r in rows] for j in range(k)]\n\n"
     << "data = [load(f) for f in files]\n"
     << "fig, axes = plt.subplots(k, 2, figsize=(10, 2.5 * k), squeeze=False)\n"
     << "for j in range(k):\n"
     << "    for it, th in data:\n"
     << "        axes[j][0].plot(it, th[j], lw=0.8)\n"
     << "    axes[j][0].set_ylabel('theta_%d' % (j + 1))\n"
     << "    axes[j][1].boxplot([th[j] for _, th in data])\n"
     << "axes[-1][0].set_xlabel('iteration')\n"
     << "axes[-1][1].set_xlabel('chain')\n"
     << "fig.tight_layout()\n"
     << "fig.savefig('trajectories.png', dpi=150)\n";
  detail::write_text(dir / "plot.py", py.str());
  outputs.push_back("plot.py");

  detail::write_text(dir / "summary.txt", summary.str());
  outputs.push_back("summary.txt");
  json meta{{"command", "analyze"},
            {"version", SSA_VERSION},
            {"files", a.files},
            {"burn_in_fraction", a.burn_in_fraction},
            {"mu0", a.mu0},
            {"map", a.map},
            {"bandwidth", a.bandwidth},
            {"outputs", outputs}};
  detail::write_text(dir / "metadata.json", meta.dump(2) + "\n");
  out << summary.str();
  return ok;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Shadow simulated annealing and ABC Shadow for Gibbs point processes", "ssa"};
  app.set_version_flag("--version", std::string(SSA_VERSION));
  app.require_subcommand(1);

  CommonOptions o;
  std::uint64_t seed = 0;
  int chains = 0;
  auto common = [&](CLI::App* sub, bool replay) {
    sub->add_option("--config,-c", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out,-o", o.out, std::string("output directory (default: config output_dir, then $") + kOutputEnv + ")");
    if (replay) sub->add_option("--replay", o.replay, "metadata.json of an earlier run to repeat")->check(CLI::ExistingFile);
  };

  auto* sim = app.add_subcommand("simulate", "sample the model at theta and report statistic means");
  common(sim, true);

  auto* st = app.add_subcommand("stats", "sufficient statistics of a pattern file, one row per radius");
  common(st, false);
  std::string pattern_file;
  std::vector<double> radii;
  st->add_option("--pattern,-p", pattern_file, "pattern CSV")->required();
  st->add_option("--radii", radii, "interaction radii (comma separated)")->delimiter(',');

  auto* ssa_cmd = app.add_subcommand("ssa", "shadow simulated annealing");
  common(ssa_cmd, true);
  ssa_cmd->add_option("--chains", chains, "independent replicate chains");

  auto* abc = app.add_subcommand("abc-shadow", "ABC Shadow posterior sampling");
  common(abc, true);
  abc->add_option("--chains", chains, "independent replicate chains");

  auto* an = app.add_subcommand("analyze", "quartiles, boxplot data, MAP, t tests and errors from trajectories");
  common(an, true);
  AnalyzeOptions a;
  an->add_option("files", a.files, "trajectory CSV files")->required()->check(CLI::ExistingFile);
  an->add_option("--burn-in-fraction", a.burn_in_fraction, "fraction of leading rows to drop per chain");
  an->add_option("--mu0", a.mu0, "reference values for Student tests")->delimiter(',');
  an->add_flag("--map", a.map, "kernel density MAP per parameter");
  an->add_option("--bandwidth", a.bandwidth, "Epanechnikov bandwidth (default 2.34 sd n^-1/5)");
  an->add_option("--n-mc", a.n_mc, "samples for the asymptotic error report (needs --config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return config_error;
  }

  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed")) o.seed = seed;
    if (sub->get_option_no_throw("--chains") && sub->count("--chains")) o.chains = chains;
  }
  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (st->parsed()) return cmd_stats(o, pattern_file, radii, out);
    if (ssa_cmd->parsed()) return cmd_shadow(o, true, out);
    if (abc->parsed()) return cmd_shadow(o, false, out);
    return cmd_analyze(o, a, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << "\n";
    return config_error;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << "\n";
    return contract_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return io_error;
  }
}

}  // namespace ssa::cli

#endif  // SSA_TOOLS_CLI_APP_HPP
