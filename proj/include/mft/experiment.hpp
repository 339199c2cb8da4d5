#pragma once

// Declarative experiments: JSON configuration in, CSV tables and a manifest out.
//
// Every output table starts with a comment line "# manifest_hash=<hex>" and a
// header row. The manifest is the fully resolved configuration (defaults filled
// in, paths absolute); feeding it back as a configuration reproduces the tables
// byte for byte. Runtime-only settings (threads, output directory) are not part
// of the manifest.

#include "mft/mft.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace mft {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "mft-experiment/1";

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"simulate", "project", "compare", "sweep", "converge", "check-utility"};
  return kinds;
}

namespace config {

inline void allow_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

inline const Json& need(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
  return obj.at(key);
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": must be finite");
  return v;
}

inline std::uint64_t count(const Json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(where + ": expected an integer");
  if (j.is_number_integer() && j.get<long long>() < 0) throw ConfigError(where + ": must be >= 0");
  return j.get<std::uint64_t>();
}

inline std::vector<double> numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vector vector(const Json& j, const std::string& where) {
  const auto xs = numbers(j, where);
  if (xs.empty()) throw ConfigError(where + ": must not be empty");
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

inline Matrix matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Matrix m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = numbers(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
    if (i == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != m.cols()) throw ConfigError(where + ": rows have different lengths");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

inline TimeGrid grid(const Json& j) {
  allow_keys(j, "grid", {"horizon", "steps"});
  const double horizon = number(need(j, "horizon", "grid"), "grid.horizon");
  const auto steps = count(need(j, "steps", "grid"), "grid.steps");
  if (!(horizon > 0.0)) throw ConfigError("grid.horizon: must be > 0");
  if (steps < 1) throw ConfigError("grid.steps: must be >= 1");
  return TimeGrid(horizon, steps);
}

inline CoefficientModel market(const Json& j) {
  allow_keys(j, "market", {"model", "states", "probabilities", "rates", "initial", "resample_interval",
                           "condition_bound", "averaging_window"});
  const auto kind = need(j, "model", "market").get<std::string>();
  const Json& js = need(j, "states", "market");
  if (!js.is_array() || js.empty()) throw ConfigError("market.states: expected a non-empty array");
  std::vector<MarketState> states;
  for (std::size_t k = 0; k < js.size(); ++k) {
    const std::string w = "market.states[" + std::to_string(k) + "]";
    allow_keys(js[k], w, {"r", "a", "sigma"});
    MarketState s;
    s.r = number(need(js[k], "r", w), w + ".r");
    if (s.r < 0.0) {
      std::ostringstream os;
      os << w << ".r: short rate must be >= 0 (got " << s.r << ")";
      throw InvariantError(os.str());
    }
    s.a = vector(need(js[k], "a", w), w + ".a");
    s.sigma = matrix(need(js[k], "sigma", w), w + ".sigma");
    states.push_back(std::move(s));
  }
  const double cond = j.contains("condition_bound") ? number(j["condition_bound"], "market.condition_bound")
                                                    : kDefaultConditionBound;
  auto wrap = [&](auto&& make) {
    try {
      return make();
    } catch (const InvariantError& e) {
      throw InvariantError(std::string("market.") + e.what());
    } catch (const std::invalid_argument& e) {
      throw InvariantError(std::string("market.") + e.what());
    }
  };
  auto probs = [&](std::size_t n) {
    if (j.contains("probabilities")) return numbers(j["probabilities"], "market.probabilities");
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
  };
  CoefficientModel model = [&]() -> CoefficientModel {
    if (kind == "constant") {
      if (states.size() != 1) throw ConfigError("market.states: the constant model takes exactly one state");
      return wrap([&] { return CoefficientModel::constant(states.front(), cond); });
    }
    if (kind == "constant-random") {
      return wrap([&] { return CoefficientModel::constant_random(states, probs(states.size()), cond); });
    }
    if (kind == "regime-switching") {
      const Matrix rates = matrix(need(j, "rates", "market"), "market.rates");
      std::vector<double> init;
      if (j.contains("initial")) init = numbers(j["initial"], "market.initial");
      return wrap([&] { return CoefficientModel::regime_switching(states, rates, init, cond); });
    }
    if (kind == "piecewise-resampled") {
      const double interval = number(need(j, "resample_interval", "market"), "market.resample_interval");
      return wrap([&] { return CoefficientModel::piecewise_resampled(states, probs(states.size()), interval, cond); });
    }
    throw ConfigError("market.model: unknown model '" + kind + "'");
  }();
  if (j.contains("averaging_window")) {
    model = model.averaged(number(j["averaging_window"], "market.averaging_window"));
  }
  return model;
}

inline StrategyTrace read_trace_csv(const std::filesystem::path& file, const TimeGrid& grid, std::size_t n);

inline StrategyPtr strategy(const Json& j, const std::string& where, const TimeGrid& grid, std::size_t n) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const auto name = need(j, "name", where).get<std::string>();
  if (name == "zero") {
    allow_keys(j, where, {"name"});
    return zero_strategy();
  }
  if (name == "constant") {
    allow_keys(j, where, {"name", "pi"});
    return constant_strategy(vector(need(j, "pi", where), where + ".pi"));
  }
  if (name == "log-optimal") {
    allow_keys(j, where, {"name"});
    return log_optimal_strategy();
  }
  if (name == "constant-nu") {
    allow_keys(j, where, {"name", "nu"});
    return constant_nu_strategy(number(need(j, "nu", where), where + ".nu"));
  }
  if (name == "contrarian") {
    allow_keys(j, where, {"name", "weights", "kappa", "scale"});
    return contrarian_strategy(vector(need(j, "weights", where), where + ".weights"),
                               number(need(j, "kappa", where), where + ".kappa"),
                               number(need(j, "scale", where), where + ".scale"));
  }
  if (name == "randomized") {
    allow_keys(j, where, {"name", "radius", "salt"});
    return randomized_strategy(number(need(j, "radius", where), where + ".radius"),
                               j.contains("salt") ? count(j["salt"], where + ".salt") : 0);
  }
  if (name == "trace") {
    allow_keys(j, where, {"name", "file"});
    return trace_strategy(read_trace_csv(need(j, "file", where).get<std::string>(), grid, n));
  }
  if (name == "projected") {
    allow_keys(j, where, {"name", "base"});
    return lift_projection(strategy(need(j, "base", where), where + ".base", grid, n));
  }
  throw ConfigError(where + ".name: unknown strategy '" + name + "'");
}

inline UtilitySpec utility(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const auto name = need(j, "name", where).get<std::string>();
  UtilitySpec spec = [&] {
    if (name == "log") {
      allow_keys(j, where, {"name", "cap"});
      return log_utility();
    }
    if (name == "power") {
      allow_keys(j, where, {"name", "delta", "cap"});
      const double d = number(need(j, "delta", where), where + ".delta");
      if (!(d > 0.0)) throw ConfigError(where + ".delta: must be > 0");
      return power_utility(d);
    }
    if (name == "capped-sqrt") {
      allow_keys(j, where, {"name", "bound", "cap"});
      const double b = j.contains("bound") ? number(j["bound"], where + ".bound") : 10.0;
      if (!(b > 0.0)) throw ConfigError(where + ".bound: must be > 0");
      return capped_sqrt_utility(b);
    }
    if (name == "piecewise-linear") {
      allow_keys(j, where, {"name", "x", "y", "cap"});
      try {
        return piecewise_linear_utility(numbers(need(j, "x", where), where + ".x"),
                                        numbers(need(j, "y", where), where + ".y"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
    throw ConfigError(where + ".name: unknown utility '" + name + "'");
  }();
  if (j.contains("cap")) {
    const double k = number(j["cap"], where + ".cap");
    if (!(k > 0.0)) throw ConfigError(where + ".cap: must be > 0");
    spec = cap_utility(spec, k);
  }
  return spec;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Reads a trace table with a `node` column and columns pi_1..pi_n (other columns ignored;
/// rows with empty pi cells, such as the terminal node of a wealth table, are skipped).
inline StrategyTrace read_trace_csv(const std::filesystem::path& file, const TimeGrid& grid, std::size_t n) {
  std::ifstream in(file);
  if (!in) throw ConfigError("trace file '" + file.string() + "' cannot be opened");
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  auto col = [&](const std::string& name) -> std::size_t {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw ConfigError("trace file '" + file.string() + "' has no column '" + name + "'");
  };
  const std::size_t node_col = col("node");
  std::vector<std::size_t> pi_cols;
  for (std::size_t k = 1; k <= n; ++k) pi_cols.push_back(col("pi_" + std::to_string(k)));
  StrategyTrace trace{grid, std::vector<Vector>(grid.steps())};
  std::vector<bool> seen(grid.steps(), false);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size()) throw ConfigError("trace file '" + file.string() + "': short row");
    if (cells[pi_cols.front()].empty()) continue;
    const auto node = static_cast<std::size_t>(std::stoull(cells[node_col]));
    if (node >= grid.steps()) throw ConfigError("trace file '" + file.string() + "': node beyond the grid");
    Vector pi(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) pi(static_cast<Eigen::Index>(k)) = std::stod(cells[pi_cols[k]]);
    trace.pi[node] = std::move(pi);
    seen[node] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ConfigError("trace file '" + file.string() + "': missing node " + std::to_string(i));
  }
  return trace;
}

}  // namespace config

/// Command line overrides applied on top of the configuration document.
struct RunOverrides {
  std::optional<std::string> experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> paths;
  std::size_t threads = 1;
  std::filesystem::path out = "results";
  std::filesystem::path base_dir = ".";  // relative file references resolve here
};

/// Validates the document and fills in defaults. The result is the manifest.
inline Json resolve_config(Json cfg, const RunOverrides& ov) {
  config::allow_keys(cfg, "config", {"schema", "experiment", "market", "grid", "x0", "strategy", "strategies",
                                     "utilities", "paths", "seed", "nu_grid", "eps_list", "trace_file",
                                     "export_paths"});
  if (!cfg.contains("schema")) throw ConfigError("config: missing required key 'schema'");
  if (cfg["schema"] != kSchema) throw ConfigError(std::string("config.schema: expected '") + kSchema + "'");
  if (ov.experiment) cfg["experiment"] = *ov.experiment;
  if (!cfg.contains("experiment")) throw ConfigError("config: missing required key 'experiment'");
  const auto kind = cfg["experiment"].get<std::string>();
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    throw ConfigError("config.experiment: unknown experiment '" + kind + "'");
  }
  if (ov.seed) cfg["seed"] = *ov.seed;
  if (ov.paths) cfg["paths"] = *ov.paths;
  if (!cfg.contains("seed")) cfg["seed"] = 1;
  if (!cfg.contains("paths")) cfg["paths"] = 10000;
  if (!cfg.contains("x0")) cfg["x0"] = 1.0;
  if (!cfg.contains("utilities")) {
    cfg["utilities"] = Json::array({{{"name", "log"}},
                                    {{"name", "power"}, {"delta", 0.5}},
                                    {{"name", "power"}, {"delta", 1.0}},
                                    {{"name", "power"}, {"delta", 2.0}},
                                    {{"name", "capped-sqrt"}, {"bound", 10.0}}});
  }
  if (cfg.contains("strategy")) {
    if (cfg.contains("strategies")) throw ConfigError("config: give either 'strategy' or 'strategies', not both");
    cfg["strategies"] = Json::array({cfg["strategy"]});
    cfg.erase("strategy");
  }
  // Absolute file references so the manifest is location independent.
  auto absolutize = [&](Json& node, auto& self) -> void {
    if (node.is_object()) {
      if (node.contains("name") && node["name"] == "trace" && node.contains("file") && node["file"].is_string()) {
        node["file"] = std::filesystem::weakly_canonical(ov.base_dir / node["file"].get<std::string>()).string();
      }
      if (node.contains("base")) self(node["base"], self);
    }
  };
  if (cfg.contains("strategies")) {
    for (auto& s : cfg["strategies"]) absolutize(s, absolutize);
  }
  if (cfg.contains("trace_file") && cfg["trace_file"].is_string()) {
    cfg["trace_file"] = std::filesystem::weakly_canonical(ov.base_dir / cfg["trace_file"].get<std::string>()).string();
  }
  config::count(cfg["seed"], "config.seed");
  if (config::count(cfg["paths"], "config.paths") < 2) throw ConfigError("config.paths: must be >= 2");
  const double x0 = config::number(cfg["x0"], "config.x0");
  if (!(x0 > 0.0)) throw ConfigError("config.x0: initial wealth must be > 0");
  return cfg;
}

inline std::string manifest_hash(const Json& manifest) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(manifest.dump());
  return os.str();
}

struct ExperimentOutput {
  Json manifest;
  std::vector<std::filesystem::path> files;
};

namespace detail {

class Table {
 public:
  Table(const std::filesystem::path& file, const std::string& hash, const std::string& header) : file_(file), os_(file) {
    if (!os_) throw std::runtime_error("cannot write '" + file.string() + "'");
    os_ << "# manifest_hash=" << hash << '\n' << header << '\n' << std::setprecision(17);
  }
  std::ostream& row() { return os_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
  std::ofstream os_;
};

inline std::vector<UtilitySpec> utilities_of(const Json& cfg) {
  std::vector<UtilitySpec> out;
  const Json& us = cfg["utilities"];
  if (!us.is_array() || us.empty()) throw ConfigError("config.utilities: expected a non-empty array");
  for (std::size_t i = 0; i < us.size(); ++i) out.push_back(config::utility(us[i], "utilities[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<UtilitySpec> admissible_utilities_of(const Json& cfg) {
  auto specs = utilities_of(cfg);
  for (const auto& s : specs) {
    const auto rep = check_admissible(s);
    if (!rep.passed()) {
      throw InvariantError("utility '" + s.name() + "' is not admissible: " + rep.issues.front().message);
    }
  }
  return specs;
}

inline std::vector<StrategyPtr> strategies_of(const Json& cfg, const TimeGrid& grid, std::size_t n) {
  if (!cfg.contains("strategies")) throw ConfigError("config: missing required key 'strategy' or 'strategies'");
  const Json& ss = cfg["strategies"];
  if (!ss.is_array() || ss.empty()) throw ConfigError("config.strategies: expected a non-empty array");
  std::vector<StrategyPtr> out;
  for (std::size_t i = 0; i < ss.size(); ++i) {
    try {
      out.push_back(config::strategy(ss[i], "strategies[" + std::to_string(i) + "]", grid, n));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("strategies[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace detail

/// Runs the experiment described by `cfg` and writes its tables into `ov.out`.
inline ExperimentOutput run_experiment(const Json& raw, const RunOverrides& ov) {
  const Json cfg = resolve_config(raw, ov);
  const std::string kind = cfg["experiment"];
  const std::string hash = manifest_hash(cfg);
  std::filesystem::create_directories(ov.out);
  ExperimentOutput result{cfg, {}};
  {
    std::ofstream m(ov.out / "manifest.json");
    m << cfg.dump(2) << '\n';
    result.files.push_back(ov.out / "manifest.json");
  }
  const auto seed = cfg["seed"].get<std::uint64_t>();
  const auto paths = cfg["paths"].get<std::uint64_t>();
  const double x0 = cfg["x0"].get<double>();
  const RunOptions opt{paths, seed, ov.threads};

  if (kind == "check-utility") {
    detail::Table t(ov.out / "admissibility.csv", hash, "utility,passed,kind,check,x,value,count,message");
    for (const auto& spec : detail::utilities_of(cfg)) {
      const auto rep = check_admissible(spec);
      if (rep.passed() && rep.notes.empty()) t.row() << detail::csv_field(spec.name()) << ",1,ok,,,,0,\n";
      for (const auto& i : rep.issues) {
        t.row() << detail::csv_field(spec.name()) << ",0,violation," << i.check << ',' << i.x << ',' << i.value << ','
                << i.count << ',' << detail::csv_field(i.message) << '\n';
      }
      for (const auto& note : rep.notes) {
        t.row() << detail::csv_field(spec.name()) << ',' << (rep.passed() ? 1 : 0) << ",note,,,,0,"
                << detail::csv_field(note) << '\n';
      }
    }
    result.files.push_back(t.file());
    return result;
  }

  const TimeGrid grid = config::grid(config::need(cfg, "grid", "config"));
  const CoefficientModel model = config::market(config::need(cfg, "market", "config"));
  const std::size_t n = model.dimension();

  if (kind == "simulate") {
    const auto strategies = detail::strategies_of(cfg, grid, n);
    const auto specs = detail::admissible_utilities_of(cfg);
    const std::size_t export_paths =
        cfg.contains("export_paths") ? config::count(cfg["export_paths"], "config.export_paths") : std::min<std::uint64_t>(paths, 10);
    detail::Table est(ov.out / "estimates.csv", hash, "label,param,mean,stderr,paths,seed");
    detail::Table wt(ov.out / "wealth.csv", hash, [&] {
      std::ostringstream os;
      write_wealth_header(os, n);
      std::string h = os.str();
      h.pop_back();
      return "strategy," + h;
    }());
    for (const auto& s : strategies) {
      for (const auto& e : expected_utilities(model, *s, specs, x0, grid, opt)) {
        est.row() << detail::csv_field(s->label()) << ',' << detail::csv_field(e.label.substr(s->label().size() + 1))
                  << ',' << e.mean << ',' << e.std_error << ',' << e.paths << ',' << e.seed << '\n';
      }
      for (std::size_t k = 0; k < std::min<std::size_t>(export_paths, paths); ++k) {
        const auto coeffs = model.sample(grid, coefficient_seed(seed, k));
        const auto bm = sample_brownian(grid, brownian_seed(seed, k), n);
        const auto sim = simulate_log_wealth(coeffs, bm, *s, x0);
        std::ostringstream rows;
        write_wealth_rows(rows, k, sim.wealth, sim.trace, n);
        std::istringstream lines(rows.str());
        std::string line;
        while (std::getline(lines, line)) wt.row() << detail::csv_field(s->label()) << ',' << line << '\n';
      }
    }
    result.files.push_back(est.file());
    result.files.push_back(wt.file());
  } else if (kind == "project") {
    detail::Table t(ov.out / "certificates.csv", hash, [&] {
      std::string h = "source,path,node,t,nu,base_volatility,projected_volatility,drift_gap,base_norm,projected_norm";
      for (std::size_t k = 1; k <= n; ++k) h += ",pi_hat_" + std::to_string(k);
      return h;
    }());
    auto emit = [&](const std::string& source, std::size_t path, const ProjectionCertificate& c, const Vector& pi_hat) {
      t.row() << detail::csv_field(source) << ',' << path << ',' << c.node << ',' << grid.time(c.node) << ',' << c.nu
              << ',' << c.base_volatility << ',' << c.projected_volatility << ',' << c.drift_gap << ',' << c.base_norm
              << ',' << c.projected_norm;
      for (Eigen::Index k = 0; k < pi_hat.size(); ++k) t.row() << ',' << pi_hat(k);
      t.row() << '\n';
    };
    if (cfg.contains("trace_file")) {
      const auto trace = config::read_trace_csv(cfg["trace_file"].get<std::string>(), grid, n);
      const auto coeffs = model.sample(grid, coefficient_seed(seed, 0));
      for (std::size_t i = 0; i < trace.pi.size(); ++i) {
        auto p = project_to_mft(trace.pi[i], coeffs.node(i));
        p.certificate.node = i;
        emit("trace", 0, p.certificate, p.pi_hat);
      }
    } else {
      const auto strategies = detail::strategies_of(cfg, grid, n);
      const std::size_t export_paths =
          cfg.contains("export_paths") ? config::count(cfg["export_paths"], "config.export_paths") : 1;
      for (const auto& s : strategies) {
        const auto lifted = lift_projection(s);
        for (std::size_t k = 0; k < std::min<std::size_t>(export_paths, paths); ++k) {
          const auto coeffs = model.sample(grid, coefficient_seed(seed, k));
          const auto bm = sample_brownian(grid, brownian_seed(seed, k), n);
          const auto sim = simulate_log_wealth(coeffs, bm, *lifted, x0);
          for (std::size_t i = 0; i < sim.certificates.size(); ++i) emit(s->label(), k, sim.certificates[i], sim.trace.pi[i]);
        }
      }
    }
    result.files.push_back(t.file());
  } else if (kind == "compare") {
    const auto strategies = detail::strategies_of(cfg, grid, n);
    const auto specs = detail::admissible_utilities_of(cfg);
    detail::Table t(ov.out / "compare.csv", hash,
                    "label,utility,mean_base,stderr_base,mean_projected,stderr_projected,mean_difference,"
                    "stderr_difference,fraction_nonnegative,paths,seed");
    for (const auto& s : strategies) {
      const auto lifted = lift_projection(s);
      for (const auto& pc : paired_compare(model, *s, *lifted, specs, x0, grid, opt)) {
        t.row() << detail::csv_field(s->label()) << ',' << detail::csv_field(pc.label.substr(s->label().size() + 1))
                << ',' << pc.base.mean << ',' << pc.base.std_error << ',' << pc.projected.mean << ','
                << pc.projected.std_error << ',' << pc.mean_difference << ',' << pc.std_error << ','
                << pc.fraction_nonnegative << ',' << paths << ',' << seed << '\n';
      }
    }
    result.files.push_back(t.file());
  } else if (kind == "sweep") {
    const auto specs = detail::admissible_utilities_of(cfg);
    const auto nus = config::numbers(config::need(cfg, "nu_grid", "config"), "config.nu_grid");
    if (nus.empty()) throw ConfigError("config.nu_grid: must not be empty");
    detail::Table t(ov.out / "sweep.csv", hash, "label,nu,mean,stderr,paths,seed");
    for (const auto& spec : specs) {
      const auto rows = sweep_nu(model, nus, spec, x0, grid, opt);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        t.row() << detail::csv_field(spec.name()) << ',' << nus[i] << ',' << rows[i].mean << ',' << rows[i].std_error
                << ',' << rows[i].paths << ',' << rows[i].seed << '\n';
      }
    }
    result.files.push_back(t.file());
  } else if (kind == "converge") {
    const auto strategies = detail::strategies_of(cfg, grid, n);
    const auto specs = detail::admissible_utilities_of(cfg);
    const auto eps = config::numbers(config::need(cfg, "eps_list", "config"), "config.eps_list");
    detail::Table t(ov.out / "converge.csv", hash,
                    "label,eps,mean,stderr,paths,seed,utility,mean_original,abs_difference,stderr_difference");
    for (const auto& s : strategies) {
      std::vector<ConvergenceRow> rows;
      try {
        rows = convergence_experiment(model, *s, specs, eps, x0, grid, opt);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config.eps_list: ") + e.what());
      }
      for (const auto& r : rows) {
        t.row() << detail::csv_field(s->label()) << ',' << r.eps << ',' << r.averaged.mean << ','
                << r.averaged.std_error << ',' << r.averaged.paths << ',' << r.averaged.seed << ','
                << detail::csv_field(r.utility) << ',' << r.original.mean << ',' << r.abs_difference << ','
                << r.difference_std_error << '\n';
      }
    }
    result.files.push_back(t.file());
  }
  return result;
}

/// Default thread count: $MFT_THREADS if set, otherwise 1.
inline std::size_t default_threads() {
  if (const char* env = std::getenv("MFT_THREADS")) {
    try {
      const auto v = std::stoul(env);
      if (v >= 1) return v;
    } catch (...) {
    }
  }
  return 1;
}

/// Maps an exception to the CLI exit code: 2 configuration, 3 invariant, 4 numeric, 1 other.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const Json::exception*>(&e) ||
      dynamic_cast<const std::invalid_argument*>(&e)) {
    return 2;
  }
  if (dynamic_cast<const InvariantError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  return 1;
}

}  // namespace mft
