// Command-line front end: simulation presets, co-heritability estimation from
// CSV data, and marginal t statistics.
#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coherit/errors.hpp"
#include "coherit/functionals.hpp"
#include "coherit/io.hpp"
#include "coherit/parallel.hpp"
#include "coherit/simulation.hpp"

namespace {

using namespace coherit;

constexpr int kExitConfig = 2;
constexpr int kExitFailures = 3;
constexpr int kExitBadCell = 4;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key=value file; '#' starts a comment line.
std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line '" + line + "' is not key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    };
    trim(key);
    trim(value);
    kv[key] = value;
  }
  return kv;
}

// Optional scalar setting with flag > config file > preset default precedence.
template <typename T>
class Setting {
 public:
  Setting(std::string key, CLI::App* app, const std::string& flag, const std::string& help)
      : key_(std::move(key)) {
    option_ = app->add_option(flag, cli_value_, help);
  }

  void absorb(std::map<std::string, std::string>& kv) {
    auto it = kv.find(key_);
    if (it == kv.end()) return;
    if (option_->count() == 0) {
      std::istringstream is(it->second);
      T parsed{};
      if (!(is >> parsed) || !is.eof())
        throw ConfigError("config key '" + key_ + "' has invalid value '" + it->second + "'");
      file_value_ = parsed;
    }
    kv.erase(it);
  }

  std::optional<T> get() const {
    if (option_->count() > 0) return cli_value_;
    return file_value_;
  }
  T get_or(T fallback) const { return get().value_or(fallback); }
  bool set() const { return get().has_value(); }

 private:
  std::string key_;
  CLI::Option* option_;
  T cli_value_{};
  std::optional<T> file_value_;
};

int default_threads() {
  if (const char* env = std::getenv("COHERIT_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void require_readable(const std::string& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw ConfigError("input '" + key + "' not readable: " + path);
}

void require_writable(const std::string& path, const std::string& key) {
  const bool existed = static_cast<bool>(std::ifstream(path));
  std::ofstream out(path, std::ios::app);
  if (!out) throw ConfigError("output '" + key + "' not creatable: " + path);
  out.close();
  if (!existed) std::remove(path.c_str());
}

std::vector<Method> parse_methods(const std::string& spec) {
  std::vector<Method> methods;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto m = method_from_name(part);
    if (!m) throw ConfigError("unknown method '" + part + "' in 'methods'");
    methods.push_back(*m);
  }
  if (methods.empty()) throw ConfigError("'methods' lists no methods");
  return methods;
}

std::vector<std::vector<std::string>> provenance_rows(
    const std::vector<std::pair<std::string, std::string>>& effective) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [k, v] : effective) rows.push_back({"# " + k + "=" + v});
  return rows;
}

struct SharedFlags {
  Setting<int> reps;
  Setting<long long> seed;
  Setting<double> b;
  Setting<int> threads;
  Setting<std::string> out;
  CLI::Option* split_flag;
  CLI::Option* config_opt = nullptr;
  std::string config_path;
  std::map<std::string, std::string> kv;

  explicit SharedFlags(CLI::App* cmd)
      : reps("reps", cmd, "--reps", "Replications per setting"),
        seed("seed", cmd, "--seed", "Master seed"),
        b("b", cmd, "--b", "Penalty-level multiplier b"),
        threads("threads", cmd, "--threads", "Worker count (env COHERIT_THREADS)"),
        out("out", cmd, "--out", "Output CSV path") {
    split_flag = cmd->add_flag("--split,!--no-split", "Use the sample-splitting variant");
    config_opt = cmd->add_option("--config", config_path, "key=value config file");
  }

  // Split choice under flag > file > fallback precedence.
  bool split_choice(bool fallback) {
    if (split_flag->count() > 0) return split_flag->as<bool>();
    auto it = kv.find("split");
    if (it != kv.end()) {
      const std::string v = it->second;
      kv.erase(it);
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw ConfigError("config key 'split' must be true/false");
    }
    return fallback;
  }

  void load_file() {
    if (config_opt->count() > 0) kv = load_config_file(config_path);
  }

  void finish() {
    if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
  }
};

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(SharedFlags& shared, Setting<std::string>& preset_name,
                 Setting<std::string>& methods_str,
                 std::map<std::string, Setting<int>*>& int_params,
                 std::map<std::string, Setting<double>*>& real_params,
                 Setting<std::string>& pattern_beta, Setting<std::string>& pattern_gamma) {
  shared.load_file();
  preset_name.absorb(shared.kv);
  methods_str.absorb(shared.kv);
  shared.reps.absorb(shared.kv);
  shared.seed.absorb(shared.kv);
  shared.b.absorb(shared.kv);
  shared.threads.absorb(shared.kv);
  shared.out.absorb(shared.kv);
  for (auto& [key, setting] : int_params) setting->absorb(shared.kv);
  for (auto& [key, setting] : real_params) setting->absorb(shared.kv);
  pattern_beta.absorb(shared.kv);
  pattern_gamma.absorb(shared.kv);

  Preset preset;
  if (preset_name.set()) {
    preset = make_preset(preset_name.get_or(""));
  } else {
    // Full parameter set via flags/config file.
    ExperimentConfig c;
    c.label = "custom";
    for (const char* key : {"p", "n1"}) {
      if (!int_params.at(key)->set())
        throw ConfigError(std::string("missing required key '") + key +
                          "' (or pass --preset)");
    }
    c.p = int_params.at("p")->get_or(0);
    c.n1 = int_params.at("n1")->get_or(0);
    c.two_sample = int_params.at("n2")->set() || real_params.at("tau2")->set() ||
                   int_params.at("s2")->set();
    c.n2 = int_params.at("n2")->get_or(c.n1);
    c.s1 = int_params.at("s1")->get_or(1);
    c.s2 = int_params.at("s2")->get_or(c.s1);
    c.s = int_params.at("s")->get_or(c.two_sample ? 0 : c.s1);
    if (!c.two_sample) c.s = c.s2 = c.s1;
    c.tau1 = real_params.at("tau1")->get_or(1.0);
    c.tau2 = real_params.at("tau2")->get_or(1.0);
    c.rho = real_params.at("rho")->get_or(0.8);
    if (pattern_beta.set()) {
      const auto pat = pattern_from_name(pattern_beta.get_or(""));
      if (!pat) throw ConfigError("pattern_beta must be ramp or constant");
      c.pattern_beta = *pat;
    }
    if (pattern_gamma.set()) {
      const auto pat = pattern_from_name(pattern_gamma.get_or(""));
      if (!pat) throw ConfigError("pattern_gamma must be ramp or constant");
      c.pattern_gamma = *pat;
    }
    preset.name = "custom";
    preset.title = "user-defined setting";
    preset.targets = c.two_sample
                         ? std::vector<Target>{Target::Inner, Target::QuadBeta,
                                               Target::QuadGamma, Target::Ratio}
                         : std::vector<Target>{Target::QuadBeta};
    preset.settings.push_back(std::move(c));
  }

  const int reps = shared.reps.get_or(preset.settings.front().reps);
  if (reps < 1) throw ConfigError("reps must be >= 1");
  const long long seed = shared.seed.get_or(0);
  const int threads = shared.threads.get_or(default_threads());
  if (threads < 1) throw ConfigError("threads must be >= 1");
  std::vector<Method> methods;
  if (methods_str.set()) methods = parse_methods(methods_str.get_or(""));

  const bool keep_split = shared.split_choice(true);

  for (auto& setting : preset.settings) {
    setting.reps = reps;
    setting.master_seed = static_cast<std::uint64_t>(seed);
    if (shared.b.set()) setting.b = shared.b.get_or(setting.b);
    if (!methods.empty()) setting.methods = methods;
    if (!keep_split) {
      auto& ms = setting.methods;
      ms.erase(std::remove(ms.begin(), ms.end(), Method::FdeSplit), ms.end());
    }
  }

  const std::string out_path = shared.out.get_or("coherit_report.csv");
  require_writable(out_path, "out");
  shared.finish();

  ExperimentReport report;
  report.preset = preset;
  for (const auto& setting : preset.settings) {
    report.settings.push_back(run_experiment(setting, threads));
    const auto& done = report.settings.back();
    std::cout << preset.name << " " << setting.label << ": reps=" << setting.reps
              << " used=" << setting.reps - done.failures << " failures=" << done.failures
              << "\n";
  }

  const std::vector<std::pair<std::string, std::string>> effective = {
      {"preset", preset.name},
      {"reps", std::to_string(reps)},
      {"seed", std::to_string(seed)},
      {"b", format_double(preset.settings.front().b)},
      {"threads", std::to_string(threads)},
      {"split_methods", keep_split ? "true" : "false"},
      {"out", out_path},
  };
  auto rows = provenance_rows(effective);
  for (auto& row : report_rows(report)) rows.push_back(std::move(row));
  write_rows_csv(out_path, rows);

  std::cout << "\n" << report_table(report);
  std::cout << "\nreport written to " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// estimate

Eigen::VectorXd prepare_trait(Eigen::VectorXd trait, bool normalize, bool center) {
  const int n = static_cast<int>(trait.size());
  if (center) trait.array() -= trait.mean();
  if (normalize) {
    const double mean = trait.mean();
    const double sd = std::sqrt((trait.array() - mean).square().sum() / (n - 1));
    if (sd > 0.0) trait /= sd;
  }
  return trait;
}

int cmd_estimate(SharedFlags& shared, Setting<std::string>& x_path, Setting<std::string>& y_path,
                 Setting<std::string>& z_path, Setting<std::string>& w_path,
                 Setting<std::string>& traits_path, CLI::Option* no_normalize_flag,
                 CLI::Option* center_flag) {
  shared.load_file();
  for (auto* setting : {&x_path, &y_path, &z_path, &w_path, &traits_path})
    setting->absorb(shared.kv);
  shared.seed.absorb(shared.kv);
  shared.b.absorb(shared.kv);
  shared.threads.absorb(shared.kv);
  shared.out.absorb(shared.kv);
  const bool split = shared.split_choice(false);
  const bool normalize = no_normalize_flag->count() == 0;
  const bool center = center_flag->count() > 0;

  if (!x_path.set()) throw ConfigError("missing required key 'x' (design CSV)");
  require_readable(x_path.get_or(""), "x");
  const bool multi = traits_path.set();
  if (multi == y_path.set())
    throw ConfigError("pass either 'traits' (multi-trait) or 'y' (pair mode)");

  FdeConfig cfg;
  if (shared.b.set()) cfg.b = shared.b.get_or(cfg.b);
  cfg.split_seed = static_cast<std::uint64_t>(shared.seed.get_or(0));

  const std::string out_path = shared.out.get_or("");
  if (!out_path.empty()) require_writable(out_path, "out");

  const NumericCsv design_csv = read_numeric_csv(x_path.get_or(""));

  std::vector<std::vector<std::string>> out_rows;
  out_rows.push_back({"trait_a", "trait_b", "inner", "quad_a", "quad_b", "ratio"});

  if (multi) {
    require_readable(traits_path.get_or(""), "traits");
    shared.finish();
    const NumericCsv traits_csv = read_numeric_csv(traits_path.get_or(""));
    if (traits_csv.values.rows() != design_csv.values.rows())
      throw ConfigError("trait rows do not match design rows");
    Eigen::MatrixXd traits = traits_csv.values;
    for (Eigen::Index j = 0; j < traits.cols(); ++j)
      traits.col(j) = prepare_trait(traits.col(j), normalize, center);
    const int threads = shared.threads.get_or(default_threads());
    const int t = static_cast<int>(traits.cols());

    PairwiseEstimates pw;
    if (!split) {
      pw = estimate_pairwise_shared(design_csv.values, traits, cfg, threads);
    } else {
      // The split permutation depends on the pair roles, so each pair is
      // estimated independently.
      std::vector<RegressionSample> samples;
      samples.reserve(t);
      for (int i = 0; i < t; ++i) samples.emplace_back(design_csv.values, traits.col(i));
      std::vector<std::pair<int, int>> pairs;
      for (int i = 0; i < t; ++i)
        for (int j = i; j < t; ++j) pairs.emplace_back(i, j);
      pw.quads.resize(t);
      pw.inner.resize(t, t);
      pw.ratio.resize(t, t);
      std::vector<CoheritabilityEstimate> results(pairs.size());
      run_indexed(static_cast<int>(pairs.size()), threads, [&](int k) {
        const auto [i, j] = pairs[k];
        results[k] = estimate_pair_fde(samples[i], samples[j], true, cfg);
      });
      for (size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        pw.inner(i, j) = pw.inner(j, i) = results[k].inner;
        pw.ratio(i, j) = pw.ratio(j, i) = results[k].ratio;
        if (i == j) pw.quads[i] = results[k].quad_beta;
      }
    }

    // Two rows per trait: inner/quadratic values, then normalized values.
    const int width = 10;
    auto pad = [&](std::string s) {
      if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), ' ');
      return s;
    };
    auto num = [&](double v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", v);
      return pad(buf);
    };
    std::cout << pad("trait");
    for (const auto& name : traits_csv.header) std::cout << " " << pad(name);
    std::cout << "\n";
    for (int i = 0; i < t; ++i) {
      std::cout << pad(traits_csv.header[i]);
      for (int j = 0; j < t; ++j)
        std::cout << " " << (j < i ? pad("") : num(j == i ? pw.quads[i] : pw.inner(i, j)));
      std::cout << "\n" << pad("");
      for (int j = 0; j < t; ++j)
        std::cout << " " << (j < i ? pad("") : num(pw.ratio(i, j)));
      std::cout << "\n";
    }

    for (int i = 0; i < t; ++i) {
      for (int j = i; j < t; ++j) {
        out_rows.push_back({traits_csv.header[i], traits_csv.header[j],
                            format_double(j == i ? pw.quads[i] : pw.inner(i, j)),
                            format_double(pw.quads[i]), format_double(pw.quads[j]),
                            format_double(pw.ratio(i, j))});
      }
    }
  } else {
    if (!w_path.set()) throw ConfigError("pair mode needs 'w' (second trait CSV)");
    require_readable(y_path.get_or(""), "y");
    require_readable(w_path.get_or(""), "w");
    if (z_path.set()) require_readable(z_path.get_or(""), "z");
    shared.finish();

    const NumericCsv y_csv = read_numeric_csv(y_path.get_or(""));
    const NumericCsv w_csv = read_numeric_csv(w_path.get_or(""));
    const NumericCsv z_csv = z_path.set() ? read_numeric_csv(z_path.get_or("")) : design_csv;
    if (z_csv.header != design_csv.header)
      throw ConfigError("marker headers of 'x' and 'z' designs do not match");
    if (y_csv.values.cols() != 1 || w_csv.values.cols() != 1)
      throw ConfigError("pair mode traits must be single-column CSVs");
    if (y_csv.values.rows() != design_csv.values.rows())
      throw ConfigError("trait 'y' rows do not match design rows");
    if (w_csv.values.rows() != z_csv.values.rows())
      throw ConfigError("trait 'w' rows do not match design rows");

    RegressionSample sample_x(design_csv.values,
                              prepare_trait(y_csv.values.col(0), normalize, center));
    RegressionSample sample_z(z_csv.values,
                              prepare_trait(w_csv.values.col(0), normalize, center));
    const CoheritabilityEstimate est = estimate_pair_fde(sample_x, sample_z, split, cfg);

    std::cout << "inner      " << format_double(est.inner) << "\n";
    std::cout << "quad_beta  " << format_double(est.quad_beta) << "\n";
    std::cout << "quad_gamma " << format_double(est.quad_gamma) << "\n";
    std::cout << "ratio      " << format_double(est.ratio) << "\n";
    out_rows.push_back({y_csv.header[0], w_csv.header[0], format_double(est.inner),
                        format_double(est.quad_beta), format_double(est.quad_gamma),
                        format_double(est.ratio)});
  }

  if (!out_path.empty()) {
    write_rows_csv(out_path, out_rows);
    std::cout << "estimates written to " << out_path << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// tstats

int cmd_tstats(SharedFlags& shared, Setting<std::string>& x_path, Setting<std::string>& y_path) {
  shared.load_file();
  x_path.absorb(shared.kv);
  y_path.absorb(shared.kv);
  shared.out.absorb(shared.kv);
  if (!x_path.set()) throw ConfigError("missing required key 'x' (design CSV)");
  if (!y_path.set()) throw ConfigError("missing required key 'y' (trait CSV)");
  require_readable(x_path.get_or(""), "x");
  require_readable(y_path.get_or(""), "y");
  const std::string out_path = shared.out.get_or("");
  if (!out_path.empty()) require_writable(out_path, "out");
  shared.finish();

  const NumericCsv design_csv = read_numeric_csv(x_path.get_or(""));
  const NumericCsv y_csv = read_numeric_csv(y_path.get_or(""));
  if (y_csv.values.cols() != 1) throw ConfigError("'y' must be a single-column CSV");
  if (y_csv.values.rows() != design_csv.values.rows())
    throw ConfigError("trait rows do not match design rows");

  const RegressionSample sample(design_csv.values, y_csv.values.col(0));
  const TStats stats = marginal_t_stats(sample);

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"marker", "t"});
  for (int j = 0; j < sample.p(); ++j)
    rows.push_back({design_csv.header[j], format_double(stats.t[j])});
  if (out_path.empty()) {
    write_rows_csv(std::cout, rows);
  } else {
    write_rows_csv(out_path, rows);
    std::cout << "t statistics written to " << out_path << "\n";
  }
  if (!stats.perfect_fit.empty())
    std::cerr << "warning: " << stats.perfect_fit.size()
              << " marker(s) fit the trait exactly; emitted as inf\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional de-biased estimation of co-heritability in sparse linear models"};
  app.require_subcommand(1);

  CLI::App* sim = app.add_subcommand("simulate", "Run a simulation preset or custom setting");
  SharedFlags sim_shared(sim);
  Setting<std::string> preset_name("preset", sim, "--preset",
                                   "exp1|exp2|q1a|q1b|q2-I|q2-II|tuning");
  Setting<std::string> methods_str("methods", sim, "--methods", "Comma list of methods");
  Setting<int> p_s("p", sim, "--p", "Covariate count");
  Setting<int> n1_s("n1", sim, "--n1", "First sample size");
  Setting<int> n2_s("n2", sim, "--n2", "Second sample size");
  Setting<int> s_s("s", sim, "--s", "Shared support size");
  Setting<int> s1_s("s1", sim, "--s1", "Support size of beta");
  Setting<int> s2_s("s2", sim, "--s2", "Support size of gamma");
  Setting<double> tau1_s("tau1", sim, "--tau1", "Signal strength of beta");
  Setting<double> tau2_s("tau2", sim, "--tau2", "Signal strength of gamma");
  Setting<double> rho_s("rho", sim, "--rho", "AR(1) design correlation");
  Setting<std::string> pat_b("pattern_beta", sim, "--pattern-beta", "ramp|constant");
  Setting<std::string> pat_g("pattern_gamma", sim, "--pattern-gamma", "ramp|constant");
  std::map<std::string, Setting<int>*> int_params = {
      {"p", &p_s}, {"n1", &n1_s}, {"n2", &n2_s}, {"s", &s_s}, {"s1", &s1_s}, {"s2", &s2_s}};
  std::map<std::string, Setting<double>*> real_params = {
      {"tau1", &tau1_s}, {"tau2", &tau2_s}, {"rho", &rho_s}};

  CLI::App* est = app.add_subcommand("estimate", "Estimate co-heritability from CSV data");
  SharedFlags est_shared(est);
  Setting<std::string> x_path("x", est, "--x", "Design CSV (rows=samples, cols=markers)");
  Setting<std::string> y_path("y", est, "--y", "First trait CSV (one column)");
  Setting<std::string> z_path("z", est, "--z", "Second design CSV (defaults to --x)");
  Setting<std::string> w_path("w", est, "--w", "Second trait CSV (one column)");
  Setting<std::string> traits_path("traits", est, "--traits",
                                   "Multi-trait CSV sharing the --x design");
  CLI::Option* no_normalize =
      est->add_flag("--no-normalize", "Skip variance-1 normalization of traits");
  CLI::Option* center = est->add_flag("--center", "Subtract trait means before estimation");

  CLI::App* tst = app.add_subcommand("tstats", "Marginal per-marker t statistics");
  SharedFlags tst_shared(tst);
  Setting<std::string> tx_path("x", tst, "--x", "Design CSV");
  Setting<std::string> ty_path("y", tst, "--y", "Trait CSV (one column)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_shared, preset_name, methods_str, int_params, real_params, pat_b,
                          pat_g);
    if (est->parsed())
      return cmd_estimate(est_shared, x_path, y_path, z_path, w_path, traits_path, no_normalize,
                          center);
    if (tst->parsed()) return cmd_tstats(tst_shared, tx_path, ty_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TooManyFailuresError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailures;
  } catch (const CsvError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitBadCell;
  } catch (const CoheritError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
