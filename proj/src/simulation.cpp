#include "coherit/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "coherit/errors.hpp"
#include "coherit/io.hpp"
#include "coherit/parallel.hpp"

namespace coherit {

namespace {

constexpr double kFailureBudget = 0.05;

std::uint64_t support_stream_id(int p, int s, int s1, int s2) {
  std::uint64_t h = detail::mix64(0x5375507552ULL + static_cast<std::uint64_t>(p));
  h = detail::mix64(h + static_cast<std::uint64_t>(s));
  h = detail::mix64(h + static_cast<std::uint64_t>(s1));
  return detail::mix64(h + static_cast<std::uint64_t>(s2));
}

void validate(const ExperimentConfig& c) {
  if (c.reps < 1) throw CoheritError("reps must be >= 1");
  if (c.p < 1 || c.n1 < 2) throw CoheritError("p and n1 must be positive (n1 >= 2)");
  if (c.two_sample && c.n2 < 2) throw CoheritError("n2 must be >= 2");
  if (c.s < 0 || c.s1 < c.s || (c.two_sample && c.s2 < c.s))
    throw CoheritError("need s <= min(s1, s2)");
  const int s2 = c.two_sample ? c.s2 : c.s1;
  if (c.s1 + s2 - (c.two_sample ? c.s : c.s1) > c.p)
    throw CoheritError("supports do not fit: s1 + s2 - s > p");
  if (!(std::abs(c.rho) < 1.0)) throw InvalidRhoError(c.rho);
  if (c.methods.empty()) throw CoheritError("no methods requested");
  const bool wants_split =
      std::find(c.methods.begin(), c.methods.end(), Method::FdeSplit) != c.methods.end();
  if (wants_split && (c.n1 < 4 || (c.two_sample && c.n2 < 4)))
    throw CoheritError("sample splitting needs n >= 4");
}

// One replication's estimates, in the order of config.methods.
struct RepResult {
  bool failed = false;
  std::vector<CoheritabilityEstimate> pair_estimates;  // two-sample runs
  std::vector<double> quad_estimates;                  // single-sample runs
};

double target_of(const CoheritabilityEstimate& e, Target t) {
  switch (t) {
    case Target::Inner: return e.inner;
    case Target::QuadBeta: return e.quad_beta;
    case Target::QuadGamma: return e.quad_gamma;
    case Target::Ratio: return e.ratio;
  }
  return 0.0;
}

std::string method_display(Method m, Target t) {
  switch (m) {
    case Method::PluginLasso: return "Lasso";
    case Method::Debiased: return "De-biased";
    case Method::Thresholded: return "Thresholded";
    case Method::FdeSplit: return "FDE-S";
    case Method::FdeNosplit: return t == Target::Inner ? "FDE" : "FDE-NS";
  }
  return "?";
}

std::string target_display(Target t) {
  switch (t) {
    case Target::Inner: return "I(beta,gamma)";
    case Target::QuadBeta: return "Q(beta)";
    case Target::QuadGamma: return "Q(gamma)";
    case Target::Ratio: return "R(beta,gamma)";
  }
  return "?";
}

Eigen::VectorXd gaussian_vector(int n, double sd, RngStream& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = sd * rng.gaussian();
  return v;
}

}  // namespace

std::string pattern_name(Pattern p) { return p == Pattern::Ramp ? "ramp" : "constant"; }

std::optional<Pattern> pattern_from_name(const std::string& name) {
  if (name == "ramp") return Pattern::Ramp;
  if (name == "constant") return Pattern::Constant;
  return std::nullopt;
}

std::string target_name(Target t) {
  switch (t) {
    case Target::Inner: return "inner";
    case Target::QuadBeta: return "quad_beta";
    case Target::QuadGamma: return "quad_gamma";
    case Target::Ratio: return "ratio";
  }
  return "?";
}

std::pair<std::vector<int>, std::vector<int>> gen_supports(int p, int s, int s1, int s2,
                                                           RngStream& rng) {
  if (s < 0 || s1 < s || s2 < s) throw InfeasibleSupportsError("need s <= min(s1, s2)");
  const int total = s1 + s2 - s;
  if (total > p)
    throw InfeasibleSupportsError("s1 + s2 - s = " + std::to_string(total) + " exceeds p = " +
                                  std::to_string(p));
  // Partial Fisher-Yates: the first `total` slots become the draw.
  std::vector<int> pool(p);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < total; ++i) {
    const int k = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(p - i)));
    std::swap(pool[i], pool[k]);
  }
  std::vector<int> support1(pool.begin(), pool.begin() + s);
  support1.insert(support1.end(), pool.begin() + s, pool.begin() + s1);
  std::vector<int> support2(pool.begin(), pool.begin() + s);
  support2.insert(support2.end(), pool.begin() + s1, pool.begin() + total);
  std::sort(support1.begin(), support1.end());
  std::sort(support2.begin(), support2.end());
  return {std::move(support1), std::move(support2)};
}

Eigen::VectorXd gen_coefficients(const std::vector<int>& support, Pattern pattern, double tau,
                                 int p) {
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  const int s = static_cast<int>(support.size());
  for (int i = 0; i < s; ++i) {
    coef[support[i]] =
        pattern == Pattern::Ramp ? (1.0 + static_cast<double>(i + 1) / s) * tau / 2.0 : tau;
  }
  return coef;
}

double mean_squared_error(const std::vector<double>& estimates, double truth) {
  if (estimates.empty()) return 0.0;
  double sum = 0.0;
  for (double e : estimates) {
    const double d = e - truth;
    sum += d * d;
  }
  return sum / static_cast<double>(estimates.size());
}

const MethodCell* SettingReport::find(Target target, Method method) const {
  for (const auto& cell : cells) {
    if (cell.target == target && cell.method == method) return &cell;
  }
  return nullptr;
}

SettingReport run_experiment(const ExperimentConfig& config, int threads) {
  validate(config);
  const int p = config.p;

  // The support draw is keyed by (seed, p, sparsity) only, so settings that
  // differ merely in signal strength share one set of true coefficients.
  RngStream support_rng(
      config.master_seed,
      support_stream_id(p, config.two_sample ? config.s : config.s1, config.s1,
                        config.two_sample ? config.s2 : config.s1));
  auto supports = gen_supports(p, config.two_sample ? config.s : config.s1, config.s1,
                               config.two_sample ? config.s2 : config.s1, support_rng);
  const Eigen::VectorXd beta =
      gen_coefficients(supports.first, config.pattern_beta, config.tau1, p);
  const Eigen::VectorXd gamma =
      config.two_sample ? gen_coefficients(supports.second, config.pattern_gamma, config.tau2, p)
                        : Eigen::VectorXd::Zero(p);

  SettingReport report;
  report.config = config;
  report.truth_quad_beta = beta.squaredNorm();
  if (config.two_sample) {
    report.truth_inner = beta.dot(gamma);
    report.truth_quad_gamma = gamma.squaredNorm();
    report.truth_ratio =
        clamp_ratio(report.truth_inner, report.truth_quad_beta, report.truth_quad_gamma);
  }

  auto run_replication = [&](int r) -> RepResult {
    RepResult result;
    if (config.mock_truth) {
      if (config.two_sample) {
        for (Method m : config.methods) {
          CoheritabilityEstimate e;
          e.method = m;
          e.inner = report.truth_inner;
          e.quad_beta = report.truth_quad_beta;
          e.quad_gamma = report.truth_quad_gamma;
          e.ratio = report.truth_ratio;
          result.pair_estimates.push_back(std::move(e));
        }
      } else {
        result.quad_estimates.assign(config.methods.size(), report.truth_quad_beta);
      }
      return result;
    }

    RngStream rep(config.master_seed, static_cast<std::uint64_t>(r));
    FdeConfig fde;
    fde.b = config.b;
    fde.lasso = config.lasso;
    fde.dual = config.dual;
    fde.split_seed = rep.substream(0xDECAF).stream_id();
    try {
      RngStream x_rng = rep.substream(1);
      RngStream eps_rng = rep.substream(2);
      Eigen::MatrixXd x = sample_gaussian_ar1(config.n1, p, config.rho, x_rng);
      Eigen::VectorXd y = x * beta + gaussian_vector(config.n1, config.noise_sd, eps_rng);
      RegressionSample sample_x(std::move(x), std::move(y));
      if (config.two_sample) {
        RngStream z_rng = rep.substream(3);
        RngStream delta_rng = rep.substream(4);
        Eigen::MatrixXd z = sample_gaussian_ar1(config.n2, p, config.rho, z_rng);
        Eigen::VectorXd w = z * gamma + gaussian_vector(config.n2, config.noise_sd, delta_rng);
        RegressionSample sample_z(std::move(z), std::move(w));
        result.pair_estimates = estimate_all_methods(sample_x, sample_z, config.methods, fde);
      } else {
        auto quads = estimate_quadratic_all(sample_x, config.methods, fde);
        result.quad_estimates.reserve(quads.size());
        for (const auto& q : quads) result.quad_estimates.push_back(q.second);
      }
    } catch (const NoConvergenceError&) {
      result.failed = true;
    }
    return result;
  };

  std::vector<RepResult> results(config.reps);
  run_indexed(config.reps, threads, [&](int r) { results[r] = run_replication(r); });

  for (const auto& r : results) {
    if (r.failed) ++report.failures;
  }
  if (report.failures > kFailureBudget * config.reps) {
    throw TooManyFailuresError(std::to_string(report.failures) + " of " +
                               std::to_string(config.reps) +
                               " replications failed to converge");
  }

  const std::vector<Target> targets =
      config.two_sample
          ? std::vector<Target>{Target::Inner, Target::QuadBeta, Target::QuadGamma,
                                Target::Ratio}
          : std::vector<Target>{Target::QuadBeta};
  for (size_t m = 0; m < config.methods.size(); ++m) {
    for (Target t : targets) {
      MethodCell cell;
      cell.method = config.methods[m];
      cell.target = t;
      cell.truth = t == Target::Inner      ? report.truth_inner
                   : t == Target::QuadBeta ? report.truth_quad_beta
                   : t == Target::QuadGamma
                       ? report.truth_quad_gamma
                       : report.truth_ratio;
      cell.raw.reserve(config.reps - report.failures);
      // Deterministic reduce: strictly in replication order.
      for (int r = 0; r < config.reps; ++r) {
        if (results[r].failed) continue;
        const double value = config.two_sample
                                 ? target_of(results[r].pair_estimates[m], t)
                                 : results[r].quad_estimates[m];
        cell.raw.push_back(value);
      }
      cell.reps_used = static_cast<int>(cell.raw.size());
      cell.mse = mean_squared_error(cell.raw, cell.truth);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

std::vector<std::string> preset_names() {
  return {"exp1", "exp2", "q1a", "q1b", "q2-I", "q2-II", "tuning"};
}

Preset make_preset(const std::string& name) {
  Preset preset;
  preset.name = name;

  auto label_pair = [](double t1, double t2) {
    std::ostringstream os;
    os << "(" << t1 << "," << t2 << ")";
    return os.str();
  };

  if (name == "exp1" || name == "tuning") {
    ExperimentConfig base;
    base.p = 600;
    base.n1 = base.n2 = 400;
    base.reps = 300;
    base.s = 15;
    base.s1 = 30;
    base.s2 = 25;
    base.pattern_beta = Pattern::Ramp;
    base.pattern_gamma = Pattern::Constant;
    preset.targets = {Target::Inner, Target::Ratio};
    if (name == "exp1") {
      preset.title = "Inner product and normalized inner product, varying signal strength";
      const std::vector<std::pair<double, double>> taus = {
          {1.8, .4}, {2.2, .3}, {2.6, .2}, {3.0, .1},
          {.1, 1.6}, {.2, 1.4}, {.3, 1.2}, {.4, 1.0}};
      for (auto [t1, t2] : taus) {
        ExperimentConfig c = base;
        c.tau1 = t1;
        c.tau2 = t2;
        c.label = label_pair(t1, t2);
        preset.settings.push_back(std::move(c));
      }
    } else {
      preset.title = "Tuning-parameter sweep over the lambda0 multiplier b";
      for (auto [t1, t2] : std::vector<std::pair<double, double>>{{3.0, .1}, {1.8, .4}}) {
        for (double b : {0.25, 0.5, 0.75, 1.0}) {
          ExperimentConfig c = base;
          c.tau1 = t1;
          c.tau2 = t2;
          c.b = b;
          std::ostringstream os;
          os << label_pair(t1, t2) << " b=" << b;
          c.label = os.str();
          preset.settings.push_back(std::move(c));
        }
      }
    }
    return preset;
  }

  if (name == "exp2") {
    preset.title = "Inner product and normalized inner product, varying sparsity";
    preset.targets = {Target::Inner, Target::Ratio};
    for (int k = 40; k <= 110; k += 10) {
      ExperimentConfig c;
      c.p = 800;
      c.n1 = c.n2 = 400;
      c.reps = 300;
      c.s = 20;
      c.s1 = c.s2 = k;
      c.tau1 = .2;
      c.tau2 = .1;
      c.pattern_beta = Pattern::Ramp;
      c.pattern_gamma = Pattern::Constant;
      c.label = std::to_string(k);
      preset.settings.push_back(std::move(c));
    }
    return preset;
  }

  if (name == "q1a" || name == "q1b") {
    preset.title = "Quadratic functional, varying signal strength";
    preset.targets = {Target::QuadBeta};
    const bool ramp = name == "q1a";
    const std::vector<double> taus = ramp
                                         ? std::vector<double>{.1, .2, .3, .4, 1.8, 2.2, 2.6, 3.0}
                                         : std::vector<double>{.1, .2, .3, .4, 1.0, 1.2, 1.4, 1.6};
    for (double tau : taus) {
      ExperimentConfig c;
      c.two_sample = false;
      c.p = 600;
      c.n1 = 400;
      c.n2 = 0;
      c.reps = 300;
      c.s1 = ramp ? 30 : 25;
      c.s = c.s2 = c.s1;
      c.tau1 = tau;
      c.pattern_beta = ramp ? Pattern::Ramp : Pattern::Constant;
      std::ostringstream os;
      os << tau;
      c.label = os.str();
      preset.settings.push_back(std::move(c));
    }
    return preset;
  }

  if (name == "q2-I" || name == "q2-II") {
    preset.title = "Quadratic functional, varying sparsity";
    preset.targets = {Target::QuadBeta};
    const bool ramp = name == "q2-I";
    for (int k = 40; k <= 110; k += 10) {
      ExperimentConfig c;
      c.two_sample = false;
      c.p = 800;
      c.n1 = 400;
      c.n2 = 0;
      c.reps = 300;
      c.s1 = k;
      c.s = c.s2 = k;
      c.tau1 = ramp ? .2 : .1;
      c.pattern_beta = ramp ? Pattern::Ramp : Pattern::Constant;
      c.label = std::to_string(k);
      preset.settings.push_back(std::move(c));
    }
    return preset;
  }

  throw CoheritError("unknown preset '" + name + "'");
}

ExperimentReport run_preset(const Preset& preset, int threads) {
  ExperimentReport report;
  report.preset = preset;
  for (const auto& setting : preset.settings) {
    report.settings.push_back(run_experiment(setting, threads));
  }
  return report;
}

std::vector<std::vector<std::string>> report_rows(const ExperimentReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"preset", "setting", "p", "n1", "n2", "reps", "s", "s1", "s2", "tau1", "tau2",
                  "rho", "b", "seed", "target", "method", "truth", "mse", "reps_used"});
  for (const auto& setting : report.settings) {
    const auto& c = setting.config;
    for (const auto& cell : setting.cells) {
      if (std::find(report.preset.targets.begin(), report.preset.targets.end(), cell.target) ==
          report.preset.targets.end())
        continue;
      rows.push_back({report.preset.name, c.label, std::to_string(c.p), std::to_string(c.n1),
                      std::to_string(c.n2), std::to_string(c.reps), std::to_string(c.s),
                      std::to_string(c.s1), std::to_string(c.s2), format_double(c.tau1),
                      format_double(c.tau2), format_double(c.rho), format_double(c.b),
                      std::to_string(c.master_seed), target_name(cell.target),
                      method_name(cell.method), format_double(cell.truth),
                      format_double(cell.mse), std::to_string(cell.reps_used)});
    }
  }
  return rows;
}

std::string report_table(const ExperimentReport& report) {
  std::ostringstream os;
  os << report.preset.name << ": " << report.preset.title << "\n";
  if (report.settings.empty()) return os.str();

  const int name_width = 12;
  const int col_width = 11;
  auto cell_text = [&](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return std::string(buf);
  };

  for (Target target : report.preset.targets) {
    os << "\n" << target_display(target) << "\n";
    os << std::string(name_width, ' ');
    for (const auto& setting : report.settings) {
      os << " ";
      std::string label = setting.config.label;
      if (static_cast<int>(label.size()) < col_width)
        label.insert(0, col_width - label.size(), ' ');
      os << label;
    }
    os << "\n";

    auto emit_row = [&](const std::string& label, auto value_for) {
      std::string name = label;
      name.resize(name_width, ' ');
      os << name;
      for (const auto& setting : report.settings) {
        std::string text = value_for(setting);
        if (static_cast<int>(text.size()) < col_width)
          text.insert(0, col_width - text.size(), ' ');
        os << " " << text;
      }
      os << "\n";
    };

    emit_row("Truth", [&](const SettingReport& s) {
      switch (target) {
        case Target::Inner: return cell_text(s.truth_inner);
        case Target::QuadBeta: return cell_text(s.truth_quad_beta);
        case Target::QuadGamma: return cell_text(s.truth_quad_gamma);
        case Target::Ratio: return cell_text(s.truth_ratio);
      }
      return std::string("?");
    });

    for (Method m : report.settings.front().config.methods) {
      if (target == Target::Inner && m == Method::FdeSplit) continue;  // identical to FDE
      emit_row(method_display(m, target), [&](const SettingReport& s) {
        const MethodCell* cell = s.find(target, m);
        return cell ? cell_text(cell->mse) : std::string("-");
      });
    }
  }
  return os.str();
}

TStats marginal_t_stats(const RegressionSample& sample) {
  const int n = sample.n();
  const int p = sample.p();
  if (n < 3) throw CoheritError("marginal t statistics need n >= 3");
  const Eigen::VectorXd& y = sample.response();
  TStats out;
  out.t.resize(p);
  const double eps = std::numeric_limits<double>::epsilon();
  // An exact fit leaves only rounding residue from the slope computation.
  const double exact_fit_rss = 100.0 * n * eps * eps * y.squaredNorm();
  for (int j = 0; j < p; ++j) {
    const double norm = sample.col_norms()[j];
    if (norm <= 0.0) throw ZeroColumnError(j);
    const auto column = sample.design().col(j);
    const double slope = column.dot(y) / (norm * norm);
    const double rss = (y - slope * column).squaredNorm();
    if (rss <= exact_fit_rss) {
      out.perfect_fit.push_back(j);
      out.t[j] = slope == 0.0 ? 0.0
                              : std::copysign(std::numeric_limits<double>::infinity(), slope);
    } else {
      out.t[j] = slope * norm / std::sqrt(rss / (n - 1));
    }
  }
  return out;
}

}  // namespace coherit
