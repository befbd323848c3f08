#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coherit/functionals.hpp"
#include "coherit/sample.hpp"

namespace coherit {

enum class Pattern { Ramp, Constant };
enum class Target { Inner, QuadBeta, QuadGamma, Ratio };

std::string pattern_name(Pattern p);
std::optional<Pattern> pattern_from_name(const std::string& name);
std::string target_name(Target t);

// One simulation setting (one column of a results table).
struct ExperimentConfig {
  std::string label;         // printed column header
  int p = 600;
  int n1 = 400;
  int n2 = 400;
  int reps = 300;
  int s = 15;                // shared support size
  int s1 = 30;               // support of beta
  int s2 = 25;               // support of gamma
  double tau1 = 1.0;
  double tau2 = 1.0;
  double rho = 0.8;
  double noise_sd = 1.0;
  Pattern pattern_beta = Pattern::Ramp;
  Pattern pattern_gamma = Pattern::Constant;
  double b = 0.5;            // lambda0 multiplier
  std::uint64_t master_seed = 0;
  bool two_sample = true;    // false: single-sample quadratic-functional study
  bool mock_truth = false;   // test hook: every method reports the truth
  std::vector<Method> methods = {Method::PluginLasso, Method::Debiased, Method::Thresholded,
                                 Method::FdeSplit, Method::FdeNosplit};
  ScaledLassoConfig lasso;   // solver budgets, passed through per replication
  DualSolverSettings dual;
};

// Disjointly padded support draw: s shared indices plus s1-s and s2-s
// exclusive ones, all without replacement, returned sorted.
std::pair<std::vector<int>, std::vector<int>> gen_supports(int p, int s, int s1, int s2,
                                                           RngStream& rng);

// Ramp assigns (1 + i/s) * tau / 2 to the i-th sorted support index
// (i = 1..s); constant assigns tau everywhere on the support.
Eigen::VectorXd gen_coefficients(const std::vector<int>& support, Pattern pattern, double tau,
                                 int p);

struct MethodCell {
  Method method;
  Target target;
  double truth = 0.0;
  double mse = 0.0;
  std::vector<double> raw;  // per-replication estimates, failures excluded
  int reps_used = 0;
};

struct SettingReport {
  ExperimentConfig config;
  double truth_inner = 0.0;
  double truth_quad_beta = 0.0;
  double truth_quad_gamma = 0.0;
  double truth_ratio = 0.0;
  std::vector<MethodCell> cells;
  int failures = 0;

  const MethodCell* find(Target target, Method method) const;
};

// Mean of squared deviations from the truth; the aggregation behind every
// reported cell.
double mean_squared_error(const std::vector<double>& estimates, double truth);

// Runs one setting: draws supports and coefficients once, then generates
// designs/noise and applies every requested method per replication.
// Replication r uses stream id r, so results are identical for any worker
// count. Throws TooManyFailuresError past 5% excluded replications.
SettingReport run_experiment(const ExperimentConfig& config, int threads = 1);

struct Preset {
  std::string name;
  std::string title;
  std::vector<Target> targets;  // which targets the report prints
  std::vector<ExperimentConfig> settings;
};

// exp1, exp2, q1a, q1b, q2-I, q2-II, tuning
Preset make_preset(const std::string& name);
std::vector<std::string> preset_names();

struct ExperimentReport {
  Preset preset;
  std::vector<SettingReport> settings;
};

ExperimentReport run_preset(const Preset& preset, int threads = 1);

// Report CSV: one row per setting x target x method.
std::vector<std::vector<std::string>> report_rows(const ExperimentReport& report);
// Aligned table in the layout of the published results: settings as columns,
// methods as rows, one block per target.
std::string report_table(const ExperimentReport& report);

struct TStats {
  Eigen::VectorXd t;
  std::vector<int> perfect_fit;  // columns where the residual vanished
};

// Per-marker t statistic from the univariate regression of the response on
// that column alone (no intercept): t_j = b_j * ||X.j|| / s_j with
// s_j^2 = ||y - b_j X.j||^2 / (n - 1). Exact fits give signed infinity.
TStats marginal_t_stats(const RegressionSample& sample);

}  // namespace coherit
