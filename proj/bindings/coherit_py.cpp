#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "coherit/errors.hpp"
#include "coherit/functionals.hpp"
#include "coherit/sample.hpp"
#include "coherit/simulation.hpp"

namespace py = pybind11;
using namespace coherit;

namespace {

FdeConfig make_config(double b, std::optional<double> lambda0, std::uint64_t seed) {
  FdeConfig cfg;
  cfg.b = b;
  cfg.lambda0 = lambda0;
  cfg.split_seed = seed;
  return cfg;
}

py::dict fit_dict(const ScaledLassoFit& fit) {
  py::dict d;
  d["beta"] = fit.beta_hat;
  d["sigma"] = fit.sigma_hat;
  d["lambda0"] = fit.lambda0;
  d["iterations"] = fit.iterations;
  d["kkt_residual"] = fit.kkt_residual;
  d["degenerate"] = fit.degenerate;
  return d;
}

py::dict estimate_dict(const CoheritabilityEstimate& est) {
  py::dict d;
  d["inner"] = est.inner;
  d["quad_beta"] = est.quad_beta;
  d["quad_gamma"] = est.quad_gamma;
  d["ratio"] = est.ratio;
  d["method"] = method_name(est.method);
  return d;
}

std::vector<Method> parse_method_list(const std::vector<std::string>& names) {
  std::vector<Method> methods;
  for (const auto& name : names) {
    const auto m = method_from_name(name);
    if (!m) throw CoheritError("unknown method '" + name + "'");
    methods.push_back(*m);
  }
  return methods;
}

py::list report_dicts(const ExperimentReport& report) {
  py::list rows;
  const auto table = report_rows(report);
  const auto& header = table.front();
  for (size_t i = 1; i < table.size(); ++i) {
    py::dict row;
    for (size_t j = 0; j < header.size(); ++j) row[py::str(header[j])] = table[i][j];
    rows.append(row);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_coherit, m) {
  m.doc() = "Functional de-biased estimation of co-heritability in sparse linear models";

  py::register_exception<CoheritError>(m, "CoheritError");

  m.def(
      "sample_gaussian_ar1",
      [](int n, int p, double rho, std::uint64_t seed, std::uint64_t stream) {
        RngStream rng(seed, stream);
        return sample_gaussian_ar1(n, p, rho, rng);
      },
      py::arg("n"), py::arg("p"), py::arg("rho"), py::arg("seed") = 0, py::arg("stream") = 0,
      "n x p matrix with i.i.d. rows from an AR(1) gaussian with unit variances");

  m.def(
      "standardize_columns",
      [](const Eigen::MatrixXd& x) {
        auto std_s = standardize_columns(RegressionSample(x, Eigen::VectorXd::Zero(x.rows())));
        return py::make_tuple(std_s.sample.design(), std_s.scales);
      },
      py::arg("x"), "Rescale columns to norm sqrt(n); returns (matrix, scales)");

  m.def(
      "fit_scaled_lasso",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double b,
         std::optional<double> lambda0) {
        const RegressionSample sample(x, y);
        const double lam = lambda0.value_or(default_lambda0(sample.p(), b));
        return fit_dict(fit_scaled_lasso(sample, lam));
      },
      py::arg("x"), py::arg("y"), py::arg("b") = 0.5, py::arg("lambda0") = std::nullopt,
      "Joint sparse-coefficient and noise-scale estimate");

  m.def(
      "find_projection",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& g,
         std::optional<double> lambda_start) {
        const RegressionSample sample(x, Eigen::VectorXd::Zero(x.rows()));
        const GramView gram(sample);
        const double start =
            lambda_start.value_or(default_lambda_start(sample.p(), sample.n()) * g.norm());
        const ProjectionDirection dir = find_projection(gram, g, start);
        py::dict d;
        d["u"] = dir.u_hat;
        d["lambda_accepted"] = dir.lambda_accepted;
        d["dual_steps"] = dir.dual_steps;
        d["feasibility_gap"] = dir.feasibility_gap;
        d["quad_value"] = dir.quad_value;
        d["solved"] = dir.solved;
        return d;
      },
      py::arg("x"), py::arg("g"), py::arg("lambda_start") = std::nullopt,
      "Sup-norm constrained projection direction via the penalized dual path");

  m.def(
      "estimate_pair",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& z,
         const Eigen::VectorXd& w, bool split, double b, std::optional<double> lambda0,
         std::uint64_t seed) {
        const RegressionSample sx(x, y), sz(z, w);
        return estimate_dict(estimate_pair_fde(sx, sz, split, make_config(b, lambda0, seed)));
      },
      py::arg("x"), py::arg("y"), py::arg("z"), py::arg("w"), py::arg("split") = false,
      py::arg("b") = 0.5, py::arg("lambda0") = std::nullopt, py::arg("seed") = 0,
      "Corrected inner product, quadratic functionals and normalized inner product");

  m.def(
      "estimate_quadratic",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool split, double b,
         std::optional<double> lambda0, std::uint64_t seed) {
        return estimate_quadratic_fde(RegressionSample(x, y), split,
                                      make_config(b, lambda0, seed));
      },
      py::arg("x"), py::arg("y"), py::arg("split") = false, py::arg("b") = 0.5,
      py::arg("lambda0") = std::nullopt, py::arg("seed") = 0,
      "Corrected squared-norm estimate, clamped at zero");

  m.def(
      "debias_coefficients",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double b,
         std::optional<double> lambda0) {
        const RegressionSample sample(x, y);
        const FdeConfig cfg = make_config(b, lambda0, 0);
        const double lam = cfg.lambda0.value_or(default_lambda0(sample.p(), cfg.b));
        const ScaledLassoFit fit = fit_scaled_lasso(sample, lam);
        return debias_coefficients(sample, fit, cfg);
      },
      py::arg("x"), py::arg("y"), py::arg("b") = 0.5, py::arg("lambda0") = std::nullopt,
      "De-biased coefficient vector from per-coordinate projections");

  m.def(
      "estimate_pairwise",
      [](const Eigen::MatrixXd& design, const Eigen::MatrixXd& traits, double b,
         std::optional<double> lambda0, std::uint64_t seed, int threads) {
        const PairwiseEstimates pw =
            estimate_pairwise_shared(design, traits, make_config(b, lambda0, seed), threads);
        py::dict d;
        d["inner"] = pw.inner;
        d["ratio"] = pw.ratio;
        d["quads"] = pw.quads;
        return d;
      },
      py::arg("design"), py::arg("traits"), py::arg("b") = 0.5,
      py::arg("lambda0") = std::nullopt, py::arg("seed") = 0, py::arg("threads") = 1,
      "All pairwise estimates for traits sharing one design (no splitting)");

  m.def(
      "marginal_t_stats",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
        const TStats stats = marginal_t_stats(RegressionSample(x, y));
        return py::make_tuple(stats.t, stats.perfect_fit);
      },
      py::arg("x"), py::arg("y"),
      "Per-marker univariate t statistics; returns (t, perfect_fit_indices)");

  m.def("preset_names", &preset_names, "Names of the built-in simulation presets");

  m.def(
      "run_preset",
      [](const std::string& name, std::optional<int> reps, std::uint64_t seed,
         std::optional<double> b, int threads) {
        Preset preset = make_preset(name);
        for (auto& setting : preset.settings) {
          if (reps) setting.reps = *reps;
          setting.master_seed = seed;
          if (b) setting.b = *b;
        }
        const ExperimentReport report = run_preset(preset, threads);
        py::dict d;
        d["rows"] = report_dicts(report);
        d["table"] = report_table(report);
        return d;
      },
      py::arg("name"), py::arg("reps") = std::nullopt, py::arg("seed") = 0,
      py::arg("b") = std::nullopt, py::arg("threads") = 1,
      "Run a named simulation preset; returns {'rows': [...], 'table': str}");

  m.def(
      "run_setting",
      [](int p, int n1, int n2, int reps, int s, int s1, int s2, double tau1, double tau2,
         double rho, double b, std::uint64_t seed, const std::vector<std::string>& methods,
         bool two_sample, int threads) {
        ExperimentConfig c;
        c.label = "custom";
        c.p = p;
        c.n1 = n1;
        c.n2 = n2;
        c.reps = reps;
        c.s = s;
        c.s1 = s1;
        c.s2 = s2;
        c.tau1 = tau1;
        c.tau2 = tau2;
        c.rho = rho;
        c.b = b;
        c.master_seed = seed;
        c.two_sample = two_sample;
        if (!methods.empty()) c.methods = parse_method_list(methods);
        const SettingReport report = run_experiment(c, threads);
        py::list cells;
        for (const auto& cell : report.cells) {
          py::dict row;
          row["target"] = target_name(cell.target);
          row["method"] = method_name(cell.method);
          row["truth"] = cell.truth;
          row["mse"] = cell.mse;
          row["reps_used"] = cell.reps_used;
          row["raw"] = cell.raw;
          cells.append(row);
        }
        return cells;
      },
      py::arg("p"), py::arg("n1"), py::arg("n2"), py::arg("reps"), py::arg("s"), py::arg("s1"),
      py::arg("s2"), py::arg("tau1"), py::arg("tau2"), py::arg("rho") = 0.8,
      py::arg("b") = 0.5, py::arg("seed") = 0,
      py::arg("methods") = std::vector<std::string>{}, py::arg("two_sample") = true,
      py::arg("threads") = 1, "Run one fully specified simulation setting");
}
