#include "coherit/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coherit/errors.hpp"
#include "coherit/parallel.hpp"

namespace coherit {

namespace {

double lambda0_for(const FdeConfig& cfg, int p) {
  return cfg.lambda0.value_or(default_lambda0(p, cfg.b));
}

double lambda_start_unit(const FdeConfig& cfg, int p, int n) {
  return cfg.lambda_start.value_or(default_lambda_start(p, n));
}

// X^T (y - X beta) / n, the shared ingredient of every residual correction.
Eigen::VectorXd residual_moment(const RegressionSample& s, const Eigen::VectorXd& beta) {
  return s.design().transpose() * (s.response() - s.design() * beta) / s.n();
}

// Projection for target g with the path start scaled by ||g||_2, matching the
// constraint bound of the primal program.
ProjectionDirection project_for_target(const GramView& gram, const Eigen::VectorXd& g,
                                       const FdeConfig& cfg) {
  const double norm = g.norm();
  if (norm == 0.0) {
    ProjectionDirection dir;
    dir.u_hat = Eigen::VectorXd::Zero(gram.p());
    dir.zero_target = true;
    dir.solved = true;
    return dir;
  }
  const double start = lambda_start_unit(cfg, gram.p(), gram.n()) * norm;
  return find_projection(gram, g, start, cfg.shrink, cfg.max_path_steps, cfg.dual);
}

ProjectionDiag diag_of(const ProjectionDirection& dir, std::string role, double correction) {
  return {std::move(role), dir.feasibility_gap, correction, dir.lambda_accepted,
          dir.dual_steps, dir.solved};
}

// Adds the two residual corrections in a value-canonical order so the result
// is invariant under swapping the two samples.
double symmetric_inner(double plug, double corr_a, double corr_b) {
  const double lo = std::min(corr_a, corr_b);
  const double hi = std::max(corr_a, corr_b);
  return plug + lo + hi;
}

struct QuadPart {
  double value = 0.0;
  ProjectionDiag diag;
};

// Corrected quadratic functional on a prepared (fit, gram) pair:
// (||beta||^2 + 2 u^T X^T (y - X beta) / m)_+ with everything on `corr_sample`.
QuadPart quad_no_split(const RegressionSample& sample, const GramView& gram,
                       const ScaledLassoFit& fit, const FdeConfig& cfg, std::string role) {
  QuadPart out;
  const ProjectionDirection dir = project_for_target(gram, fit.beta_hat, cfg);
  const double corr = 2.0 * dir.u_hat.dot(residual_moment(sample, fit.beta_hat));
  out.value = std::max(0.0, fit.beta_hat.squaredNorm() + corr);
  out.diag = diag_of(dir, std::move(role), corr);
  return out;
}

QuadPart quad_split(const RegressionSample& sample, const FdeConfig& cfg, RngStream rng,
                    std::string role) {
  if (sample.n() < 4) throw CoheritError("sample splitting needs n >= 4");
  auto [fit_half, corr_half] = split_sample(sample, rng);
  const ScaledLassoFit fit = fit_scaled_lasso(fit_half, lambda0_for(cfg, sample.p()), cfg.lasso);
  const GramView gram(corr_half, cfg.gram_threshold);
  QuadPart out;
  const ProjectionDirection dir = project_for_target(gram, fit.beta_hat, cfg);
  const double corr = 2.0 * dir.u_hat.dot(residual_moment(corr_half, fit.beta_hat));
  out.value = std::max(0.0, fit.beta_hat.squaredNorm() + corr);
  out.diag = diag_of(dir, std::move(role), corr);
  return out;
}

// Shared-everything assembly used by estimate_pair_fde and the method sweep.
CoheritabilityEstimate fde_from_parts(const RegressionSample& x, const RegressionSample& z,
                                      const ScaledLassoFit& fit_x, const ScaledLassoFit& fit_z,
                                      const GramView& gram_x, const GramView& gram_z,
                                      bool split, const FdeConfig& cfg) {
  CoheritabilityEstimate est;
  est.method = split ? Method::FdeSplit : Method::FdeNosplit;

  const Eigen::VectorXd moment_x = residual_moment(x, fit_x.beta_hat);
  const Eigen::VectorXd moment_z = residual_moment(z, fit_z.beta_hat);
  const ProjectionDirection u1 = project_for_target(gram_x, fit_z.beta_hat, cfg);
  const ProjectionDirection u2 = project_for_target(gram_z, fit_x.beta_hat, cfg);
  const double corr1 = u1.u_hat.dot(moment_x);
  const double corr2 = u2.u_hat.dot(moment_z);
  est.inner = symmetric_inner(fit_x.beta_hat.dot(fit_z.beta_hat), corr1, corr2);
  est.diagnostics.push_back(diag_of(u1, "inner/x", corr1));
  est.diagnostics.push_back(diag_of(u2, "inner/z", corr2));

  if (split) {
    RngStream rng(cfg.split_seed, 0);
    QuadPart qb = quad_split(x, cfg, rng.substream(1), "quad/x");
    QuadPart qg = quad_split(z, cfg, rng.substream(2), "quad/z");
    est.quad_beta = qb.value;
    est.quad_gamma = qg.value;
    est.diagnostics.push_back(std::move(qb.diag));
    est.diagnostics.push_back(std::move(qg.diag));
  } else {
    QuadPart qb = quad_no_split(x, gram_x, fit_x, cfg, "quad/x");
    QuadPart qg = quad_no_split(z, gram_z, fit_z, cfg, "quad/z");
    est.quad_beta = qb.value;
    est.quad_gamma = qg.value;
    est.diagnostics.push_back(std::move(qb.diag));
    est.diagnostics.push_back(std::move(qg.diag));
  }

  est.ratio = clamp_ratio(est.inner, est.quad_beta, est.quad_gamma);
  return est;
}

CoheritabilityEstimate plugin_from_vectors(const Eigen::VectorXd& bx, const Eigen::VectorXd& bz,
                                           Method method) {
  CoheritabilityEstimate est;
  est.method = method;
  est.inner = bx.dot(bz);
  est.quad_beta = bx.squaredNorm();
  est.quad_gamma = bz.squaredNorm();
  est.ratio = clamp_ratio(est.inner, est.quad_beta, est.quad_gamma);
  return est;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::FdeSplit: return "fde_split";
    case Method::FdeNosplit: return "fde_nosplit";
    case Method::PluginLasso: return "plugin_lasso";
    case Method::Debiased: return "debiased";
    case Method::Thresholded: return "thresholded";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  if (name == "fde_split") return Method::FdeSplit;
  if (name == "fde_nosplit") return Method::FdeNosplit;
  if (name == "plugin_lasso") return Method::PluginLasso;
  if (name == "debiased") return Method::Debiased;
  if (name == "thresholded") return Method::Thresholded;
  return std::nullopt;
}

double clamp_ratio(double inner, double quad_beta, double quad_gamma) {
  const double product = quad_beta * quad_gamma;
  if (!(product > 0.0)) return 0.0;
  const double magnitude = std::min(std::abs(inner) / std::sqrt(product), 1.0);
  if (inner > 0.0) return magnitude;
  if (inner < 0.0) return -magnitude;
  return 0.0;
}

std::pair<RegressionSample, RegressionSample> split_sample(const RegressionSample& sample,
                                                           RngStream rng) {
  const int n = sample.n();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[k]);
  }
  const int first = n - n / 2;  // extra row goes to the fitting half
  Eigen::MatrixXd x1(first, sample.p()), x2(n - first, sample.p());
  Eigen::VectorXd y1(first), y2(n - first);
  for (int i = 0; i < first; ++i) {
    x1.row(i) = sample.design().row(order[i]);
    y1[i] = sample.response()[order[i]];
  }
  for (int i = first; i < n; ++i) {
    x2.row(i - first) = sample.design().row(order[i]);
    y2[i - first] = sample.response()[order[i]];
  }
  return {RegressionSample(std::move(x1), std::move(y1)),
          RegressionSample(std::move(x2), std::move(y2))};
}

double estimate_inner_fde(const RegressionSample& sample_x, const RegressionSample& sample_z,
                          const FdeConfig& config) {
  if (sample_x.p() != sample_z.p()) throw CoheritError("samples must share covariates");
  const ScaledLassoFit fit_x = fit_scaled_lasso(sample_x, lambda0_for(config, sample_x.p()),
                                                config.lasso);
  const ScaledLassoFit fit_z = fit_scaled_lasso(sample_z, lambda0_for(config, sample_z.p()),
                                                config.lasso);
  const GramView gram_x(sample_x, config.gram_threshold);
  const GramView gram_z(sample_z, config.gram_threshold);
  const ProjectionDirection u1 = project_for_target(gram_x, fit_z.beta_hat, config);
  const ProjectionDirection u2 = project_for_target(gram_z, fit_x.beta_hat, config);
  return symmetric_inner(fit_x.beta_hat.dot(fit_z.beta_hat),
                         u1.u_hat.dot(residual_moment(sample_x, fit_x.beta_hat)),
                         u2.u_hat.dot(residual_moment(sample_z, fit_z.beta_hat)));
}

double estimate_quadratic_fde(const RegressionSample& sample, bool split,
                              const FdeConfig& config) {
  if (split) {
    RngStream rng(config.split_seed, 0);
    return quad_split(sample, config, rng.substream(1), "quad").value;
  }
  const ScaledLassoFit fit = fit_scaled_lasso(sample, lambda0_for(config, sample.p()),
                                              config.lasso);
  const GramView gram(sample, config.gram_threshold);
  return quad_no_split(sample, gram, fit, config, "quad").value;
}

double estimate_ratio_fde(const RegressionSample& sample_x, const RegressionSample& sample_z,
                          bool split, const FdeConfig& config) {
  return estimate_pair_fde(sample_x, sample_z, split, config).ratio;
}

CoheritabilityEstimate estimate_pair_fde(const RegressionSample& sample_x,
                                         const RegressionSample& sample_z, bool split,
                                         const FdeConfig& config) {
  if (sample_x.p() != sample_z.p()) throw CoheritError("samples must share covariates");
  const ScaledLassoFit fit_x = fit_scaled_lasso(sample_x, lambda0_for(config, sample_x.p()),
                                                config.lasso);
  const ScaledLassoFit fit_z = fit_scaled_lasso(sample_z, lambda0_for(config, sample_z.p()),
                                                config.lasso);
  const GramView gram_x(sample_x, config.gram_threshold);
  const GramView gram_z(sample_z, config.gram_threshold);
  return fde_from_parts(sample_x, sample_z, fit_x, fit_z, gram_x, gram_z, split, config);
}

CoheritabilityEstimate plugin_estimates(const ScaledLassoFit& fit_x,
                                        const ScaledLassoFit& fit_z) {
  if (fit_x.beta_hat.size() != fit_z.beta_hat.size())
    throw CoheritError("fits must share covariates");
  return plugin_from_vectors(fit_x.beta_hat, fit_z.beta_hat, Method::PluginLasso);
}

DebiasResult debias_fit(const RegressionSample& sample, const ScaledLassoFit& fit,
                        const FdeConfig& config, const GramView* gram) {
  const int p = sample.p();
  std::optional<GramView> local;
  if (gram == nullptr) {
    local.emplace(sample, config.gram_threshold);
    gram = &*local;
  }
  DebiasResult out;
  out.beta_tilde.resize(p);
  out.direction_quads.resize(p);
  const Eigen::VectorXd moment = residual_moment(sample, fit.beta_hat);
  for (int j = 0; j < p; ++j) {
    const ProjectionDirection dir =
        project_for_target(*gram, Eigen::VectorXd::Unit(p, j), config);
    if (dir.solved) {
      out.beta_tilde[j] = fit.beta_hat[j] + dir.u_hat.dot(moment);
      out.direction_quads[j] = dir.quad_value;
    } else {
      const double d = gram->diagonal()[j];
      out.beta_tilde[j] = fit.beta_hat[j] + (d > 0.0 ? moment[j] / d : 0.0);
      out.direction_quads[j] = d > 0.0 ? 1.0 / d : 0.0;
      ++out.fallback_count;
    }
  }
  return out;
}

Eigen::VectorXd debias_coefficients(const RegressionSample& sample, const ScaledLassoFit& fit,
                                    const FdeConfig& config) {
  return debias_fit(sample, fit, config).beta_tilde;
}

Eigen::VectorXd threshold_coefficients(const Eigen::VectorXd& beta_tilde, double sigma_hat,
                                       const Eigen::VectorXd& direction_quads, int n, int p) {
  if (beta_tilde.size() != direction_quads.size())
    throw CoheritError("direction quads length mismatch");
  const double level = std::sqrt(2.01 * std::log(static_cast<double>(p)) / n);
  Eigen::VectorXd out = beta_tilde;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    const double tau = sigma_hat * std::sqrt(std::max(direction_quads[j], 0.0)) * level;
    if (std::abs(out[j]) <= tau) out[j] = 0.0;
  }
  return out;
}

std::vector<CoheritabilityEstimate> estimate_all_methods(const RegressionSample& sample_x,
                                                         const RegressionSample& sample_z,
                                                         const std::vector<Method>& methods,
                                                         const FdeConfig& config) {
  if (sample_x.p() != sample_z.p()) throw CoheritError("samples must share covariates");
  const bool want_fde_ns =
      std::find(methods.begin(), methods.end(), Method::FdeNosplit) != methods.end();
  const bool want_fde_s =
      std::find(methods.begin(), methods.end(), Method::FdeSplit) != methods.end();
  const bool want_debias =
      std::find(methods.begin(), methods.end(), Method::Debiased) != methods.end() ||
      std::find(methods.begin(), methods.end(), Method::Thresholded) != methods.end();

  const ScaledLassoFit fit_x = fit_scaled_lasso(sample_x, lambda0_for(config, sample_x.p()),
                                                config.lasso);
  const ScaledLassoFit fit_z = fit_scaled_lasso(sample_z, lambda0_for(config, sample_z.p()),
                                                config.lasso);
  const GramView gram_x(sample_x, config.gram_threshold);
  const GramView gram_z(sample_z, config.gram_threshold);

  std::optional<CoheritabilityEstimate> fde_ns, fde_s;
  if (want_fde_ns)
    fde_ns = fde_from_parts(sample_x, sample_z, fit_x, fit_z, gram_x, gram_z, false, config);
  if (want_fde_s)
    fde_s = fde_from_parts(sample_x, sample_z, fit_x, fit_z, gram_x, gram_z, true, config);

  std::optional<DebiasResult> deb_x, deb_z;
  if (want_debias) {
    deb_x = debias_fit(sample_x, fit_x, config, &gram_x);
    deb_z = debias_fit(sample_z, fit_z, config, &gram_z);
  }

  std::vector<CoheritabilityEstimate> out;
  out.reserve(methods.size());
  for (Method m : methods) {
    switch (m) {
      case Method::FdeNosplit:
        out.push_back(*fde_ns);
        break;
      case Method::FdeSplit:
        out.push_back(*fde_s);
        break;
      case Method::PluginLasso:
        out.push_back(plugin_estimates(fit_x, fit_z));
        break;
      case Method::Debiased:
        out.push_back(
            plugin_from_vectors(deb_x->beta_tilde, deb_z->beta_tilde, Method::Debiased));
        break;
      case Method::Thresholded: {
        const Eigen::VectorXd bx = threshold_coefficients(
            deb_x->beta_tilde, fit_x.sigma_hat, deb_x->direction_quads, sample_x.n(),
            sample_x.p());
        const Eigen::VectorXd bz = threshold_coefficients(
            deb_z->beta_tilde, fit_z.sigma_hat, deb_z->direction_quads, sample_z.n(),
            sample_z.p());
        out.push_back(plugin_from_vectors(bx, bz, Method::Thresholded));
        break;
      }
    }
  }
  return out;
}

PairwiseEstimates estimate_pairwise_shared(const Eigen::MatrixXd& design,
                                           const Eigen::MatrixXd& traits,
                                           const FdeConfig& config, int threads) {
  if (traits.rows() != design.rows())
    throw CoheritError("trait rows do not match design rows");
  const int t = static_cast<int>(traits.cols());
  if (t < 1) throw CoheritError("need at least one trait");
  const int p = static_cast<int>(design.cols());
  const double lambda0 = lambda0_for(config, p);

  // The gram view needs a live sample; the response it carries is unused.
  const RegressionSample holder(design, Eigen::VectorXd::Zero(design.rows()));
  const GramView gram(holder, config.gram_threshold);

  PairwiseEstimates out;
  out.fits.resize(t);
  std::vector<Eigen::VectorXd> moments(t);
  std::vector<Eigen::VectorXd> directions(t);
  auto work_trait = [&](int i) {
    RegressionSample sample(design, traits.col(i));
    out.fits[i] = fit_scaled_lasso(sample, lambda0, config.lasso);
    moments[i] = residual_moment(sample, out.fits[i].beta_hat);
    directions[i] = project_for_target(gram, out.fits[i].beta_hat, config).u_hat;
  };
  run_indexed(t, threads, work_trait);

  out.quads.resize(t);
  out.inner.resize(t, t);
  out.ratio.resize(t, t);
  for (int i = 0; i < t; ++i) {
    const double corr = 2.0 * directions[i].dot(moments[i]);
    out.quads[i] = std::max(0.0, out.fits[i].beta_hat.squaredNorm() + corr);
  }
  for (int i = 0; i < t; ++i) {
    for (int j = i; j < t; ++j) {
      const double inner =
          symmetric_inner(out.fits[i].beta_hat.dot(out.fits[j].beta_hat),
                          directions[j].dot(moments[i]), directions[i].dot(moments[j]));
      out.inner(i, j) = out.inner(j, i) = inner;
      // A trait against itself normalizes to exactly one (or zero when its
      // quadratic estimate vanishes).
      const double ratio = i == j ? (out.quads[i] > 0.0 ? 1.0 : 0.0)
                                  : clamp_ratio(inner, out.quads[i], out.quads[j]);
      out.ratio(i, j) = out.ratio(j, i) = ratio;
    }
  }
  return out;
}

std::vector<std::pair<Method, double>> estimate_quadratic_all(const RegressionSample& sample,
                                                              const std::vector<Method>& methods,
                                                              const FdeConfig& config) {
  const bool want_debias =
      std::find(methods.begin(), methods.end(), Method::Debiased) != methods.end() ||
      std::find(methods.begin(), methods.end(), Method::Thresholded) != methods.end();
  const ScaledLassoFit fit = fit_scaled_lasso(sample, lambda0_for(config, sample.p()),
                                              config.lasso);
  const GramView gram(sample, config.gram_threshold);

  std::optional<DebiasResult> deb;
  if (want_debias) deb = debias_fit(sample, fit, config, &gram);

  std::vector<std::pair<Method, double>> out;
  out.reserve(methods.size());
  for (Method m : methods) {
    switch (m) {
      case Method::FdeNosplit:
        out.emplace_back(m, quad_no_split(sample, gram, fit, config, "quad").value);
        break;
      case Method::FdeSplit: {
        RngStream rng(config.split_seed, 0);
        out.emplace_back(m, quad_split(sample, config, rng.substream(1), "quad").value);
        break;
      }
      case Method::PluginLasso:
        out.emplace_back(m, fit.beta_hat.squaredNorm());
        break;
      case Method::Debiased:
        out.emplace_back(m, deb->beta_tilde.squaredNorm());
        break;
      case Method::Thresholded: {
        const Eigen::VectorXd bt = threshold_coefficients(
            deb->beta_tilde, fit.sigma_hat, deb->direction_quads, sample.n(), sample.p());
        out.emplace_back(m, bt.squaredNorm());
        break;
      }
    }
  }
  return out;
}

}  // namespace coherit
