#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coherit/projection.hpp"
#include "coherit/sample.hpp"
#include "coherit/scaled_lasso.hpp"

namespace coherit {

enum class Method {
  FdeSplit,
  FdeNosplit,
  PluginLasso,
  Debiased,
  Thresholded,
};

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct FdeConfig {
  double b = 0.5;                      // lambda0 multiplier
  std::optional<double> lambda0;       // overrides the b * sqrt(2.01 log p) rule
  std::optional<double> lambda_start;  // path start per unit of target norm
  double shrink = 1.5;
  int max_path_steps = 10;
  std::uint64_t split_seed = 0;        // seeds the half/half row permutation
  int gram_threshold = 2048;
  ScaledLassoConfig lasso;
  DualSolverSettings dual;
};

struct ProjectionDiag {
  std::string role;        // which correction this direction serves
  double feasibility_gap = 0.0;
  double correction = 0.0;  // magnitude added to the plug-in value
  double lambda_accepted = 0.0;
  int dual_steps = 0;
  bool solved = false;
};

struct CoheritabilityEstimate {
  double inner = 0.0;       // corrected <beta, gamma>
  double quad_beta = 0.0;   // >= 0
  double quad_gamma = 0.0;  // >= 0
  double ratio = 0.0;       // in [-1, 1]; 0 whenever quad_beta * quad_gamma = 0
  Method method = Method::FdeNosplit;
  std::vector<ProjectionDiag> diagnostics;
};

// sign(inner) * min{|inner| / sqrt(qb * qg), 1}, zero when either quad is zero.
double clamp_ratio(double inner, double quad_beta, double quad_gamma);

// Corrected inner-product estimate from two samples over the same covariates:
// plug-in <beta_hat, gamma_hat> plus one projected-residual correction per
// sample.
double estimate_inner_fde(const RegressionSample& sample_x, const RegressionSample& sample_z,
                          const FdeConfig& config = {});

// Corrected ||beta||^2 estimate, clamped at zero. With split = true the
// initial fit uses one random half and the correction the other (odd n puts
// the extra row in the fitting half); otherwise everything runs on the full
// sample.
double estimate_quadratic_fde(const RegressionSample& sample, bool split,
                              const FdeConfig& config = {});

// Normalized inner product composed from the estimators above with shared
// scaled-lasso fits.
double estimate_ratio_fde(const RegressionSample& sample_x, const RegressionSample& sample_z,
                          bool split, const FdeConfig& config = {});

// Full set (inner, both quads, ratio) with fits shared across the four
// projections.
CoheritabilityEstimate estimate_pair_fde(const RegressionSample& sample_x,
                                         const RegressionSample& sample_z, bool split,
                                         const FdeConfig& config = {});

// Direct plug-in of two scaled-lasso fits.
CoheritabilityEstimate plugin_estimates(const ScaledLassoFit& fit_x,
                                        const ScaledLassoFit& fit_z);

struct DebiasResult {
  Eigen::VectorXd beta_tilde;
  Eigen::VectorXd direction_quads;  // m_j^T Sigma_hat m_j per coordinate
  int fallback_count = 0;           // coordinates where the projection failed
};

// De-biased coefficients: beta_tilde_j = beta_hat_j + m_j^T X^T (y - X beta_hat) / n
// with m_j the projection direction for target e_j. Failed projections fall
// back to m_j = e_j / Sigma_hat_jj.
DebiasResult debias_fit(const RegressionSample& sample, const ScaledLassoFit& fit,
                        const FdeConfig& config = {}, const GramView* gram = nullptr);

Eigen::VectorXd debias_coefficients(const RegressionSample& sample, const ScaledLassoFit& fit,
                                    const FdeConfig& config = {});

// Hard threshold at the per-coordinate standard-error scale times the
// universal sqrt(2.01 log p / n) level.
Eigen::VectorXd threshold_coefficients(const Eigen::VectorXd& beta_tilde, double sigma_hat,
                                       const Eigen::VectorXd& direction_quads, int n, int p);

// Every requested method on one pair of samples, sharing fits, Gram views and
// nodewise directions across methods. Output order matches `methods`.
std::vector<CoheritabilityEstimate> estimate_all_methods(const RegressionSample& sample_x,
                                                         const RegressionSample& sample_z,
                                                         const std::vector<Method>& methods,
                                                         const FdeConfig& config = {});

// Single-sample ||beta||^2 for every requested method.
std::vector<std::pair<Method, double>> estimate_quadratic_all(const RegressionSample& sample,
                                                              const std::vector<Method>& methods,
                                                              const FdeConfig& config = {});

// Seeded half/half row split; first half receives the extra row when n is odd.
std::pair<RegressionSample, RegressionSample> split_sample(const RegressionSample& sample,
                                                           RngStream rng);

// All pairwise no-split estimates over traits measured on one shared design:
// one fit and one projection per trait, assembled exactly as the per-pair
// estimator would. inner(i,i) holds the corrected quadratic value before the
// zero clamp; quads[i] is the clamped estimate.
struct PairwiseEstimates {
  std::vector<ScaledLassoFit> fits;
  Eigen::VectorXd quads;
  Eigen::MatrixXd inner;  // symmetric
  Eigen::MatrixXd ratio;  // symmetric, ones on the diagonal when quads > 0
};
PairwiseEstimates estimate_pairwise_shared(const Eigen::MatrixXd& design,
                                           const Eigen::MatrixXd& traits,
                                           const FdeConfig& config = {}, int threads = 1);

}  // namespace coherit
