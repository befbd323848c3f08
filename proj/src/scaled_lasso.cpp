#include "coherit/scaled_lasso.hpp"

#include <algorithm>
#include <cmath>

#include "coherit/errors.hpp"

namespace coherit {

namespace {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Max KKT violation of the weighted lasso at beta, given the residual.
double lasso_kkt_residual(const RegressionSample& sample, const Eigen::VectorXd& penalties,
                          const Eigen::VectorXd& beta, const Eigen::VectorXd& residual) {
  const Eigen::VectorXd grad = sample.design().transpose() * residual / sample.n();
  double worst = 0.0;
  for (int j = 0; j < sample.p(); ++j) {
    double v;
    if (beta[j] != 0.0) {
      v = std::abs(grad[j] - penalties[j] * (beta[j] > 0 ? 1.0 : -1.0));
    } else {
      v = std::abs(grad[j]) - penalties[j];
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace

double default_lambda0(int p, double b) {
  return b * std::sqrt(2.01 * std::log(static_cast<double>(p)));
}

Eigen::VectorXd lasso_weighted_cd(const RegressionSample& sample,
                                  const Eigen::VectorXd& penalties, Eigen::VectorXd beta,
                                  double tol, int max_sweeps) {
  const int n = sample.n();
  const int p = sample.p();
  if (penalties.size() != p) throw CoheritError("penalty vector length mismatch");
  if (penalties.minCoeff() < 0.0 || !penalties.allFinite())
    throw CoheritError("penalties must be nonnegative and finite");
  if (!(tol > 0.0)) throw CoheritError("tol must be positive");
  if (beta.size() != p) beta = Eigen::VectorXd::Zero(p);

  const Eigen::MatrixXd& x = sample.design();
  const double inv_n = 1.0 / n;
  const Eigen::VectorXd curvature = sample.col_norms().array().square() * inv_n;
  const Eigen::VectorXd col_scale = sample.col_norms() / std::sqrt(static_cast<double>(n));

  Eigen::VectorXd residual = sample.response();
  if (!beta.isZero(0.0)) residual.noalias() -= x * beta;

  double last_kkt = 0.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (int j = 0; j < p; ++j) {
      const double a = curvature[j];
      if (a <= 0.0) continue;  // zero column carries no signal; leave coefficient alone
      const double grad = x.col(j).dot(residual) * inv_n;
      const double next = soft_threshold(grad + a * beta[j], penalties[j]) / a;
      const double delta = next - beta[j];
      if (delta != 0.0) {
        residual.noalias() -= delta * x.col(j);
        beta[j] = next;
        max_move = std::max(max_move, std::abs(delta) * col_scale[j]);
      }
    }
    if (max_move <= 0.1 * tol) {
      // Refresh the residual before certifying, to cancel incremental drift.
      residual = sample.response() - x * beta;
      last_kkt = lasso_kkt_residual(sample, penalties, beta, residual);
      if (last_kkt <= tol) return beta;
    }
  }
  residual = sample.response() - x * beta;
  last_kkt = lasso_kkt_residual(sample, penalties, beta, residual);
  if (last_kkt <= tol) return beta;
  throw NoConvergenceError(last_kkt, tol, max_sweeps);
}

double scaled_lasso_objective(const RegressionSample& sample, const Eigen::VectorXd& beta,
                              double sigma, double lambda0) {
  const double n = sample.n();
  const double rss = (sample.response() - sample.design() * beta).squaredNorm();
  const double l1 = sample.col_norms().cwiseProduct(beta.cwiseAbs()).sum();
  return rss / (2.0 * n * sigma) + sigma / 2.0 + lambda0 / n * l1;
}

ScaledLassoFit fit_scaled_lasso(const RegressionSample& sample, double lambda0,
                                const ScaledLassoConfig& config) {
  if (!(lambda0 > 0.0)) throw CoheritError("lambda0 must be positive");
  const int n = sample.n();
  const int p = sample.p();

  const Eigen::VectorXd& y = sample.response();
  ScaledLassoFit fit;
  fit.lambda0 = lambda0;
  fit.beta_hat = Eigen::VectorXd::Zero(p);

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double sd_y = (y.array() - y.mean()).matrix().norm() / sqrt_n;
  if (y.norm() == 0.0 || sd_y == 0.0) {
    for (int j = 0; j < p; ++j) {
      if (sample.col_norms()[j] <= 0.0) throw ZeroColumnError(j);
    }
    fit.sigma_hat = y.norm() / sqrt_n;
    fit.degenerate = true;
    return fit;
  }

  // Unit-norm columns internally; coefficients are mapped back at the end.
  StandardizedSample std_sample = standardize_columns(sample);
  const RegressionSample& xs = std_sample.sample;

  const double sigma_floor = 1e-10 * sd_y;
  const double tol = config.kkt_tol * sd_y;
  fit.kkt_tol_effective = tol;
  const double unit_penalty = lambda0 / sqrt_n;  // per-coordinate weight at sigma = 1

  double sigma = sd_y;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  int outer = 0;
  bool degenerate = false;
  for (; outer < config.max_outer; ++outer) {
    beta = lasso_weighted_cd(xs, Eigen::VectorXd::Constant(p, sigma * unit_penalty),
                             std::move(beta), tol, config.max_sweeps);
    const double sigma_new = (y - xs.design() * beta).norm() / sqrt_n;
    if (sigma_new < sigma_floor) {
      sigma = sigma_new;
      degenerate = true;
      break;
    }
    const bool converged = std::abs(sigma_new - sigma) / std::max(sigma, sigma_floor) <
                           config.sigma_rel_tol;
    sigma = sigma_new;
    if (converged) break;
  }

  if (!degenerate) {
    // Settle the fixed point so the reported sigma and KKT certificate refer
    // to the same penalty level.
    for (int polish = 0; polish < 3; ++polish) {
      beta = lasso_weighted_cd(xs, Eigen::VectorXd::Constant(p, sigma * unit_penalty),
                               std::move(beta), tol, config.max_sweeps);
      const double sigma_new = (y - xs.design() * beta).norm() / sqrt_n;
      const bool settled =
          std::abs(sigma_new - sigma) / std::max(sigma, sigma_floor) < 1e-12;
      sigma = sigma_new;
      if (settled) break;
    }
  }

  fit.sigma_hat = sigma;
  fit.iterations = outer + 1;
  fit.degenerate = degenerate;
  const Eigen::VectorXd residual = y - xs.design() * beta;
  fit.kkt_residual = lasso_kkt_residual(
      xs, Eigen::VectorXd::Constant(p, sigma * unit_penalty), beta, residual);
  fit.beta_hat = beta.cwiseQuotient(std_sample.scales);
  return fit;
}

}  // namespace coherit
