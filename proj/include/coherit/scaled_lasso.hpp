#pragma once

#include <Eigen/Dense>
#include <optional>

#include "coherit/sample.hpp"

namespace coherit {

struct ScaledLassoConfig {
  double sigma_rel_tol = 1e-6;  // outer stop on relative change of sigma
  int max_outer = 100;
  double kkt_tol = 1e-7;        // inner CD tolerance, on the unit-column scale
  int max_sweeps = 1000;
};

struct ScaledLassoFit {
  Eigen::VectorXd beta_hat;   // original column scale
  double sigma_hat = 0.0;     // equals ||y - X beta_hat|| / sqrt(n) at return
  double lambda0 = 0.0;
  int iterations = 0;         // outer alternations performed
  double kkt_residual = 0.0;  // max KKT violation on the standardized problem
  double kkt_tol_effective = 0.0;
  bool degenerate = false;    // response (near-)constant or perfectly fit
};

// Penalty level b * sqrt(2.01 * log p); b = 0.5 is the working default.
double default_lambda0(int p, double b = 0.5);

// Minimizes ||y - X beta||^2 / (2n) + sum_j penalties[j] * |beta_j| by cyclic
// coordinate descent in fixed ascending index order. Returns a beta whose KKT
// conditions hold within tol: |X_j^T (y - X beta)| / n <= penalties[j] + tol
// for every j, with equality within tol on the active set. Throws
// NoConvergenceError if the budget runs out first.
Eigen::VectorXd lasso_weighted_cd(const RegressionSample& sample,
                                  const Eigen::VectorXd& penalties,
                                  Eigen::VectorXd beta_init, double tol, int max_sweeps);

// Joint (beta, sigma) estimate: alternates sigma <- ||y - X beta|| / sqrt(n)
// with a weighted lasso step at per-coordinate penalty
// sigma * lambda0 * ||X.j|| / n until the noise scale stabilizes.
ScaledLassoFit fit_scaled_lasso(const RegressionSample& sample, double lambda0,
                                const ScaledLassoConfig& config = {});

// Joint objective value; the alternation never increases it.
double scaled_lasso_objective(const RegressionSample& sample, const Eigen::VectorXd& beta,
                              double sigma, double lambda0);

}  // namespace coherit
