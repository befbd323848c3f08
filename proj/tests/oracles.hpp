#pragma once

#include <Eigen/Dense>
#include <optional>

// Test-only reference solvers, algorithmically independent of the library's
// coordinate-descent paths.
namespace coherit_oracles {

// Minimizes 0.5 v^T A v + b^T v + sum_j weights_j |v_j| by full-gradient
// proximal descent at step 1/lambda_max(A). Slow and simple on purpose.
Eigen::VectorXd prox_gradient_l1(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& weights, int iterations = 200000);

// 0.5-free convenience objectives for comparing against library solutions.
double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& penalties, const Eigen::VectorXd& beta);
double dual_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& g, double lam,
                      const Eigen::VectorXd& v);

// Exact minimum of u^T S u subject to ||S u - g||_inf <= lam, by brute force
// over all 3^p active-sign patterns (p <= 12). Returns nullopt when no
// pattern yields a feasible point (lam below the feasibility threshold).
struct QpSolution {
  Eigen::VectorXd u;
  double objective;
};
std::optional<QpSolution> dense_qp_oracle(const Eigen::MatrixXd& s, const Eigen::VectorXd& g,
                                          double lam);

}  // namespace coherit_oracles
