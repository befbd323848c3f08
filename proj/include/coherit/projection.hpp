#pragma once

#include <Eigen/Dense>
#include <optional>

#include "coherit/sample.hpp"

namespace coherit {

struct DualSolverSettings {
  double kkt_tol = 1e-7;      // scaled by the sup norm of the target
  int max_sweeps = 500;
  double l1_cap_scale = 1e6;  // iterate cap: scale * (1 + ||g||_2) / lambda
};

struct ProjectionDirection {
  Eigen::VectorXd u_hat;
  double lambda_accepted = 0.0;  // last lambda at which the dual solve succeeded
  int dual_steps = 0;            // number of lambda reductions taken
  double feasibility_gap = 0.0;  // ||Sigma_hat u_hat - g||_inf
  double quad_value = 0.0;       // u_hat^T Sigma_hat u_hat
  bool solved = false;           // false: dual infeasible already at lambda_start
  bool zero_target = false;      // g = 0 short-circuit
};

// Path start sqrt(2.01 log p) / sqrt(n), for a unit-scale target.
double default_lambda_start(int p, int n);

// Minimizes v^T Sigma_hat v / 4 + g^T v + lam * ||v||_1 by cyclic coordinate
// descent, warm-started from v_init. Returns the KKT-certified minimizer, or
// nullopt when the iterate diverges or the sweep budget runs out — the
// expected signal that lam sits below the feasibility threshold of the
// corresponding sup-norm-constrained primal.
std::optional<Eigen::VectorXd> solve_dual_penalized(const GramView& gram,
                                                    const Eigen::VectorXd& g, double lam,
                                                    const Eigen::VectorXd& v_init,
                                                    const DualSolverSettings& settings = {});

// Walks lambda down geometrically from lambda_start (factor 1/shrink each
// step, warm starts along the way) until the dual stops being solvable or
// max_steps reductions have been taken; maps the last dual solution v to the
// direction u = -v/2, which satisfies ||Sigma_hat u - g||_inf <= lambda.
ProjectionDirection find_projection(const GramView& gram, const Eigen::VectorXd& g,
                                    double lambda_start, double shrink = 1.5,
                                    int max_steps = 10,
                                    const DualSolverSettings& settings = {});

}  // namespace coherit
