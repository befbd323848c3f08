#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <vector>

namespace coherit_oracles {

namespace {

inline double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

Eigen::VectorXd prox_gradient_l1(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                 const Eigen::VectorXd& weights, int iterations) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(a);
  const double step = 1.0 / std::max(eigen.eigenvalues().maxCoeff(), 1e-12);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(a.rows());
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd grad = a * v + b;
    Eigen::VectorXd next(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      next[j] = soft(v[j] - step * grad[j], step * weights[j]);
    }
    const double move = (next - v).lpNorm<Eigen::Infinity>();
    v = std::move(next);
    if (move < 1e-15) break;
  }
  return v;
}

double lasso_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& penalties, const Eigen::VectorXd& beta) {
  const double n = static_cast<double>(x.rows());
  return (y - x * beta).squaredNorm() / (2.0 * n) +
         penalties.cwiseProduct(beta.cwiseAbs()).sum();
}

double dual_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& g, double lam,
                      const Eigen::VectorXd& v) {
  return 0.25 * v.dot(gram * v) + g.dot(v) + lam * v.lpNorm<1>();
}

std::optional<QpSolution> dense_qp_oracle(const Eigen::MatrixXd& s, const Eigen::VectorXd& g,
                                          double lam) {
  const int p = static_cast<int>(s.rows());
  const double slack = 1e-9 * std::max(1.0, g.cwiseAbs().maxCoeff());
  std::optional<QpSolution> best;

  auto consider = [&](const Eigen::VectorXd& u) {
    const double gap = (s * u - g).cwiseAbs().maxCoeff();
    if (gap > lam + slack) return;
    const double objective = u.dot(s * u);
    if (!best || objective < best->objective) best = QpSolution{u, objective};
  };

  // Every optimum has some active set A with signs on it; enumerating all
  // 3^p patterns therefore visits the optimum, and every candidate we keep
  // is feasible, so the minimum over them is the exact optimum.
  std::vector<int> pattern(p, 0);
  const long total = static_cast<long>(std::pow(3.0, p) + 0.5);
  for (long code = 0; code < total; ++code) {
    long rest = code;
    int active = 0;
    for (int i = 0; i < p; ++i) {
      pattern[i] = static_cast<int>(rest % 3);  // 0 inactive, 1 upper, 2 lower
      rest /= 3;
      if (pattern[i] != 0) ++active;
    }
    if (active == 0) {
      consider(Eigen::VectorXd::Zero(p));
      continue;
    }
    Eigen::MatrixXd sub(active, active);
    Eigen::VectorXd rhs(active);
    std::vector<int> idx;
    idx.reserve(active);
    for (int i = 0; i < p; ++i) {
      if (pattern[i] != 0) idx.push_back(i);
    }
    for (int a = 0; a < active; ++a) {
      rhs[a] = g[idx[a]] + (pattern[idx[a]] == 1 ? lam : -lam);
      for (int b = 0; b < active; ++b) sub(a, b) = s(idx[a], idx[b]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd ua = lu.solve(rhs);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
    for (int a = 0; a < active; ++a) u[idx[a]] = ua[a];
    consider(u);
  }
  return best;
}

}  // namespace coherit_oracles
