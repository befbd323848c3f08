#include "coherit/projection.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "coherit/errors.hpp"

namespace coherit {

namespace {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Max violation of the dual stationarity |(Sigma v / 2 + g)_j| <= lam,
// with equality required on the active set. sv = Sigma_hat * v.
double dual_kkt_residual(const Eigen::VectorXd& sv, const Eigen::VectorXd& g,
                         const Eigen::VectorXd& v, double lam) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double grad = 0.5 * sv[j] + g[j];
    double viol;
    if (v[j] != 0.0) {
      viol = std::abs(grad + lam * (v[j] > 0 ? 1.0 : -1.0));
    } else {
      viol = std::abs(grad) - lam;
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

// Below the feasibility threshold the iterate escapes along a recession
// direction: (numerically) zero curvature and a strictly negative directional
// slope of the objective. Witnessing such a direction certifies that the
// objective is unbounded, well before the l1 cap is reached. d is the recent
// movement, sd = Sigma_hat d (from maintained products), gd/l1d its linear
// pieces, w the current product restricted to the same coordinates.
bool recession_certificate(const Eigen::VectorXd& d, const Eigen::VectorXd& sd,
                           const Eigen::VectorXd& w, double gd, double l1d, double lam,
                           double diag_scale) {
  const double dn2 = d.squaredNorm();
  if (dn2 == 0.0) return false;
  const double curvature = d.dot(sd);
  const double slope = 0.5 * d.dot(w) + gd + lam * l1d;
  return curvature <= 1e-10 * diag_scale * dn2 && slope < -1e-6 * lam * l1d;
}

// Dense-Gram coordinate descent. Full passes keep w = Sigma_hat v exact and
// touch every coordinate; between full passes the nonzero coordinates are
// iterated on a gathered |A| x |A| block, which keeps the hot loop inside
// the cache. Budget counts every pass of either kind.
std::optional<Eigen::VectorXd> solve_dense(const GramView& gram, const Eigen::VectorXd& g,
                                           double lam, Eigen::VectorXd v,
                                           const DualSolverSettings& settings, double tol,
                                           double l1_cap) {
  const Eigen::MatrixXd& s = gram.dense();
  const Eigen::VectorXd& diag = gram.diagonal();
  const int p = gram.p();

  for (int j = 0; j < p; ++j) {
    if (diag[j] <= 0.0 && std::abs(g[j]) > lam) return std::nullopt;  // flat unbounded
  }

  Eigen::VectorXd w = gram.gram_vec(v);
  std::vector<int> active;
  Eigen::MatrixXd block;
  Eigen::VectorXd va, wa, ga_lo;
  const double diag_scale = diag.maxCoeff();
  constexpr int kCheckEvery = 25;
  Eigen::VectorXd v_snap, w_snap;
  int full_pass = 0;

  int pass = 0;
  while (pass < settings.max_sweeps) {
    // Full pass over all coordinates.
    ++pass;
    ++full_pass;
    double max_move = 0.0;
    int changes = 0;
    for (int j = 0; j < p; ++j) {
      const double a = diag[j];
      if (a <= 0.0) continue;
      const double c = 0.5 * (w[j] - a * v[j]) + g[j];
      const double next = -2.0 * soft_threshold(c, lam) / a;
      const double delta = next - v[j];
      if (delta != 0.0) {
        w.noalias() += delta * s.col(j);
        v[j] = next;
        max_move = std::max(max_move, std::abs(delta) * a);
        ++changes;
      }
    }
    if (v.lpNorm<1>() > l1_cap) return std::nullopt;
    if (full_pass % kCheckEvery == 0) {
      if (v_snap.size() > 0) {
        const Eigen::VectorXd d = v - v_snap;
        if (recession_certificate(d, w - w_snap, w, d.dot(g), d.lpNorm<1>(), lam, diag_scale))
          return std::nullopt;
      }
      v_snap = v;
      w_snap = w;
    }

    if (max_move <= 0.1 * tol) {
      // Confirm against a freshly computed product to cancel update drift.
      if (dual_kkt_residual(w, g, v, lam) <= tol) {
        const Eigen::VectorXd sv = gram.gram_vec(v);
        if (dual_kkt_residual(sv, g, v, lam) <= tol) return v;
        w = sv;
      }
      if (changes == 0) continue;  // w refreshed; take another full pass
    }

    // Active phase: iterate the current support on its gathered Gram block.
    active.clear();
    for (int j = 0; j < p; ++j) {
      if (v[j] != 0.0 && diag[j] > 0.0) active.push_back(j);
    }
    const int na = static_cast<int>(active.size());
    if (na < 2 || na >= p) continue;

    block.resize(na, na);
    va.resize(na);
    wa.resize(na);
    ga_lo.resize(na);
    for (int a = 0; a < na; ++a) {
      const int j = active[a];
      for (int b = 0; b < na; ++b) block(b, a) = s(active[b], j);
      va[a] = v[j];
      wa[a] = w[j];
      ga_lo[a] = g[j];
    }

    bool capped = false;
    Eigen::VectorXd va_snap, wa_snap;
    int inner_pass = 0;
    while (pass < settings.max_sweeps) {
      ++pass;
      ++inner_pass;
      double inner_move = 0.0;
      double l1 = 0.0;
      for (int a = 0; a < na; ++a) {
        const double d = block(a, a);
        const double c = 0.5 * (wa[a] - d * va[a]) + ga_lo[a];
        const double next = -2.0 * soft_threshold(c, lam) / d;
        const double delta = next - va[a];
        if (delta != 0.0) {
          wa.noalias() += delta * block.col(a);
          va[a] = next;
          inner_move = std::max(inner_move, std::abs(delta) * d);
        }
        l1 += std::abs(va[a]);
      }
      if (l1 > l1_cap) {
        capped = true;
        break;
      }
      if (inner_move <= 0.1 * tol) break;
      if (inner_pass % kCheckEvery == 0) {
        if (va_snap.size() > 0) {
          const Eigen::VectorXd d = va - va_snap;
          if (recession_certificate(d, wa - wa_snap, wa, d.dot(ga_lo), d.lpNorm<1>(), lam,
                                    diag_scale)) {
            capped = true;
            break;
          }
        }
        va_snap = va;
        wa_snap = wa;
      }
    }

    // Fold the block iterate back and resynchronize w in one product.
    for (int a = 0; a < na; ++a) v[active[a]] = va[a];
    if (capped) return std::nullopt;
    w = gram.gram_vec(v);
  }
  return std::nullopt;
}

std::optional<Eigen::VectorXd> solve_matrix_free(const GramView& gram, const Eigen::VectorXd& g,
                                                 double lam, Eigen::VectorXd v,
                                                 const DualSolverSettings& settings, double tol,
                                                 double l1_cap) {
  const Eigen::MatrixXd& x = gram.sample().design();
  const Eigen::VectorXd& diag = gram.diagonal();
  const double inv_n = 1.0 / gram.n();
  const int p = gram.p();
  Eigen::VectorXd xv = x * v;

  for (int sweep = 0; sweep < settings.max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (int j = 0; j < p; ++j) {
      const double a = diag[j];
      if (a <= 0.0) {
        if (std::abs(g[j]) > lam) return std::nullopt;
        continue;
      }
      const double svj = x.col(j).dot(xv) * inv_n;
      const double c = 0.5 * (svj - a * v[j]) + g[j];
      const double next = -2.0 * soft_threshold(c, lam) / a;
      const double delta = next - v[j];
      if (delta != 0.0) {
        xv.noalias() += delta * x.col(j);
        v[j] = next;
        max_move = std::max(max_move, std::abs(delta) * a);
      }
    }
    if (v.lpNorm<1>() > l1_cap) return std::nullopt;
    if (max_move <= 0.1 * tol) {
      const Eigen::VectorXd sv = gram.gram_vec(v);
      if (dual_kkt_residual(sv, g, v, lam) <= tol) return v;
      xv = x * v;
    }
  }
  return std::nullopt;
}

}  // namespace

double default_lambda_start(int p, int n) {
  return std::sqrt(2.01 * std::log(static_cast<double>(p)) / n);
}

std::optional<Eigen::VectorXd> solve_dual_penalized(const GramView& gram,
                                                    const Eigen::VectorXd& g, double lam,
                                                    const Eigen::VectorXd& v_init,
                                                    const DualSolverSettings& settings) {
  if (!(lam > 0.0)) throw CoheritError("lambda must be positive");
  const int p = gram.p();
  if (g.size() != p) throw CoheritError("target length mismatch");

  Eigen::VectorXd v = (v_init.size() == p) ? v_init : Eigen::VectorXd::Zero(p);
  if (g.isZero(0.0)) return Eigen::VectorXd::Zero(p);

  const double tol = settings.kkt_tol * std::max(g.cwiseAbs().maxCoeff(), 1e-300);
  const double l1_cap = settings.l1_cap_scale * (1.0 + g.norm()) / lam;
  if (gram.materialized()) {
    return solve_dense(gram, g, lam, std::move(v), settings, tol, l1_cap);
  }
  return solve_matrix_free(gram, g, lam, std::move(v), settings, tol, l1_cap);
}

ProjectionDirection find_projection(const GramView& gram, const Eigen::VectorXd& g,
                                    double lambda_start, double shrink, int max_steps,
                                    const DualSolverSettings& settings) {
  if (!(lambda_start > 0.0)) throw CoheritError("lambda_start must be positive");
  if (!(shrink > 1.0)) throw CoheritError("shrink must exceed 1");
  const int p = gram.p();
  if (g.size() != p) throw CoheritError("target length mismatch");

  ProjectionDirection dir;
  dir.u_hat = Eigen::VectorXd::Zero(p);
  if (g.isZero(0.0)) {
    // Zero target forces a zero constraint bound; u = 0 is the minimizer.
    dir.zero_target = true;
    dir.solved = true;
    return dir;
  }

  auto first = solve_dual_penalized(gram, g, lambda_start, Eigen::VectorXd(), settings);
  if (!first) {
    dir.lambda_accepted = lambda_start;
    dir.feasibility_gap = g.cwiseAbs().maxCoeff();
    return dir;  // solved = false
  }

  Eigen::VectorXd v = std::move(*first);
  double lam = lambda_start;
  int steps = 0;
  while (steps < max_steps) {
    const double lam_next = lam / shrink;
    auto next = solve_dual_penalized(gram, g, lam_next, v, settings);
    if (!next) break;
    v = std::move(*next);
    lam = lam_next;
    ++steps;
  }

  dir.u_hat = -0.5 * v;
  dir.lambda_accepted = lam;
  dir.dual_steps = steps;
  dir.feasibility_gap = (gram.gram_vec(dir.u_hat) - g).cwiseAbs().maxCoeff();
  dir.quad_value = gram.quad(dir.u_hat);
  dir.solved = true;
  return dir;
}

}  // namespace coherit
