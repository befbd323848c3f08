#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

#include "coherit/rng.hpp"

namespace coherit {

// One regression dataset: dense design matrix, response vector, cached
// column norms. Immutable after construction.
class RegressionSample {
 public:
  RegressionSample(Eigen::MatrixXd design, Eigen::VectorXd response);

  int n() const { return static_cast<int>(design_.rows()); }
  int p() const { return static_cast<int>(design_.cols()); }

  const Eigen::MatrixXd& design() const { return design_; }
  const Eigen::VectorXd& response() const { return response_; }
  const Eigen::VectorXd& col_norms() const { return col_norms_; }

 private:
  Eigen::MatrixXd design_;
  Eigen::VectorXd response_;
  Eigen::VectorXd col_norms_;
};

struct StandardizedSample {
  RegressionSample sample;   // columns rescaled to norm sqrt(n)
  Eigen::VectorXd scales;    // divide solved coefficients by these to undo
};

// Rescales every column to Euclidean norm sqrt(n) (unit sample second
// moment). scales[j] = ||X.j||_2 / sqrt(n). Throws ZeroColumnError.
StandardizedSample standardize_columns(const RegressionSample& sample);

// n x p matrix with i.i.d. N(0, Sigma) rows, Sigma_ij = rho^|i-j|,
// generated by the exact O(p) scalar recursion per row.
Eigen::MatrixXd sample_gaussian_ar1(int n, int p, double rho, RngStream& rng);

// Sample covariance operator Sigma_hat = X^T X / n. Dense form is built
// eagerly when p is at or below the threshold; above it, products are
// formed matrix-free so the p x p matrix never exists.
class GramView {
 public:
  explicit GramView(const RegressionSample& sample, int materialize_threshold = 2048);

  int n() const { return sample_->n(); }
  int p() const { return sample_->p(); }
  const RegressionSample& sample() const { return *sample_; }

  const Eigen::VectorXd& diagonal() const { return diag_; }
  bool materialized() const { return dense_.has_value(); }
  const Eigen::MatrixXd& dense() const { return *dense_; }

  // Sigma_hat * v
  Eigen::VectorXd gram_vec(const Eigen::VectorXd& v) const;
  // v^T Sigma_hat v, computed as ||Xv||^2 / n (nonnegative by construction)
  double quad(const Eigen::VectorXd& v) const;

 private:
  const RegressionSample* sample_;
  double inv_n_;
  Eigen::VectorXd diag_;
  std::optional<Eigen::MatrixXd> dense_;
};

}  // namespace coherit
