#include "coherit/sample.hpp"

#include <cmath>
#include <stdexcept>

#include "coherit/errors.hpp"

namespace coherit {

double RngStream::gaussian() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

RegressionSample::RegressionSample(Eigen::MatrixXd design, Eigen::VectorXd response)
    : design_(std::move(design)), response_(std::move(response)) {
  if (design_.rows() < 2) throw CoheritError("need at least 2 samples");
  if (design_.cols() < 1) throw CoheritError("need at least 1 covariate");
  if (response_.size() != design_.rows())
    throw CoheritError("response length does not match design row count");
  if (!design_.allFinite() || !response_.allFinite())
    throw CoheritError("design/response contain non-finite entries");
  col_norms_ = design_.colwise().norm();
}

StandardizedSample standardize_columns(const RegressionSample& sample) {
  const int p = sample.p();
  const double sqrt_n = std::sqrt(static_cast<double>(sample.n()));
  Eigen::VectorXd scales(p);
  for (int j = 0; j < p; ++j) {
    if (sample.col_norms()[j] <= 0.0) throw ZeroColumnError(j);
    scales[j] = sample.col_norms()[j] / sqrt_n;
  }
  Eigen::MatrixXd scaled = sample.design() * scales.cwiseInverse().asDiagonal();
  return {RegressionSample(std::move(scaled), sample.response()), std::move(scales)};
}

Eigen::MatrixXd sample_gaussian_ar1(int n, int p, double rho, RngStream& rng) {
  if (n < 1 || p < 1) throw CoheritError("n and p must be positive");
  if (!(std::abs(rho) < 1.0)) throw InvalidRhoError(rho);
  const double innovation = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.gaussian();
    for (int j = 1; j < p; ++j) {
      x(i, j) = rho * x(i, j - 1) + innovation * rng.gaussian();
    }
  }
  return x;
}

GramView::GramView(const RegressionSample& sample, int materialize_threshold)
    : sample_(&sample), inv_n_(1.0 / sample.n()) {
  diag_ = sample.col_norms().array().square() * inv_n_;
  if (sample.p() <= materialize_threshold) {
    const Eigen::MatrixXd& x = sample.design();
    Eigen::MatrixXd gram(sample.p(), sample.p());
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), inv_n_);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    dense_ = std::move(gram);
  }
}

Eigen::VectorXd GramView::gram_vec(const Eigen::VectorXd& v) const {
  if (dense_) return *dense_ * v;
  return sample_->design().transpose() * (sample_->design() * v) * inv_n_;
}

double GramView::quad(const Eigen::VectorXd& v) const {
  return (sample_->design() * v).squaredNorm() * inv_n_;
}

}  // namespace coherit
