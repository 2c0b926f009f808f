#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace rsdrl {

/// Ridge Gram matrix lambda I + sum x x^T with an inverse kept current by
/// Sherman-Morrison rank-one updates. refactor() recomputes the inverse
/// from scratch to bound accumulated drift.
class GramMatrix {
public:
  GramMatrix() = default;
  GramMatrix(std::size_t dim, double lambda)
      : gram_(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)) * lambda),
        inverse_(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)) / lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("GramMatrix: ridge parameter must be positive");
  }

  void add(const Eigen::VectorXd& x) {
    gram_.noalias() += x * x.transpose();
    const Eigen::VectorXd u = inverse_ * x;
    inverse_.noalias() -= (u * u.transpose()) / (1.0 + x.dot(u));
  }

  void refactor() {
    Eigen::LLT<Eigen::MatrixXd> llt(gram_);
    if (llt.info() != Eigen::Success) throw std::logic_error("GramMatrix: matrix is not positive definite");
    inverse_ = llt.solve(Eigen::MatrixXd::Identity(gram_.rows(), gram_.cols()));
  }

  // sqrt(x^T Lambda^{-1} x)
  double inverse_norm(const Eigen::VectorXd& x) const { return std::sqrt(std::max(0.0, x.dot(inverse_ * x))); }

  const Eigen::MatrixXd& matrix() const noexcept { return gram_; }
  const Eigen::MatrixXd& inverse() const noexcept { return inverse_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(gram_.rows()); }

private:
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd inverse_;
};

} // namespace rsdrl
