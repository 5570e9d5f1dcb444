#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace odenet {

using Exponents = std::vector<int>;

/// Complete polynomial dictionary of order p in d variables.
///
/// Terms are kept in graded-lexicographic order: ascending total degree,
/// then descending exponent tuples, so for d=2, p=2 the terms are
/// 1, x1, x2, x1^2, x1*x2, x2^2. The constant term is always index 0.
/// Immutable after construction.
class PolynomialBasis {
 public:
  PolynomialBasis(int dimension, int order);

  int dimension() const noexcept { return dimension_; }
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return terms_.size(); }
  const std::vector<Exponents>& terms() const noexcept { return terms_; }
  const Exponents& term(std::size_t j) const { return terms_.at(j); }

  /// Λ(x); component j is the j-th monomial evaluated at x.
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// ∂Λ/∂x as an M×d matrix.
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// "1", "x1", "x1*x2", "x2^2"; `names` overrides the default x1..xd.
  std::string term_label(std::size_t j) const;
  std::string term_label(std::size_t j, const std::vector<std::string>& names) const;

  /// Index of the term with the given exponents, or size() if absent.
  std::size_t index_of(const Exponents& exponents) const;

  bool operator==(const PolynomialBasis& other) const {
    return dimension_ == other.dimension_ && order_ == other.order_;
  }

 private:
  void check_state(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  int dimension_;
  int order_;
  std::vector<Exponents> terms_;
};

/// binomial(p + d, p)
std::size_t basis_size(int dimension, int order);

}  // namespace odenet
