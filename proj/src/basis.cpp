#include "odenet/basis.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "odenet/error.hpp"

namespace odenet {

namespace {

// All exponent tuples of exactly `degree`, in descending lexicographic order.
void append_degree(int dimension, int degree, std::vector<Exponents>& out) {
  Exponents current(dimension, 0);
  std::function<void(int, int)> fill = [&](int position, int remaining) {
    if (position == dimension - 1) {
      current[position] = remaining;
      out.push_back(current);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      current[position] = e;
      fill(position + 1, remaining - e);
    }
  };
  fill(0, degree);
}

}  // namespace

std::size_t basis_size(int dimension, int order) {
  // binomial(order + dimension, order), computed incrementally to stay exact.
  std::size_t result = 1;
  for (int k = 1; k <= order; ++k) {
    result = result * static_cast<std::size_t>(dimension + k) / static_cast<std::size_t>(k);
  }
  return result;
}

PolynomialBasis::PolynomialBasis(int dimension, int order)
    : dimension_(dimension), order_(order) {
  if (dimension < 1) {
    throw Error(ErrorCode::InvalidDimension, "basis dimension must be >= 1");
  }
  if (order < 0) {
    throw Error(ErrorCode::InvalidArgument, "basis order must be >= 0");
  }
  terms_.reserve(basis_size(dimension, order));
  for (int degree = 0; degree <= order; ++degree) {
    append_degree(dimension, degree, terms_);
  }
}

void PolynomialBasis::check_state(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dimension_) {
    throw Error(ErrorCode::InvalidDimension, "state length does not match basis dimension");
  }
  if (!x.allFinite()) {
    throw Error(ErrorCode::NonFiniteState, "non-finite state passed to basis");
  }
}

Eigen::VectorXd PolynomialBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_state(x);
  Eigen::VectorXd values(static_cast<Eigen::Index>(terms_.size()));
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    double v = 1.0;
    for (int i = 0; i < dimension_; ++i) {
      for (int e = 0; e < terms_[j][i]; ++e) v *= x[i];
    }
    values[static_cast<Eigen::Index>(j)] = v;
  }
  return values;
}

Eigen::MatrixXd PolynomialBasis::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_state(x);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(terms_.size()), dimension_);
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    const Exponents& ex = terms_[j];
    for (int k = 0; k < dimension_; ++k) {
      if (ex[k] == 0) continue;
      double v = ex[k];
      for (int i = 0; i < dimension_; ++i) {
        const int power = (i == k) ? ex[i] - 1 : ex[i];
        for (int e = 0; e < power; ++e) v *= x[i];
      }
      jac(static_cast<Eigen::Index>(j), k) = v;
    }
  }
  return jac;
}

std::string PolynomialBasis::term_label(std::size_t j) const {
  std::vector<std::string> names;
  names.reserve(dimension_);
  for (int i = 0; i < dimension_; ++i) names.push_back("x" + std::to_string(i + 1));
  return term_label(j, names);
}

std::string PolynomialBasis::term_label(std::size_t j, const std::vector<std::string>& names) const {
  if (j >= terms_.size()) {
    throw Error(ErrorCode::OutOfRange, "term index " + std::to_string(j) + " out of range");
  }
  const Exponents& ex = terms_[j];
  std::ostringstream os;
  bool first = true;
  for (int i = 0; i < dimension_; ++i) {
    if (ex[i] == 0) continue;
    if (!first) os << '*';
    os << names.at(i);
    if (ex[i] > 1) os << '^' << ex[i];
    first = false;
  }
  return first ? std::string("1") : os.str();
}

std::size_t PolynomialBasis::index_of(const Exponents& exponents) const {
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    if (terms_[j] == exponents) return j;
  }
  return terms_.size();
}

}  // namespace odenet
