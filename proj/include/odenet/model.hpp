#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "odenet/basis.hpp"

namespace odenet {

struct Entry {
  int row = 0;
  int col = 0;
  bool operator==(const Entry&) const = default;
};

/// target = scale * source, applied after every update.
struct Tie {
  Entry target;
  Entry source;
  double scale = 1.0;
};

/// A free optimization variable and every matrix entry it drives
/// (itself with scale 1, plus all tie targets resolved through chains).
struct FreeParameter {
  Entry entry;
  std::vector<std::pair<Entry, double>> contributions;
};

/// d×M coefficient matrix with a permanent pruning mask and linear ties.
///
/// Inactive entries are exactly zero. Tie targets are never independent
/// variables: their value and active flag follow the root source.
class CoefficientMatrix {
 public:
  CoefficientMatrix() = default;
  CoefficientMatrix(int rows, int cols);
  explicit CoefficientMatrix(const Eigen::MatrixXd& values);

  int rows() const noexcept { return static_cast<int>(values_.rows()); }
  int cols() const noexcept { return static_cast<int>(values_.cols()); }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double value(int row, int col) const { return values_(row, col); }
  bool active(int row, int col) const { return active_[index(row, col)]; }
  const std::vector<Tie>& ties() const noexcept { return ties_; }

  /// Sets a free entry. Writes to inactive entries are ignored; writes to tie
  /// targets are rejected.
  void set_value(int row, int col, double value);

  /// Permanently deactivates an entry (and every entry tied to it).
  void deactivate(int row, int col);

  /// Declares target = scale * source. Rejects cycles and double ties.
  void add_tie(Entry target, Entry source, double scale);

  bool is_tie_target(int row, int col) const;

  /// Active, untied entries in row-major order.
  std::vector<FreeParameter> free_parameters() const;
  Eigen::VectorXd free_values() const;
  void set_free_values(const Eigen::Ref<const Eigen::VectorXd>& values);

  /// Prunes every free active entry with |value| < gamma. Returns the entries
  /// pruned by this call.
  std::vector<Entry> apply_threshold(double gamma);

  std::size_t active_count() const;
  std::size_t free_count() const;

  /// Re-establishes the invariants (ties exact, inactive entries zero).
  void enforce();

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(values_.cols()) +
           static_cast<std::size_t>(col);
  }
  // Root source of an entry and the accumulated scale along the tie chain.
  std::pair<Entry, double> resolve(Entry e) const;
  const Tie* tie_for(Entry target) const;

  Eigen::MatrixXd values_;
  std::vector<bool> active_;
  std::vector<Tie> ties_;
};

/// dx/dt = θ Λ(x).
class ODEModel {
 public:
  ODEModel(PolynomialBasis basis, CoefficientMatrix theta);
  ODEModel(PolynomialBasis basis, CoefficientMatrix theta, std::vector<std::string> state_names);

  const PolynomialBasis& basis() const noexcept { return basis_; }
  const CoefficientMatrix& theta() const noexcept { return theta_; }
  CoefficientMatrix& theta() noexcept { return theta_; }
  int dimension() const noexcept { return basis_.dimension(); }
  const std::vector<std::string>& state_names() const noexcept { return names_; }

  Eigen::VectorXd rhs(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd rhs_jacobian_state(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// ∂f/∂p for the given free parameters: d×K. Column k is Λ_j(x) placed in
  /// row i for every contribution (i, j, scale) of parameter k, times scale.
  Eigen::MatrixXd rhs_gradient_theta(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const std::vector<FreeParameter>& params) const;

  /// One line per state: "dx1/dt = 0.997*x1 - 0.0498*x1*x2".
  std::vector<std::string> render_equations(int precision = 4) const;

 private:
  PolynomialBasis basis_;
  CoefficientMatrix theta_;
  std::vector<std::string> names_;
};

std::vector<std::string> default_state_names(int dimension);

}  // namespace odenet
