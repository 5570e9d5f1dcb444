#include "odenet/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "odenet/error.hpp"

namespace odenet {

CoefficientMatrix::CoefficientMatrix(int rows, int cols)
    : values_(Eigen::MatrixXd::Zero(rows, cols)),
      active_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), true) {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorCode::InvalidDimension, "coefficient matrix must be non-empty");
  }
}

CoefficientMatrix::CoefficientMatrix(const Eigen::MatrixXd& values)
    : CoefficientMatrix(static_cast<int>(values.rows()), static_cast<int>(values.cols())) {
  values_ = values;
}

const Tie* CoefficientMatrix::tie_for(Entry target) const {
  for (const Tie& t : ties_) {
    if (t.target == target) return &t;
  }
  return nullptr;
}

bool CoefficientMatrix::is_tie_target(int row, int col) const {
  return tie_for(Entry{row, col}) != nullptr;
}

std::pair<Entry, double> CoefficientMatrix::resolve(Entry e) const {
  double scale = 1.0;
  // Chains are acyclic (checked in add_tie), so this terminates.
  while (const Tie* t = tie_for(e)) {
    scale *= t->scale;
    e = t->source;
  }
  return {e, scale};
}

void CoefficientMatrix::set_value(int row, int col, double value) {
  if (is_tie_target(row, col)) {
    throw Error(ErrorCode::InvalidArgument, "cannot assign a tied coefficient directly");
  }
  if (!active(row, col)) return;
  values_(row, col) = value;
  enforce();
}

void CoefficientMatrix::deactivate(int row, int col) {
  const Entry root = resolve(Entry{row, col}).first;
  active_[index(root.row, root.col)] = false;
  enforce();
}

void CoefficientMatrix::add_tie(Entry target, Entry source, double scale) {
  auto in_range = [&](Entry e) {
    return e.row >= 0 && e.row < rows() && e.col >= 0 && e.col < cols();
  };
  if (!in_range(target) || !in_range(source)) {
    throw Error(ErrorCode::OutOfRange, "tie entry out of range");
  }
  if (target == source) {
    throw Error(ErrorCode::InvalidArgument, "an entry cannot be tied to itself");
  }
  if (tie_for(target) != nullptr) {
    throw Error(ErrorCode::InvalidArgument, "entry is already a tie target");
  }
  if (resolve(source).first == target) {
    throw Error(ErrorCode::InvalidArgument, "tie would create a cycle");
  }
  ties_.push_back(Tie{target, source, scale});
  enforce();
}

void CoefficientMatrix::enforce() {
  for (int i = 0; i < rows(); ++i) {
    for (int j = 0; j < cols(); ++j) {
      if (!tie_for(Entry{i, j})) {
        if (!active_[index(i, j)]) values_(i, j) = 0.0;
        continue;
      }
      const auto [root, scale] = resolve(Entry{i, j});
      const bool on = active_[index(root.row, root.col)];
      active_[index(i, j)] = on;
      values_(i, j) = on ? scale * values_(root.row, root.col) : 0.0;
    }
  }
}

std::vector<FreeParameter> CoefficientMatrix::free_parameters() const {
  std::vector<FreeParameter> params;
  for (int i = 0; i < rows(); ++i) {
    for (int j = 0; j < cols(); ++j) {
      if (!active(i, j) || is_tie_target(i, j)) continue;
      FreeParameter p;
      p.entry = Entry{i, j};
      p.contributions.emplace_back(p.entry, 1.0);
      params.push_back(std::move(p));
    }
  }
  for (int i = 0; i < rows(); ++i) {
    for (int j = 0; j < cols(); ++j) {
      if (!is_tie_target(i, j) || !active(i, j)) continue;
      const auto [root, scale] = resolve(Entry{i, j});
      for (FreeParameter& p : params) {
        if (p.entry == root) {
          p.contributions.emplace_back(Entry{i, j}, scale);
          break;
        }
      }
    }
  }
  return params;
}

Eigen::VectorXd CoefficientMatrix::free_values() const {
  const auto params = free_parameters();
  Eigen::VectorXd v(static_cast<Eigen::Index>(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    v[static_cast<Eigen::Index>(k)] = values_(params[k].entry.row, params[k].entry.col);
  }
  return v;
}

void CoefficientMatrix::set_free_values(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const auto params = free_parameters();
  if (static_cast<std::size_t>(values.size()) != params.size()) {
    throw Error(ErrorCode::InvalidDimension, "free value count mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    values_(params[k].entry.row, params[k].entry.col) = values[static_cast<Eigen::Index>(k)];
  }
  enforce();
}

std::vector<Entry> CoefficientMatrix::apply_threshold(double gamma) {
  std::vector<Entry> pruned;
  for (const FreeParameter& p : free_parameters()) {
    if (std::abs(values_(p.entry.row, p.entry.col)) < gamma) {
      active_[index(p.entry.row, p.entry.col)] = false;
      pruned.push_back(p.entry);
    }
  }
  if (!pruned.empty()) enforce();
  return pruned;
}

std::size_t CoefficientMatrix::active_count() const {
  std::size_t n = 0;
  for (bool a : active_) n += a ? 1 : 0;
  return n;
}

std::size_t CoefficientMatrix::free_count() const { return free_parameters().size(); }

std::vector<std::string> default_state_names(int dimension) {
  std::vector<std::string> names;
  for (int i = 0; i < dimension; ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

ODEModel::ODEModel(PolynomialBasis basis, CoefficientMatrix theta)
    : ODEModel(basis, std::move(theta), default_state_names(basis.dimension())) {}

ODEModel::ODEModel(PolynomialBasis basis, CoefficientMatrix theta,
                   std::vector<std::string> state_names)
    : basis_(std::move(basis)), theta_(std::move(theta)), names_(std::move(state_names)) {
  if (theta_.rows() != basis_.dimension() ||
      static_cast<std::size_t>(theta_.cols()) != basis_.size()) {
    throw Error(ErrorCode::BasisMismatch, "coefficient matrix shape does not match basis");
  }
  if (static_cast<int>(names_.size()) != basis_.dimension()) {
    throw Error(ErrorCode::InvalidDimension, "state name count does not match dimension");
  }
}

Eigen::VectorXd ODEModel::rhs(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return theta_.values() * basis_.evaluate(x);
}

Eigen::MatrixXd ODEModel::rhs_jacobian_state(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return theta_.values() * basis_.jacobian(x);
}

Eigen::MatrixXd ODEModel::rhs_gradient_theta(const Eigen::Ref<const Eigen::VectorXd>& x,
                                             const std::vector<FreeParameter>& params) const {
  const Eigen::VectorXd lambda = basis_.evaluate(x);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(dimension(), static_cast<Eigen::Index>(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (const auto& [e, scale] : params[k].contributions) {
      grad(e.row, static_cast<Eigen::Index>(k)) += scale * lambda[e.col];
    }
  }
  return grad;
}

std::vector<std::string> ODEModel::render_equations(int precision) const {
  std::vector<std::string> lines;
  char buf[64];
  for (int i = 0; i < dimension(); ++i) {
    std::ostringstream os;
    os << 'd' << names_[static_cast<std::size_t>(i)] << "/dt = ";
    bool first = true;
    for (int j = 0; j < theta_.cols(); ++j) {
      if (!theta_.active(i, j)) continue;
      const double c = theta_.value(i, j);
      std::snprintf(buf, sizeof buf, "%.*g", precision, first ? c : std::abs(c));
      if (!first) os << (c < 0 ? " - " : " + ");
      os << buf;
      if (j != 0) os << '*' << basis_.term_label(static_cast<std::size_t>(j), names_);
      first = false;
    }
    if (first) os << '0';
    lines.push_back(os.str());
  }
  return lines;
}

}  // namespace odenet
