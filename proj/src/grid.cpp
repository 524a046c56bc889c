#include "stochact/grid.hpp"

#include "stochact/error.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace stochact {

namespace {

void require_size(const Grid& grid, const Field& f, const char* what) {
  if (f.size() != grid.n()) {
    throw DimensionError(std::string(what) + ": field has " + std::to_string(f.size()) +
                         " entries, grid has " + std::to_string(grid.n()) + " nodes");
  }
}

// Solves (I - dt A) x = rhs with the Thomas algorithm. The matrix is
// tridiagonal with diagonal 1 + 2r and off-diagonals -r, r = dt / h^2.
Field implicit_euler_solve(double r, const Field& rhs) {
  const auto n = rhs.size();
  std::vector<double> c(n);
  Field x(n);
  const double diag = 1.0 + 2.0 * r;
  double denom = diag;
  c[0] = -r / denom;
  x[0] = rhs[0] / denom;
  for (Eigen::Index i = 1; i < n; ++i) {
    denom = diag + r * c[i - 1];
    c[i] = -r / denom;
    x[i] = (rhs[i] + r * x[i - 1]) / denom;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    x[i] -= c[i] * x[i + 1];
  }
  return x;
}

}  // namespace

Grid::Grid(int n, double length) : n_(n), length_(length), h_(0.0) {
  if (n < 1) {
    throw ConfigError("grid: node count n must be >= 1, got " + std::to_string(n));
  }
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ConfigError("grid: length must be a positive finite number");
  }
  h_ = length / (n + 1);
}

Field Grid::nodes() const {
  Field x(n_);
  for (int i = 0; i < n_; ++i) x[i] = node(i);
  return x;
}

Grid build_grid(int n, double length) { return Grid(n, length); }

double inner_product(const Grid& grid, const Field& f, const Field& g) {
  require_size(grid, f, "inner_product");
  require_size(grid, g, "inner_product");
  return f.dot(g) * grid.h();
}

double norm(const Grid& grid, const Field& f) {
  return std::sqrt(inner_product(grid, f, f));
}

Field laplacian_apply(const Grid& grid, const Field& f) {
  require_size(grid, f, "laplacian_apply");
  const int n = grid.n();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  Field out(n);
  for (int i = 0; i < n; ++i) {
    const double left = i > 0 ? f[i - 1] : 0.0;
    const double right = i + 1 < n ? f[i + 1] : 0.0;
    out[i] = (left - 2.0 * f[i] + right) * inv_h2;
  }
  return out;
}

double laplacian_eigenvalue(const Grid& grid, int j) {
  const double s = std::sin(j * std::numbers::pi / (2.0 * (grid.n() + 1)));
  return -4.0 / (grid.h() * grid.h()) * s * s;
}

Field laplacian_eigenvector(const Grid& grid, int j) {
  const int n = grid.n();
  const double scale = std::sqrt(2.0 / (n + 1));
  Field v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = scale * std::sin(j * std::numbers::pi * (i + 1) / (n + 1));
  }
  return v;
}

Scheme parse_scheme(std::string_view name) {
  if (name == "exact-spectral") return Scheme::exact_spectral;
  if (name == "implicit-euler") return Scheme::implicit_euler;
  throw ConfigError("unknown propagator scheme '" + std::string(name) +
                    "' (expected exact-spectral or implicit-euler)");
}

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::exact_spectral ? "exact-spectral" : "implicit-euler";
}

Propagator::Propagator(const Grid& grid, double dt, Scheme scheme)
    : dt_(dt), scheme_(scheme) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("propagator: dt must be positive and finite");
  }
  const int n = grid.n();
  eigenvalues_.resize(n);
  for (int j = 1; j <= n; ++j) {
    const double lambda = laplacian_eigenvalue(grid, j);
    eigenvalues_[j - 1] = scheme == Scheme::exact_spectral ? std::exp(dt * lambda)
                                                           : 1.0 / (1.0 - dt * lambda);
  }

  if (scheme == Scheme::exact_spectral) {
    Eigen::MatrixXd basis(n, n);
    for (int j = 1; j <= n; ++j) basis.col(j - 1) = laplacian_eigenvector(grid, j);
    matrix_ = basis * eigenvalues_.asDiagonal() * basis.transpose();
  } else {
    const double r = dt / (grid.h() * grid.h());
    matrix_.resize(n, n);
    for (int i = 0; i < n; ++i) {
      matrix_.col(i) = implicit_euler_solve(r, Field::Unit(n, i));
    }
  }
  // Symmetrize away the last-bit asymmetry of the products above.
  matrix_ = 0.5 * (matrix_ + matrix_.transpose()).eval();
}

Field Propagator::apply(const Field& f) const {
  if (f.size() != matrix_.rows()) {
    throw DimensionError("propagator: field size does not match grid");
  }
  return matrix_ * f;
}

Eigen::MatrixXd Propagator::apply(const Eigen::MatrixXd& block) const {
  if (block.rows() != matrix_.rows()) {
    throw DimensionError("propagator: block row count does not match grid");
  }
  return matrix_ * block;
}

Propagator heat_propagator(const Grid& grid, double dt, Scheme scheme) {
  return Propagator(grid, dt, scheme);
}

}  // namespace stochact
