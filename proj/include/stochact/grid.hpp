#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace stochact {

/// Values of a function on the interior nodes of the grid.
using Field = Eigen::VectorXd;

/// Uniform 1D grid on D = (0, length) with n interior nodes and homogeneous
/// Dirichlet boundary. Every node carries the quadrature weight h, so the
/// discrete measure of D is n * h (boundary nodes carry no mass).
class Grid {
 public:
  Grid(int n, double length);

  int n() const noexcept { return n_; }
  double length() const noexcept { return length_; }
  double h() const noexcept { return h_; }
  double measure() const noexcept { return n_ * h_; }

  /// Coordinate of interior node i (0-based), i.e. (i + 1) * h.
  double node(int i) const noexcept { return (i + 1) * h_; }
  Field nodes() const;

 private:
  int n_;
  double length_;
  double h_;
};

Grid build_grid(int n, double length);

/// Discrete L2(D) inner product sum_i f_i g_i h.
double inner_product(const Grid& grid, const Field& f, const Field& g);
double norm(const Grid& grid, const Field& f);

/// 3-point Dirichlet Laplacian (f_{i-1} - 2 f_i + f_{i+1}) / h^2.
Field laplacian_apply(const Grid& grid, const Field& f);

/// Eigenvalue j (1-based) of the discrete Dirichlet Laplacian.
double laplacian_eigenvalue(const Grid& grid, int j);
/// Orthonormal (in the Euclidean sense) eigenvector j (1-based).
Field laplacian_eigenvector(const Grid& grid, int j);

enum class Scheme { exact_spectral, implicit_euler };

Scheme parse_scheme(std::string_view name);
std::string_view to_string(Scheme scheme);

/// One heat step E ~ exp(dt A) stored as a dense symmetric matrix. The matrix
/// is assembled once at construction; applying it is a plain product.
class Propagator {
 public:
  Propagator(const Grid& grid, double dt, Scheme scheme);

  double dt() const noexcept { return dt_; }
  Scheme scheme() const noexcept { return scheme_; }
  int size() const noexcept { return static_cast<int>(matrix_.rows()); }

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  /// Eigenvalues of E in the sine basis, ordered by mode j = 1..n.
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

  Field apply(const Field& f) const;
  /// Applies E to every column of `block`.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& block) const;

 private:
  double dt_;
  Scheme scheme_;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd eigenvalues_;
};

Propagator heat_propagator(const Grid& grid, double dt,
                           Scheme scheme = Scheme::exact_spectral);

}  // namespace stochact
