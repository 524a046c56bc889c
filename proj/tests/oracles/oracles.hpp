#pragma once

// Straight-line reference implementations used only by the tests. They share
// no code with the library: the propagator comes from a numerical eigen
// decomposition of the assembled Laplacian, the tree is handled as an explicit
// list of sample paths, and the control problem is assembled as dense matrices.

#include <Eigen/Dense>

#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Instance {
  int n = 4;
  double length = 1.0;
  double T = 0.1;
  int K = 2;                  ///< time steps
  bool branching = true;      ///< false: single deterministic path
  bool implicit_euler = false;
  std::vector<double> a;      ///< one per step
  Vec beta;
  Vec y0;
  double epsilon = 0.1;

  double h() const { return length / (n + 1); }
  double dt() const { return T / K; }
  int leaves() const { return branching ? 1 << K : 1; }
};

Mat laplacian_matrix(int n, double length);
/// One step of the heat semigroup (or its implicit Euler surrogate).
Mat step_matrix(int n, double length, double dt, bool implicit_euler);

/// Values indexed [leaf][level] so that every path carries its own copy.
using PathField = std::vector<std::vector<Vec>>;

/// Forward recursion along each path; `u[leaf][k]` must agree on paths that
/// share a prefix of length k. Returns y[leaf][k] for k = 0..K.
PathField forward_paths(const Instance& in, const PathField& u);
/// Backward recursion along paths for the terminal datum eta[leaf].
struct Backward {
  PathField z;    ///< [leaf][k], k = 0..K
  PathField obs;  ///< [leaf][k], k = 0..K-1
};
Backward backward_paths(const Instance& in, const std::vector<Vec>& eta);

/// E<x, y> over leaves for terminal fields.
double terminal_inner(const Instance& in, const std::vector<Vec>& x, const std::vector<Vec>& y);
/// dt sum_k E<u_k, v_k> over path fields.
double control_inner(const Instance& in, const PathField& u, const PathField& v);

/// Dense form of the control problem: y_T = F y0 + B u with u stacked by
/// (level, node, grid index) and y_T stacked by (leaf, grid index).
struct DenseProblem {
  Mat F;
  Mat B;
  Vec WT;  ///< diagonal weights of the terminal inner product
  Vec WU;  ///< diagonal weights of the control inner product
  Vec b;   ///< free terminal state F y0
  double epsilon;
};
DenseProblem assemble(const Instance& in);

/// J(eta) = 1/2 |B* eta|_U^2 + eps |eta|_T + <b, eta>_T with eta stacked as in F.
double dense_J(const DenseProblem& p, const Vec& eta);

struct SubgradientResult {
  double best_J = 0.0;
  Vec best_eta;
  long iterations = 0;
};
/// Projected subgradient descent on J over the ball |eta| <= radius with
/// steps s0 / (1 + k / k0); tracks the best value.
SubgradientResult projected_subgradient(const DenseProblem& p, long iterations, double radius,
                                        double k0 = 1000.0);

/// min |u|_U^2 subject to |b + B u|_T <= eps, by bisection on the multiplier
/// of the penalised problem. Returns the optimal value N.
double primal_min_norm(const DenseProblem& p);

/// Exhaustive scan for the multiplier of the capped-simplex projection.
Vec scan_project(const Vec& v, double alpha, double step);

}  // namespace oracle
