#pragma once

// Reduction of  E x' = a(t) A x + lambda C(t) S(x)  with singular constant E
// to the semi-explicit form through an SVD  P E Q^T = diag(E_s, 0).

#include <cstdint>
#include <string>
#include <vector>

#include "daeh/flow.hpp"

namespace daeh::svd {

struct ImplicitLinearDae {
  Matrix e;
  Matrix a_mat;
  std::vector<std::vector<expr::Expr>> c;  // n x n, entries in t
  std::vector<expr::Expr> s;               // n entries in x1..xn
  expr::Expr a;
  double period = 0.0;

  std::size_t n() const { return e.rows(); }
  Matrix eval_c(double t) const;
  Vector eval_s(std::span<const double> x) const;
};

struct SvdFactors {
  Matrix p;  // orthogonal, P E Q^T = diag(sigma)
  Vector sigma;
  Matrix q;
};

/// One-sided Jacobi SVD arranged as P E Q^T = diag(sigma).
SvdFactors svd(const Matrix& e);

/// Number of singular values above tol * sigma_max.  Values within two
/// orders of magnitude of the threshold are an error (RankAmbiguous).
std::size_t numerical_rank(const Vector& sigma, double tol);

struct SvdReduction {
  SvdFactors factors;
  std::size_t rank = 0;  // s in the block form, k of the reduced problem
  Matrix e_s;            // rank x rank diagonal
  Matrix a11, a12, a21, a22;
  double c_offblock = 0.0;  // max over samples of |upper-right block of P C Q^T| / |C|
  double kernel_residual = 0.0;  // max over samples of |lower rows of P C| / |C|
  DaeProblem reduced;
};

struct ReduceOptions {
  double rank_tol = 1e-10;
  int samples = 64;  // per period, for the kernel and invertibility checks
};

/// Requires ker C^T(t) = ker E^T and ker C(t) = ker E at the samples.
/// Errors: InvalidProblem, RankAmbiguous, KernelMismatch, RankDeficientA22.
SvdReduction reduce(const ImplicitLinearDae& dae, const ReduceOptions& opts = {});

/// Same reduction from explicitly supplied factors (used for re-mixing).
SvdReduction reduce_with(const ImplicitLinearDae& dae, const SvdFactors& f, std::size_t rank,
                         const ReduceOptions& opts = {});

struct RankInvarianceReport {
  std::vector<std::size_t> ranks;  // first entry: unmixed factors
  bool invariant = false;
};

/// Rank of A22 under random orthogonal re-mixings of the kernel blocks.
RankInvarianceReport a22_rank_invariance_check(const ImplicitLinearDae& dae, int mixings = 5,
                                               std::uint64_t seed = 1, const ReduceOptions& opts = {});

/// Maps a reduced state (x, y) back to the original variables.
Vector to_original(const SvdReduction& red, std::span<const double> z);

/// max over interior samples of |E x' - a A x - lambda C S(x)|_inf along the
/// mapped-back trajectory, x' by fourth-order central differences.
double roundtrip_residual(const ImplicitLinearDae& dae, const SvdReduction& red, double lambda,
                          const flow::Trajectory& traj);

/// A 5-dimensional rank-3 system E = L R with A = -(E + N) + 0.1 K, where N
/// pairs bases of ker E^T and ker E, C(t) = L (I + 0.3 sin(2 pi t) K3) R,
/// S = sin, a = 1 + 0.5 sin(2 pi t), T = 1.
ImplicitLinearDae constructed_example(std::uint64_t seed = 7);

/// Parses the matrix input format (docs/problem-format.md).
ImplicitLinearDae parse_implicit_text(const std::string& text);
ImplicitLinearDae load_implicit_file(const std::string& path);

}  // namespace daeh::svd
