#pragma once

// Zeros of F = (f, g), their indices, the Brouwer degree over a box and the
// degree of the tangent field Psi on M.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "daeh/manifold.hpp"

namespace daeh::degree {

struct ZeroRecord {
  PointKS z;
  double residual = 0.0;  // ||F(z)||_inf
  double det_jac = 0.0;
  bool nondegenerate = false;
  std::optional<int> index;
  std::string index_method;  // "sign-det", "winding" or "" when unknown
};

struct ZeroSearchOptions {
  int grid_per_dim = 16;
  double newton_tol = 1e-12;
  double dedupe_radius = 1e-6;
  int max_iterations = 400;
  std::uint64_t seed = 0;  // 0 keeps grid order; otherwise starts are shuffled
};

struct ZeroSearchResult {
  std::vector<ZeroRecord> zeros;  // sorted lexicographically
  long starts = 0;
  long left_box = 0;
  long not_converged = 0;
  std::vector<std::string> warnings;
};

/// Multistart damped Newton on F from the cell centers of a grid on `box`.
ZeroSearchResult find_zeros(const DaeProblem& prob, const Box& box, const ZeroSearchOptions& opts = {});

/// |det J| <= kDegenerateRel * max(1, product of row norms) counts as degenerate.
inline constexpr double kDegenerateRel = 1e-8;

struct WindingOptions {
  double radius = 1e-3;
  int min_points = 1024;
};

/// Winding number of F (planar) around a circle centered at z.
/// Errors: AmbiguousWinding, DegenerateUnsupportedDim.
int winding_number(const DaeProblem& prob, std::span<const double> z, const WindingOptions& opts = {});

/// Index of a zero: sign det when nondegenerate, planar winding otherwise.
/// `others` is used for the isolation check.
int index_of(const DaeProblem& prob, const ZeroRecord& zero, const std::vector<ZeroRecord>& others = {},
             const WindingOptions& opts = {});

struct DegreeOptions {
  ZeroSearchOptions search;
  WindingOptions winding;
  double boundary_tol = 1e-6;
  bool check_stability = true;
};

struct DegreeReport {
  Box box;
  std::vector<ZeroRecord> zeros;
  std::optional<int> total_degree;
  double boundary_min_norm = 0.0;
  int grid_per_dim = 0;
  bool stable = true;  // same zero set at grid and 2 * grid
  std::vector<std::string> warnings;
};

/// Errors: BoundaryZero.
DegreeReport degree(const DaeProblem& prob, const Box& box, const DegreeOptions& opts = {});

/// min ||F||_inf over a sample grid on the boundary of `box`.
double boundary_min_norm(const DaeProblem& prob, const Box& box, int points_per_edge);

struct PsiZero {
  PointKS z;
  double det = 0.0;  // det of the tangent-projected derivative of Psi
  int index = 0;
  std::string method;  // "sign-det" or "sign-change"
};

struct PsiDegreeReport {
  std::vector<PsiZero> zeros;
  int total = 0;
};

/// Degree of Psi on M over `box` from tangent-projected finite differences.
/// Degenerate zeros are resolved by the sign change of Psi along M when
/// k = 1.  Errors: DegenerateTangentZero.
PsiDegreeReport degree_psi(const DaeProblem& prob, const std::vector<ZeroRecord>& zeros);
PsiDegreeReport degree_psi(const DaeProblem& prob, const Box& box, const ZeroSearchOptions& opts = {});

/// Bounded box: `box` with infinite sides replaced by the problem's cap.
Box bounded_box(const DaeProblem& prob, const Box& box);

}  // namespace daeh::degree
