#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace prdg {

/// Quadrature on the reference triangle {x, y >= 0, x + y <= 1} (points are
/// reference coordinates, weights sum to 1/2) or on [0, 1] (only the first
/// coordinate is used, weights sum to 1).
struct QuadratureRule {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
  int exactness_degree = 0;

  int size() const { return static_cast<int>(weights.size()); }
};

inline constexpr int kMaxQuadratureDegree = 20;

/// Collapsed-coordinate Gauss rule (Gauss-Jacobi x Gauss-Legendre) with
/// positive weights, exact for polynomials of total degree <= max(degree, 1).
/// Throws UnsupportedDegree for degree > 20. Rules are cached.
const QuadratureRule& triangle_rule(int degree);

/// Gauss-Legendre on [0, 1] with ceil((degree + 1) / 2) nodes.
const QuadratureRule& edge_rule(int degree);

/// Nodes and weights of the Gauss-Jacobi rule for the weight (1-x)^alpha
/// (1+x)^beta on [-1, 1] via Golub-Welsch.
void gauss_jacobi(int n, double alpha, double beta, std::vector<double>& nodes,
                  std::vector<double>& weights);

/// Which ends of the collapsed coordinates of a triangle (v0, v1, v2),
///   x = v0 + r ((1 - t) (v1 - v0) + t (v2 - v0)),  (r, t) in [0, 1]^2,
/// carry an integrable singularity: r0 is the vertex v0, r1 the edge v1 v2,
/// t0 the side through v1 and t1 the side through v2.
struct GradedEnds {
  bool r0 = false, r1 = false, t0 = false, t1 = false;
};

/// Tensor Gauss-Legendre rule in (r, t) where each flagged end is graded by
/// s -> s^m: a factor |dist|^a, a > -1, towards a flagged vertex or edge
/// becomes s^{m a + m - 1}, smooth for m >= 1 / (1 + a). Points and weights
/// are physical; `n` nodes per direction (per half when both ends of a
/// coordinate are flagged).
void graded_triangle_rule(const std::array<Eigen::Vector2d, 3>& v, GradedEnds ends, int n, int m,
                          std::vector<Eigen::Vector2d>& points, std::vector<double>& weights);

}  // namespace prdg
