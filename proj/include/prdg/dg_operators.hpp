#pragma once

#include <vector>

#include <Eigen/Core>

#include "prdg/space.hpp"

namespace prdg {

/// Jump and average of a discrete field at the quadrature points of a face.
///
/// Interior faces: jump = v|T1 - v|T2, average = (v|T1 + v|T2) / 2.
/// Boundary faces: jump = average = v, or v - g when boundary data g is given.
struct FaceTrace {
  int face = -1;
  std::vector<Point> points;
  Eigen::VectorXd weights;
  Eigen::VectorXd jump;
  Eigen::VectorXd average;
};

FaceTrace jump_avg(const DiscreteField& v, int f, const QuadratureRule& rule,
                   const ScalarFunction& bc = {});

/// Lifting of a face function into P^k(T_h)^2, supported on the elements
/// adjacent to the face.
struct LiftedField {
  DiscreteVectorField field;
  std::vector<int> support;
};

/// Local lifting r_F of the trace values psi given at the points of `rule` on
/// face f: the unique field in P^k(T_h)^2 with
///   (r_F psi, tau)_Omega = (psi, {tau} . n_F)_F  for all tau in P^k(T_h)^2.
/// The basis is orthonormal, so the coefficients are the right-hand side
/// moments themselves.
LiftedField lift_face(const BrokenSpace& space, int f, const QuadratureRule& rule,
                      const Eigen::VectorXd& psi);

/// R_h v = sum over faces of r_F(jump of v); boundary jumps are shifted by bc
/// when given.
DiscreteVectorField global_lifting(const DiscreteField& v, const ScalarFunction& bc = {});

/// G_h v = grad_h v - R_h v, elementwise in P^k(T)^2.
DiscreteVectorField discrete_gradient(const DiscreteField& v, const ScalarFunction& bc = {});

/// Broken gradient grad_h v expressed in the P^k(T_h)^2 basis (exact, since
/// grad_h v has degree k - 1).
DiscreteVectorField broken_gradient(const DiscreteField& v);

/// Matrix form of G_h restricted to one element, for assembly.
///
/// With U the coefficients of the elements listed in `patch` (the element
/// itself first, then its face neighbours in local face order), the x and y
/// coefficients of G_h u on the element are
///   [gx; gy] = matrix * U + shift,
/// where `shift` collects the boundary data contribution (zero without bc).
struct LocalGradient {
  std::vector<int> patch;
  Eigen::MatrixXd matrix;  // 2 nd x nd |patch|
  Eigen::VectorXd shift;   // 2 nd
};

LocalGradient local_discrete_gradient(const BrokenSpace& space, int t,
                                      const ScalarFunction& bc = {});

}  // namespace prdg
