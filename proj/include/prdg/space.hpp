#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "prdg/mesh.hpp"
#include "prdg/quadrature.hpp"

namespace prdg {

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<Point(const Point&)>;

/// Analytic scalar data with an optional exact gradient. Without one,
/// grad() falls back to central differences with step 1e-6.
struct AnalyticField {
  ScalarFunction value;
  VectorFunction gradient;

  bool has_exact_gradient() const { return static_cast<bool>(gradient); }
  double operator()(const Point& x) const { return value(x); }
  Point grad(const Point& x) const;
};

/// Basis values and gradients tabulated at the quadrature points of one
/// element. Weights include the Jacobian.
struct ElementTabulation {
  std::vector<Point> points;
  Eigen::VectorXd weights;
  Eigen::MatrixXd values;  // nq x nd
  Eigen::MatrixXd dx;      // nq x nd
  Eigen::MatrixXd dy;      // nq x nd
};

/// Traces of the basis functions of both adjacent elements at the quadrature
/// points of a face. values[1] is empty on boundary faces.
struct FaceTabulation {
  std::vector<Point> points;
  Eigen::VectorXd weights;
  std::array<Eigen::MatrixXd, 2> values;
};

/// Broken polynomial space P^k(T_h) with an L2(T)-orthonormal basis on every
/// element: scaled monomials ((x - x_T) / h_T)^a ((y - y_T) / h_T)^b,
/// a + b <= k, orthonormalized by Gram-Schmidt (two Cholesky passes).
///
/// Holds a reference to the mesh, which must outlive the space.
class BrokenSpace {
 public:
  BrokenSpace(const Mesh& mesh, int degree);
  BrokenSpace(Mesh&&, int) = delete;  // the space keeps a reference

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  int dofs_per_element() const { return nd_; }
  int num_dofs() const { return nd_ * mesh_->num_elements(); }

  /// Exactness used for integrals involving the nonlinear flux and
  /// non-polynomial data: 2k + 4.
  int quadrature_degree() const { return 2 * degree_ + 4; }

  Point map_to_physical(int t, const Eigen::Vector2d& ref) const;

  void basis_values(int t, const Point& x, Eigen::Ref<Eigen::VectorXd> out) const;
  /// out is nd x 2.
  void basis_gradients(int t, const Point& x, Eigen::Ref<Eigen::MatrixXd> out) const;

  ElementTabulation tabulate_element(int t, const QuadratureRule& rule) const;
  FaceTabulation tabulate_face(int f, const QuadratureRule& rule) const;

  /// Physical quadrature points and weights on element t.
  void element_quadrature(int t, const QuadratureRule& rule, std::vector<Point>& points,
                          Eigen::VectorXd& weights) const;
  void face_quadrature(int f, const QuadratureRule& rule, std::vector<Point>& points,
                       Eigen::VectorXd& weights) const;

 private:
  void monomials(int t, const Point& x, Eigen::Ref<Eigen::VectorXd> m) const;
  void monomial_gradients(int t, const Point& x, Eigen::Ref<Eigen::MatrixXd> dm) const;
  Eigen::Map<const Eigen::MatrixXd> transform(int t) const;

  const Mesh* mesh_;
  int degree_;
  int nd_;
  std::vector<std::array<int, 2>> exponents_;
  // Per element, nd x nd lower-triangular map from scaled monomials to the
  // orthonormal basis.
  std::vector<double> transforms_;
};

/// Element of P^k(T_h): coefficients in the orthonormal basis, stored element
/// by element.
class DiscreteField {
 public:
  explicit DiscreteField(const BrokenSpace& space);
  DiscreteField(const BrokenSpace& space, Eigen::VectorXd coefficients);

  const BrokenSpace& space() const { return *space_; }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }
  Eigen::VectorXd& coefficients() { return coeffs_; }

  auto local(int t) const {
    return coeffs_.segment(static_cast<Eigen::Index>(t) * space_->dofs_per_element(),
                           space_->dofs_per_element());
  }
  auto local(int t) {
    return coeffs_.segment(static_cast<Eigen::Index>(t) * space_->dofs_per_element(),
                           space_->dofs_per_element());
  }

  double value(int t, const Point& x) const;
  Point gradient(int t, const Point& x) const;

 private:
  const BrokenSpace* space_;
  Eigen::VectorXd coeffs_;
};

/// Element of P^k(T_h)^2, used for liftings and discrete gradients.
struct DiscreteVectorField {
  explicit DiscreteVectorField(const BrokenSpace& space)
      : space(&space),
        x(Eigen::VectorXd::Zero(space.num_dofs())),
        y(Eigen::VectorXd::Zero(space.num_dofs())) {}

  Point value(int t, const Point& p) const;

  const BrokenSpace* space;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

/// L2-orthogonal projection onto P^k(T_h), integrated with a rule of the given
/// exactness (default: space.quadrature_degree()).
DiscreteField l2_project(const ScalarFunction& f, const BrokenSpace& space, int quad_degree = -1);

/// Same, for data given element by element (f(t, x) with x in element t).
DiscreteField l2_project_elementwise(const std::function<double(int, const Point&)>& f,
                                     const BrokenSpace& space, int quad_degree = -1);

/// ||f - v_h||_{L^r(Omega)} by elementwise quadrature.
double lp_error(const ScalarFunction& f, const DiscreteField& v, double r, int quad_degree = -1);

/// Text serialization: "k ne" header followed by one coefficient per line.
void write_field(std::ostream& out, const DiscreteField& field);
DiscreteField read_field(std::istream& in, const BrokenSpace& space);

}  // namespace prdg
