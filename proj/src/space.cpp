#include "prdg/space.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include <Eigen/Cholesky>

#include "prdg/errors.hpp"

namespace prdg {

Point AnalyticField::grad(const Point& x) const {
  if (gradient) return gradient(x);
  constexpr double step = 1e-6;
  return {(value(x + Point(step, 0)) - value(x - Point(step, 0))) / (2 * step),
          (value(x + Point(0, step)) - value(x - Point(0, step))) / (2 * step)};
}

BrokenSpace::BrokenSpace(const Mesh& mesh, int degree)
    : mesh_(&mesh), degree_(degree), nd_((degree + 1) * (degree + 2) / 2) {
  if (degree < 0 || 2 * degree + 4 > kMaxQuadratureDegree) {
    throw UnsupportedDegree("polynomial degree " + std::to_string(degree) + " not supported");
  }
  for (int total = 0; total <= degree; ++total) {
    for (int b = 0; b <= total; ++b) exponents_.push_back({total - b, b});
  }
  transforms_.assign(static_cast<std::size_t>(mesh.num_elements()) * nd_ * nd_, 0.0);
  const QuadratureRule& rule = triangle_rule(2 * degree);
  std::vector<Point> pts;
  Eigen::VectorXd wts;
  Eigen::MatrixXd m(rule.size(), nd_);
  for (int t = 0; t < mesh.num_elements(); ++t) {
    element_quadrature(t, rule, pts, wts);
    Eigen::Map<Eigen::MatrixXd> c(transforms_.data() + static_cast<std::size_t>(t) * nd_ * nd_,
                                  nd_, nd_);
    c.setIdentity();
    Eigen::VectorXd row(nd_);
    for (int q = 0; q < rule.size(); ++q) {
      monomials(t, pts[q], row);
      m.row(q) = row.transpose();
    }
    // Two passes of Cholesky-based Gram-Schmidt; the second removes the
    // rounding left by the first.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::MatrixXd phi = m * c.transpose();
      const Eigen::MatrixXd mass = phi.transpose() * wts.asDiagonal() * phi;
      Eigen::LLT<Eigen::MatrixXd> llt(mass);
      const Eigen::MatrixXd l = llt.matrixL();
      c = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(c));
    }
  }
}

Eigen::Map<const Eigen::MatrixXd> BrokenSpace::transform(int t) const {
  return {transforms_.data() + static_cast<std::size_t>(t) * nd_ * nd_, nd_, nd_};
}

Point BrokenSpace::map_to_physical(int t, const Eigen::Vector2d& ref) const {
  const auto& tri = mesh_->element(t);
  const Point& a = mesh_->vertex(tri[0]);
  return a + ref.x() * (mesh_->vertex(tri[1]) - a) + ref.y() * (mesh_->vertex(tri[2]) - a);
}

void BrokenSpace::monomials(int t, const Point& x, Eigen::Ref<Eigen::VectorXd> m) const {
  const double h = mesh_->element_diameter(t);
  const Point xi = (x - mesh_->centroid(t)) / h;
  // Powers up to degree_ (at most 8 here).
  double px[16], py[16];
  px[0] = py[0] = 1.0;
  for (int i = 1; i <= degree_; ++i) {
    px[i] = px[i - 1] * xi.x();
    py[i] = py[i - 1] * xi.y();
  }
  for (int i = 0; i < nd_; ++i) m[i] = px[exponents_[i][0]] * py[exponents_[i][1]];
}

void BrokenSpace::monomial_gradients(int t, const Point& x, Eigen::Ref<Eigen::MatrixXd> dm) const {
  const double h = mesh_->element_diameter(t);
  const Point xi = (x - mesh_->centroid(t)) / h;
  double px[16], py[16];
  px[0] = py[0] = 1.0;
  for (int i = 1; i <= degree_; ++i) {
    px[i] = px[i - 1] * xi.x();
    py[i] = py[i - 1] * xi.y();
  }
  for (int i = 0; i < nd_; ++i) {
    const int a = exponents_[i][0], b = exponents_[i][1];
    dm(i, 0) = a > 0 ? a * px[a - 1] * py[b] / h : 0.0;
    dm(i, 1) = b > 0 ? b * px[a] * py[b - 1] / h : 0.0;
  }
}

void BrokenSpace::basis_values(int t, const Point& x, Eigen::Ref<Eigen::VectorXd> out) const {
  Eigen::VectorXd m(nd_);
  monomials(t, x, m);
  out.noalias() = transform(t).triangularView<Eigen::Lower>() * m;
}

void BrokenSpace::basis_gradients(int t, const Point& x, Eigen::Ref<Eigen::MatrixXd> out) const {
  Eigen::MatrixXd dm(nd_, 2);
  monomial_gradients(t, x, dm);
  out.noalias() = transform(t).triangularView<Eigen::Lower>() * dm;
}

void BrokenSpace::element_quadrature(int t, const QuadratureRule& rule, std::vector<Point>& points,
                                     Eigen::VectorXd& weights) const {
  const double jac = 2.0 * mesh_->element_area(t);
  points.resize(rule.size());
  weights.resize(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    points[q] = map_to_physical(t, rule.points[q]);
    weights[q] = rule.weights[q] * jac;
  }
}

void BrokenSpace::face_quadrature(int f, const QuadratureRule& rule, std::vector<Point>& points,
                                  Eigen::VectorXd& weights) const {
  const Face& face = mesh_->face(f);
  const Point& a = mesh_->vertex(face.vertices[0]);
  const Point& b = mesh_->vertex(face.vertices[1]);
  points.resize(rule.size());
  weights.resize(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    const double s = rule.points[q].x();
    points[q] = (1.0 - s) * a + s * b;
    weights[q] = rule.weights[q] * face.diameter;
  }
}

ElementTabulation BrokenSpace::tabulate_element(int t, const QuadratureRule& rule) const {
  ElementTabulation tab;
  element_quadrature(t, rule, tab.points, tab.weights);
  const int nq = rule.size();
  Eigen::MatrixXd m(nd_, nq), dmx(nd_, nq), dmy(nd_, nq);
  Eigen::MatrixXd grad(nd_, 2);
  for (int q = 0; q < nq; ++q) {
    monomials(t, tab.points[q], m.col(q));
    monomial_gradients(t, tab.points[q], grad);
    dmx.col(q) = grad.col(0);
    dmy.col(q) = grad.col(1);
  }
  const auto c = transform(t).triangularView<Eigen::Lower>();
  tab.values = (c * m).transpose();
  tab.dx = (c * dmx).transpose();
  tab.dy = (c * dmy).transpose();
  return tab;
}

FaceTabulation BrokenSpace::tabulate_face(int f, const QuadratureRule& rule) const {
  FaceTabulation tab;
  face_quadrature(f, rule, tab.points, tab.weights);
  const Face& face = mesh_->face(f);
  const int nq = rule.size();
  Eigen::MatrixXd m(nd_, nq);
  for (int side = 0; side < 2; ++side) {
    const int t = face.elements[side];
    if (t < 0) continue;
    for (int q = 0; q < nq; ++q) monomials(t, tab.points[q], m.col(q));
    tab.values[side] = (transform(t).triangularView<Eigen::Lower>() * m).transpose();
  }
  return tab;
}

DiscreteField::DiscreteField(const BrokenSpace& space)
    : space_(&space), coeffs_(Eigen::VectorXd::Zero(space.num_dofs())) {}

DiscreteField::DiscreteField(const BrokenSpace& space, Eigen::VectorXd coefficients)
    : space_(&space), coeffs_(std::move(coefficients)) {
  if (coeffs_.size() != space.num_dofs()) {
    throw DegenerateInput("coefficient vector has length " + std::to_string(coeffs_.size()) +
                          ", space has " + std::to_string(space.num_dofs()) + " dofs");
  }
}

double DiscreteField::value(int t, const Point& x) const {
  Eigen::VectorXd phi(space_->dofs_per_element());
  space_->basis_values(t, x, phi);
  return phi.dot(local(t));
}

Point DiscreteField::gradient(int t, const Point& x) const {
  Eigen::MatrixXd dphi(space_->dofs_per_element(), 2);
  space_->basis_gradients(t, x, dphi);
  return dphi.transpose() * local(t);
}

Point DiscreteVectorField::value(int t, const Point& p) const {
  const int nd = space->dofs_per_element();
  Eigen::VectorXd phi(nd);
  space->basis_values(t, p, phi);
  return {phi.dot(x.segment(static_cast<Eigen::Index>(t) * nd, nd)),
          phi.dot(y.segment(static_cast<Eigen::Index>(t) * nd, nd))};
}

DiscreteField l2_project_elementwise(const std::function<double(int, const Point&)>& f,
                                     const BrokenSpace& space, int quad_degree) {
  const QuadratureRule& rule =
      triangle_rule(quad_degree < 0 ? space.quadrature_degree() : quad_degree);
  DiscreteField out(space);
  Eigen::VectorXd fq(rule.size());
  for (int t = 0; t < space.mesh().num_elements(); ++t) {
    const ElementTabulation tab = space.tabulate_element(t, rule);
    for (int q = 0; q < rule.size(); ++q) fq[q] = f(t, tab.points[q]) * tab.weights[q];
    out.local(t) = tab.values.transpose() * fq;
  }
  return out;
}

DiscreteField l2_project(const ScalarFunction& f, const BrokenSpace& space, int quad_degree) {
  return l2_project_elementwise([&f](int, const Point& x) { return f(x); }, space, quad_degree);
}

double lp_error(const ScalarFunction& f, const DiscreteField& v, double r, int quad_degree) {
  const BrokenSpace& space = v.space();
  const QuadratureRule& rule =
      triangle_rule(quad_degree < 0 ? space.quadrature_degree() : quad_degree);
  double sum = 0.0;
  for (int t = 0; t < space.mesh().num_elements(); ++t) {
    const ElementTabulation tab = space.tabulate_element(t, rule);
    const Eigen::VectorXd vals = tab.values * v.local(t);
    for (int q = 0; q < rule.size(); ++q) {
      sum += tab.weights[q] * std::pow(std::abs(f(tab.points[q]) - vals[q]), r);
    }
  }
  return std::pow(sum, 1.0 / r);
}

void write_field(std::ostream& out, const DiscreteField& field) {
  out << field.space().degree() << ' ' << field.space().mesh().num_elements() << '\n';
  out << std::setprecision(17);
  for (double c : field.coefficients()) out << c << '\n';
}

DiscreteField read_field(std::istream& in, const BrokenSpace& space) {
  int k = -1, ne = -1;
  if (!(in >> k >> ne)) throw ParseError("field header must be 'k ne'");
  if (k != space.degree() || ne != space.mesh().num_elements()) {
    throw ParseError("field header (k=" + std::to_string(k) + ", ne=" + std::to_string(ne) +
                     ") does not match the space");
  }
  Eigen::VectorXd coeffs(space.num_dofs());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    if (!(in >> coeffs[i])) throw ParseError("field truncated at coefficient " + std::to_string(i));
  }
  return DiscreteField(space, std::move(coeffs));
}

}  // namespace prdg
