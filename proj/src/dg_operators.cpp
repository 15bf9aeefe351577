#include "prdg/dg_operators.hpp"

namespace prdg {

namespace {

// Adds r_F(psi) into `out`. tab must be the face tabulation for `rule`.
void accumulate_lifting(const BrokenSpace& space, int f, const FaceTabulation& tab,
                        const Eigen::VectorXd& psi, DiscreteVectorField& out) {
  const Face& face = space.mesh().face(f);
  const int nd = space.dofs_per_element();
  const double avg_weight = face.is_boundary() ? 1.0 : 0.5;
  const Eigen::VectorXd wpsi = tab.weights.cwiseProduct(psi);
  for (int side = 0; side < 2; ++side) {
    const int t = face.elements[side];
    if (t < 0) continue;
    const Eigen::VectorXd moments = avg_weight * (tab.values[side].transpose() * wpsi);
    out.x.segment(static_cast<Eigen::Index>(t) * nd, nd) += face.normal.x() * moments;
    out.y.segment(static_cast<Eigen::Index>(t) * nd, nd) += face.normal.y() * moments;
  }
}

}  // namespace

FaceTrace jump_avg(const DiscreteField& v, int f, const QuadratureRule& rule,
                   const ScalarFunction& bc) {
  const BrokenSpace& space = v.space();
  const Face& face = space.mesh().face(f);
  const FaceTabulation tab = space.tabulate_face(f, rule);
  FaceTrace trace;
  trace.face = f;
  trace.points = tab.points;
  trace.weights = tab.weights;
  const Eigen::VectorXd first = tab.values[0] * v.local(face.elements[0]);
  if (face.is_boundary()) {
    trace.jump = first;
    if (bc) {
      for (int q = 0; q < rule.size(); ++q) trace.jump[q] -= bc(tab.points[q]);
    }
    trace.average = trace.jump;
  } else {
    const Eigen::VectorXd second = tab.values[1] * v.local(face.elements[1]);
    trace.jump = first - second;
    trace.average = 0.5 * (first + second);
  }
  return trace;
}

LiftedField lift_face(const BrokenSpace& space, int f, const QuadratureRule& rule,
                      const Eigen::VectorXd& psi) {
  LiftedField lifted{DiscreteVectorField(space), {}};
  const FaceTabulation tab = space.tabulate_face(f, rule);
  accumulate_lifting(space, f, tab, psi, lifted.field);
  for (int t : space.mesh().face(f).elements) {
    if (t >= 0) lifted.support.push_back(t);
  }
  return lifted;
}

DiscreteVectorField global_lifting(const DiscreteField& v, const ScalarFunction& bc) {
  const BrokenSpace& space = v.space();
  const QuadratureRule& rule = edge_rule(space.quadrature_degree());
  DiscreteVectorField out(space);
  for (int f = 0; f < space.mesh().num_faces(); ++f) {
    const FaceTrace trace = jump_avg(v, f, rule, bc);
    accumulate_lifting(space, f, space.tabulate_face(f, rule), trace.jump, out);
  }
  return out;
}

DiscreteVectorField broken_gradient(const DiscreteField& v) {
  const BrokenSpace& space = v.space();
  const int nd = space.dofs_per_element();
  const QuadratureRule& rule = triangle_rule(2 * space.degree());
  DiscreteVectorField out(space);
  for (int t = 0; t < space.mesh().num_elements(); ++t) {
    const ElementTabulation tab = space.tabulate_element(t, rule);
    const Eigen::VectorXd gx = tab.dx * v.local(t);
    const Eigen::VectorXd gy = tab.dy * v.local(t);
    out.x.segment(static_cast<Eigen::Index>(t) * nd, nd) =
        tab.values.transpose() * tab.weights.cwiseProduct(gx);
    out.y.segment(static_cast<Eigen::Index>(t) * nd, nd) =
        tab.values.transpose() * tab.weights.cwiseProduct(gy);
  }
  return out;
}

DiscreteVectorField discrete_gradient(const DiscreteField& v, const ScalarFunction& bc) {
  DiscreteVectorField out = broken_gradient(v);
  const DiscreteVectorField lifting = global_lifting(v, bc);
  out.x -= lifting.x;
  out.y -= lifting.y;
  return out;
}

LocalGradient local_discrete_gradient(const BrokenSpace& space, int t, const ScalarFunction& bc) {
  const Mesh& mesh = space.mesh();
  const int nd = space.dofs_per_element();
  LocalGradient lg;
  lg.patch.push_back(t);
  for (int f : mesh.element_faces(t)) {
    const int nb = mesh.neighbor(t, f);
    if (nb >= 0) lg.patch.push_back(nb);
  }
  const int np = static_cast<int>(lg.patch.size());
  lg.matrix = Eigen::MatrixXd::Zero(2 * nd, nd * np);
  lg.shift = Eigen::VectorXd::Zero(2 * nd);

  // Broken gradient: (phi_i, d phi_j / dx_d)_T.
  {
    const ElementTabulation tab = space.tabulate_element(t, triangle_rule(2 * space.degree()));
    const Eigen::MatrixXd wv = tab.weights.asDiagonal() * tab.values;
    lg.matrix.block(0, 0, nd, nd) = wv.transpose() * tab.dx;
    lg.matrix.block(nd, 0, nd, nd) = wv.transpose() * tab.dy;
  }

  const QuadratureRule& rule = edge_rule(space.quadrature_degree());
  int next_block = 1;
  for (int f : mesh.element_faces(t)) {
    const Face& face = mesh.face(f);
    const FaceTabulation tab = space.tabulate_face(f, rule);
    const int own = face.elements[0] == t ? 0 : 1;
    const Eigen::MatrixXd wown = tab.weights.asDiagonal() * tab.values[own];
    if (face.is_boundary()) {
      // -r_F(v - g) restricted to t.
      const Eigen::MatrixXd b = wown.transpose() * tab.values[0];
      lg.matrix.block(0, 0, nd, nd) -= face.normal.x() * b;
      lg.matrix.block(nd, 0, nd, nd) -= face.normal.y() * b;
      if (bc) {
        Eigen::VectorXd gq(rule.size());
        for (int q = 0; q < rule.size(); ++q) gq[q] = bc(tab.points[q]);
        const Eigen::VectorXd moments = wown.transpose() * gq;
        lg.shift.head(nd) += face.normal.x() * moments;
        lg.shift.tail(nd) += face.normal.y() * moments;
      }
      continue;
    }
    // -r_F(v|T1 - v|T2) restricted to t, with {tau} = tau|_t / 2.
    const int block = next_block++;
    const int col_first = own == 0 ? 0 : block * nd;
    const int col_second = own == 0 ? block * nd : 0;
    const Eigen::MatrixXd b1 = 0.5 * wown.transpose() * tab.values[0];
    const Eigen::MatrixXd b2 = 0.5 * wown.transpose() * tab.values[1];
    lg.matrix.block(0, col_first, nd, nd) -= face.normal.x() * b1;
    lg.matrix.block(nd, col_first, nd, nd) -= face.normal.y() * b1;
    lg.matrix.block(0, col_second, nd, nd) += face.normal.x() * b2;
    lg.matrix.block(nd, col_second, nd, nd) += face.normal.y() * b2;
  }
  return lg;
}

}  // namespace prdg
