#include "prdg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prdg/errors.hpp"

namespace prdg {

ErrorBreakdown error_norms(const ProblemSpec& spec, const DiscreteField& uh, int quad_degree) {
  if (!spec.exact) throw MissingExact("error norms need the exact solution");
  const AnalyticField& u = *spec.exact;
  const BrokenSpace& space = uh.space();
  const Mesh& mesh = space.mesh();
  const double p = spec.p;
  if (quad_degree < 0) quad_degree = space.quadrature_degree();
  const QuadratureRule& trule = triangle_rule(quad_degree);
  const QuadratureRule& erule = edge_rule(quad_degree);

  double grad_p = 0.0, mass = 0.0;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const ElementTabulation tab = space.tabulate_element(t, trule);
    const Eigen::VectorXd vals = tab.values * uh.local(t);
    const Eigen::VectorXd dx = tab.dx * uh.local(t);
    const Eigen::VectorXd dy = tab.dy * uh.local(t);
    for (int q = 0; q < trule.size(); ++q) {
      const Point& x = tab.points[q];
      const Point e = u.grad(x) - Point(dx[q], dy[q]);
      grad_p += tab.weights[q] * std::pow(e.norm(), p);
      const double ev = u(x) - vals[q];
      mass += tab.weights[q] * spec.mu_at(x) * ev * ev;
    }
  }

  double jump_p = 0.0, upwind = 0.0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const FaceTabulation tab = space.tabulate_face(f, erule);
    Eigen::VectorXd jump = -(tab.values[0] * uh.local(face.elements[0]));
    if (face.is_boundary()) {
      for (int q = 0; q < erule.size(); ++q) jump[q] += u(tab.points[q]);
    } else {
      jump += tab.values[1] * uh.local(face.elements[1]);
    }
    double lp = 0.0;
    for (int q = 0; q < erule.size(); ++q) lp += tab.weights[q] * std::pow(std::abs(jump[q]), p);
    jump_p += std::pow(face.diameter, 1.0 - p) * lp;
    if (spec.beta) upwind += 0.5 * face_velocity(spec, space, f) * tab.weights.dot(jump.cwiseAbs2());
  }

  ErrorBreakdown e;
  e.q = p < 2.0 ? 2.0 : p;
  e.gradient_norm = std::pow(grad_p, 1.0 / p);
  e.jump_seminorm = std::pow(jump_p, 1.0 / p);
  e.norm_1ph = std::pow(grad_p + jump_p, 1.0 / p);
  e.norm_betamu = std::sqrt(upwind + mass);
  e.err_total = std::sqrt(spec.nu * std::pow(e.norm_1ph, e.q) + upwind + mass);
  return e;
}

int PecletReport::num_advective_elements() const {
  return static_cast<int>(std::count(element_advective.begin(), element_advective.end(), true));
}

int PecletReport::num_advective_faces() const {
  return static_cast<int>(std::count(face_advective.begin(), face_advective.end(), true));
}

double PecletReport::pct_advective_elements() const {
  if (element_advective.empty()) return 0.0;
  return 100.0 * num_advective_elements() / static_cast<double>(element_advective.size());
}

namespace {

constexpr double kUnbounded = 1e30;

// |x|^{p-2} with the value +inf at x = 0 for p < 2.
double power_weight(double norm, double p) {
  if (norm == 0.0) {
    if (p < 2.0) return std::numeric_limits<double>::infinity();
    return p == 2.0 ? 1.0 : 0.0;
  }
  return std::pow(norm, p - 2.0);
}

double peclet(double velocity, double h, double nu, double dref) {
  if (velocity == 0.0 || !(dref <= kUnbounded)) return 0.0;
  if (nu * dref == 0.0) return std::numeric_limits<double>::infinity();
  return velocity * h / (nu * dref);
}

Eigen::Matrix2d jacobian(const ProblemSpec& spec, const Point& x) {
  if (spec.beta_jacobian) return spec.beta_jacobian(x);
  constexpr double step = 1e-6;
  Eigen::Matrix2d j;
  j.col(0) = (spec.beta(x + Point(step, 0)) - spec.beta(x - Point(step, 0))) / (2 * step);
  j.col(1) = (spec.beta(x + Point(0, step)) - spec.beta(x - Point(0, step))) / (2 * step);
  return j;
}

}  // namespace

PecletReport peclet_classify(const ProblemSpec& spec, const BrokenSpace& space,
                             const AnalyticField& w) {
  const Mesh& mesh = space.mesh();
  const int ne = mesh.num_elements(), nf = mesh.num_faces();
  const double p = spec.p;
  const QuadratureRule& trule = triangle_rule(space.quadrature_degree());
  const QuadratureRule& erule = edge_rule(space.quadrature_degree());
  PecletReport r;
  r.element_pe.resize(ne);
  r.element_velocity.resize(ne);
  r.element_dref.resize(ne);
  r.reference_time.resize(ne);
  r.mu_lower.resize(ne);
  r.element_advective.resize(ne);

  // Per element: samples at quadrature points and vertices.
  std::vector<double> local_weight(ne, 0.0);
  std::vector<Point> pts;
  Eigen::VectorXd wts;
  for (int t = 0; t < ne; ++t) {
    space.element_quadrature(t, trule, pts, wts);
    for (int v : mesh.element(t)) pts.push_back(mesh.vertex(v));
    double vmax = 0.0, mumax = 0.0, jmax = 0.0, dmax = 0.0;
    double mumin = std::numeric_limits<double>::infinity();
    for (const Point& x : pts) {
      if (spec.beta) {
        vmax = std::max(vmax, spec.beta(x).norm());
        jmax = std::max(jmax, jacobian(spec, x).norm());
      }
      const double mu = spec.mu_at(x);
      mumax = std::max(mumax, std::abs(mu));
      mumin = std::min(mumin, mu);
      dmax = std::max(dmax, power_weight(w.grad(x).norm(), p));
    }
    local_weight[t] = dmax;
    r.element_velocity[t] = vmax;
    r.mu_lower[t] = mumin;
    const double rate = std::max(mumax, jmax);
    r.reference_time[t] = rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  }
  for (int t = 0; t < ne; ++t) {
    double dref = 0.0;
    for (int s : patch_of_element(mesh, t)) dref = std::max(dref, local_weight[s]);
    r.element_dref[t] = dref;
    r.element_pe[t] = peclet(r.element_velocity[t], mesh.element_diameter(t), spec.nu, dref);
    r.element_advective[t] = r.element_pe[t] > 1.0;
  }

  // Faces: the jump of the projection of w (its deviation from w on the
  // boundary) enters through the numerical diffusion of the penalty.
  r.face_pe.resize(nf);
  r.face_velocity.resize(nf);
  r.face_dref.resize(nf);
  r.face_advective.resize(nf);
  const DiscreteField pw = l2_project(w.value, space);
  for (int f = 0; f < nf; ++f) {
    const Face& face = mesh.face(f);
    const FaceTabulation tab = space.tabulate_face(f, erule);
    std::vector<Point> fpts = tab.points;
    fpts.push_back(mesh.vertex(face.vertices[0]));
    fpts.push_back(mesh.vertex(face.vertices[1]));
    double grad_weight = 0.0, jump_weight = 0.0;
    for (const Point& x : fpts) {
      grad_weight = std::max(grad_weight, power_weight(w.grad(x).norm(), p));
      double jump = pw.value(face.elements[0], x);
      jump -= face.is_boundary() ? w(x) : pw.value(face.elements[1], x);
      jump_weight = std::max(jump_weight, power_weight(std::abs(jump), p));
    }
    r.face_dref[f] = std::max(grad_weight, std::pow(face.diameter, 2.0 - p) * jump_weight);
    r.face_velocity[f] = face_velocity(spec, space, f);
    r.face_pe[f] = peclet(r.face_velocity[f], face.diameter, spec.nu, r.face_dref[f]);
    r.face_advective[f] = r.face_pe[f] > 1.0;
  }
  return r;
}

std::vector<double> convergence_rates(const std::vector<std::pair<double, double>>& points) {
  std::vector<double> rates;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [h, e] = points[i];
    if (!(e > 0.0) || !(h > 0.0)) throw DegenerateInput("rates need positive h and errors");
    if (i == 0) continue;
    const auto [h1, e1] = points[i - 1];
    if (!(h < h1)) throw DegenerateInput("mesh sizes must be strictly decreasing");
    rates.push_back(std::log(e / e1) / std::log(h / h1));
  }
  return rates;
}

}  // namespace prdg
