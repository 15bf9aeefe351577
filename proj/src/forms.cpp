#include "prdg/forms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "prdg/errors.hpp"

namespace prdg {

double FluxKernel::coefficient(double sq_norm) const {
  const double exponent = 0.5 * (p - 2.0);
  if (eps > 0.0) return std::pow(sq_norm + eps * eps, exponent);
  if (sq_norm > 0.0) return std::pow(sq_norm, exponent);
  if (p > 2.0) return 0.0;
  if (p == 2.0) return 1.0;
  return std::numeric_limits<double>::infinity();
}

Point FluxKernel::sigma(const Point& x) const {
  const double s = x.squaredNorm();
  if (s == 0.0) return Point::Zero();
  return coefficient(s) * x;
}

double FluxKernel::sigma1(double t) const {
  if (t == 0.0) return 0.0;
  return coefficient(t * t) * t;
}

double face_velocity(const ProblemSpec& spec, const BrokenSpace& space, int f) {
  if (!spec.beta) return 0.0;
  const Face& face = space.mesh().face(f);
  std::vector<Point> pts;
  Eigen::VectorXd w;
  space.face_quadrature(f, edge_rule(space.quadrature_degree()), pts, w);
  double v = 0.0;
  for (const Point& x : pts) v = std::max(v, std::abs(spec.beta(x).dot(face.normal)));
  return v;
}

double eval_a_h(const ProblemSpec& spec, const BrokenSpace& space, const DiscreteField& w,
                const DiscreteField& v, const FormOptions& options) {
  const Mesh& mesh = space.mesh();
  const FluxKernel flux{spec.p, 0.0};
  const DiscreteVectorField gw = discrete_gradient(w, spec.g);
  const DiscreteVectorField gv = discrete_gradient(v);
  const QuadratureRule& trule = triangle_rule(space.quadrature_degree());
  double volume = 0.0;
  std::vector<Point> pts;
  Eigen::VectorXd wts;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    space.element_quadrature(t, trule, pts, wts);
    for (int q = 0; q < trule.size(); ++q) {
      volume += wts[q] * flux.sigma(gw.value(t, pts[q])).dot(gv.value(t, pts[q]));
    }
  }
  const QuadratureRule& erule = edge_rule(space.quadrature_degree());
  double penalty = 0.0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const FaceTrace jw = jump_avg(w, f, erule, spec.g);
    const FaceTrace jv = jump_avg(v, f, erule);
    double s = 0.0;
    for (int q = 0; q < erule.size(); ++q) s += jw.weights[q] * flux.sigma1(jw.jump[q]) * jv.jump[q];
    penalty += std::pow(mesh.face(f).diameter, 1.0 - spec.p) * s;
  }
  return spec.nu * (volume + options.eta * penalty);
}

double eval_b_h(const ProblemSpec& spec, const BrokenSpace& space, const DiscreteField& w,
                const DiscreteField& v, int quad_degree) {
  const Mesh& mesh = space.mesh();
  if (quad_degree < 0) quad_degree = space.quadrature_degree();
  const QuadratureRule& trule = triangle_rule(quad_degree);
  double sum = 0.0;
  std::vector<Point> pts;
  Eigen::VectorXd wts;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    space.element_quadrature(t, trule, pts, wts);
    for (int q = 0; q < trule.size(); ++q) {
      const double wq = w.value(t, pts[q]);
      sum += wts[q] * (-wq * spec.beta_at(pts[q]).dot(v.gradient(t, pts[q])) +
                       spec.mu_at(pts[q]) * wq * v.value(t, pts[q]));
    }
  }
  const QuadratureRule& erule = edge_rule(quad_degree);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const double vf = face_velocity(spec, space, f);
    const FaceTrace tw = jump_avg(w, f, erule);
    const FaceTrace tv = jump_avg(v, f, erule);
    for (int q = 0; q < erule.size(); ++q) {
      double avg = tw.average[q], jump = tw.jump[q];
      if (face.is_boundary()) {
        const double g = spec.g_at(tw.points[q]);
        avg = 0.5 * (tw.jump[q] + g);
        jump = tw.jump[q] - g;
      }
      const double bn = spec.beta_at(tw.points[q]).dot(face.normal);
      sum += tw.weights[q] * (bn * avg + 0.5 * vf * jump) * tv.jump[q];
    }
  }
  return sum;
}

double betamu_norm_squared(const ProblemSpec& spec, const BrokenSpace& space,
                           const DiscreteField& v, int quad_degree) {
  const Mesh& mesh = space.mesh();
  if (quad_degree < 0) quad_degree = space.quadrature_degree();
  double sum = 0.0;
  if (spec.mu) {
    const QuadratureRule& trule = triangle_rule(quad_degree);
    std::vector<Point> pts;
    Eigen::VectorXd wts;
    for (int t = 0; t < mesh.num_elements(); ++t) {
      space.element_quadrature(t, trule, pts, wts);
      for (int q = 0; q < trule.size(); ++q) {
        const double vq = v.value(t, pts[q]);
        sum += wts[q] * spec.mu(pts[q]) * vq * vq;
      }
    }
  }
  if (spec.beta) {
    const QuadratureRule& erule = edge_rule(quad_degree);
    for (int f = 0; f < mesh.num_faces(); ++f) {
      const FaceTrace tv = jump_avg(v, f, erule);
      sum += 0.5 * face_velocity(spec, space, f) * tv.weights.dot(tv.jump.cwiseAbs2());
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------

BlockPattern::BlockPattern(const BrokenSpace& space) : nd_(space.dofs_per_element()) {
  const Mesh& mesh = space.mesh();
  const int ne = mesh.num_elements();
  std::vector<std::vector<int>> patch(ne);
  for (int t = 0; t < ne; ++t) patch[t] = patch_of_element(mesh, t);
  nb_.resize(ne);
  row_begin_.assign(ne + 1, 0);
  for (int a = 0; a < ne; ++a) {
    std::vector<int>& nb = nb_[a];
    for (int t : patch[a]) nb.insert(nb.end(), patch[t].begin(), patch[t].end());
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    row_begin_[a + 1] = row_begin_[a] + static_cast<Eigen::Index>(nb.size()) * nd_ * nd_;
  }
}

Eigen::Index BlockPattern::offset(int a, int i, int b, int j) const {
  const std::vector<int>& nb = nb_[a];
  const auto it = std::lower_bound(nb.begin(), nb.end(), b);
  const Eigen::Index len = static_cast<Eigen::Index>(nb.size());
  return row_begin_[a] + (i * len + (it - nb.begin())) * nd_ + j;
}

SparseMatrix BlockPattern::make_matrix() const {
  const int ne = static_cast<int>(nb_.size());
  const Eigen::Index n = static_cast<Eigen::Index>(ne) * nd_;
  SparseMatrix m(n, n);
  m.resizeNonZeros(nonzeros());
  auto* outer = m.outerIndexPtr();
  auto* inner = m.innerIndexPtr();
  for (int a = 0; a < ne; ++a) {
    const Eigen::Index len = static_cast<Eigen::Index>(nb_[a].size());
    for (int i = 0; i < nd_; ++i) {
      Eigen::Index pos = row_begin_[a] + i * len * nd_;
      outer[a * nd_ + i] = static_cast<int>(pos);
      for (int b : nb_[a]) {
        for (int j = 0; j < nd_; ++j) inner[pos++] = b * nd_ + j;
      }
    }
  }
  outer[n] = static_cast<int>(nonzeros());
  std::fill(m.valuePtr(), m.valuePtr() + nonzeros(), 0.0);
  return m;
}

namespace {

// Grading exponent and nodes per direction of the singular load rule: with
// s -> s^4, |dist|^a for a >= -3/4 turns into a non-negative power of s.
constexpr int kGrading = 4;
int graded_nodes(int k) { return 4 * k + 6; }

// values[offset(a, i, b, j)] += scale * block(i, j).
void scatter(const BlockPattern& pattern, double* values, int a, int b,
             const Eigen::Ref<const Eigen::MatrixXd>& block) {
  for (int i = 0; i < block.rows(); ++i) {
    double* row = values + pattern.offset(a, i, b, 0);
    for (int j = 0; j < block.cols(); ++j) row[j] += block(i, j);
  }
}

// Physical quadrature on triangle `tri` graded towards the lines it touches;
// triangles crossed by a line are first split along it. Returns false (and
// leaves the output empty) when no line meets the triangle.
bool graded_points(const std::array<Point, 3>& tri, const std::vector<ProblemSpec::Line>& lines,
                   int n, std::vector<Point>& pts, std::vector<double>& w) {
  const double scale = std::max({(tri[1] - tri[0]).norm(), (tri[2] - tri[1]).norm(),
                                 (tri[0] - tri[2]).norm()});
  const double tol = 1e-12 * scale;
  // Vertices on each touching line, as a bit mask.
  std::vector<int> contacts;
  for (const auto& line : lines) {
    std::array<double, 3> d;
    for (int i = 0; i < 3; ++i) {
      d[i] = line.normal.dot(tri[i]) - line.offset;
      if (std::abs(d[i]) <= tol) d[i] = 0.0;
    }
    auto cut = [&](int a, int b) { return Point(tri[a] + d[a] / (d[a] - d[b]) * (tri[b] - tri[a])); };
    std::vector<std::array<Point, 3>> parts;
    for (int a = 0; a < 3 && parts.empty(); ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      if (d[a] == 0.0 && d[b] * d[c] < 0.0) {
        const Point q = cut(b, c);
        parts = {{tri[a], tri[b], q}, {tri[a], q, tri[c]}};
      } else if (d[a] * d[b] < 0.0 && d[a] * d[c] < 0.0) {
        const Point pb = cut(a, b), pc = cut(a, c);
        parts = {{tri[a], pb, pc}, {pb, tri[b], tri[c]}, {pb, tri[c], pc}};
      }
    }
    if (!parts.empty()) {
      pts.clear();
      w.clear();
      std::vector<Point> sp;
      std::vector<double> sw;
      for (const auto& part : parts) {
        if (!graded_points(part, lines, n, sp, sw)) {
          const QuadratureRule& rule = triangle_rule(std::min(2 * n - 1, kMaxQuadratureDegree));
          const Point e1 = part[1] - part[0], e2 = part[2] - part[0];
          const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
          for (int q = 0; q < rule.size(); ++q) {
            sp.push_back(part[0] + rule.points[q].x() * e1 + rule.points[q].y() * e2);
            sw.push_back(jac * rule.weights[q]);
          }
        }
        pts.insert(pts.end(), sp.begin(), sp.end());
        w.insert(w.end(), sw.begin(), sw.end());
      }
      return true;
    }
    const int mask = (d[0] == 0.0 ? 1 : 0) | (d[1] == 0.0 ? 2 : 0) | (d[2] == 0.0 ? 4 : 0);
    if (mask != 0) contacts.push_back(mask);
  }
  pts.clear();
  w.clear();
  if (contacts.empty()) return false;
  // Put a contact vertex at v0 so edge contacts become t = 0 or t = 1.
  int first = 0;
  while (!((contacts[0] >> first) & 1)) ++first;
  const std::array<Point, 3> v{tri[first], tri[(first + 1) % 3], tri[(first + 2) % 3]};
  GradedEnds ends;
  for (int mask : contacts) {
    const bool c0 = (mask >> first) & 1, c1 = (mask >> ((first + 1) % 3)) & 1,
               c2 = (mask >> ((first + 2) % 3)) & 1;
    // Edge contacts through v0 leave a factor r^{a+1} after the Jacobian.
    if (c0 && c1) {
      ends.r0 = ends.t0 = true;   // dist ~ r t
    } else if (c0 && c2) {
      ends.r0 = ends.t1 = true;   // dist ~ r (1 - t)
    } else if (c1 && c2) {
      ends.r1 = true;        // dist ~ 1 - r
    } else if (c0) {
      ends.r0 = true;
    } else {                 // lone vertex v1 or v2
      ends.r1 = true;
      (c1 ? ends.t0 : ends.t1) = true;
    }
  }
  graded_triangle_rule(v, ends, n, kGrading, pts, w);
  return true;
}

}  // namespace

Assembler::Assembler(const ProblemSpec& spec, const BrokenSpace& space, FormOptions options)
    : spec_(spec), space_(&space), options_(options), pattern_(space) {
  const Mesh& mesh = space.mesh();
  const int nd = space.dofs_per_element();
  const QuadratureRule& trule = triangle_rule(space.quadrature_degree());
  const QuadratureRule& erule = edge_rule(space.quadrature_degree());

  elements_.resize(mesh.num_elements());
  load_ = Eigen::VectorXd::Zero(space.num_dofs());
  std::vector<Point> pts;
  std::vector<double> w;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    ElementData& e = elements_[t];
    e.gradient = local_discrete_gradient(space, t, spec.g);
    ElementTabulation tab = space.tabulate_element(t, trule);
    e.values = std::move(tab.values);
    e.weights = std::move(tab.weights);
    if (spec.f) {
      Eigen::VectorXd fq(trule.size());
      for (int q = 0; q < trule.size(); ++q) fq[q] = e.weights[q] * spec.f(tab.points[q]);
      load_.segment(static_cast<Eigen::Index>(t) * nd, nd) = e.values.transpose() * fq;
      std::array<Point, 3> tri;
      for (int i = 0; i < 3; ++i) tri[i] = mesh.vertex(mesh.element(t)[i]);
      if (!spec.singular_lines.empty() &&
          graded_points(tri, spec.singular_lines, graded_nodes(space.degree()), pts, w)) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(nd), phi(nd);
        for (std::size_t q = 0; q < pts.size(); ++q) {
          // Graded nodes closer to a line than the coordinate resolution
          // round onto it; their weights are below 1e-20 of the element's.
          const double fq = spec.f(pts[q]);
          if (!std::isfinite(fq)) continue;
          space.basis_values(t, pts[q], phi);
          acc += w[q] * fq * phi;
        }
        load_.segment(static_cast<Eigen::Index>(t) * nd, nd) = acc;
      }
    }
  }

  faces_.resize(mesh.num_faces());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    FaceData& fd = faces_[f];
    FaceTabulation tab = space.tabulate_face(f, erule);
    fd.values[0] = std::move(tab.values[0]);
    fd.values[1] = std::move(tab.values[1]);
    fd.weights = std::move(tab.weights);
    fd.penalty = options.eta * std::pow(face.diameter, 1.0 - spec.p);
    if (face.is_boundary()) {
      fd.g = Eigen::VectorXd::Zero(erule.size());
      if (spec.g) {
        for (int q = 0; q < erule.size(); ++q) fd.g[q] = spec.g(tab.points[q]);
      }
    }
  }
  build_advection();
}

void Assembler::build_advection() {
  const BrokenSpace& space = *space_;
  const Mesh& mesh = space.mesh();
  const int nd = space.dofs_per_element();
  const QuadratureRule& trule = triangle_rule(space.quadrature_degree());
  const QuadratureRule& erule = edge_rule(space.quadrature_degree());
  advection_ = pattern_.make_matrix();
  advection_rhs_ = Eigen::VectorXd::Zero(space.num_dofs());
  if (!spec_.beta && !spec_.mu) return;
  double* values = advection_.valuePtr();

  for (int t = 0; t < mesh.num_elements(); ++t) {
    const ElementTabulation tab = space.tabulate_element(t, trule);
    // Rows: test functions; columns: trial functions.
    Eigen::MatrixXd bgrad = Eigen::MatrixXd::Zero(trule.size(), nd);
    Eigen::VectorXd mu(trule.size());
    for (int q = 0; q < trule.size(); ++q) {
      const Point b = spec_.beta_at(tab.points[q]);
      bgrad.row(q) = b.x() * tab.dx.row(q) + b.y() * tab.dy.row(q);
      mu[q] = spec_.mu_at(tab.points[q]);
    }
    const Eigen::MatrixXd block =
        -bgrad.transpose() * tab.weights.asDiagonal() * tab.values +
        tab.values.transpose() * tab.weights.cwiseProduct(mu).asDiagonal() * tab.values;
    scatter(pattern_, values, t, t, block);
  }

  if (!spec_.beta) return;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const FaceData& fd = faces_[f];
    std::vector<Point> pts;
    Eigen::VectorXd w;
    space.face_quadrature(f, erule, pts, w);
    const double vf = face_velocity(spec_, space, f);
    Eigen::VectorXd bn(erule.size());
    for (int q = 0; q < erule.size(); ++q) bn[q] = spec_.beta(pts[q]).dot(face.normal);
    const int t1 = face.elements[0];
    if (face.is_boundary()) {
      // {w} = (w + g) / 2 and [w] = w - g: the g parts move to the right side.
      const Eigen::VectorXd coef = 0.5 * (w.array() * (bn.array() + vf)).matrix();
      scatter(pattern_, values, t1, t1,
              fd.values[0].transpose() * coef.asDiagonal() * fd.values[0]);
      const Eigen::VectorXd rhs_coef =
          0.5 * w.cwiseProduct((vf - bn.array()).matrix()).cwiseProduct(fd.g);
      advection_rhs_.segment(static_cast<Eigen::Index>(t1) * nd, nd) +=
          fd.values[0].transpose() * rhs_coef;
      continue;
    }
    const int t2 = face.elements[1];
    const int elems[2] = {t1, t2};
    const double sign[2] = {1.0, -1.0};
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd coef =
            w.cwiseProduct((sign[r] * 0.5 * bn.array() + 0.5 * vf * sign[r] * sign[c]).matrix());
        scatter(pattern_, values, elems[r], elems[c],
                fd.values[r].transpose() * coef.asDiagonal() * fd.values[c]);
      }
    }
  }
}

Eigen::VectorXd Assembler::gradient_at_points(int t, const DiscreteField& u, int d) const {
  const ElementData& e = elements_[t];
  const int nd = space_->dofs_per_element();
  Eigen::VectorXd coeffs = e.gradient.shift.segment(d * nd, nd);
  for (std::size_t j = 0; j < e.gradient.patch.size(); ++j) {
    coeffs.noalias() +=
        e.gradient.matrix.block(d * nd, static_cast<Eigen::Index>(j) * nd, nd, nd) *
        u.local(e.gradient.patch[j]);
  }
  return e.values * coeffs;
}

Eigen::VectorXd Assembler::jump_at_points(int f, const DiscreteField& u) const {
  const Face& face = space_->mesh().face(f);
  const FaceData& fd = faces_[f];
  Eigen::VectorXd jump = fd.values[0] * u.local(face.elements[0]);
  if (face.is_boundary()) {
    jump -= fd.g;
  } else {
    jump -= fd.values[1] * u.local(face.elements[1]);
  }
  return jump;
}

AssembledSystem Assembler::picard_step(const DiscreteField& u_prev, double eps) const {
  return assemble(&u_prev, eps < 0.0 ? options_.eps : eps, Linearization::frozen);
}

AssembledSystem Assembler::linear_step() const {
  return assemble(nullptr, options_.eps, Linearization::unit);
}

AssembledSystem Assembler::newton_step(const DiscreteField& u, double eps) const {
  if (eps < 0.0) eps = options_.eps;
  AssembledSystem sys = assemble(&u, eps, Linearization::newton);
  sys.rhs = -residual(u, eps);
  return sys;
}

namespace {

// (p - 2)(s + eps^2)^{(p-4)/2}: the rank-one part of the flux derivative.
double rank_one_coefficient(const FluxKernel& flux, double sq_norm) {
  if (flux.p == 2.0) return 0.0;
  const double s = sq_norm + flux.eps * flux.eps;
  if (s == 0.0) return 0.0;
  return (flux.p - 2.0) * std::pow(s, 0.5 * (flux.p - 4.0));
}

}  // namespace

// unit: coefficients 1 and penalty eta h_F^{-1} (p = 2); frozen: Kacanov
// coefficients at u; newton: flux derivative at u (rhs left for the caller).
AssembledSystem Assembler::assemble(const DiscreteField* u, double eps, Linearization mode) const {
  const Mesh& mesh = space_->mesh();
  const int nd = space_->dofs_per_element();
  const FluxKernel frozen{spec_.p, eps};
  AssembledSystem sys;
  sys.eps = eps;
  sys.eta = options_.eta;
  sys.matrix = advection_;
  sys.rhs = advection_rhs_ + load_;
  double* values = sys.matrix.valuePtr();

  for (int t = 0; t < mesh.num_elements(); ++t) {
    const ElementData& e = elements_[t];
    const Eigen::Index nq = e.weights.size();
    // Symmetric 2x2 coefficient tensor per point: (xx, xy, yy).
    Eigen::VectorXd cxx = Eigen::VectorXd::Ones(nq), cyy = Eigen::VectorXd::Ones(nq);
    Eigen::VectorXd cxy = Eigen::VectorXd::Zero(nq);
    if (mode != Linearization::unit) {
      const Eigen::VectorXd gx = gradient_at_points(t, *u, 0);
      const Eigen::VectorXd gy = gradient_at_points(t, *u, 1);
      for (Eigen::Index q = 0; q < nq; ++q) {
        const double sq = gx[q] * gx[q] + gy[q] * gy[q];
        const double rho = frozen.coefficient(sq);
        if (!std::isfinite(rho)) {
          throw NonFiniteValue("frozen diffusion coefficient is not finite on element " +
                               std::to_string(t));
        }
        const double c2 = mode == Linearization::newton ? rank_one_coefficient(frozen, sq) : 0.0;
        cxx[q] = rho + c2 * gx[q] * gx[q];
        cyy[q] = rho + c2 * gy[q] * gy[q];
        cxy[q] = c2 * gx[q] * gy[q];
      }
    }
    auto weighted = [&](const Eigen::VectorXd& c) -> Eigen::MatrixXd {
      return spec_.nu * e.values.transpose() * e.weights.cwiseProduct(c).asDiagonal() * e.values;
    };
    const Eigen::MatrixXd wxx = weighted(cxx), wyy = weighted(cyy);
    const auto& lg = e.gradient;
    const int np = static_cast<int>(lg.patch.size());
    const auto mx = lg.matrix.topRows(nd);
    const auto my = lg.matrix.bottomRows(nd);
    Eigen::MatrixXd block = mx.transpose() * (wxx * mx);
    block.noalias() += my.transpose() * (wyy * my);
    Eigen::VectorXd shift_rhs = mx.transpose() * (wxx * lg.shift.head(nd));
    shift_rhs.noalias() += my.transpose() * (wyy * lg.shift.tail(nd));
    if (mode == Linearization::newton) {
      const Eigen::MatrixXd wxy = weighted(cxy);
      const Eigen::MatrixXd cross = mx.transpose() * (wxy * my);
      block += cross + cross.transpose();
    }
    for (int a = 0; a < np; ++a) {
      sys.rhs.segment(static_cast<Eigen::Index>(lg.patch[a]) * nd, nd) -=
          shift_rhs.segment(a * nd, nd);
      for (int b = 0; b < np; ++b) {
        scatter(pattern_, values, lg.patch[a], lg.patch[b], block.block(a * nd, b * nd, nd, nd));
      }
    }
  }

  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const FaceData& fd = faces_[f];
    Eigen::VectorXd coef = spec_.nu * fd.weights;
    if (mode != Linearization::unit) {
      const Eigen::VectorXd jump = jump_at_points(f, *u);
      for (Eigen::Index q = 0; q < jump.size(); ++q) {
        const double sq = jump[q] * jump[q];
        double kappa = frozen.coefficient(sq);
        if (!std::isfinite(kappa)) {
          throw NonFiniteValue("frozen penalty coefficient is not finite on face " +
                               std::to_string(f));
        }
        if (mode == Linearization::newton) kappa += rank_one_coefficient(frozen, sq) * sq;
        coef[q] *= fd.penalty * kappa;
      }
    } else {
      coef *= options_.eta / face.diameter;
    }
    const int t1 = face.elements[0];
    if (face.is_boundary()) {
      scatter(pattern_, values, t1, t1, fd.values[0].transpose() * coef.asDiagonal() * fd.values[0]);
      sys.rhs.segment(static_cast<Eigen::Index>(t1) * nd, nd) +=
          fd.values[0].transpose() * coef.cwiseProduct(fd.g);
      continue;
    }
    const int elems[2] = {t1, face.elements[1]};
    const double sign[2] = {1.0, -1.0};
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        scatter(pattern_, values, elems[r], elems[c],
                sign[r] * sign[c] * (fd.values[r].transpose() * coef.asDiagonal() * fd.values[c]));
      }
    }
  }
  return sys;
}

Eigen::VectorXd Assembler::residual(const DiscreteField& u, double eps) const {
  const Mesh& mesh = space_->mesh();
  const int nd = space_->dofs_per_element();
  const FluxKernel flux{spec_.p, eps};
  Eigen::VectorXd r = advection_ * u.coefficients() - advection_rhs_ - load_;

  for (int t = 0; t < mesh.num_elements(); ++t) {
    const ElementData& e = elements_[t];
    const Eigen::VectorXd gx = gradient_at_points(t, u, 0);
    const Eigen::VectorXd gy = gradient_at_points(t, u, 1);
    Eigen::VectorXd sx(gx.size()), sy(gx.size());
    for (Eigen::Index q = 0; q < gx.size(); ++q) {
      const Point s = flux.sigma(Point(gx[q], gy[q]));
      sx[q] = spec_.nu * e.weights[q] * s.x();
      sy[q] = spec_.nu * e.weights[q] * s.y();
    }
    const Eigen::VectorXd mx = e.values.transpose() * sx;
    const Eigen::VectorXd my = e.values.transpose() * sy;
    const auto& lg = e.gradient;
    const Eigen::VectorXd contrib =
        lg.matrix.topRows(nd).transpose() * mx + lg.matrix.bottomRows(nd).transpose() * my;
    for (std::size_t a = 0; a < lg.patch.size(); ++a) {
      r.segment(static_cast<Eigen::Index>(lg.patch[a]) * nd, nd) +=
          contrib.segment(static_cast<Eigen::Index>(a) * nd, nd);
    }
  }

  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const FaceData& fd = faces_[f];
    const Eigen::VectorXd jump = jump_at_points(f, u);
    Eigen::VectorXd s(jump.size());
    for (Eigen::Index q = 0; q < jump.size(); ++q) {
      s[q] = spec_.nu * fd.penalty * fd.weights[q] * flux.sigma1(jump[q]);
    }
    r.segment(static_cast<Eigen::Index>(face.elements[0]) * nd, nd) += fd.values[0].transpose() * s;
    if (!face.is_boundary()) {
      r.segment(static_cast<Eigen::Index>(face.elements[1]) * nd, nd) -=
          fd.values[1].transpose() * s;
    }
  }
  return r;
}

AssembledSystem assemble_picard_step(const ProblemSpec& spec, const BrokenSpace& space,
                                     const DiscreteField& u_prev, const FormOptions& options) {
  return Assembler(spec, space, options).picard_step(u_prev);
}

Eigen::VectorXd nonlinear_residual(const ProblemSpec& spec, const BrokenSpace& space,
                                   const DiscreteField& u, const FormOptions& options) {
  return Assembler(spec, space, options).residual(u);
}

}  // namespace prdg
