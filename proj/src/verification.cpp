#include "prdg/verification.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace prdg {

bool SampleReport::passed() const {
  if (violations != 0) return false;
  if (!std::isfinite(worst_ratio)) return false;
  if (threshold > 0.0) return worst_ratio <= threshold;
  return true;
}

SampleRng::SampleRng(std::uint64_t seed) : engine_(seed) {}

double SampleRng::uniform(double lo, double hi) {
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

Point SampleRng::point(double lo, double hi) {
  const double x = uniform(lo, hi);
  return {x, uniform(lo, hi)};
}

Eigen::VectorXd SampleRng::vector(Eigen::Index n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (auto& x : v) x = uniform(lo, hi);
  return v;
}

namespace {

Point flux(const Point& x, double p) {
  const double n = x.norm();
  return n == 0.0 ? Point::Zero() : Point(std::pow(n, p - 2.0) * x);
}

}  // namespace

SampleReport check_hirn_bound(double p, double delta, long n_samples, std::uint64_t seed) {
  SampleReport r;
  r.name = "hirn";
  r.p = p;
  r.delta = delta;
  r.worst_ratio = -std::numeric_limits<double>::infinity();
  SampleRng rng(seed);
  for (long i = 0; i < n_samples; ++i) {
    const Point x = rng.point(-10, 10), y = rng.point(-10, 10), z = rng.point(-10, 10);
    ++r.samples;
    const double den = std::pow(x.norm() + z.norm(), p - 2.0) * (x - z).squaredNorm();
    if (!(den > 0.0)) {
      ++r.skipped;
      continue;
    }
    const double num = (flux(x, p) - flux(z, p)).dot(x - y) -
                       delta * (flux(y, p) - flux(x, p)).dot(y - x);
    const double ratio = num / den;
    if (!std::isfinite(ratio)) {
      ++r.violations;
      continue;
    }
    r.worst_ratio = std::max(r.worst_ratio, ratio);
  }
  return r;
}

double phi_integral(double a, double t, double p) {
  if (t <= 0.0) return 0.0;
  auto integrand = [a, p](double s) { return s == 0.0 && a == 0.0 ? 0.0 : std::pow(a + s, p - 2.0) * s; };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t, 15, 1e-13);
}

SampleReport check_equivalences(double p, long n_samples, std::uint64_t seed) {
  SampleReport r;
  r.name = "equivalence";
  r.p = p;
  r.worst_ratio = 0.0;
  r.min_ratio = std::numeric_limits<double>::infinity();
  SampleRng rng(seed);
  for (long i = 0; i < n_samples; ++i) {
    const Point x = rng.point(-10, 10), y = rng.point(-10, 10);
    ++r.samples;
    const double t = (x - y).norm();
    const double outer = std::pow(x.norm() + y.norm(), p - 2.0) * t * t;
    const double middle = phi_integral(x.norm(), t, p);
    if (!(outer > 0.0) || !(middle > 0.0)) {
      ++r.skipped;
      continue;
    }
    const double lhs = (flux(y, p) - flux(x, p)).dot(y - x);
    for (double ratio : {lhs / outer, lhs / middle}) {
      if (!std::isfinite(ratio) || !(ratio > 0.0)) {
        ++r.violations;
        continue;
      }
      r.worst_ratio = std::max(r.worst_ratio, ratio);
      r.min_ratio = std::min(r.min_ratio, ratio);
    }
  }
  return r;
}

SampleReport check_coercivity(const ProblemSpec& spec, const BrokenSpace& space, int n_fields,
                              std::uint64_t seed) {
  ProblemSpec homogeneous = spec;
  homogeneous.g = {};
  SampleReport r;
  r.name = "coercivity";
  r.threshold = 1e-10;
  SampleRng rng(seed);
  for (int i = 0; i < n_fields; ++i) {
    const DiscreteField v(space, rng.vector(space.num_dofs(), -1, 1));
    ++r.samples;
    // Highest available exactness: the identity is exact up to the
    // quadrature of non-polynomial coefficients.
    const double norm2 = betamu_norm_squared(homogeneous, space, v, kMaxQuadratureDegree);
    if (!(norm2 > 0.0)) {
      ++r.skipped;
      continue;
    }
    const double defect =
        std::abs(eval_b_h(homogeneous, space, v, v, kMaxQuadratureDegree) - norm2) / norm2;
    if (!(defect <= r.threshold)) ++r.violations;
    r.worst_ratio = std::max(r.worst_ratio, defect);
  }
  return r;
}

SampleReport check_lifting(const BrokenSpace& space, std::uint64_t seed) {
  const Mesh& mesh = space.mesh();
  const int nd = space.dofs_per_element();
  const QuadratureRule& erule = edge_rule(space.quadrature_degree());
  const QuadratureRule& trule = triangle_rule(2 * space.degree());
  SampleReport r;
  r.name = "lifting";
  r.threshold = 1e-12;
  SampleRng rng(seed);
  const DiscreteField v(space, rng.vector(space.num_dofs(), -1, 1));
  std::vector<ElementTabulation> tabs;
  for (int t = 0; t < mesh.num_elements(); ++t) tabs.push_back(space.tabulate_element(t, trule));
  Eigen::VectorXd phi(nd);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const FaceTrace tr = jump_avg(v, f, erule);
    const LiftedField lifted = lift_face(space, f, erule, tr.jump);
    const double scale = std::max(1.0, tr.jump.cwiseAbs().maxCoeff());
    const double avg_weight = face.is_boundary() ? 1.0 : 0.5;
    for (int t = 0; t < mesh.num_elements(); ++t) {
      // (r_F psi, tau)_T for tau = phi_i e_d, by volume quadrature of the
      // evaluated lifting.
      const ElementTabulation& tab = tabs[t];
      Eigen::VectorXd rx(trule.size()), ry(trule.size());
      for (int q = 0; q < trule.size(); ++q) {
        const Point val = lifted.field.value(t, tab.points[q]);
        rx[q] = tab.weights[q] * val.x();
        ry[q] = tab.weights[q] * val.y();
      }
      Eigen::VectorXd dx = tab.values.transpose() * rx;
      Eigen::VectorXd dy = tab.values.transpose() * ry;
      // (psi, {tau} . n_F)_F.
      if (t == face.elements[0] || t == face.elements[1]) {
        for (int q = 0; q < erule.size(); ++q) {
          space.basis_values(t, tr.points[q], phi);
          const double c = tr.weights[q] * tr.jump[q] * avg_weight;
          dx -= c * face.normal.x() * phi;
          dy -= c * face.normal.y() * phi;
        }
      }
      for (int i = 0; i < nd; ++i) {
        for (double d : {dx[i], dy[i]}) {
          ++r.samples;
          const double defect = std::abs(d) / scale;
          if (!(defect <= r.threshold)) ++r.violations;
          r.worst_ratio = std::max(r.worst_ratio, defect);
        }
      }
    }
  }
  return r;
}

SampleReport check_ibp(const BrokenSpace& space, int n_pairs, std::uint64_t seed) {
  // (tau, grad_h v) = -(div_h tau, v) + sum_F ({tau}.n [v] + [tau].n {v})_F
  // with [tau] = 0 on boundary faces.
  const Mesh& mesh = space.mesh();
  const int k = space.degree();
  const QuadratureRule& trule = triangle_rule(2 * k);
  const QuadratureRule& erule = edge_rule(2 * k);
  SampleReport r;
  r.name = "ibp";
  r.threshold = 1e-11;
  SampleRng rng(seed);
  for (int pair = 0; pair < n_pairs; ++pair) {
    const DiscreteField v(space, rng.vector(space.num_dofs(), -1, 1));
    const DiscreteField tx(space, rng.vector(space.num_dofs(), -1, 1));
    const DiscreteField ty(space, rng.vector(space.num_dofs(), -1, 1));
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    for (int t = 0; t < mesh.num_elements(); ++t) {
      const ElementTabulation tab = space.tabulate_element(t, trule);
      const Eigen::VectorXd vx = tab.dx * v.local(t), vy = tab.dy * v.local(t);
      const Eigen::VectorXd vq = tab.values * v.local(t);
      const Eigen::VectorXd txq = tab.values * tx.local(t), tyq = tab.values * ty.local(t);
      const Eigen::VectorXd div = tab.dx * tx.local(t) + tab.dy * ty.local(t);
      for (int q = 0; q < trule.size(); ++q) {
        const double term = txq[q] * vx[q] + tyq[q] * vy[q];
        lhs += tab.weights[q] * term;
        rhs -= tab.weights[q] * div[q] * vq[q];
        scale += tab.weights[q] * (std::abs(term) + std::abs(div[q] * vq[q]));
      }
    }
    for (int f = 0; f < mesh.num_faces(); ++f) {
      const Face& face = mesh.face(f);
      const FaceTrace jv = jump_avg(v, f, erule);
      const FaceTrace jx = jump_avg(tx, f, erule);
      const FaceTrace jy = jump_avg(ty, f, erule);
      for (int q = 0; q < erule.size(); ++q) {
        double term = (jx.average[q] * face.normal.x() + jy.average[q] * face.normal.y()) * jv.jump[q];
        if (!face.is_boundary()) {
          term += (jx.jump[q] * face.normal.x() + jy.jump[q] * face.normal.y()) * jv.average[q];
        }
        rhs += jv.weights[q] * term;
        scale += jv.weights[q] * std::abs(term);
      }
    }
    ++r.samples;
    const double defect = std::abs(lhs - rhs) / std::max(scale, std::numeric_limits<double>::min());
    if (!(defect <= r.threshold)) ++r.violations;
    r.worst_ratio = std::max(r.worst_ratio, defect);
  }
  return r;
}

std::string format_reports(const std::vector<SampleReport>& reports, bool csv) {
  std::ostringstream out;
  char line[256];
  if (csv) {
    out << "name,p,delta,samples,worst_ratio,violations\n";
    for (const auto& r : reports) {
      std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%ld,%.17g,%ld\n", r.name.c_str(), r.p,
                    r.delta, r.samples, r.worst_ratio, r.violations);
      out << line;
    }
    return out.str();
  }
  std::snprintf(line, sizeof line, "%-12s %5s %5s %9s %8s %13s %13s %6s %s\n", "suite", "p", "delta",
                "samples", "skipped", "worst", "min", "viol", "result");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-12s %5.2f %5.2f %9ld %8ld %13.6e %13.6e %6ld %s\n",
                  r.name.c_str(), r.p, r.delta, r.samples, r.skipped, r.worst_ratio, r.min_ratio,
                  r.violations, r.passed() ? "PASS" : "FAIL");
    out << line;
  }
  return out.str();
}

}  // namespace prdg
