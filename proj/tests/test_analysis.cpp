#include <doctest.h>

#include <cmath>

#include "prdg/analysis.hpp"
#include "prdg/errors.hpp"
#include "prdg/harness.hpp"

using namespace prdg;

namespace {

ProblemSpec linear_exact(double p) {
  ProblemSpec s;
  s.p = p;
  s.mu = [](const Point&) { return 1.0; };
  s.exact = AnalyticField{[](const Point& x) { return x.x(); },
                          [](const Point&) { return Point(1.0, 0.0); }};
  return s;
}

}  // namespace

TEST_CASE("convergence rates") {
  const auto r = convergence_rates({{0.5, 1.0}, {0.25, 0.25}, {0.125, 0.0625}});
  REQUIRE(r.size() == 2);
  CHECK(r[0] == doctest::Approx(2.0));
  CHECK(r[1] == doctest::Approx(2.0));

  std::vector<std::pair<double, double>> pts;
  for (double h : {0.4, 0.2, 0.1, 0.05}) pts.emplace_back(h, 3.7 * std::pow(h, 1.3));
  for (double rate : convergence_rates(pts)) CHECK(rate == doctest::Approx(1.3).epsilon(1e-12));

  CHECK(convergence_rates({{0.5, 1.0}}).empty());
  CHECK_THROWS_AS(convergence_rates({{0.5, 1.0}, {0.25, 0.0}}), DegenerateInput);
  CHECK_THROWS_AS(convergence_rates({{0.5, 1.0}, {0.5, 0.5}}), DegenerateInput);
}

TEST_CASE("error norms vanish on the exact solution") {
  const Mesh mesh = build_structured(3);
  for (double p : {1.5, 2.0, 3.0}) {
    const ProblemSpec spec = linear_exact(p);
    const BrokenSpace space(mesh, 1);
    const ErrorBreakdown e = error_norms(spec, l2_project(spec.exact->value, space));
    CHECK(e.err_total < 1e-12);
    CHECK(e.q == (p < 2.0 ? 2.0 : p));
  }
}

TEST_CASE("error norms of the zero field against u = x") {
  // grad: int |(1, 0)|^p = 1. Boundary traces of u: 0 on x = 0, 1 on x = 1,
  // x on y = 0 and y = 1; with n faces of length 1/n per side,
  //   sum h^{1-p} int |u|^p = n^{p-1} (1 + 2/(p + 1)).
  // ||u||_{L2}^2 = 1/3.
  for (int n : {2, 3}) {
    const Mesh mesh = build_structured(n);
    const BrokenSpace space(mesh, 2);
    for (double p : {1.5, 2.0, 3.0}) {
      ProblemSpec spec = linear_exact(p);
      spec.nu = 0.5;
      const ErrorBreakdown e = error_norms(spec, DiscreteField(space));
      const double jump = std::pow(n, p - 1.0) * (1.0 + 2.0 / (p + 1.0));
      // |x|^p on the faces is integrated exactly only for integer p.
      const double tol = p == std::floor(p) ? 1e-12 : 1e-5;
      CHECK(e.gradient_norm == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::pow(e.jump_seminorm, p) == doctest::Approx(jump).epsilon(tol));
      CHECK(std::pow(e.norm_1ph, p) == doctest::Approx(1.0 + jump).epsilon(tol));
      CHECK(e.norm_betamu * e.norm_betamu == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
      const double q = p < 2.0 ? 2.0 : p;
      CHECK(e.err_total * e.err_total ==
            doctest::Approx(0.5 * std::pow(e.norm_1ph, q) + 1.0 / 3.0).epsilon(tol));
    }
  }
}

TEST_CASE("beta-mu norm is homogeneous along u_h = (1 - t) u") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 1);
  ProblemSpec spec = linear_exact(2.0);
  spec.beta = [](const Point&) { return Point(1.0, 0.5); };
  const DiscreteField pu = l2_project(spec.exact->value, space);
  const double full = error_norms(spec, DiscreteField(space)).norm_betamu;
  for (double t : {0.1, 0.5, 0.9}) {
    const DiscreteField uh(space, (1.0 - t) * pu.coefficients());
    CHECK(error_norms(spec, uh).norm_betamu == doctest::Approx(t * full).epsilon(1e-10));
  }
}

TEST_CASE("error norms need the exact solution") {
  const Mesh mesh = build_structured(2);
  const BrokenSpace space(mesh, 1);
  ProblemSpec spec;
  CHECK_THROWS_AS(error_norms(spec, DiscreteField(space)), MissingExact);
}

TEST_CASE("no advection: every Peclet number vanishes") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 1);
  const ProblemSpec spec = example2(Example2Solution::polynomial, 1.5, 1);
  const PecletReport r = peclet_classify(spec, space, *spec.exact);
  for (double pe : r.element_pe) CHECK(pe == 0.0);
  for (double pe : r.face_pe) CHECK(pe == 0.0);
  CHECK(r.num_advective_elements() == 0);
  CHECK(r.num_advective_faces() == 0);
}

TEST_CASE("p = 2 gives unit reference diffusivity") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 2);
  const ProblemSpec spec = example1(2.0, 1.0);
  const PecletReport r = peclet_classify(spec, space, *spec.exact);
  for (double d : r.element_dref) CHECK(d == 1.0);
  for (double d : r.face_dref) CHECK(d == doctest::Approx(1.0));
}

TEST_CASE("example 1 regimes") {
  SUBCASE("nu = 1e-4 on n = 3: all elements advective") {
    const Mesh mesh = build_structured(3);
    const BrokenSpace space(mesh, 1);
    const ProblemSpec spec = example1(2.0, 1e-4);
    const PecletReport r = peclet_classify(spec, space, *spec.exact);
    CHECK(r.pct_advective_elements() == 100.0);
  }
  SUBCASE("nu = 1 on n = 48: all elements diffusive") {
    const Mesh mesh = build_structured(48);
    const BrokenSpace space(mesh, 1);
    const ProblemSpec spec = example1(2.0, 1.0);
    const PecletReport r = peclet_classify(spec, space, *spec.exact);
    CHECK(r.pct_advective_elements() == 0.0);
  }
}

TEST_CASE("Peclet partitions are complete and consistent") {
  const Mesh mesh = build_structured(6);
  const BrokenSpace space(mesh, 1);
  for (double nu : {1e-4, 1e-2, 1.0}) {
    const ProblemSpec spec = example1(1.5, nu);
    const PecletReport r = peclet_classify(spec, space, *spec.exact);
    REQUIRE(r.element_pe.size() == static_cast<std::size_t>(mesh.num_elements()));
    REQUIRE(r.face_pe.size() == static_cast<std::size_t>(mesh.num_faces()));
    for (int t = 0; t < mesh.num_elements(); ++t) {
      CHECK(r.element_advective[t] == (r.element_pe[t] > 1.0));
      // Direct evaluation: Pe_T = v_T h_T / (nu d_ref).
      CHECK(r.element_pe[t] == doctest::Approx(r.element_velocity[t] * mesh.element_diameter(t) /
                                               (nu * r.element_dref[t])));
    }
    for (int f = 0; f < mesh.num_faces(); ++f) CHECK(r.face_advective[f] == (r.face_pe[f] > 1.0));
  }
}
