#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "prdg/errors.hpp"
#include "prdg/space.hpp"

using namespace prdg;

namespace {

double smooth(const Point& p) { return std::sin(p.x() + 0.1) * std::cos(p.y() + 0.1); }

}  // namespace

TEST_CASE("element mass matrices are the identity") {
  const Mesh mesh = refine_uniform(build_structured(3));
  for (int k = 0; k <= 4; ++k) {
    const BrokenSpace space(mesh, k);
    CHECK(space.dofs_per_element() == (k + 1) * (k + 2) / 2);
    CHECK(space.num_dofs() == mesh.num_elements() * space.dofs_per_element());
    for (int t = 0; t < mesh.num_elements(); t += 7) {
      const ElementTabulation tab = space.tabulate_element(t, triangle_rule(2 * k));
      const Eigen::MatrixXd mass = tab.values.transpose() * tab.weights.asDiagonal() * tab.values;
      CHECK((mass - Eigen::MatrixXd::Identity(mass.rows(), mass.cols())).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
}

TEST_CASE("projection reproduces polynomials of degree <= k") {
  const Mesh mesh = build_structured(3);
  for (int k = 1; k <= 3; ++k) {
    const BrokenSpace space(mesh, k);
    const DiscreteField one = l2_project([](const Point&) { return 1.0; }, space);
    auto poly = [k](const Point& p) { return 0.3 + p.x() - 2 * std::pow(p.y(), k) + p.x() * std::pow(p.y(), k - 1); };
    const DiscreteField pk = l2_project(poly, space);
    for (int t = 0; t < mesh.num_elements(); ++t) {
      for (const auto& ref : {Eigen::Vector2d(0.2, 0.3), Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0)}) {
        const Point x = space.map_to_physical(t, ref);
        CHECK(std::abs(one.value(t, x) - 1.0) <= 1e-13);
        CHECK(std::abs(pk.value(t, x) - poly(x)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("evaluation of fields") {
  const Mesh mesh = build_structured(2);
  const BrokenSpace space(mesh, 2);
  const DiscreteField zero(space);
  CHECK(zero.value(3, mesh.centroid(3)) == 0.0);
  CHECK(zero.gradient(3, mesh.centroid(3)) == Point::Zero());

  const DiscreteField linear = l2_project([](const Point& p) { return p.x(); }, space);
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const Point g = linear.gradient(t, space.map_to_physical(t, {0.1, 0.6}));
    CHECK(std::abs(g.x() - 1.0) <= 1e-12);
    CHECK(std::abs(g.y()) <= 1e-12);
  }

  // Broken fields may differ across a shared vertex.
  const BrokenSpace p1(mesh, 1);
  DiscreteField v(p1);
  v.local(0)[0] = 1.0;
  const int shared = mesh.element(0)[0];
  int other = -1;
  for (int t = 1; t < mesh.num_elements(); ++t) {
    const auto& tri = mesh.element(t);
    if (std::find(tri.begin(), tri.end(), shared) != tri.end()) other = t;
  }
  REQUIRE(other >= 0);
  CHECK(v.value(0, mesh.vertex(shared)) != doctest::Approx(v.value(other, mesh.vertex(shared))));
}

TEST_CASE("projection is idempotent") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 3);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1, 1);
  Eigen::VectorXd c(space.num_dofs());
  for (auto& x : c) x = dist(rng);
  const DiscreteField v(space, c);
  const DiscreteField again = l2_project_elementwise(
      [&](int t, const Point& x) { return v.value(t, x); }, space);
  CHECK((again.coefficients() - c).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gradient agrees with central differences") {
  const Mesh mesh = build_structured(2);
  const BrokenSpace space(mesh, 3);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1, 1);
  Eigen::VectorXd c(space.num_dofs());
  for (auto& x : c) x = dist(rng);
  const DiscreteField v(space, c);
  const double step = 1e-6;
  for (int t = 0; t < mesh.num_elements(); ++t) {
    const Point x = space.map_to_physical(t, {0.25, 0.35});
    const Point g = v.gradient(t, x);
    const Point fd{(v.value(t, x + Point(step, 0)) - v.value(t, x - Point(step, 0))) / (2 * step),
                   (v.value(t, x + Point(0, step)) - v.value(t, x - Point(0, step))) / (2 * step)};
    CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("L2 projection error converges at rate k + 1") {
  Mesh mesh = build_structured(3);
  std::vector<double> errors, hs;
  for (int level = 0; level < 4; ++level) {
    const BrokenSpace space(mesh, 2);
    errors.push_back(lp_error(smooth, l2_project(smooth, space), 2.0));
    hs.push_back(mesh.h_max());
    mesh = refine_uniform(mesh);
  }
  const double rate = std::log(errors[3] / errors[2]) / std::log(hs[3] / hs[2]);
  CHECK(rate == doctest::Approx(3.0).epsilon(0.1 / 3.0));
}

TEST_CASE("field serialization") {
  const Mesh mesh = build_structured(2);
  const BrokenSpace space(mesh, 2);
  const DiscreteField v = l2_project(smooth, space);
  std::stringstream ss;
  write_field(ss, v);
  const DiscreteField back = read_field(ss, space);
  CHECK(back.coefficients() == v.coefficients());

  const BrokenSpace other(mesh, 1);
  std::stringstream again;
  write_field(again, v);
  CHECK_THROWS_AS(read_field(again, other), ParseError);
}

TEST_CASE("analytic field gradient fallback") {
  AnalyticField f{smooth, {}};
  CHECK_FALSE(f.has_exact_gradient());
  const Point x(0.3, 0.7);
  const Point exact(std::cos(0.4) * std::cos(0.8), -std::sin(0.4) * std::sin(0.8));
  CHECK((f.grad(x) - exact).norm() < 1e-8);
}
