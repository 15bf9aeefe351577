#include <doctest.h>

#include <cmath>
#include <random>

#include "prdg/errors.hpp"
#include "prdg/forms.hpp"

using namespace prdg;

namespace {

Point beta1(const Point& x) {
  return {std::sin(x.x()) * std::cos(x.y()), -std::sin(x.y()) * std::cos(x.x())};
}

ProblemSpec advection_spec(double p, double nu) {
  ProblemSpec s;
  s.p = p;
  s.nu = nu;
  s.beta = beta1;
  s.mu = [](const Point&) { return 1.0; };
  s.f = [](const Point& x) { return std::cos(3 * x.x()) + x.y(); };
  s.g = [](const Point& x) { return std::sin(x.x() + 0.1) * std::cos(x.y() + 0.1); };
  return s;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1, 1);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

double relative(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("power flux") {
  const FluxKernel linear{2.0, 0.0};
  CHECK(linear.sigma({0.3, -2.0}) == Point(0.3, -2.0));
  const FluxKernel cubic{3.0, 0.0};
  const Point s = cubic.sigma({3.0, 4.0});
  CHECK(s.x() == doctest::Approx(15.0));
  CHECK(s.y() == doctest::Approx(20.0));
  const FluxKernel singular{1.5, 0.0};
  CHECK(singular.sigma(Point::Zero()) == Point::Zero());
  CHECK(singular.sigma1(0.0) == 0.0);
  CHECK(singular.sigma1(-4.0) == doctest::Approx(-2.0));
  CHECK(std::isinf(singular.coefficient(0.0)));
  const FluxKernel regular{1.5, 1e-8};
  CHECK(std::isfinite(regular.coefficient(0.0)));
  CHECK(regular.coefficient(0.0) == doctest::Approx(1e4));
}

TEST_CASE("a_h at p = 2 is the squared discrete gradient plus the jump seminorm") {
  const Mesh mesh = build_structured(3);
  std::mt19937_64 rng(1);
  for (int k = 1; k <= 3; ++k) {
    const BrokenSpace space(mesh, k);
    ProblemSpec spec;
    spec.p = 2.0;
    spec.nu = 0.7;
    const DiscreteField v(space, random_vector(space.num_dofs(), rng));
    const FormOptions options{1.5, 0.0};
    // Orthonormal basis: the L2 norm of G_h v is the Euclidean norm of its
    // coefficients.
    const DiscreteVectorField g = discrete_gradient(v);
    double jumps = 0.0;
    const QuadratureRule& rule = edge_rule(2 * k);
    for (int f = 0; f < mesh.num_faces(); ++f) {
      const FaceTrace tr = jump_avg(v, f, rule);
      jumps += tr.weights.dot(tr.jump.cwiseAbs2()) / mesh.face(f).diameter;
    }
    const double expected = 0.7 * (g.x.squaredNorm() + g.y.squaredNorm() + 1.5 * jumps);
    CHECK(relative(eval_a_h(spec, space, v, v, options), expected) <= 1e-12);
    CHECK(eval_a_h(spec, space, DiscreteField(space), DiscreteField(space), options) == 0.0);
  }
}

TEST_CASE("a_h is monotone") {
  const Mesh mesh = build_structured(2);
  const BrokenSpace space(mesh, 2);
  std::mt19937_64 rng(2);
  for (double p : {1.5, 3.0}) {
    ProblemSpec spec;
    spec.p = p;
    spec.g = [](const Point& x) { return x.x() - x.y() * x.y(); };
    int violations = 0;
    for (int sample = 0; sample < 200; ++sample) {
      const DiscreteField w(space, random_vector(space.num_dofs(), rng));
      const DiscreteField v(space, random_vector(space.num_dofs(), rng));
      const DiscreteField diff(space, w.coefficients() - v.coefficients());
      const double value = eval_a_h(spec, space, w, diff) - eval_a_h(spec, space, v, diff);
      if (value < -1e-12) ++violations;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("b_h(v, v) equals the advection-reaction norm") {
  std::mt19937_64 rng(3);
  for (int n : {3, 6}) {
    const Mesh mesh = build_structured(n);
    for (int k = 1; k <= 3; ++k) {
      const BrokenSpace space(mesh, k);
      ProblemSpec spec = advection_spec(2.0, 1.0);
      spec.g = {};
      const Assembler assembler(spec, space);
      for (int sample = 0; sample < 5; ++sample) {
        const DiscreteField v(space, random_vector(space.num_dofs(), rng));
        // The identity is exact up to the quadrature of the sin/cos field.
        const double norm2 = betamu_norm_squared(spec, space, v, kMaxQuadratureDegree);
        CHECK(relative(eval_b_h(spec, space, v, v, kMaxQuadratureDegree), norm2) <= 1e-10);
        const double matrix_form =
            v.coefficients().dot(assembler.advection_matrix() * v.coefficients());
        CHECK(relative(matrix_form, betamu_norm_squared(spec, space, v)) <= 1e-8);
        CHECK(relative(matrix_form, eval_b_h(spec, space, v, v)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("b_h with beta = 0 and mu = 1 is the mass form") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 2);
  ProblemSpec spec;
  spec.mu = [](const Point&) { return 1.0; };
  std::mt19937_64 rng(4);
  const DiscreteField w(space, random_vector(space.num_dofs(), rng));
  const DiscreteField v(space, random_vector(space.num_dofs(), rng));
  CHECK(relative(eval_b_h(spec, space, w, v), w.coefficients().dot(v.coefficients())) <= 1e-12);
}

TEST_CASE("b_h is consistent for a constant state matching the boundary data") {
  // With w = g = 1 and mu = 0, every term of b_h(1, v) is an exact
  // integration by parts of (beta . grad 1, v) = 0: the boundary faces
  // contribute exactly the boundary flux of beta v.
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 2);
  ProblemSpec spec;
  spec.beta = beta1;
  spec.g = [](const Point&) { return 1.0; };
  std::mt19937_64 rng(5);
  const DiscreteField one = l2_project([](const Point&) { return 1.0; }, space);
  const DiscreteField v(space, random_vector(space.num_dofs(), rng));

  const QuadratureRule& erule = edge_rule(space.quadrature_degree());
  double boundary_flux = 0.0, scale = 0.0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (!face.is_boundary()) continue;
    const FaceTrace tv = jump_avg(v, f, erule);
    for (int q = 0; q < erule.size(); ++q) {
      boundary_flux += tv.weights[q] * beta1(tv.points[q]).dot(face.normal) * tv.jump[q];
      scale += tv.weights[q] * std::abs(tv.jump[q]);
    }
  }
  // Volume part by direct quadrature: -(1, beta . grad v).
  double volume = 0.0;
  const QuadratureRule& trule = triangle_rule(space.quadrature_degree());
  for (int t = 0; t < mesh.num_elements(); ++t) {
    std::vector<Point> pts;
    Eigen::VectorXd w;
    space.element_quadrature(t, trule, pts, w);
    for (int q = 0; q < trule.size(); ++q) volume -= w[q] * beta1(pts[q]).dot(v.gradient(t, pts[q]));
  }
  double interior = 0.0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    if (face.is_boundary()) continue;
    const FaceTrace tv = jump_avg(v, f, erule);
    for (int q = 0; q < erule.size(); ++q) {
      interior += tv.weights[q] * beta1(tv.points[q]).dot(face.normal) * tv.jump[q];
    }
  }
  const double total = eval_b_h(spec, space, one, v);
  CHECK(std::abs(total - (volume + interior + boundary_flux)) <= 1e-12 * scale);
  CHECK(std::abs(total) <= 1e-10 * scale);
}

TEST_CASE("assembled residual matches the functional forms") {
  const Mesh mesh = build_structured(3);
  std::mt19937_64 rng(6);
  for (double p : {1.5, 2.0, 3.0}) {
    for (int k = 1; k <= 2; ++k) {
      const BrokenSpace space(mesh, k);
      const ProblemSpec spec = advection_spec(p, 0.3);
      const FormOptions options{2.0, 1e-8};
      const Assembler assembler(spec, space, options);
      const DiscreteField u(space, random_vector(space.num_dofs(), rng));
      const Eigen::VectorXd r = assembler.residual(u);
      for (int sample = 0; sample < 3; ++sample) {
        const DiscreteField v(space, random_vector(space.num_dofs(), rng));
        const double functional = eval_a_h(spec, space, u, v, options) +
                                  eval_b_h(spec, space, u, v) -
                                  assembler.load().dot(v.coefficients());
        CHECK(std::abs(r.dot(v.coefficients()) - functional) <=
              1e-11 * std::max(1.0, std::abs(functional)));
      }
      // Load by direct quadrature against one basis function.
      const DiscreteField e0(space, Eigen::VectorXd::Unit(space.num_dofs(), 2));
      double direct = 0.0;
      const QuadratureRule& trule = triangle_rule(space.quadrature_degree());
      std::vector<Point> pts;
      Eigen::VectorXd w;
      space.element_quadrature(0, trule, pts, w);
      for (int q = 0; q < trule.size(); ++q) direct += w[q] * spec.f(pts[q]) * e0.value(0, pts[q]);
      CHECK(assembler.load()[2] == doctest::Approx(direct).epsilon(1e-13));
    }
  }
}

TEST_CASE("Picard system reproduces the residual at its own linearization point") {
  const Mesh mesh = build_structured(3);
  std::mt19937_64 rng(7);
  for (double p : {1.5, 2.0, 3.0}) {
    const BrokenSpace space(mesh, 2);
    const ProblemSpec spec = advection_spec(p, 0.5);
    const Assembler assembler(spec, space, FormOptions{1.0, 0.0});
    const DiscreteField u(space, random_vector(space.num_dofs(), rng));
    const AssembledSystem sys = assembler.picard_step(u);
    const Eigen::VectorXd defect = sys.matrix * u.coefficients() - sys.rhs;
    const Eigen::VectorXd r = assembler.residual(u);
    CHECK((defect - r).norm() <= 1e-11 * std::max(1.0, r.norm()));
  }
}

TEST_CASE("p = 2 Picard matrix is independent of the previous iterate") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 1);
  const ProblemSpec spec = advection_spec(2.0, 1.0);
  const Assembler assembler(spec, space);
  std::mt19937_64 rng(8);
  const AssembledSystem a = assembler.picard_step(DiscreteField(space));
  const AssembledSystem b =
      assembler.picard_step(DiscreteField(space, random_vector(space.num_dofs(), rng)));
  const double scale = Eigen::Map<const Eigen::VectorXd>(a.matrix.valuePtr(), a.matrix.nonZeros())
                           .cwiseAbs()
                           .maxCoeff();
  CHECK((Eigen::SparseMatrix<double>(a.matrix - b.matrix)).norm() <= 1e-14 * scale * a.matrix.rows());
  CHECK((a.rhs - b.rhs).norm() <= 1e-12 * a.rhs.norm());
  // Residual is affine in u at p = 2.
  const DiscreteField u(space, random_vector(space.num_dofs(), rng));
  const DiscreteField two_u(space, 2.0 * u.coefficients());
  const Eigen::VectorXd r0 = assembler.residual(DiscreteField(space));
  const Eigen::VectorXd r1 = assembler.residual(u);
  const Eigen::VectorXd r2 = assembler.residual(two_u);
  CHECK((r2 - r0 - 2.0 * (r1 - r0)).norm() <= 1e-11 * r1.norm());
}

TEST_CASE("pure diffusion matrix is symmetric") {
  const Mesh mesh = build_structured(3);
  for (double p : {1.5, 3.0}) {
    const BrokenSpace space(mesh, 2);
    ProblemSpec spec;
    spec.p = p;
    spec.mu = [](const Point& x) { return 1.0 + x.x(); };
    spec.g = [](const Point& x) { return x.x() * x.y(); };
    const Assembler assembler(spec, space);
    std::mt19937_64 rng(9);
    const AssembledSystem sys =
        assembler.picard_step(DiscreteField(space, random_vector(space.num_dofs(), rng)));
    const Eigen::SparseMatrix<double> a = sys.matrix;
    const Eigen::SparseMatrix<double> at = a.transpose();
    CHECK((a - at).norm() <= 1e-12 * a.norm());
  }
}

TEST_CASE("zero data keeps the zero solution") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 2);
  ProblemSpec spec;
  spec.p = 1.5;
  spec.beta = beta1;
  spec.mu = [](const Point&) { return 1.0; };
  spec.f = [](const Point& x) { return 0.0 * x.x(); };
  const Assembler assembler(spec, space);
  const DiscreteField zero(space);
  CHECK(assembler.residual(zero).norm() == 0.0);
  const AssembledSystem sys = assembler.picard_step(zero);
  CHECK(sys.rhs.norm() == 0.0);
}

TEST_CASE("assembly is bitwise reproducible") {
  const Mesh mesh = build_structured(4);
  const BrokenSpace space(mesh, 2);
  const ProblemSpec spec = advection_spec(1.75, 1e-2);
  std::mt19937_64 rng(10);
  const DiscreteField u(space, random_vector(space.num_dofs(), rng));
  const AssembledSystem a = Assembler(spec, space).picard_step(u);
  const AssembledSystem b = Assembler(spec, space).picard_step(u);
  CHECK(std::equal(a.matrix.valuePtr(), a.matrix.valuePtr() + a.matrix.nonZeros(),
                   b.matrix.valuePtr()));
  CHECK(a.rhs == b.rhs);
}

TEST_CASE("block pattern") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 1);
  const BlockPattern pattern(space);
  for (int a = 0; a < mesh.num_elements(); ++a) {
    const auto& nb = pattern.neighbours(a);
    CHECK(std::is_sorted(nb.begin(), nb.end()));
    CHECK(std::find(nb.begin(), nb.end(), a) != nb.end());
    CHECK(nb.size() <= 10);
    for (int b : nb) {
      const auto& back = pattern.neighbours(b);
      CHECK(std::find(back.begin(), back.end(), a) != back.end());
    }
  }
  const SparseMatrix m = pattern.make_matrix();
  CHECK(m.nonZeros() == pattern.nonzeros());
  CHECK(m.isCompressed());
}

TEST_CASE("frozen coefficients must be finite") {
  const Mesh mesh = build_structured(2);
  const BrokenSpace space(mesh, 1);
  ProblemSpec spec;
  spec.p = 1.5;
  const Assembler assembler(spec, space, FormOptions{1.0, 0.0});
  CHECK_THROWS_AS(assembler.picard_step(DiscreteField(space)), NonFiniteValue);
}

TEST_CASE("load vector is graded towards singular lines") {
  // Crossing (odd n) and aligned (even n) meshes, vertical and diagonal lines.
  //   int |x - 1/2|^{-1/2} (1 + y) = 3 sqrt 2,   int x |x - 1/2|^{-1/2} (1 + y) = 3 / sqrt 2,
  //   int |x + y - 1|^{-1/2} = 2 int_0^1 v^{-1/2} (1 - v) dv = 8/3.
  for (int n : {3, 4}) {
    const Mesh mesh = build_structured(n);
    const BrokenSpace space(mesh, 2);
    const Eigen::VectorXd one = l2_project([](const Point&) { return 1.0; }, space).coefficients();
    const Eigen::VectorXd x = l2_project([](const Point& y) { return y.x(); }, space).coefficients();

    ProblemSpec vertical;
    vertical.f = [](const Point& y) { return (1.0 + y.y()) / std::sqrt(std::abs(y.x() - 0.5)); };
    vertical.singular_lines = {{Point(1.0, 0.0), 0.5}};
    // Elements next to the touching ones keep the plain rule; with the
    // singularity one cell away their relative error is ~1e-8 at k = 2.
    const Assembler a(vertical, space);
    CHECK(a.load().dot(one) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-6));
    CHECK(a.load().dot(x) == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-6));
    ProblemSpec plain = vertical;
    plain.singular_lines.clear();
    const double off = std::abs(Assembler(plain, space).load().dot(one) / (3.0 * std::sqrt(2.0)) - 1.0);
    CHECK(off > 1e-4);

    ProblemSpec diagonal;
    diagonal.f = [](const Point& y) { return 1.0 / std::sqrt(std::abs(y.x() + y.y() - 1.0)); };
    diagonal.singular_lines = {{Point(1.0, 1.0) / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}};
    CHECK(Assembler(diagonal, space).load().dot(one) == doctest::Approx(8.0 / 3.0).epsilon(1e-6));
  }
}
