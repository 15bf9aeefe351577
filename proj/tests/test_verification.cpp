#include <doctest.h>

#include <cmath>

#include "prdg/harness.hpp"
#include "prdg/verification.hpp"

using namespace prdg;

namespace {

// Closed form of phi_a(t) = int_0^t (a + s)^{p-2} s ds, substituting r = a + s.
double phi_closed(double a, double t, double p) {
  auto prim = [a, p](double r) { return std::pow(r, p) / p - a * std::pow(r, p - 1.0) / (p - 1.0); };
  return prim(a + t) - prim(a);
}

}  // namespace

TEST_CASE("sampler is seeded and in range") {
  SampleRng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.uniform(-10, 10);
    CHECK(x == b.uniform(-10, 10));
    CHECK(x >= -10.0);
    CHECK(x < 10.0);
    differs = differs || x != c.uniform(-10, 10);
  }
  CHECK(differs);
}

TEST_CASE("phi_a against its closed form") {
  for (double p : {1.5, 2.0, 3.0}) {
    for (double a : {0.0, 0.3, 4.0}) {
      for (double t : {0.01, 1.0, 7.5}) {
        CHECK(phi_integral(a, t, p) == doctest::Approx(phi_closed(a, t, p)).epsilon(1e-12));
      }
    }
    CHECK(phi_integral(1.0, 0.0, p) == 0.0);
  }
}

TEST_CASE("modified monotonicity bound") {
  for (double p : {1.5, 2.0, 3.0}) {
    const SampleReport r1 = check_hirn_bound(p, 0.1, 20000, 42);
    const SampleReport r2 = check_hirn_bound(p, 1.0, 20000, 42);
    CHECK(r1.passed());
    CHECK(r2.passed());
    CHECK(std::isfinite(r1.worst_ratio));
    CHECK(r1.samples == 20000);
    // The delta term is -delta (s(y) - s(x)).(y - x) <= 0 per sample, so the
    // worst ratio cannot grow with delta on the same samples.
    CHECK(r2.worst_ratio <= r1.worst_ratio);
    // Reproducible.
    CHECK(check_hirn_bound(p, 0.1, 20000, 42).worst_ratio == r1.worst_ratio);
  }
}

TEST_CASE("equivalences") {
  const SampleReport linear = check_equivalences(2.0, 5000, 7);
  // p = 2: (y - x).(y - x) = |x - y|^2 = 2 phi_a(|x - y|).
  CHECK(linear.passed());
  CHECK(linear.worst_ratio == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(linear.min_ratio == doctest::Approx(1.0).epsilon(1e-10));
  for (double p : {1.5, 3.0}) {
    const SampleReport r = check_equivalences(p, 20000, 7);
    CHECK(r.passed());
    CHECK(r.min_ratio > 0.0);
    CHECK(std::isfinite(r.worst_ratio));
  }
}

TEST_CASE("mesh suites pass on a small mesh") {
  const Mesh mesh = build_structured(3);
  const BrokenSpace space(mesh, 2);
  const SampleReport coercivity = check_coercivity(example1(2.0, 1.0), space, 10, 42);
  CHECK(coercivity.passed());
  CHECK(coercivity.samples == 10);
  CHECK(check_lifting(space, 42).passed());
  CHECK(check_ibp(space, 10, 42).passed());
}

TEST_CASE("report formatting") {
  SampleReport r;
  r.name = "hirn";
  r.p = 1.5;
  r.delta = 0.1;
  r.samples = 3;
  r.worst_ratio = 0.25;
  const std::string csv = format_reports({r}, true);
  CHECK(csv == "name,p,delta,samples,worst_ratio,violations\nhirn,1.5,0.10000000000000001,3,0.25,0\n");
  CHECK(format_reports({r}, false).find("PASS") != std::string::npos);
  r.violations = 1;
  CHECK(format_reports({r}, false).find("FAIL") != std::string::npos);
}
