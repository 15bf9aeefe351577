#pragma once

#include <utility>
#include <vector>

#include "prdg/forms.hpp"

namespace prdg {

/// Error of a discrete solution against the exact one.
///   norm_1ph^p = ||grad_h(u - u_h)||_{L^p}^p + jump_seminorm^p,
///   jump_seminorm^p = sum_F h_F^{1-p} ||[u - u_h]||_{L^p(F)}^p,
///   err_total^2 = nu norm_1ph^q + norm_betamu^2,  q = 2 if p < 2 else p.
/// On boundary faces the jump of u - u_h is its trace.
struct ErrorBreakdown {
  double norm_1ph = 0.0;
  double gradient_norm = 0.0;
  double jump_seminorm = 0.0;
  double norm_betamu = 0.0;
  double err_total = 0.0;
  double q = 2.0;
};

/// Throws MissingExact when spec.exact is empty. quad_degree < 0 selects
/// space.quadrature_degree().
ErrorBreakdown error_norms(const ProblemSpec& spec, const DiscreteField& uh, int quad_degree = -1);

/// Local Peclet numbers of a smooth field w (usually the exact solution).
/// Suprema are maxima over quadrature points of degree 2k + 4 and vertices.
/// The diffusivity entering Pe is nu d_ref; Pe = 0 when the reference
/// velocity vanishes or d_ref is unbounded (sampled value above 1e30).
struct PecletReport {
  std::vector<double> element_pe, element_velocity, element_dref, reference_time, mu_lower;
  std::vector<double> face_pe, face_velocity, face_dref;
  std::vector<bool> element_advective, face_advective;

  int num_advective_elements() const;
  int num_advective_faces() const;
  double pct_advective_elements() const;
};

PecletReport peclet_classify(const ProblemSpec& spec, const BrokenSpace& space,
                             const AnalyticField& w);

/// Rates log(E2 / E1) / log(h2 / h1) for consecutive (h, E) pairs. Throws
/// DegenerateInput on nonpositive errors or non-decreasing mesh sizes.
std::vector<double> convergence_rates(const std::vector<std::pair<double, double>>& points);

}  // namespace prdg
