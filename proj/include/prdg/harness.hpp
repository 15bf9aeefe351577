#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prdg/analysis.hpp"
#include "prdg/solver.hpp"

namespace prdg {

/// Smooth exact solution with its derivatives up to order two.
struct SmoothSolution {
  ScalarFunction value;
  VectorFunction gradient;
  Matrix2Function hessian;
};

/// div sigma(grad u) = |g|^{p-2} (lap u + (p-2) g^T H g / |g|^2), g = grad u,
/// taken as 0 where g = 0.
double flux_divergence(const SmoothSolution& u, double p, const Point& x);

/// Problem with f = -nu div sigma(grad u) + beta . grad u + mu u and g = u.
ProblemSpec manufactured_problem(const SmoothSolution& u, double p, double nu,
                                 VectorFunction beta = {}, Matrix2Function beta_jacobian = {},
                                 ScalarFunction mu = {});

enum class Example2Solution { exponential, polynomial };

/// u = sin(x + 0.1) cos(y + 0.1), beta = (sin x cos y, -sin y cos x), mu = 1.
ProblemSpec example1(double p, double nu);
SmoothSolution example1_solution();

/// Pure diffusion (beta = 0, mu = 0, nu = 1) with
///   exponential: u = exp(-10 (|x - 1/2|^a + |y - 1/2|^a)) / 10, a = p + (k + 2) / 4,
///   polynomial:  u = (x - 1/2)^2 (y - 1/2)^2.
ProblemSpec example2(Example2Solution solution, double p, int k);
SmoothSolution example2_solution(Example2Solution solution, double p, int k);

struct ExperimentPlan {
  int example = 1;
  std::string regime = "diffusion";   // example 1: diffusion (nu = 1) | advection (nu = 1e-4)
  std::string solution = "poly";      // example 2: exp | poly
  std::vector<double> ps;
  std::vector<int> ks;
  std::vector<int> ladder;            // structured meshes with n x n squares
  SolverConfig solver;

  void validate() const;
  /// Regime column of the report: the regime (example 1) or the solution (example 2).
  std::string label() const;
};

struct ConvergenceRow {
  int example = 1;
  std::string regime;
  double p = 2.0;
  int k = 1;
  double h = 0.0;
  long dofs = 0;
  int iterations = 0;
  bool converged = false;
  double err_total = 0.0;
  double norm_1ph = 0.0;
  double norm_betamu = 0.0;
  double pct_advective_elements = 0.0;
  std::optional<double> rate;

  bool operator==(const ConvergenceRow&) const = default;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;

  bool all_converged() const;
  bool operator==(const ConvergenceReport&) const = default;
};

/// One solve per (p, k, n) in plan order; rates are filled along each
/// (p, k) series. Solver failures are recorded as unconverged rows.
ConvergenceReport run_plan(const ExperimentPlan& plan,
                           const std::function<void(const ConvergenceRow&)>& progress = {});

/// Fills the rate column from consecutive rows of each series.
void fill_rates(ConvergenceReport& report);

enum class EmitFormat { csv, table, plotdata };

extern const char* const kCsvHeader;

std::string emit(const ConvergenceReport& report, EmitFormat format);
ConvergenceReport parse_csv(std::istream& in);

}  // namespace prdg
