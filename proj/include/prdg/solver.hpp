#pragma once

#include <memory>
#include <vector>

#include "prdg/forms.hpp"

namespace prdg {

enum class LinearSolverKind { direct, iterative };

/// Step of the nonlinear iteration: Newton on the regularized residual with
/// backtracking, or the frozen-coefficient (Kacanov) step. Both converge to
/// the same discrete solution; Kacanov contracts slowly for p < 2 and may
/// stall for p > 2.
enum class Linearization { newton, kacanov };

struct SolverConfig {
  int max_iters = 500;
  double rel_residual_tol = 1e-10;
  double eps_regularization = 1e-8;
  double penalty_eta = 1.0;
  LinearSolverKind linear_solver = LinearSolverKind::direct;
  double damping = 1.0;  // u <- u + damping (u_new - u)
  Linearization linearization = Linearization::newton;

  void validate() const;
};

struct SolveReport {
  int iterations = 0;                   // corrections after the initial guess
  std::vector<double> residual_history; // relative residuals, initial guess first
  bool converged = false;
  double wall_time = 0.0;               // seconds
  int factorizations = 0;
  int krylov_iterations = 0;
  // Set when the iteration stopped contracting at the rounding level of the
  // residual: perturbing the coefficients by one unit in the last place
  // changes the relative residual by about rounding_floor.
  bool stagnated = false;
  double rounding_floor = 0.0;

  double final_residual() const {
    return residual_history.empty() ? 0.0 : residual_history.back();
  }
};

struct LinearOptions {
  LinearSolverKind kind = LinearSolverKind::direct;
  bool symmetric = false;   // allows a Cholesky factorization
  int block_size = 1;       // block-Jacobi blocks of the iterative solver
  double tol = 1e-12;
  int max_krylov = 20000;
};

/// Sparse factorization: supernodal Cholesky (CHOLMOD) for symmetric
/// matrices, UMFPACK LU otherwise. Throws SingularMatrix on failure.
class Factorization {
 public:
  Factorization(const SparseMatrix& a, bool symmetric);
  ~Factorization();
  Factorization(const Factorization&) = delete;
  Factorization& operator=(const Factorization&) = delete;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Solves A x = b. The direct path factorizes and applies up to three steps
/// of iterative refinement towards ||Ax - b|| <= tol ||b||; the iterative path
/// runs BiCGSTAB with a block-Jacobi preconditioner and throws Breakdown when
/// the tolerance is not reached within max_krylov iterations.
Eigen::VectorXd solve_linear(const SparseMatrix& a, const Eigen::VectorXd& b,
                             const LinearOptions& options = {});

struct PicardResult {
  DiscreteField solution;
  SolveReport report;
};

/// Nonlinear iteration for the discrete problem, started from the discrete
/// solution with p = 2. Stops when ||residual|| / ||load|| <= tol (absolute
/// residual when the load vanishes), at the rounding level of the residual,
/// or after max_iters corrections; failure to converge is reported through
/// the converged flag. The residual is that of the regularized flux.
PicardResult picard_solve(const ProblemSpec& spec, const BrokenSpace& space,
                          const SolverConfig& config = {});

}  // namespace prdg
