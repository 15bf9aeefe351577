#include "prdg/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/CholmodSupport>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>
#include <Eigen/UmfPackSupport>

#include "prdg/errors.hpp"

namespace prdg {

void SolverConfig::validate() const {
  if (!(rel_residual_tol > 0.0)) throw DegenerateInput("solver tolerance must be positive");
  if (max_iters < 1) throw DegenerateInput("max_iters must be at least 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw DegenerateInput("damping must lie in (0, 1]");
  if (eps_regularization < 0.0) throw DegenerateInput("regularization must be nonnegative");
  if (!(penalty_eta > 0.0)) throw DegenerateInput("penalty prefactor must be positive");
}

// ---------------------------------------------------------------------------

struct Factorization::Impl {
  std::unique_ptr<Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower>> llt;
  std::unique_ptr<Eigen::UmfPackLU<Eigen::SparseMatrix<double>>> lu;
  Eigen::SparseMatrix<double> matrix;  // UMFPACK solves read the factored matrix
};

Factorization::Factorization(const SparseMatrix& a, bool symmetric) : impl_(new Impl) {
  if (a.rows() != a.cols()) throw DegenerateInput("matrix is not square");
  if (symmetric) {
    const Eigen::SparseMatrix<double> lower = a.triangularView<Eigen::Lower>();
    impl_->llt = std::make_unique<Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower>>();
    impl_->llt->compute(lower);
    if (impl_->llt->info() != Eigen::Success) {
      throw SingularMatrix("Cholesky factorization failed (matrix not positive definite)");
    }
  } else {
    impl_->matrix = a;
    impl_->lu = std::make_unique<Eigen::UmfPackLU<Eigen::SparseMatrix<double>>>();
    impl_->lu->compute(impl_->matrix);
    if (impl_->lu->info() != Eigen::Success) throw SingularMatrix("LU factorization failed");
  }
}

Factorization::~Factorization() = default;

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = impl_->llt ? Eigen::VectorXd(impl_->llt->solve(b))
                                 : Eigen::VectorXd(impl_->lu->solve(b));
  if (!x.allFinite()) throw SingularMatrix("factorized solve produced non-finite values");
  return x;
}

namespace {

// Relative accuracy of the initial linear solve and of the fixed-point
// increments; the increments only need a few digits.
constexpr double kInitialTol = 1e-12;
constexpr double kStepTol = 1e-6;
// Stagnation test: a step reducing the residual by less than kStallRatio
// with the residual within kFloorFactor of its rounding level.
constexpr double kStallRatio = 0.9;
constexpr double kFloorFactor = 4.0;
constexpr int kMaxHalvings = 10;
// A full Newton step reducing the residual by this factor is taken directly.
constexpr double kNewtonContraction = 0.5;

// Inverse diagonal blocks of size `block`.
class BlockJacobi {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  void set_block_size(int block) { block_ = block; }

  template <typename M>
  BlockJacobi& analyzePattern(const M&) { return *this; }
  template <typename M>
  BlockJacobi& factorize(const M& m) {
    const Eigen::Index n = m.rows();
    if (n % block_ != 0) block_ = 1;
    inverses_.resize(n / block_);
    Eigen::MatrixXd d(block_, block_);
    for (Eigen::Index b = 0; b < n / block_; ++b) {
      for (int i = 0; i < block_; ++i) {
        for (int j = 0; j < block_; ++j) d(i, j) = m.coeff(b * block_ + i, b * block_ + j);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
      inverses_[b] = lu.isInvertible() ? Eigen::MatrixXd(lu.inverse())
                                       : Eigen::MatrixXd::Identity(block_, block_);
    }
    return *this;
  }
  template <typename M>
  BlockJacobi& compute(const M& m) { return factorize(m); }

  template <typename R>
  Eigen::VectorXd solve(const Eigen::MatrixBase<R>& r) const {
    Eigen::VectorXd z(r.size());
    for (std::size_t b = 0; b < inverses_.size(); ++b) {
      const Eigen::Index o = static_cast<Eigen::Index>(b) * block_;
      z.segment(o, block_).noalias() = inverses_[b] * r.segment(o, block_);
    }
    return z;
  }
  Eigen::ComputationInfo info() { return Eigen::Success; }

 private:
  int block_ = 1;
  std::vector<Eigen::MatrixXd> inverses_;
};

// Preconditioning by an existing (possibly outdated) factorization.
class FactorPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  void set(const Factorization* factor) { factor_ = factor; }

  template <typename M>
  FactorPreconditioner& analyzePattern(const M&) { return *this; }
  template <typename M>
  FactorPreconditioner& factorize(const M&) { return *this; }
  template <typename M>
  FactorPreconditioner& compute(const M&) { return *this; }

  template <typename R>
  Eigen::VectorXd solve(const Eigen::MatrixBase<R>& r) const {
    return factor_->solve(Eigen::VectorXd(r));
  }
  Eigen::ComputationInfo info() { return Eigen::Success; }

 private:
  const Factorization* factor_ = nullptr;
};

double relative_residual(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double bn = b.norm();
  const double rn = (a * x - b).norm();
  return bn > 0.0 ? rn / bn : rn;
}

Eigen::VectorXd refine(const SparseMatrix& a, const Eigen::VectorXd& b, const Factorization& f,
                       Eigen::VectorXd x, double tol) {
  double res = relative_residual(a, x, b);
  for (int step = 0; step < 3 && res > tol; ++step) {
    const Eigen::VectorXd candidate = x + f.solve(b - a * x);
    const double next = relative_residual(a, candidate, b);
    if (!(next < res)) break;
    x = candidate;
    res = next;
  }
  return x;
}

}  // namespace

Eigen::VectorXd solve_linear(const SparseMatrix& a, const Eigen::VectorXd& b,
                             const LinearOptions& options) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw DegenerateInput("linear system dimensions do not match");
  }
  if (b.isZero(0.0)) return Eigen::VectorXd::Zero(b.size());
  if (options.kind == LinearSolverKind::direct) {
    const Factorization f(a, options.symmetric);
    return refine(a, b, f, f.solve(b), options.tol);
  }
  Eigen::BiCGSTAB<SparseMatrix, BlockJacobi> krylov;
  krylov.preconditioner().set_block_size(options.block_size);
  krylov.setTolerance(options.tol);
  krylov.setMaxIterations(options.max_krylov);
  krylov.compute(a);
  Eigen::VectorXd x = krylov.solve(b);
  const double res = relative_residual(a, x, b);
  if (!x.allFinite() || res > 10.0 * options.tol) {
    throw Breakdown("BiCGSTAB stopped at relative residual " + std::to_string(res) + " after " +
                    std::to_string(krylov.iterations()) + " iterations");
  }
  return x;
}

namespace {

// Linear solves of consecutive fixed-point steps. The matrices change little
// between steps, so the last factorization preconditions a short Krylov run;
// a new factorization is computed only when that run stalls.
class FixedPointLinearSolver {
 public:
  FixedPointLinearSolver(const SolverConfig& config, bool symmetric, int block_size, Eigen::Index n)
      : config_(config),
        symmetric_(symmetric),
        block_size_(block_size),
        // A sparse 2D factorization costs about sqrt(n) solves with the factor.
        refactor_after_(std::max(5, static_cast<int>(std::sqrt(static_cast<double>(n)) / 20.0))) {}

  // Solves to ||A x - b|| <= rel_tol ||b||, or to the accuracy of a fresh
  // factorization where that is unattainable.
  Eigen::VectorXd solve(const SparseMatrix& a, const Eigen::VectorXd& b, double rel_tol,
                        SolveReport& report) {
    if (b.isZero(0.0)) return Eigen::VectorXd::Zero(b.size());
    const double wanted = std::max(rel_tol, kRoundoff);
    if (config_.linear_solver == LinearSolverKind::iterative) {
      LinearOptions options;
      options.kind = LinearSolverKind::iterative;
      options.block_size = block_size_;
      options.tol = std::max(wanted, 1e-13);
      return solve_linear(a, b, options);
    }
    if (factor_ && !stale_) {
      const double target = std::max(wanted, 10.0 * direct_accuracy_);
      Eigen::VectorXd x;
      int iterations = 0;
      if (symmetric_) {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, FactorPreconditioner> cg;
        x = run(cg, a, b, target, iterations);
      } else {
        Eigen::BiCGSTAB<SparseMatrix, FactorPreconditioner> bicg;
        x = run(bicg, a, b, target, iterations);
      }
      report.krylov_iterations += iterations;
      if (x.allFinite() && relative_residual(a, x, b) <= target) {
        stale_ = iterations > refactor_after_;
        return x;
      }
    }
    factor_.reset();
    factor_ = std::make_unique<Factorization>(a, symmetric_);
    ++report.factorizations;
    Eigen::VectorXd x = refine(a, b, *factor_, factor_->solve(b), wanted);
    direct_accuracy_ = relative_residual(a, x, b);
    stale_ = false;
    return x;
  }

 private:
  static constexpr double kRoundoff = 1e-15;
  static constexpr int kMaxKrylov = 40;

  template <typename Krylov>
  Eigen::VectorXd run(Krylov& krylov, const SparseMatrix& a, const Eigen::VectorXd& b,
                      double target, int& iterations) const {
    krylov.preconditioner().set(factor_.get());
    krylov.setTolerance(target);
    krylov.setMaxIterations(kMaxKrylov);
    krylov.compute(a);
    Eigen::VectorXd x = krylov.solve(b);
    iterations = static_cast<int>(krylov.iterations());
    return x;
  }

  const SolverConfig& config_;
  bool symmetric_;
  int block_size_;
  int refactor_after_;
  std::unique_ptr<Factorization> factor_;
  bool stale_ = false;
  double direct_accuracy_ = 0.0;
};

// Change of the relative residual under a one-ulp relative perturbation of
// every coefficient (fixed pseudo-random signs).
double rounding_floor(const Assembler& assembler, const DiscreteField& u, const Eigen::VectorXd& r,
                      double eps, double scale) {
  DiscreteField w = u;
  std::mt19937_64 engine(0x5eed);
  for (double& c : w.coefficients()) {
    const double ulp = std::numeric_limits<double>::epsilon() * std::abs(c);
    c += (engine() & 1u) ? ulp : -ulp;
  }
  return (assembler.residual(w, eps) - r).norm() / scale;
}

}  // namespace

PicardResult picard_solve(const ProblemSpec& spec, const BrokenSpace& space,
                          const SolverConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Assembler assembler(spec, space, FormOptions{config.penalty_eta, config.eps_regularization});
  FixedPointLinearSolver linear(config, !spec.beta, space.dofs_per_element(), space.num_dofs());
  PicardResult result{DiscreteField(space), {}};
  SolveReport& report = result.report;

  const double load_norm = assembler.load().norm();
  const double scale = load_norm > 0.0 ? load_norm : 1.0;
  // The fixed point solves the regularized problem, so its residual is the
  // stopping measure. For p < 2 the exact face flux is not Lipschitz at zero
  // jumps: a rounding error d in a vanishing jump moves it by d^{p-1}, which
  // pins the exact residual near 1e-8 on fine meshes.
  const double eps = config.eps_regularization;

  DiscreteField& u = result.solution;
  {
    const AssembledSystem sys = assembler.linear_step();
    u.coefficients() = linear.solve(sys.matrix, sys.rhs, kInitialTol, report);
  }
  Eigen::VectorXd r = assembler.residual(u, eps);
  double res = r.norm() / scale;
  report.residual_history.push_back(res);
  const bool newton = config.linearization == Linearization::newton;
  while (res > config.rel_residual_tol && report.iterations < config.max_iters &&
         std::isfinite(res)) {
    // Increment form: for the frozen-coefficient step A(u) u - b(u) equals the
    // residual, so A(u) d = -r gives the same iterate without the
    // cancellation between A(u) u and b(u), whose norms grow like eps^{p-2}.
    const double previous = res;
    auto try_step = [&](const Eigen::VectorXd& d, double step, DiscreteField& w, Eigen::VectorXd& rw) {
      w.coefficients() = u.coefficients() + step * d;
      rw = assembler.residual(w, eps);
      const double value = rw.norm() / scale;
      return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
    };
    auto kacanov = [&](DiscreteField& w, Eigen::VectorXd& rw) {
      const AssembledSystem sys = assembler.picard_step(u);
      return try_step(linear.solve(sys.matrix, -r, kStepTol, report), config.damping, w, rw);
    };
    DiscreteField trial = u;
    Eigen::VectorXd r_trial;
    if (newton) {
      const AssembledSystem sys = assembler.newton_step(u, eps);
      const Eigen::VectorXd d = linear.solve(sys.matrix, -r, kStepTol, report);
      double step = config.damping;
      res = try_step(d, step, trial, r_trial);
      if (!(res <= kNewtonContraction * previous)) {
        // Poor Newton progress happens where the regularized flux bends
        // sharply (jumps or gradients near eps for p < 2); compare with the
        // frozen-coefficient step, which contracts uniformly there.
        DiscreteField alt = u;
        Eigen::VectorXd r_alt;
        const double res_alt = kacanov(alt, r_alt);
        for (int halvings = 0; halvings < kMaxHalvings && !(res < previous) && step > 0.0; ++halvings) {
          step *= 0.5;
          res = try_step(d, step, trial, r_trial);
        }
        if (res_alt < res) {
          res = res_alt;
          trial = std::move(alt);
          r_trial = std::move(r_alt);
        }
      }
    } else {
      res = kacanov(trial, r_trial);
    }
    r = std::move(r_trial);
    u = std::move(trial);
    ++report.iterations;
    report.residual_history.push_back(res);
    // A contraction that has stopped is either slow or at the rounding level;
    // only the latter ends the loop early.
    if (res > config.rel_residual_tol && res > kStallRatio * previous) {
      report.rounding_floor = rounding_floor(assembler, u, r, eps, scale);
      if (res <= kFloorFactor * report.rounding_floor) {
        report.stagnated = true;
        break;
      }
    }
  }
  report.converged = res <= config.rel_residual_tol;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace prdg
