#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "prdg/dg_operators.hpp"

namespace prdg {

using Matrix2Function = std::function<Eigen::Matrix2d(const Point&)>;

/// Power flux sigma(x) = |x|^{p-2} x, regularized as (|x|^2 + eps^2)^{(p-2)/2} x
/// when eps > 0.
struct FluxKernel {
  double p = 2.0;
  double eps = 0.0;

  /// (|x|^2 + eps^2)^{(p-2)/2} from the squared norm; for eps = 0 and x = 0
  /// the value is 0 when p > 2, 1 when p = 2 and +inf when p < 2.
  double coefficient(double sq_norm) const;
  Point sigma(const Point& x) const;
  /// Scalar flux; sigma1(0) = 0 for every p > 1 (continuous extension).
  double sigma1(double t) const;
};

/// Data of  -nu div sigma(grad u) + beta . grad u + mu u = f  in Omega,
/// u = g on the boundary.
struct ProblemSpec {
  double p = 2.0;
  double nu = 1.0;
  VectorFunction beta;               // divergence free; empty means 0
  Matrix2Function beta_jacobian;     // optional, for reference times
  ScalarFunction mu;                 // empty means 0
  ScalarFunction f;                  // empty means 0
  ScalarFunction g;                  // empty means homogeneous
  std::optional<AnalyticField> exact;

  // {x : normal . x = offset}, normal of unit length.
  struct Line {
    Point normal;
    double offset = 0.0;
  };
  // Lines along which f may have integrable power-type singularities; the
  // load quadrature is graded towards them on the elements they touch.
  std::vector<Line> singular_lines;

  Point beta_at(const Point& x) const { return beta ? beta(x) : Point::Zero(); }
  double mu_at(const Point& x) const { return mu ? mu(x) : 0.0; }
  double f_at(const Point& x) const { return f ? f(x) : 0.0; }
  double g_at(const Point& x) const { return g ? g(x) : 0.0; }
};

struct FormOptions {
  double eta = 1.0;   // penalty prefactor of s_h
  double eps = 1e-8;  // regularization of the frozen Kacanov coefficients
};

/// max over the face quadrature points of |beta . n_F|.
double face_velocity(const ProblemSpec& spec, const BrokenSpace& space, int f);

/// a_h(w, v) = nu [ (sigma(G_h w), G_h v) + eta s_h(w, v) ], with the boundary
/// data of spec shifting the jumps of w only. Exact flux (no regularization).
double eval_a_h(const ProblemSpec& spec, const BrokenSpace& space, const DiscreteField& w,
                const DiscreteField& v, const FormOptions& options = {});

/// Advection-reaction form with strengthened upwinding. On boundary faces the
/// trial function w is averaged with its exterior value g, {w} = (w + g) / 2,
/// and its jump is w - g; v enters unshifted.
/// quad_degree < 0 selects space.quadrature_degree(); v_F is always taken
/// from the default face rule.
double eval_b_h(const ProblemSpec& spec, const BrokenSpace& space, const DiscreteField& w,
                const DiscreteField& v, int quad_degree = -1);

/// ||v||_{beta,mu,h}^2 = 1/2 sum_F v_F ||[v]||_F^2 + ||mu^{1/2} v||^2.
double betamu_norm_squared(const ProblemSpec& spec, const BrokenSpace& space,
                           const DiscreteField& v, int quad_degree = -1);

/// Sparsity of the DG operators: element a couples with every element of
/// NB(a) = union of the face patches P(T) over T in P(a), as required by the
/// discrete gradient inside the nonlinear flux.
class BlockPattern {
 public:
  explicit BlockPattern(const BrokenSpace& space);

  int block_size() const { return nd_; }
  const std::vector<int>& neighbours(int a) const { return nb_[a]; }
  /// Offset in the value array of entry (a, i; b, j).
  Eigen::Index offset(int a, int i, int b, int j) const;
  Eigen::Index nonzeros() const { return row_begin_.back(); }

  /// Zero matrix with this exact pattern (row major, sorted columns).
  Eigen::SparseMatrix<double, Eigen::RowMajor> make_matrix() const;

 private:
  int nd_;
  std::vector<std::vector<int>> nb_;
  std::vector<Eigen::Index> row_begin_;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct AssembledSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  double eps = 0.0;
  double eta = 1.0;
};

/// Assembly of the discrete problem
///   a_h(u, v) + b_h(u, v) = (f, v)  for all v in P^k(T_h).
/// The linear part (b_h and the load) and the element gradient operators are
/// computed once; each Kacanov step only re-evaluates the frozen coefficients.
/// Assembly runs in a fixed element/face order, so results are bitwise
/// reproducible.
class Assembler {
 public:
  Assembler(const ProblemSpec& spec, const BrokenSpace& space, FormOptions options = {});

  const ProblemSpec& spec() const { return spec_; }
  const BrokenSpace& space() const { return *space_; }
  const FormOptions& options() const { return options_; }
  const BlockPattern& pattern() const { return pattern_; }

  /// Load vector (f, phi_i).
  const Eigen::VectorXd& load() const { return load_; }

  /// Linear system for u_new with the diffusion coefficient frozen at
  /// (|G_h u_prev|^2 + eps^2)^{(p-2)/2} and the face penalty coefficient
  /// frozen at ([u_prev]^2 + eps^2)^{(p-2)/2}. eps < 0 takes options().eps.
  AssembledSystem picard_step(const DiscreteField& u_prev, double eps = -1.0) const;

  /// The same problem with p = 2 (unit coefficients, penalty eta / h_F): the
  /// initial guess of the fixed point.
  AssembledSystem linear_step() const;

  /// Newton system at u: the Jacobian of residual(., eps) and rhs = -residual(u, eps).
  /// The flux derivative (|x|^2 + eps^2)^{(p-4)/2} ((|x|^2 + eps^2) I + (p-2) x x^T)
  /// is positive definite for p > 1.
  AssembledSystem newton_step(const DiscreteField& u, double eps = -1.0) const;

  /// Entries a_h(u, phi_i) + b_h(u, phi_i) - (f, phi_i); exact flux for
  /// eps = 0, otherwise the regularized flux (|x|^2 + eps^2)^{(p-2)/2} x.
  Eigen::VectorXd residual(const DiscreteField& u, double eps = 0.0) const;

  /// Matrix and right-hand side of b_h alone (b_h(u, phi_i) = (B u - c)_i).
  const SparseMatrix& advection_matrix() const { return advection_; }
  const Eigen::VectorXd& advection_rhs() const { return advection_rhs_; }

 private:
  struct ElementData {
    LocalGradient gradient;
    Eigen::MatrixXd values;  // nq x nd
    Eigen::VectorXd weights;
  };
  struct FaceData {
    Eigen::MatrixXd values[2];  // nq x nd
    Eigen::VectorXd weights;
    Eigen::VectorXd g;          // boundary data at the points (boundary faces)
    double penalty = 0.0;       // eta h_F^{1-p}
  };

  enum class Linearization { unit, frozen, newton };

  void build_advection();
  AssembledSystem assemble(const DiscreteField* u, double eps, Linearization mode) const;
  Eigen::VectorXd gradient_at_points(int t, const DiscreteField& u, int d) const;
  Eigen::VectorXd jump_at_points(int f, const DiscreteField& u) const;

  ProblemSpec spec_;
  const BrokenSpace* space_;
  FormOptions options_;
  BlockPattern pattern_;
  std::vector<ElementData> elements_;
  std::vector<FaceData> faces_;
  Eigen::VectorXd load_;
  SparseMatrix advection_;
  Eigen::VectorXd advection_rhs_;
};

/// Convenience wrappers around Assembler.
AssembledSystem assemble_picard_step(const ProblemSpec& spec, const BrokenSpace& space,
                                     const DiscreteField& u_prev, const FormOptions& options = {});
Eigen::VectorXd nonlinear_residual(const ProblemSpec& spec, const BrokenSpace& space,
                                   const DiscreteField& u, const FormOptions& options = {});

}  // namespace prdg
