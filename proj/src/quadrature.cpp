#include "prdg/quadrature.hpp"

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "prdg/errors.hpp"

namespace prdg {

void gauss_jacobi(int n, double alpha, double beta, std::vector<double>& nodes,
                  std::vector<double>& weights) {
  const double ab = alpha + beta;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double two_i_ab = 2.0 * i + ab;
    if (i == 0 && std::abs(ab) < 1e-15) {
      jacobi(0, 0) = (beta - alpha) / (ab + 2.0);
    } else {
      jacobi(i, i) = (beta * beta - alpha * alpha) / (two_i_ab * (two_i_ab + 2.0));
    }
    if (i + 1 < n) {
      const double m = i + 1.0;
      const double two_m_ab = 2.0 * m + ab;
      const double b = std::sqrt(4.0 * m * (m + alpha) * (m + beta) * (m + ab) /
                                 (two_m_ab * two_m_ab * (two_m_ab + 1.0) * (two_m_ab - 1.0)));
      jacobi(i, i + 1) = b;
      jacobi(i + 1, i) = b;
    }
  }
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) *
                     std::tgamma(beta + 1.0) / std::tgamma(ab + 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = eig.eigenvalues()(i);
    const double v0 = eig.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

namespace {

QuadratureRule make_edge_rule(int degree) {
  const int n = degree / 2 + 1;
  std::vector<double> x, w;
  gauss_jacobi(n, 0.0, 0.0, x, w);
  QuadratureRule rule;
  rule.exactness_degree = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    rule.points.emplace_back(0.5 * (x[i] + 1.0), 0.0);
    rule.weights.push_back(0.5 * w[i]);
  }
  return rule;
}

QuadratureRule make_triangle_rule(int degree) {
  const int n = degree / 2 + 1;
  std::vector<double> xs, ws, xt, wt;
  // Collapsed direction carries the Jacobian factor (1 - s).
  gauss_jacobi(n, 1.0, 0.0, xs, ws);
  gauss_jacobi(n, 0.0, 0.0, xt, wt);
  QuadratureRule rule;
  rule.exactness_degree = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    const double s = 0.5 * (xs[i] + 1.0);
    for (int j = 0; j < n; ++j) {
      const double t = 0.5 * (xt[j] + 1.0);
      rule.points.emplace_back(t * (1.0 - s), s);
      rule.weights.push_back(0.25 * ws[i] * 0.5 * wt[j]);
    }
  }
  return rule;
}

void check_degree(int degree) {
  if (degree > kMaxQuadratureDegree) {
    throw UnsupportedDegree("quadrature degree " + std::to_string(degree) + " exceeds " +
                            std::to_string(kMaxQuadratureDegree));
  }
}

}  // namespace

const QuadratureRule& triangle_rule(int degree) {
  check_degree(degree);
  static const auto table = [] {
    std::array<QuadratureRule, kMaxQuadratureDegree + 1> rules;
    for (int d = 0; d <= kMaxQuadratureDegree; ++d) rules[d] = make_triangle_rule(d);
    return rules;
  }();
  return table[std::max(degree, 0)];
}

const QuadratureRule& edge_rule(int degree) {
  check_degree(degree);
  static const auto table = [] {
    std::array<QuadratureRule, kMaxQuadratureDegree + 1> rules;
    for (int d = 0; d <= kMaxQuadratureDegree; ++d) rules[d] = make_edge_rule(d);
    return rules;
  }();
  return table[std::max(degree, 0)];
}

namespace {

// Nodes and weights on [0, 1] graded towards 0 and/or 1 by s -> s^m.
void graded_line(bool at0, bool at1, int n, int m, std::vector<double>& x, std::vector<double>& w) {
  std::vector<double> gx, gw;
  gauss_jacobi(n, 0.0, 0.0, gx, gw);
  x.clear();
  w.clear();
  // Maps [0, 1] onto [0, len], graded towards 0 when `graded`.
  auto push = [&](double len, bool graded, bool mirror) {
    for (int i = 0; i < n; ++i) {
      const double s = 0.5 * (gx[i] + 1.0), ws = 0.5 * gw[i];
      const double y = graded ? std::pow(s, m) : s;
      const double dy = graded ? m * std::pow(s, m - 1) : 1.0;
      x.push_back(mirror ? 1.0 - len * y : len * y);
      w.push_back(len * dy * ws);
    }
  };
  if (at0 && at1) {
    push(0.5, true, false);
    push(0.5, true, true);
  } else {
    push(1.0, at0 || at1, at1);
  }
}

}  // namespace

void graded_triangle_rule(const std::array<Eigen::Vector2d, 3>& v, GradedEnds ends, int n, int m,
                          std::vector<Eigen::Vector2d>& points, std::vector<double>& weights) {
  std::vector<double> rx, rw, tx, tw;
  graded_line(ends.r0, ends.r1, n, m, rx, rw);
  graded_line(ends.t0, ends.t1, n, m, tx, tw);
  const Eigen::Vector2d e1 = v[1] - v[0], e2 = v[2] - v[0];
  const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
  points.clear();
  weights.clear();
  for (std::size_t i = 0; i < rx.size(); ++i) {
    for (std::size_t j = 0; j < tx.size(); ++j) {
      points.push_back(v[0] + rx[i] * ((1.0 - tx[j]) * e1 + tx[j] * e2));
      weights.push_back(jac * rx[i] * rw[i] * tw[j]);
    }
  }
}

}  // namespace prdg
