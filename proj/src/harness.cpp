#include "prdg/harness.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <tuple>

#include "prdg/errors.hpp"

namespace prdg {

double flux_divergence(const SmoothSolution& u, double p, const Point& x) {
  const Point g = u.gradient(x);
  const double s = g.squaredNorm();
  const Eigen::Matrix2d h = u.hessian(x);
  if (p == 2.0) return h.trace();
  // Critical points: the limit is 0 for p > 2; for p < 2 it is a null set.
  if (s == 0.0) return 0.0;
  return std::pow(s, 0.5 * (p - 2.0)) * (h.trace() + (p - 2.0) * g.dot(h * g) / s);
}

ProblemSpec manufactured_problem(const SmoothSolution& u, double p, double nu,
                                 VectorFunction beta, Matrix2Function beta_jacobian,
                                 ScalarFunction mu) {
  ProblemSpec spec;
  spec.p = p;
  spec.nu = nu;
  spec.beta = beta;
  spec.beta_jacobian = beta_jacobian;
  spec.mu = mu;
  spec.g = u.value;
  spec.exact = AnalyticField{u.value, u.gradient};
  spec.f = [u, p, nu, beta, mu](const Point& x) {
    double f = -nu * flux_divergence(u, p, x);
    if (beta) f += beta(x).dot(u.gradient(x));
    if (mu) f += mu(x) * u.value(x);
    return f;
  };
  return spec;
}

SmoothSolution example1_solution() {
  SmoothSolution u;
  u.value = [](const Point& x) { return std::sin(x.x() + 0.1) * std::cos(x.y() + 0.1); };
  u.gradient = [](const Point& x) {
    const double sx = std::sin(x.x() + 0.1), cx = std::cos(x.x() + 0.1);
    const double sy = std::sin(x.y() + 0.1), cy = std::cos(x.y() + 0.1);
    return Point(cx * cy, -sx * sy);
  };
  u.hessian = [](const Point& x) {
    const double sx = std::sin(x.x() + 0.1), cx = std::cos(x.x() + 0.1);
    const double sy = std::sin(x.y() + 0.1), cy = std::cos(x.y() + 0.1);
    Eigen::Matrix2d h;
    h << -sx * cy, -cx * sy, -cx * sy, -sx * cy;
    return h;
  };
  return u;
}

ProblemSpec example1(double p, double nu) {
  auto beta = [](const Point& x) {
    return Point(std::sin(x.x()) * std::cos(x.y()), -std::sin(x.y()) * std::cos(x.x()));
  };
  auto jac = [](const Point& x) {
    const double sx = std::sin(x.x()), cx = std::cos(x.x());
    const double sy = std::sin(x.y()), cy = std::cos(x.y());
    Eigen::Matrix2d j;
    j << cx * cy, -sx * sy, sx * sy, -cx * cy;
    return j;
  };
  return manufactured_problem(example1_solution(), p, nu, beta, jac,
                              [](const Point&) { return 1.0; });
}

SmoothSolution example2_solution(Example2Solution solution, double p, int k) {
  SmoothSolution u;
  if (solution == Example2Solution::polynomial) {
    u.value = [](const Point& x) {
      const double a = x.x() - 0.5, b = x.y() - 0.5;
      return a * a * b * b;
    };
    u.gradient = [](const Point& x) {
      const double a = x.x() - 0.5, b = x.y() - 0.5;
      return Point(2 * a * b * b, 2 * a * a * b);
    };
    u.hessian = [](const Point& x) {
      const double a = x.x() - 0.5, b = x.y() - 0.5;
      Eigen::Matrix2d h;
      h << 2 * b * b, 4 * a * b, 4 * a * b, 2 * a * a;
      return h;
    };
    return u;
  }
  const double a = p + (k + 2) / 4.0;
  // s(t) = |t|^a and its first two derivatives.
  auto s0 = [a](double t) { return std::pow(std::abs(t), a); };
  auto s1 = [a](double t) { return t == 0.0 ? 0.0 : a * std::pow(std::abs(t), a - 1) * (t > 0 ? 1 : -1); };
  auto s2 = [a](double t) { return t == 0.0 ? 0.0 : a * (a - 1) * std::pow(std::abs(t), a - 2); };
  u.value = [s0](const Point& x) {
    return 0.1 * std::exp(-10.0 * (s0(x.x() - 0.5) + s0(x.y() - 0.5)));
  };
  u.gradient = [s0, s1](const Point& x) {
    const double X = x.x() - 0.5, Y = x.y() - 0.5;
    const double v = 0.1 * std::exp(-10.0 * (s0(X) + s0(Y)));
    return Point(-10.0 * v * s1(X), -10.0 * v * s1(Y));
  };
  u.hessian = [s0, s1, s2](const Point& x) {
    const double X = x.x() - 0.5, Y = x.y() - 0.5;
    const double v = 0.1 * std::exp(-10.0 * (s0(X) + s0(Y)));
    Eigen::Matrix2d h;
    h(0, 0) = v * (100.0 * s1(X) * s1(X) - 10.0 * s2(X));
    h(1, 1) = v * (100.0 * s1(Y) * s1(Y) - 10.0 * s2(Y));
    h(0, 1) = h(1, 0) = 100.0 * v * s1(X) * s1(Y);
    return h;
  };
  return u;
}

ProblemSpec example2(Example2Solution solution, double p, int k) {
  ProblemSpec spec = manufactured_problem(example2_solution(solution, p, k), p, 1.0);
  // grad u vanishes on both lines; f there behaves like |x - 1/2|^{p-2}.
  spec.singular_lines = {{Point(1.0, 0.0), 0.5}, {Point(0.0, 1.0), 0.5}};
  return spec;
}

// ---------------------------------------------------------------------------

void ExperimentPlan::validate() const {
  if (example != 1 && example != 2) throw DegenerateInput("example must be 1 or 2");
  if (example == 1 && regime != "diffusion" && regime != "advection") {
    throw DegenerateInput("regime must be 'diffusion' or 'advection'");
  }
  if (example == 2 && solution != "exp" && solution != "poly") {
    throw DegenerateInput("solution must be 'exp' or 'poly'");
  }
  if (ps.empty() || ks.empty() || ladder.empty()) throw DegenerateInput("empty p, k or ladder list");
  for (double p : ps) {
    if (!(p > 1.0)) throw DegenerateInput("p must exceed 1");
  }
  for (int k : ks) {
    if (k < 1 || k > 3) throw DegenerateInput("k must be 1, 2 or 3");
  }
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (ladder[i] < 1) throw DegenerateInput("ladder entries must be positive");
    if (i > 0 && ladder[i] <= ladder[i - 1]) throw DegenerateInput("ladder must be strictly refining");
  }
  solver.validate();
}

std::string ExperimentPlan::label() const { return example == 1 ? regime : solution; }

bool ConvergenceReport::all_converged() const {
  for (const auto& r : rows) {
    if (!r.converged) return false;
  }
  return true;
}

ConvergenceReport run_plan(const ExperimentPlan& plan,
                           const std::function<void(const ConvergenceRow&)>& progress) {
  plan.validate();
  ConvergenceReport report;
  for (double p : plan.ps) {
    for (int k : plan.ks) {
      for (int n : plan.ladder) {
        ProblemSpec spec;
        if (plan.example == 1) {
          spec = example1(p, plan.regime == "advection" ? 1e-4 : 1.0);
        } else {
          spec = example2(plan.solution == "exp" ? Example2Solution::exponential
                                                 : Example2Solution::polynomial,
                          p, k);
        }
        const Mesh mesh = build_structured(n);
        const BrokenSpace space(mesh, k);
        ConvergenceRow row;
        row.example = plan.example;
        row.regime = plan.label();
        row.p = p;
        row.k = k;
        row.h = mesh.h_max();
        row.dofs = space.num_dofs();
        try {
          const PicardResult result = picard_solve(spec, space, plan.solver);
          const ErrorBreakdown err = error_norms(spec, result.solution);
          const PecletReport pe = peclet_classify(spec, space, *spec.exact);
          row.iterations = result.report.iterations;
          row.converged = result.report.converged;
          row.err_total = err.err_total;
          row.norm_1ph = err.norm_1ph;
          row.norm_betamu = err.norm_betamu;
          row.pct_advective_elements = pe.pct_advective_elements();
        } catch (const Error&) {
          row.converged = false;
          row.err_total = row.norm_1ph = row.norm_betamu = std::nan("");
        }
        report.rows.push_back(row);
        fill_rates(report);
        if (progress) progress(report.rows.back());
      }
    }
  }
  return report;
}

void fill_rates(ConvergenceReport& report) {
  using Key = std::tuple<int, std::string, double, int>;
  std::map<Key, const ConvergenceRow*> previous;
  for (auto& row : report.rows) {
    const Key key{row.example, row.regime, row.p, row.k};
    row.rate.reset();
    const auto it = previous.find(key);
    if (it != previous.end()) {
      try {
        row.rate = convergence_rates({{it->second->h, it->second->err_total}, {row.h, row.err_total}})
                       .front();
      } catch (const DegenerateInput&) {
      }
    }
    previous[key] = &row;
  }
}

// ---------------------------------------------------------------------------

const char* const kCsvHeader =
    "example,regime,p,k,h,dofs,iterations,converged,err_total,norm_1ph,norm_betamu,"
    "pct_advective_elements,rate";

namespace {

std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed(double x, const char* fmt) {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

double parse_number(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

long parse_integer(const std::string& s, int line) {
  const double v = parse_number(s, line);
  if (v != std::floor(v)) throw ParseError("line " + std::to_string(line) + ": expected an integer");
  return static_cast<long>(v);
}

}  // namespace

std::string emit(const ConvergenceReport& report, EmitFormat format) {
  std::ostringstream out;
  switch (format) {
    case EmitFormat::csv:
      out << kCsvHeader << '\n';
      for (const auto& r : report.rows) {
        out << r.example << ',' << r.regime << ',' << number(r.p) << ',' << r.k << ','
            << number(r.h) << ',' << r.dofs << ',' << r.iterations << ','
            << (r.converged ? "true" : "false") << ',' << number(r.err_total) << ','
            << number(r.norm_1ph) << ',' << number(r.norm_betamu) << ','
            << number(r.pct_advective_elements) << ',' << (r.rate ? number(*r.rate) : "") << '\n';
      }
      break;
    case EmitFormat::table: {
      char line[256];
      std::snprintf(line, sizeof line, "%-3s %-10s %5s %2s %9s %8s %5s %4s %12s %12s %12s %7s %6s\n",
                    "ex", "regime", "p", "k", "h", "dofs", "iter", "conv", "ERR", "norm_1ph",
                    "norm_bm", "%adv", "rate");
      out << line;
      for (const auto& r : report.rows) {
        std::snprintf(line, sizeof line,
                      "%-3d %-10s %5.2f %2d %9.5f %8ld %5d %4s %12.4e %12.4e %12.4e %7.2f %6s\n",
                      r.example, r.regime.c_str(), r.p, r.k, r.h, r.dofs, r.iterations,
                      r.converged ? "yes" : "NO", r.err_total, r.norm_1ph, r.norm_betamu,
                      r.pct_advective_elements, r.rate ? fixed(*r.rate, "%.3f").c_str() : "-");
        out << line;
      }
      break;
    }
    case EmitFormat::plotdata: {
      // One block per (example, regime, p, k) series: log h, log ERR.
      std::string current;
      for (const auto& r : report.rows) {
        const std::string key = "# example=" + std::to_string(r.example) + " regime=" + r.regime +
                                " p=" + number(r.p) + " k=" + std::to_string(r.k);
        if (key != current) {
          if (!current.empty()) out << "\n\n";
          out << key << '\n';
          current = key;
        }
        out << number(std::log(r.h)) << ' ' << number(std::log(r.err_total)) << '\n';
      }
      break;
    }
  }
  return out.str();
}

ConvergenceReport parse_csv(std::istream& in) {
  ConvergenceReport report;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("missing or unexpected CSV header");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 13) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 13 fields, got " +
                       std::to_string(f.size()));
    }
    ConvergenceRow r;
    r.example = static_cast<int>(parse_integer(f[0], lineno));
    r.regime = f[1];
    r.p = parse_number(f[2], lineno);
    r.k = static_cast<int>(parse_integer(f[3], lineno));
    r.h = parse_number(f[4], lineno);
    r.dofs = parse_integer(f[5], lineno);
    r.iterations = static_cast<int>(parse_integer(f[6], lineno));
    if (f[7] != "true" && f[7] != "false") {
      throw ParseError("line " + std::to_string(lineno) + ": converged must be true or false");
    }
    r.converged = f[7] == "true";
    r.err_total = parse_number(f[8], lineno);
    r.norm_1ph = parse_number(f[9], lineno);
    r.norm_betamu = parse_number(f[10], lineno);
    r.pct_advective_elements = parse_number(f[11], lineno);
    if (!f[12].empty()) r.rate = parse_number(f[12], lineno);
    report.rows.push_back(r);
  }
  return report;
}

}  // namespace prdg
