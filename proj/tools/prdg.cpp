// Command-line driver: convergence studies, verification suites, rate tables.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "prdg/errors.hpp"
#include "prdg/harness.hpp"
#include "prdg/verification.hpp"

using namespace prdg;

namespace {

int run_command(ExperimentPlan plan, const std::string& format, const std::string& out_path,
                bool quiet) {
  if (plan.ladder.empty()) {
    plan.ladder = plan.example == 1 ? std::vector<int>{3, 6, 12, 24, 48}
                                    : std::vector<int>{6, 12, 24, 48, 96, 192};
  }
  if (plan.ps.empty()) {
    plan.ps = plan.example == 1 ? std::vector<double>{1.5, 1.75, 2.0, 2.5, 3.0}
                                : std::vector<double>{1.5, 1.75};
  }
  if (plan.ks.empty()) plan.ks = plan.example == 1 ? std::vector<int>{1, 2, 3} : std::vector<int>{1, 2};
  static const std::map<std::string, EmitFormat> formats{
      {"csv", EmitFormat::csv}, {"table", EmitFormat::table}, {"plotdata", EmitFormat::plotdata}};

  const ConvergenceReport report = run_plan(plan, [quiet](const ConvergenceRow& row) {
    if (quiet) return;
    std::fprintf(stderr, "p=%.2f k=%d h=%.5f dofs=%ld iters=%d %s ERR=%.4e rate=%s\n", row.p, row.k,
                 row.h, row.dofs, row.iterations, row.converged ? "converged" : "NOT CONVERGED",
                 row.err_total, row.rate ? std::to_string(*row.rate).c_str() : "-");
  });
  const std::string text = emit(report, formats.at(format));
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write " + out_path);
    out << text;
  }
  return report.all_converged() ? 0 : 1;
}

int verify_command(const std::string& suite, std::uint64_t seed, long samples, bool csv) {
  std::vector<SampleReport> reports;
  if (suite == "hirn") {
    for (double p : {1.5, 2.0, 3.0}) {
      for (double delta : {0.1, 1.0}) reports.push_back(check_hirn_bound(p, delta, samples, seed));
    }
  } else if (suite == "equivalence") {
    for (double p : {1.5, 2.0, 3.0}) reports.push_back(check_equivalences(p, samples, seed));
  } else {
    for (int n : {3, 6}) {
      const Mesh mesh = build_structured(n);
      for (int k = 1; k <= 3; ++k) {
        const BrokenSpace space(mesh, k);
        SampleReport r;
        if (suite == "coercivity") {
          r = check_coercivity(example1(2.0, 1.0), space, static_cast<int>(samples), seed);
        } else if (suite == "lifting") {
          r = check_lifting(space, seed);
        } else {
          r = check_ibp(space, static_cast<int>(samples), seed);
        }
        r.name += " n=" + std::to_string(n) + " k=" + std::to_string(k);
        reports.push_back(r);
      }
    }
  }
  std::cout << format_reports(reports, csv);
  for (const auto& r : reports) {
    if (!r.passed()) return 1;
  }
  return 0;
}

int rates_command(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  ConvergenceReport report = parse_csv(in);
  fill_rates(report);
  std::cout << emit(report, EmitFormat::table);
  return report.all_converged() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peclet-robust DG solver for p-Laplace advection-diffusion-reaction problems"};
  app.require_subcommand(1);

  ExperimentPlan plan;
  std::string format = "csv", out_path, linear = "direct", linearization = "newton";
  bool quiet = false;
  auto* run = app.add_subcommand("run", "convergence study on a ladder of structured meshes");
  run->add_option("--example", plan.example, "1 or 2")->check(CLI::IsMember({1, 2}));
  run->add_option("--regime", plan.regime, "example 1: diffusion (nu=1) or advection (nu=1e-4)")
      ->check(CLI::IsMember({"diffusion", "advection"}));
  run->add_option("--solution", plan.solution, "example 2: exp or poly")
      ->check(CLI::IsMember({"exp", "poly"}));
  run->add_option("--p", plan.ps, "Sobolev exponents")->delimiter(',');
  run->add_option("--k", plan.ks, "polynomial degrees")->delimiter(',');
  run->add_option("--ladder", plan.ladder, "mesh resolutions n (n x n squares)")->delimiter(',');
  run->add_option("--eps", plan.solver.eps_regularization, "regularization of frozen coefficients");
  run->add_option("--eta", plan.solver.penalty_eta, "penalty prefactor");
  run->add_option("--tol", plan.solver.rel_residual_tol, "relative residual tolerance");
  run->add_option("--max-iters", plan.solver.max_iters, "maximum fixed-point iterations");
  run->add_option("--damping", plan.solver.damping, "fixed-point damping in (0, 1]");
  run->add_option("--linear-solver", linear, "direct or iterative")
      ->check(CLI::IsMember({"direct", "iterative"}));
  run->add_option("--linearization", linearization,
                  "newton (Jacobian of the regularized flux, Kacanov fallback) or kacanov")
      ->check(CLI::IsMember({"newton", "kacanov"}));
  run->add_option("--out", out_path, "output file (default: stdout)");
  run->add_option("--format", format, "csv, table or plotdata")
      ->check(CLI::IsMember({"csv", "table", "plotdata"}));
  run->add_flag("--quiet", quiet, "no progress lines on stderr");

  std::string suite = "hirn";
  std::uint64_t seed = 42;
  long samples = 100000;
  bool csv = false;
  auto* verify = app.add_subcommand("verify", "sampled checks of identities and inequalities");
  verify->add_option("--suite", suite)
      ->check(CLI::IsMember({"coercivity", "hirn", "equivalence", "lifting", "ibp"}));
  verify->add_option("--seed", seed);
  verify->add_option("--samples", samples, "samples (fields or pairs for the mesh suites)");
  verify->add_flag("--csv", csv, "CSV instead of a table");

  std::string csv_path;
  auto* rates = app.add_subcommand("rates", "rate table from a run CSV");
  rates->add_option("csv", csv_path)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) {
      plan.solver.linear_solver =
          linear == "direct" ? LinearSolverKind::direct : LinearSolverKind::iterative;
      plan.solver.linearization =
          linearization == "newton" ? Linearization::newton : Linearization::kacanov;
      return run_command(plan, format, out_path, quiet);
    }
    if (*verify) return verify_command(suite, seed, samples, csv);
    return rates_command(csv_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
