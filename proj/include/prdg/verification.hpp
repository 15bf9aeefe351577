#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prdg/forms.hpp"

namespace prdg {

/// Outcome of one sampled check. For identities `worst_ratio` is the largest
/// relative defect and every sample above `threshold` counts as a violation;
/// for inequalities it is the largest sampled ratio, and non-finite or
/// sign-violating samples count as violations. Degenerate samples (zero
/// denominators) are skipped and counted separately.
struct SampleReport {
  std::string name;
  double p = 0.0;
  double delta = 0.0;
  long samples = 0;
  long skipped = 0;
  long violations = 0;
  double worst_ratio = 0.0;
  double min_ratio = 0.0;   // equivalences: smallest sampled ratio
  double threshold = 0.0;   // identities only

  bool passed() const;
};

/// Uniform doubles in [lo, hi) from a 64-bit Mersenne twister: 53 random bits
/// per draw, so seeded runs are reproducible across platforms.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed);
  double uniform(double lo, double hi);
  Point point(double lo, double hi);
  Eigen::VectorXd vector(Eigen::Index n, double lo, double hi);

 private:
  std::mt19937_64 engine_;
};

/// Ratio [(s(x) - s(z)).(x - y) - delta (s(y) - s(x)).(y - x)] / [(|x| + |z|)^{p-2} |x - z|^2]
/// over random triples with components in [-10, 10].
SampleReport check_hirn_bound(double p, double delta, long n_samples, std::uint64_t seed);

/// (s(y) - s(x)).(y - x) against (|x| + |y|)^{p-2} |x - y|^2 and against
/// phi_{|x|}(|x - y|) = int_0^{|x-y|} (|x| + s)^{p-2} s ds (adaptive
/// Gauss-Kronrod). worst_ratio / min_ratio are the extreme ratios over both
/// comparisons.
SampleReport check_equivalences(double p, long n_samples, std::uint64_t seed);

/// phi_a(t) by adaptive quadrature.
double phi_integral(double a, double t, double p);

/// |b_h(v, v) - ||v||_{beta,mu,h}^2| / ||v||^2 for random fields, homogeneous
/// boundary data; threshold 1e-10.
SampleReport check_coercivity(const ProblemSpec& spec, const BrokenSpace& space, int n_fields,
                              std::uint64_t seed);

/// Defining identity of the face liftings, for every face and every vector
/// basis function, with the jump of a random field as data; threshold 1e-12.
SampleReport check_lifting(const BrokenSpace& space, std::uint64_t seed);

/// Integration by parts formula for random polynomial pairs (v, tau);
/// threshold 1e-11.
SampleReport check_ibp(const BrokenSpace& space, int n_pairs, std::uint64_t seed);

/// PASS/FAIL table or CSV (name,p,delta,samples,worst_ratio,violations).
std::string format_reports(const std::vector<SampleReport>& reports, bool csv);

}  // namespace prdg
