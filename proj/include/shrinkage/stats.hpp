#ifndef SHRINKAGE_STATS_HPP
#define SHRINKAGE_STATS_HPP

#include <cstddef>
#include <utility>
#include <vector>

namespace shrinkage {

/* Small numerical toolbox: standard-normal functions, summary statistics,
   Kolmogorov-Smirnov distances and Gauss-Legendre rules.  Everything here is
   deterministic and thread-safe. */

double normal_pdf(double x);

// Phi(x), evaluated through erfc so both tails keep full relative accuracy.
double normal_cdf(double x);

// Inverse of Phi.  Acklam's rational approximation polished with one Halley
// step of the CDF; absolute error is below 1e-13 over (1e-300, 1-1e-16).
// Throws ValidationError outside (0, 1).
double normal_quantile(double p);

double mean(const std::vector<double>& xs);

// Unbiased (n-1 denominator) sample variance; requires at least two values.
double sample_variance(const std::vector<double>& xs);

// sup_x |F_n(x) - x| against the uniform CDF on [0,1].  Values are copied and
// sorted internally; entries must lie in [0,1].
double ks_distance_uniform(std::vector<double> values);

// Two-sample sup-distance between empirical CDFs.
double ks_distance_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic two-sample critical value sqrt(-ln(alpha/2)/2) * sqrt((n+m)/(n*m)).
double ks_two_sample_critical(double alpha, std::size_t n, std::size_t m);

struct GaussLegendre {
  std::vector<double> nodes;    // on (-1, 1), ascending
  std::vector<double> weights;  // sum to 2
};

// Nodes and weights by Newton iteration on the Legendre recurrence.
GaussLegendre gauss_legendre(int n);

// Cached 64-point rule (the workhorse for the lambda integrals).
const GaussLegendre& gauss_legendre_64();

// Affine image of a [-1,1] node on [lo, hi]; the matching weight scale is
// (hi - lo) / 2.
inline double map_node(double node, double lo, double hi) {
  return 0.5 * (hi - lo) * node + 0.5 * (hi + lo);
}

}  // namespace shrinkage

#endif  // SHRINKAGE_STATS_HPP
