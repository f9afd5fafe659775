#ifndef SHRINKAGE_LOCAL_SHRINKAGE_HPP
#define SHRINKAGE_LOCAL_SHRINKAGE_HPP

#include <cstdint>
#include <vector>

#include "shrinkage/model.hpp"

namespace shrinkage {

/* Per-experiment variance inflation.
 *
 * With theta integrated out, the posterior of lambda given theta_hat has log
 * density (up to a constant)
 *
 *   -0.5 log(s^2 + lambda tau) - (theta_hat - m0)^2 / (2 (s^2 + lambda tau))
 *   - (a/2 + 1) log lambda - b / (2 lambda)
 *
 * The hybrid estimator plugs the mode of this density into the conditional
 * posterior; the Gibbs sampler and the quadrature path below integrate over
 * it instead.
 */

// Unnormalized log density of lambda given theta_hat (theta marginalized).
double lambda_log_posterior(double lambda, const ExperimentSummary& exp, const HyperParams& hp);

struct LambdaPosterior {
  double mode = 1.0;
  double log_density_at_mode = 0.0;  // same constant offset as lambda_log_posterior
  int iterations = 0;
  bool converged = false;
};

// Mode by golden-section search on log(lambda).  The initial bracket spans
// [1e-8, 1e8] and grows geometrically while the coarse-scan argmax sits on a
// boundary; `tol` is measured in log(lambda).  Never throws on slow
// convergence: a capped search returns converged = false.
LambdaPosterior lambda_posterior_mode(const ExperimentSummary& exp, const HyperParams& hp,
                                      double tol = 1e-8, int max_iterations = 200);

// Conditional posterior evaluated at the lambda mode.  A non-converged mode
// search is reported through lambda_converged, not an exception.
PosteriorSummary hybrid_shrinkage_estimate(const ExperimentSummary& exp, const HyperParams& hp,
                                           double level = 0.9);

struct GibbsTrace {
  std::vector<double> theta_draws;
  std::vector<double> lambda_draws;
  int n_burn = 0;
  int n_keep = 0;
  int thin = 1;
  std::uint64_t seed = 0;
};

// Two-block Gibbs sampler over (theta, lambda):
//   theta  | lambda ~ the conditional posterior above
//   lambda | theta  ~ InverseGamma((a+1)/2, (b + (theta-m0)^2/tau)/2)
// Initialized at lambda = 1 and the matching conditional mean.  Identical
// seeds give bitwise-identical traces.
GibbsTrace gibbs_sample(const ExperimentSummary& exp, const HyperParams& hp, int n_burn = 1000,
                        int n_keep = 4000, std::uint64_t seed = 0, int thin = 1);

// Fully marginalized posterior of theta (lambda integrated out numerically):
// Gauss-Legendre over log(lambda) on an adaptively located window, central
// interval solved from the mixture CDF.  Deterministic; used where interval
// calibration matters more than speed.
PosteriorSummary marginal_hybrid_posterior(const ExperimentSummary& exp, const HyperParams& hp,
                                           double level = 0.9, int nodes = 96);

namespace detail {

// Integration window in t = log(lambda): a Laplace-style interval around the
// integrand mode, expanded until both endpoints are negligible relative to
// the peak, clipped to [log(1e-12), log(1e12)].
struct LogLambdaWindow {
  double lo = 0.0;
  double hi = 0.0;
  double t_mode = 0.0;
};

LogLambdaWindow locate_lambda_window(const ExperimentSummary& exp, const HyperParams& hp);

}  // namespace detail

}  // namespace shrinkage

#endif  // SHRINKAGE_LOCAL_SHRINKAGE_HPP
