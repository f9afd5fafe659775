#ifndef SHRINKAGE_CALIBRATION_HPP
#define SHRINKAGE_CALIBRATION_HPP

#include <vector>

#include "shrinkage/model.hpp"

namespace shrinkage {

/* Fitting (m0, tau) from a corpus of experiments with (a, b) held fixed.
 *
 * Both fitters assume the corpus approximates a pre-selection population;
 * fitting on selected-only data biases tau upward and m0 toward the
 * selection boundary, which is why the CLI demands an explicit
 * acknowledgement flag before doing so.
 */

enum class FitMethod { MethodOfMoments, MarginalMLE };

const char* to_string(FitMethod m);

inline constexpr double kTauFloor = 1e-12;

struct CalibrationReport {
  HyperParams hyperparams;
  int n_experiments_used = 0;
  double log_marginal_likelihood = 0.0;
  FitMethod method = FitMethod::MethodOfMoments;
  // True when the moment equation produced a non-positive tau and the floor
  // was substituted.
  bool tau_floored = false;
};

// Sum over experiments of log Integral N(theta_hat; m0, sigma_hat^2 +
// lambda tau) InverseGamma(lambda; a/2, b/2) dlambda, each integral by
// 64-point Gauss-Legendre on log(lambda) over an adaptively located window.
// Throws NumericalError if any per-experiment term is non-finite.
double marginal_log_likelihood(const std::vector<ExperimentSummary>& corpus,
                               const HyperParams& hp);

// Closed-form moment matching:
//   m0  = precision-weighted mean of theta_hat
//   tau solves  Var(theta_hat) = mean(sigma_hat^2) + tau * b/(a-2)
// Requires a > 2 and at least two experiments; a non-positive solution is
// floored at kTauFloor and flagged.
CalibrationReport fit_method_of_moments(const std::vector<ExperimentSummary>& corpus, double a,
                                        double b);

// Coordinate-ascent maximization of the marginal likelihood over (m0, tau),
// started from the moment fit, so its objective value never falls below the
// moment fit's.
CalibrationReport fit_marginal_mle(const std::vector<ExperimentSummary>& corpus, double a,
                                   double b, double tol = 1e-7);

}  // namespace shrinkage

#endif  // SHRINKAGE_CALIBRATION_HPP
