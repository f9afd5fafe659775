#ifndef SHRINKAGE_MODEL_HPP
#define SHRINKAGE_MODEL_HPP

#include <optional>
#include <string>
#include <vector>

namespace shrinkage {

/* Core data model.
 *
 * An experiment reports a treatment-effect estimate theta_hat (a ratio of
 * treated to control outcome means, or any other roughly-normal effect
 * estimate) together with its standard error sigma_hat.  Estimates are
 * modeled as
 *
 *     theta_hat_i | theta_i        ~ Normal(theta_i, sigma_hat_i^2)
 *     theta_i     | m0, lambda_i   ~ Normal(m0, lambda_i * tau)
 *     lambda_i                     ~ InverseGamma(a/2, b/2)
 *
 * with the per-experiment variance inflator lambda_i letting genuine
 * outliers escape the pull toward m0.  Fixing lambda_i = 1 recovers a plain
 * normal-normal hierarchy.
 */

// One experiment, summary form.  sigma_hat is on the same scale as theta_hat.
struct ExperimentSummary {
  std::string id;
  double theta_hat = 0.0;
  double sigma_hat = 1.0;
  bool selected = true;
  std::optional<double> replication_theta_hat;
  std::optional<double> replication_sigma_hat;

  // Throws ValidationError unless theta_hat is finite and sigma_hat > 0
  // (and the replication fields, when present, satisfy the same).
  void validate() const;
};

// Unit rows for one experiment: outcome y and arm assignment z (1 = treated).
struct UnitLevelData {
  std::vector<double> outcomes;
  std::vector<int> assignments;

  void validate() const;
};

// Hyperparameters of the hierarchy above.
struct HyperParams {
  double m0 = 0.0;
  double tau = 1.0;
  double a = 3.0;
  double b = 3.0;

  void validate() const;
};

enum class Estimator { FaceValue, GlobalShrinkage, HybridShrinkage };

const char* to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

// A point estimate with an uncertainty interval.  For Bayesian methods the
// interval is a central credible interval; for FaceValue it is the usual
// normal confidence interval.
struct PosteriorSummary {
  double mean = 0.0;
  double variance = 0.0;
  double interval_low = 0.0;
  double interval_high = 0.0;
  double level = 0.9;
  Estimator method = Estimator::FaceValue;
  // lambda at which the conditional posterior was evaluated; empty for
  // FaceValue and for fully marginalized posteriors.
  std::optional<double> lambda_used;
  // False only when an internal optimizer hit its iteration cap.
  bool lambda_converged = true;
};

// Ratio-of-means effect estimate with a delta-method standard error:
//   theta_hat = mean(y | z=1) / mean(y | z=0)
//   Var(X/Y) ~= Var(X)/Y^2 + X^2 Var(Y)/Y^4
// Within-arm variances are unbiased sample variances over the arm count; a
// single-unit arm contributes zero estimated variance.  Throws
// ValidationError if an arm is empty and NumericalError if the control mean
// is exactly zero.
ExperimentSummary face_value_estimate(const UnitLevelData& data, const std::string& id = "");

// theta_hat taken at face value: mean theta_hat, variance sigma_hat^2,
// interval theta_hat +/- z * sigma_hat.
PosteriorSummary face_value_summary(const ExperimentSummary& exp, double level = 0.9);

// Conditional posterior of theta given theta_hat at a fixed lambda:
//   mean = [s^2 / (s^2 + L)] m0 + [L / (s^2 + L)] theta_hat,  L = lambda*tau
//   var  = (1/s^2 + 1/L)^(-1)
// The method label is recorded verbatim in the output.
PosteriorSummary conditional_posterior(const ExperimentSummary& exp, const HyperParams& hp,
                                       double lambda, double level = 0.9,
                                       Estimator method = Estimator::GlobalShrinkage);

// Conditional posterior with lambda pinned at 1 (single-scale shrinkage).
PosteriorSummary global_shrinkage_estimate(const ExperimentSummary& exp, const HyperParams& hp,
                                           double level = 0.9);

// z multiplier for a central interval: Phi^(-1)((1 + level)/2).
double interval_z(double level);

}  // namespace shrinkage

#endif  // SHRINKAGE_MODEL_HPP
