#include "shrinkage/model.hpp"

#include <cmath>
#include <string>

#include "shrinkage/errors.hpp"
#include "shrinkage/stats.hpp"

namespace shrinkage {

namespace {

void check_finite(double x, const char* name) {
  if (!std::isfinite(x)) {
    throw ValidationError(std::string(name) + " must be finite");
  }
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("interval level must lie strictly inside (0, 1), got " +
                          std::to_string(level));
  }
}

}  // namespace

void ExperimentSummary::validate() const {
  check_finite(theta_hat, "theta_hat");
  if (!(std::isfinite(sigma_hat) && sigma_hat > 0.0)) {
    throw ValidationError("experiment '" + id + "': sigma_hat must be positive and finite");
  }
  if (replication_theta_hat) check_finite(*replication_theta_hat, "replication_theta_hat");
  if (replication_sigma_hat &&
      !(std::isfinite(*replication_sigma_hat) && *replication_sigma_hat > 0.0)) {
    throw ValidationError("experiment '" + id + "': replication_sigma_hat must be positive");
  }
}

void UnitLevelData::validate() const {
  if (outcomes.size() != assignments.size()) {
    throw ValidationError("unit-level data: outcomes and assignments differ in length");
  }
  if (outcomes.empty()) throw ValidationError("unit-level data: no units");
  bool any_treated = false, any_control = false;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    check_finite(outcomes[i], "outcome");
    if (assignments[i] != 0 && assignments[i] != 1) {
      throw ValidationError("unit-level data: assignment must be 0 or 1");
    }
    (assignments[i] == 1 ? any_treated : any_control) = true;
  }
  if (!any_treated || !any_control) {
    throw ValidationError("unit-level data: need at least one treated and one control unit");
  }
}

void HyperParams::validate() const {
  check_finite(m0, "m0");
  if (!(std::isfinite(tau) && tau > 0.0)) throw ValidationError("tau must be positive");
  if (!(std::isfinite(a) && a > 0.0)) throw ValidationError("a must be positive");
  if (!(std::isfinite(b) && b > 0.0)) throw ValidationError("b must be positive");
}

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::FaceValue:
      return "face_value";
    case Estimator::GlobalShrinkage:
      return "global_shrinkage";
    case Estimator::HybridShrinkage:
      return "hybrid_shrinkage";
  }
  return "unknown";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "face_value") return Estimator::FaceValue;
  if (name == "global_shrinkage") return Estimator::GlobalShrinkage;
  if (name == "hybrid_shrinkage") return Estimator::HybridShrinkage;
  throw ValidationError("unknown estimator '" + name +
                        "' (expected face_value, global_shrinkage or hybrid_shrinkage)");
}

double interval_z(double level) {
  check_level(level);
  return normal_quantile(0.5 * (1.0 + level));
}

ExperimentSummary face_value_estimate(const UnitLevelData& data, const std::string& id) {
  data.validate();

  double sum_t = 0.0, sum_c = 0.0;
  std::size_t n_t = 0, n_c = 0;
  for (std::size_t i = 0; i < data.outcomes.size(); ++i) {
    if (data.assignments[i] == 1) {
      sum_t += data.outcomes[i];
      ++n_t;
    } else {
      sum_c += data.outcomes[i];
      ++n_c;
    }
  }
  const double mean_t = sum_t / static_cast<double>(n_t);
  const double mean_c = sum_c / static_cast<double>(n_c);
  if (mean_c == 0.0) {
    throw NumericalError("experiment '" + id + "': control-arm mean is zero, ratio undefined");
  }

  double ss_t = 0.0, ss_c = 0.0;
  for (std::size_t i = 0; i < data.outcomes.size(); ++i) {
    const double y = data.outcomes[i];
    if (data.assignments[i] == 1) {
      ss_t += (y - mean_t) * (y - mean_t);
    } else {
      ss_c += (y - mean_c) * (y - mean_c);
    }
  }
  const double var_mean_t =
      n_t > 1 ? ss_t / (static_cast<double>(n_t - 1) * static_cast<double>(n_t)) : 0.0;
  const double var_mean_c =
      n_c > 1 ? ss_c / (static_cast<double>(n_c - 1) * static_cast<double>(n_c)) : 0.0;

  const double ratio = mean_t / mean_c;
  const double var_ratio =
      var_mean_t / (mean_c * mean_c) + mean_t * mean_t * var_mean_c / std::pow(mean_c, 4);

  ExperimentSummary out;
  out.id = id;
  out.theta_hat = ratio;
  out.sigma_hat = std::sqrt(var_ratio);
  out.selected = true;
  return out;
}

PosteriorSummary face_value_summary(const ExperimentSummary& exp, double level) {
  exp.validate();
  check_level(level);
  const double z = interval_z(level);
  PosteriorSummary out;
  out.mean = exp.theta_hat;
  out.variance = exp.sigma_hat * exp.sigma_hat;
  out.interval_low = exp.theta_hat - z * exp.sigma_hat;
  out.interval_high = exp.theta_hat + z * exp.sigma_hat;
  out.level = level;
  out.method = Estimator::FaceValue;
  out.lambda_used.reset();
  return out;
}

PosteriorSummary conditional_posterior(const ExperimentSummary& exp, const HyperParams& hp,
                                       double lambda, double level, Estimator method) {
  exp.validate();
  hp.validate();
  check_level(level);
  if (!(std::isfinite(lambda) && lambda > 0.0)) {
    throw ValidationError("conditional_posterior: lambda must be positive and finite");
  }

  const double s2 = exp.sigma_hat * exp.sigma_hat;
  const double prior_var = lambda * hp.tau;
  const double total = s2 + prior_var;
  const double w_prior = s2 / total;
  const double w_data = prior_var / total;
  const double post_mean = w_prior * hp.m0 + w_data * exp.theta_hat;
  const double post_var = s2 * prior_var / total;
  if (!std::isfinite(post_mean) || !std::isfinite(post_var)) {
    throw NumericalError("conditional_posterior: non-finite posterior for experiment '" +
                         exp.id + "'");
  }

  const double z = interval_z(level);
  const double half = z * std::sqrt(post_var);
  PosteriorSummary out;
  out.mean = post_mean;
  out.variance = post_var;
  out.interval_low = post_mean - half;
  out.interval_high = post_mean + half;
  out.level = level;
  out.method = method;
  out.lambda_used = lambda;
  return out;
}

PosteriorSummary global_shrinkage_estimate(const ExperimentSummary& exp, const HyperParams& hp,
                                           double level) {
  return conditional_posterior(exp, hp, 1.0, level, Estimator::GlobalShrinkage);
}

}  // namespace shrinkage
