#include "shrinkage/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "shrinkage/errors.hpp"
#include "shrinkage/local_shrinkage.hpp"
#include "shrinkage/stats.hpp"

namespace shrinkage {

const char* to_string(FitMethod m) {
  switch (m) {
    case FitMethod::MethodOfMoments:
      return "method_of_moments";
    case FitMethod::MarginalMLE:
      return "marginal_mle";
  }
  return "unknown";
}

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

// log of one experiment's marginal likelihood: the inverse-gamma mixing
// density integrated out over log(lambda) by Gauss-Legendre on an adaptive
// window around the integrand's peak.
double experiment_log_marginal(const ExperimentSummary& exp, const HyperParams& hp) {
  const detail::LogLambdaWindow window = detail::locate_lambda_window(exp, hp);
  const GaussLegendre& gl = gauss_legendre_64();
  const double half_span = 0.5 * (window.hi - window.lo);
  // lambda_log_posterior drops the integrand's normalizing constants; restore
  // them so values are comparable across hyperparameter settings.
  const double log_const =
      -kHalfLog2Pi + 0.5 * hp.a * std::log(0.5 * hp.b) - std::lgamma(0.5 * hp.a);
  std::vector<double> log_terms(gl.nodes.size());
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double t = map_node(gl.nodes[i], window.lo, window.hi);
    log_terms[i] = lambda_log_posterior(std::exp(t), exp, hp) + log_const + t +
                   std::log(gl.weights[i] * half_span);
  }
  const double peak = *std::max_element(log_terms.begin(), log_terms.end());
  double acc = 0.0;
  for (double lt : log_terms) acc += std::exp(lt - peak);
  const double result = peak + std::log(acc);
  if (!std::isfinite(result)) {
    throw NumericalError("marginal likelihood term is non-finite for experiment '" + exp.id +
                         "'");
  }
  return result;
}

// Coarse scan plus golden-section refinement of a 1-D unimodal objective.
// Returns the better of the refined point and the best scanned point, and
// never returns a value below f(fallback_x); that keeps coordinate ascent
// monotone even if the refinement stalls.
struct Maximum {
  double x = 0.0;
  double value = 0.0;
};

Maximum maximize_scalar(const std::function<double(double)>& f, double lo, double hi, int n_scan,
                        double fallback_x, double fallback_value, double tol) {
  Maximum best{fallback_x, fallback_value};
  std::vector<double> xs(static_cast<std::size_t>(n_scan));
  std::vector<double> fs(static_cast<std::size_t>(n_scan));
  int best_idx = -1;
  for (int i = 0; i < n_scan; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (n_scan - 1);
    const double fx = f(x);
    xs[static_cast<std::size_t>(i)] = x;
    fs[static_cast<std::size_t>(i)] = fx;
    if (fx > best.value) {
      best = {x, fx};
      best_idx = i;
    }
  }
  double a = lo;
  double b = hi;
  if (best_idx >= 0) {
    a = xs[static_cast<std::size_t>(std::max(0, best_idx - 1))];
    b = xs[static_cast<std::size_t>(std::min(n_scan - 1, best_idx + 1))];
  } else {
    // The scan never beat the fallback; refine around the fallback point.
    const double step = (hi - lo) / (n_scan - 1);
    a = std::max(lo, fallback_x - step);
    b = std::min(hi, fallback_x + step);
  }
  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int iter = 0; iter < 200 && (b - a) > tol; ++iter) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = f(xm);
  if (fm > best.value) best = {xm, fm};
  if (f1 > best.value) best = {x1, f1};
  if (f2 > best.value) best = {x2, f2};
  return best;
}

void validate_shape_scale(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0) {
    throw ValidationError("mixing shape and scale must be positive and finite");
  }
}

}  // namespace

double marginal_log_likelihood(const std::vector<ExperimentSummary>& corpus,
                               const HyperParams& hp) {
  if (corpus.empty()) {
    throw ValidationError("marginal likelihood needs a nonempty corpus");
  }
  hp.validate();
  double acc = 0.0;
  for (const ExperimentSummary& exp : corpus) {
    exp.validate();
    acc += experiment_log_marginal(exp, hp);
  }
  return acc;
}

CalibrationReport fit_method_of_moments(const std::vector<ExperimentSummary>& corpus, double a,
                                        double b) {
  validate_shape_scale(a, b);
  if (!(a > 2.0)) {
    throw ValidationError("method of moments needs shape > 2 so the mixing mean is finite");
  }
  if (corpus.size() < 2) {
    throw ValidationError("method of moments needs at least two experiments");
  }
  double weight_sum = 0.0;
  double weighted_theta = 0.0;
  std::vector<double> theta(corpus.size());
  std::vector<double> s2(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const ExperimentSummary& exp = corpus[i];
    exp.validate();
    const double w = 1.0 / (exp.sigma_hat * exp.sigma_hat);
    weight_sum += w;
    weighted_theta += w * exp.theta_hat;
    theta[i] = exp.theta_hat;
    s2[i] = exp.sigma_hat * exp.sigma_hat;
  }
  const double m0 = weighted_theta / weight_sum;
  // Var(theta_hat) = mean(sigma_hat^2) + tau * E[lambda], with the mixing
  // mean E[lambda] = b / (a - 2).
  const double excess = sample_variance(theta) - mean(s2);
  double tau = excess * (a - 2.0) / b;
  bool floored = false;
  if (!(tau >= kTauFloor)) {
    tau = kTauFloor;
    floored = true;
  }
  CalibrationReport report;
  report.hyperparams = HyperParams{m0, tau, a, b};
  report.hyperparams.validate();
  report.n_experiments_used = static_cast<int>(corpus.size());
  report.method = FitMethod::MethodOfMoments;
  report.tau_floored = floored;
  report.log_marginal_likelihood = marginal_log_likelihood(corpus, report.hyperparams);
  return report;
}

CalibrationReport fit_marginal_mle(const std::vector<ExperimentSummary>& corpus, double a,
                                   double b, double tol) {
  if (!(tol > 0.0)) {
    throw ValidationError("tolerance must be positive");
  }
  CalibrationReport report = fit_method_of_moments(corpus, a, b);
  report.method = FitMethod::MarginalMLE;

  double theta_lo = corpus.front().theta_hat;
  double theta_hi = theta_lo;
  double mean_s2 = 0.0;
  std::vector<double> theta(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    theta_lo = std::min(theta_lo, corpus[i].theta_hat);
    theta_hi = std::max(theta_hi, corpus[i].theta_hat);
    mean_s2 += corpus[i].sigma_hat * corpus[i].sigma_hat;
    theta[i] = corpus[i].theta_hat;
  }
  mean_s2 /= static_cast<double>(corpus.size());
  const double theta_var = sample_variance(theta);
  const double m0_pad = std::max(1.0, 0.5 * (theta_hi - theta_lo));
  const double m0_lo = theta_lo - m0_pad;
  const double m0_hi = theta_hi + m0_pad;
  const double log_tau_lo = std::log(kTauFloor);
  const double log_tau_hi = std::log(1e4 * std::max({theta_var, mean_s2, 1e-8}));

  double m0 = report.hyperparams.m0;
  double log_tau = std::log(report.hyperparams.tau);
  double value = report.log_marginal_likelihood;

  const auto objective = [&](double m0_cand, double log_tau_cand) {
    HyperParams hp{m0_cand, std::exp(log_tau_cand), a, b};
    return marginal_log_likelihood(corpus, hp);
  };

  constexpr int kMaxOuter = 40;
  for (int outer = 0; outer < kMaxOuter; ++outer) {
    const double previous = value;
    const Maximum m0_step = maximize_scalar(
        [&](double x) { return objective(x, log_tau); }, m0_lo, m0_hi, 25, m0, value,
        1e-9 * std::max(1.0, std::abs(m0_hi - m0_lo)));
    m0 = m0_step.x;
    value = m0_step.value;
    const Maximum tau_step =
        maximize_scalar([&](double t) { return objective(m0, t); }, log_tau_lo, log_tau_hi, 33,
                        log_tau, value, 1e-9);
    log_tau = tau_step.x;
    value = tau_step.value;
    if (value - previous < tol) break;
  }

  report.hyperparams = HyperParams{m0, std::exp(log_tau), a, b};
  report.hyperparams.validate();
  report.log_marginal_likelihood = value;
  report.tau_floored = report.hyperparams.tau <= kTauFloor * (1.0 + 1e-9);
  return report;
}

}  // namespace shrinkage
