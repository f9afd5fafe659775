#include "shrinkage/local_shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "shrinkage/errors.hpp"
#include "shrinkage/rng.hpp"
#include "shrinkage/stats.hpp"

namespace shrinkage {

namespace {

constexpr double kLogLambdaScanLo = -18.420680743952367;  // log(1e-8)
constexpr double kLogLambdaScanHi = 18.420680743952367;   // log(1e8)
constexpr double kLogLambdaClipLo = -27.631021115928547;  // log(1e-12)
constexpr double kLogLambdaClipHi = 27.631021115928547;   // log(1e12)
constexpr double kInvPhi = 0.61803398874989484820;

constexpr std::uint64_t kGibbsStream = 0xA1;

struct GoldenResult {
  double t = 0.0;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Golden-section search for a maximum of f on [lo, hi].
GoldenResult golden_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                        int max_iterations) {
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  GoldenResult out;
  while (out.iterations < max_iterations && (hi - lo) > tol) {
    ++out.iterations;
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = f(d);
    }
  }
  out.converged = (hi - lo) <= tol;
  out.t = 0.5 * (lo + hi);
  out.f = f(out.t);
  return out;
}

struct ScanResult {
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double best_t = 0.0;
};

// Coarse grid scan over t = log(lambda); the range grows geometrically while
// the argmax sits on a boundary.  Returns a three-point bracket around the
// best grid point.
ScanResult coarse_scan(const std::function<double(double)>& g) {
  double lo = kLogLambdaScanLo;
  double hi = kLogLambdaScanHi;
  constexpr int kPoints = 65;
  for (int round = 0; round < 8; ++round) {
    int best = 0;
    double best_val = -HUGE_VAL;
    const double step = (hi - lo) / (kPoints - 1);
    for (int i = 0; i < kPoints; ++i) {
      const double v = g(lo + step * i);
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    const bool at_lo = best == 0 && lo > kLogLambdaClipLo;
    const bool at_hi = best == kPoints - 1 && hi < kLogLambdaClipHi;
    if (!at_lo && !at_hi) {
      ScanResult out;
      out.best_t = lo + step * best;
      out.bracket_lo = std::max(lo, out.best_t - step);
      out.bracket_hi = std::min(hi, out.best_t + step);
      return out;
    }
    const double span = hi - lo;
    if (at_lo) lo = std::max(kLogLambdaClipLo, lo - span);
    if (at_hi) hi = std::min(kLogLambdaClipHi, hi + span);
  }
  ScanResult out;
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.best_t = 0.5 * (lo + hi);
  return out;
}

}  // namespace

double lambda_log_posterior(double lambda, const ExperimentSummary& exp, const HyperParams& hp) {
  exp.validate();
  hp.validate();
  if (!(std::isfinite(lambda) && lambda > 0.0)) {
    throw ValidationError("lambda_log_posterior: lambda must be positive and finite");
  }
  const double s2 = exp.sigma_hat * exp.sigma_hat;
  const double total = s2 + lambda * hp.tau;
  const double dev = exp.theta_hat - hp.m0;
  return -0.5 * std::log(total) - dev * dev / (2.0 * total) -
         (0.5 * hp.a + 1.0) * std::log(lambda) - hp.b / (2.0 * lambda);
}

LambdaPosterior lambda_posterior_mode(const ExperimentSummary& exp, const HyperParams& hp,
                                      double tol, int max_iterations) {
  exp.validate();
  hp.validate();
  if (!(tol > 0.0)) throw ValidationError("lambda_posterior_mode: tol must be positive");
  if (max_iterations < 1) throw ValidationError("lambda_posterior_mode: need max_iterations >= 1");

  const auto g = [&](double t) { return lambda_log_posterior(std::exp(t), exp, hp); };
  const ScanResult scan = coarse_scan(g);
  const GoldenResult res = golden_max(g, scan.bracket_lo, scan.bracket_hi, tol, max_iterations);

  LambdaPosterior out;
  out.mode = std::exp(res.t);
  out.log_density_at_mode = res.f;
  out.iterations = res.iterations;
  out.converged = res.converged;
  return out;
}

PosteriorSummary hybrid_shrinkage_estimate(const ExperimentSummary& exp, const HyperParams& hp,
                                           double level) {
  const LambdaPosterior lp = lambda_posterior_mode(exp, hp);
  PosteriorSummary out =
      conditional_posterior(exp, hp, lp.mode, level, Estimator::HybridShrinkage);
  out.lambda_converged = lp.converged;
  return out;
}

GibbsTrace gibbs_sample(const ExperimentSummary& exp, const HyperParams& hp, int n_burn,
                        int n_keep, std::uint64_t seed, int thin) {
  exp.validate();
  hp.validate();
  if (n_burn < 0) throw ValidationError("gibbs_sample: n_burn must be >= 0");
  if (n_keep <= 0) throw ValidationError("gibbs_sample: n_keep must be positive");
  if (thin <= 0) throw ValidationError("gibbs_sample: thin must be positive");

  Rng rng = Rng::stream(seed, kGibbsStream);
  const double s2 = exp.sigma_hat * exp.sigma_hat;

  GibbsTrace trace;
  trace.theta_draws.reserve(static_cast<std::size_t>(n_keep));
  trace.lambda_draws.reserve(static_cast<std::size_t>(n_keep));
  trace.n_burn = n_burn;
  trace.n_keep = n_keep;
  trace.thin = thin;
  trace.seed = seed;

  double lambda = 1.0;
  double theta;
  {
    const double prior_var = lambda * hp.tau;
    theta = (s2 * hp.m0 + prior_var * exp.theta_hat) / (s2 + prior_var);
  }

  const long total = static_cast<long>(n_burn) + static_cast<long>(n_keep) * thin;
  for (long sweep = 0; sweep < total; ++sweep) {
    // (i) theta | lambda.
    const double prior_var = lambda * hp.tau;
    const double total_var = s2 + prior_var;
    const double cond_mean = (s2 * hp.m0 + prior_var * exp.theta_hat) / total_var;
    const double cond_var = s2 * prior_var / total_var;
    theta = rng.normal(cond_mean, std::sqrt(cond_var));

    // (ii) lambda | theta.
    const double dev = theta - hp.m0;
    lambda = rng.inverse_gamma(0.5 * (hp.a + 1.0), 0.5 * (hp.b + dev * dev / hp.tau));

    const long past_burn = sweep - n_burn;
    if (past_burn >= 0 && past_burn % thin == 0 &&
        trace.theta_draws.size() < static_cast<std::size_t>(n_keep)) {
      trace.theta_draws.push_back(theta);
      trace.lambda_draws.push_back(lambda);
    }
  }
  return trace;
}

namespace detail {

LogLambdaWindow locate_lambda_window(const ExperimentSummary& exp, const HyperParams& hp) {
  const auto g = [&](double t) { return lambda_log_posterior(std::exp(t), exp, hp); };
  const ScanResult scan = coarse_scan(g);
  const GoldenResult res = golden_max(g, scan.bracket_lo, scan.bracket_hi, 1e-6, 200);
  const double t_mode = res.t;
  const double g_mode = res.f;

  // Curvature at the mode sets the initial Laplace half-width.
  double sd = 1.0;
  double h = 1e-3;
  for (int pass = 0; pass < 2; ++pass) {
    const double g2 = (g(t_mode + h) - 2.0 * g_mode + g(t_mode - h)) / (h * h);
    if (g2 < -1e-12) {
      sd = 1.0 / std::sqrt(-g2);
    } else {
      sd = 2.0;
      break;
    }
    if (sd >= 1e-2) break;
    h = std::max(sd / 10.0, 1e-9);
  }

  LogLambdaWindow w;
  w.t_mode = t_mode;
  w.lo = std::max(kLogLambdaClipLo, t_mode - 8.0 * sd);
  w.hi = std::min(kLogLambdaClipHi, t_mode + 8.0 * sd);

  // Grow each side until the integrand there is negligible against the peak.
  // The +t term accounts for the d(lambda) = e^t dt Jacobian.
  const auto significant = [&](double t) { return g(t) + t > g_mode + t_mode - 45.0; };
  for (int i = 0; i < 80 && w.lo > kLogLambdaClipLo && significant(w.lo); ++i) {
    w.lo = std::max(kLogLambdaClipLo, w.lo - std::max(0.5, 0.8 * (w.t_mode - w.lo)));
  }
  for (int i = 0; i < 80 && w.hi < kLogLambdaClipHi && significant(w.hi); ++i) {
    w.hi = std::min(kLogLambdaClipHi, w.hi + std::max(0.5, 0.8 * (w.hi - w.t_mode)));
  }
  return w;
}

}  // namespace detail

PosteriorSummary marginal_hybrid_posterior(const ExperimentSummary& exp, const HyperParams& hp,
                                           double level, int nodes) {
  exp.validate();
  hp.validate();
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("marginal_hybrid_posterior: level must lie inside (0, 1)");
  }
  if (nodes < 8) throw ValidationError("marginal_hybrid_posterior: need at least 8 nodes");

  const detail::LogLambdaWindow w = detail::locate_lambda_window(exp, hp);
  const GaussLegendre rule = nodes == 64 ? gauss_legendre_64() : gauss_legendre(nodes);
  const double half_span = 0.5 * (w.hi - w.lo);

  const double s2 = exp.sigma_hat * exp.sigma_hat;
  const int n = static_cast<int>(rule.nodes.size());
  std::vector<double> weight(n), comp_mean(n), comp_sd(n);
  double log_max = -HUGE_VAL;
  std::vector<double> log_terms(n);
  for (int i = 0; i < n; ++i) {
    const double t = map_node(rule.nodes[i], w.lo, w.hi);
    const double lambda = std::exp(t);
    log_terms[i] = lambda_log_posterior(lambda, exp, hp) + t + std::log(rule.weights[i] * half_span);
    log_max = std::max(log_max, log_terms[i]);
    const double prior_var = lambda * hp.tau;
    const double total = s2 + prior_var;
    comp_mean[i] = (s2 * hp.m0 + prior_var * exp.theta_hat) / total;
    comp_sd[i] = std::sqrt(s2 * prior_var / total);
  }
  if (!std::isfinite(log_max)) {
    throw NumericalError("marginal_hybrid_posterior: degenerate lambda integral for '" +
                         exp.id + "'");
  }
  double norm = 0.0;
  for (int i = 0; i < n; ++i) {
    weight[i] = std::exp(log_terms[i] - log_max);
    norm += weight[i];
  }
  for (int i = 0; i < n; ++i) weight[i] /= norm;

  double post_mean = 0.0, second = 0.0;
  for (int i = 0; i < n; ++i) {
    post_mean += weight[i] * comp_mean[i];
    second += weight[i] * (comp_sd[i] * comp_sd[i] + comp_mean[i] * comp_mean[i]);
  }
  const double post_var = std::max(second - post_mean * post_mean, 1e-300);

  const auto cdf = [&](double x) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += weight[i] * normal_cdf((x - comp_mean[i]) / comp_sd[i]);
    return acc;
  };
  double lo_bracket = comp_mean[0], hi_bracket = comp_mean[0];
  for (int i = 0; i < n; ++i) {
    lo_bracket = std::min(lo_bracket, comp_mean[i] - 15.0 * comp_sd[i]);
    hi_bracket = std::max(hi_bracket, comp_mean[i] + 15.0 * comp_sd[i]);
  }
  const auto solve_quantile = [&](double p) {
    double lo = lo_bracket, hi = hi_bracket;
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * (1.0 + std::fabs(lo) + std::fabs(hi));
         ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  PosteriorSummary out;
  out.mean = post_mean;
  out.variance = post_var;
  out.interval_low = solve_quantile(0.5 * (1.0 - level));
  out.interval_high = solve_quantile(0.5 * (1.0 + level));
  out.level = level;
  out.method = Estimator::HybridShrinkage;
  out.lambda_used.reset();
  out.lambda_converged = true;
  return out;
}

}  // namespace shrinkage
