#include "shrinkage/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "shrinkage/errors.hpp"
#include "shrinkage/rng.hpp"
#include "shrinkage/stats.hpp"

namespace shrinkage {

namespace {

constexpr std::uint64_t kPredictiveStream = 0xA2;
constexpr std::uint64_t kSplitStream = 0xC3;

double apply_statistic(CheckStatistic statistic, double x, double prior_mean) {
  switch (statistic) {
    case CheckStatistic::Identity:
      return x;
    case CheckStatistic::AbsDeviationFromPriorMean:
      return std::abs(x - prior_mean);
  }
  throw ValidationError("unknown check statistic");
}

void validate_posterior(const PosteriorSummary& posterior) {
  if (!std::isfinite(posterior.mean) || !std::isfinite(posterior.variance) ||
      posterior.variance < 0.0) {
    throw ValidationError("posterior summary needs a finite mean and nonnegative variance");
  }
}

}  // namespace

const char* to_string(CheckStatistic s) {
  switch (s) {
    case CheckStatistic::Identity:
      return "identity";
    case CheckStatistic::AbsDeviationFromPriorMean:
      return "abs_deviation_from_prior_mean";
  }
  return "unknown";
}

CheckStatistic parse_check_statistic(const std::string& name) {
  if (name == "identity") return CheckStatistic::Identity;
  if (name == "abs_deviation_from_prior_mean") return CheckStatistic::AbsDeviationFromPriorMean;
  throw ValidationError("unknown check statistic '" + name + "'");
}

std::vector<double> posterior_predictive_draws(const ExperimentSummary& exp,
                                               const PosteriorSummary& posterior, int n,
                                               std::uint64_t seed) {
  exp.validate();
  validate_posterior(posterior);
  if (n < 1) {
    throw ValidationError("predictive draw count must be at least 1");
  }
  Rng rng = Rng::stream(seed, kPredictiveStream);
  const double post_sd = std::sqrt(posterior.variance);
  std::vector<double> draws(static_cast<std::size_t>(n));
  for (double& d : draws) {
    const double theta = rng.normal(posterior.mean, post_sd);
    d = rng.normal(theta, exp.sigma_hat);
  }
  return draws;
}

PredictiveCheckResult tail_area_check(const ExperimentSummary& exp,
                                      const PosteriorSummary& posterior, CheckStatistic statistic,
                                      int n, std::uint64_t seed, double prior_mean) {
  if (n < 100) {
    throw ValidationError("tail-area check needs at least 100 replicates");
  }
  if (!std::isfinite(prior_mean)) {
    throw ValidationError("prior mean must be finite");
  }
  PredictiveCheckResult result;
  result.statistic_name = to_string(statistic);
  result.observed = apply_statistic(statistic, exp.theta_hat, prior_mean);
  const std::vector<double> draws = posterior_predictive_draws(exp, posterior, n, seed);
  result.replicated.resize(draws.size());
  std::size_t at_or_above = 0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    result.replicated[i] = apply_statistic(statistic, draws[i], prior_mean);
    if (result.replicated[i] >= result.observed) ++at_or_above;
  }
  result.tail_area = static_cast<double>(at_or_above) / static_cast<double>(draws.size());
  return result;
}

ReplicationEvaluation replication_evaluation(const std::vector<ExperimentSummary>& corpus,
                                             const std::vector<PosteriorSummary>& estimates,
                                             CoverageTarget target) {
  if (corpus.size() != estimates.size()) {
    throw ValidationError("corpus and estimate lists must have equal length");
  }
  ReplicationEvaluation eval;
  if (!estimates.empty()) eval.method = estimates.front().method;
  double abs_error_sum = 0.0;
  int covered = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const ExperimentSummary& exp = corpus[i];
    exp.validate();
    if (!exp.replication_theta_hat.has_value()) continue;
    const PosteriorSummary& est = estimates[i];
    validate_posterior(est);
    const double rep = *exp.replication_theta_hat;
    if (target == CoverageTarget::ReplicationIntervalOverlap) {
      if (!exp.replication_sigma_hat.has_value()) continue;
      const double z = interval_z(est.level);
      const double rep_lo = rep - z * *exp.replication_sigma_hat;
      const double rep_hi = rep + z * *exp.replication_sigma_hat;
      if (est.interval_low <= rep_hi && rep_lo <= est.interval_high) ++covered;
    } else {
      if (est.interval_low <= rep && rep <= est.interval_high) ++covered;
    }
    abs_error_sum += std::abs(est.mean - rep);
    ++eval.n_pairs;
  }
  if (eval.n_pairs == 0) {
    throw ValidationError("no experiment pairs with usable replication data");
  }
  eval.mae = abs_error_sum / eval.n_pairs;
  eval.coverage = static_cast<double>(covered) / eval.n_pairs;
  return eval;
}

std::pair<std::vector<ExperimentSummary>, std::vector<ExperimentSummary>> split_corpus(
    const std::vector<ExperimentSummary>& corpus, std::uint64_t seed) {
  if (corpus.size() < 2) {
    throw ValidationError("splitting needs at least two experiments");
  }
  const std::size_t n = corpus.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::stream(seed, kSplitStream);
  // Fisher-Yates with our own uniform so the permutation is stable across
  // standard library implementations.
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.u01() * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  const std::size_t first_size = (n + 1) / 2;
  std::vector<bool> in_first(n, false);
  for (std::size_t i = 0; i < first_size; ++i) in_first[order[i]] = true;
  std::pair<std::vector<ExperimentSummary>, std::vector<ExperimentSummary>> halves;
  for (std::size_t i = 0; i < n; ++i) {
    (in_first[i] ? halves.first : halves.second).push_back(corpus[i]);
  }
  return halves;
}

}  // namespace shrinkage
