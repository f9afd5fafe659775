#ifndef SHRINKAGE_PREDICTIVE_HPP
#define SHRINKAGE_PREDICTIVE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "shrinkage/model.hpp"

namespace shrinkage {

/* Posterior predictive checking and replication-based evaluation. */

// Discrepancy statistic applied to the observed estimate and to each
// predictive replicate.
enum class CheckStatistic {
  Identity,                  // T(x) = x
  AbsDeviationFromPriorMean  // T(x) = |x - prior_mean|
};

const char* to_string(CheckStatistic s);
CheckStatistic parse_check_statistic(const std::string& name);

struct PredictiveCheckResult {
  std::string statistic_name;
  double observed = 0.0;
  std::vector<double> replicated;
  // Fraction of replicated statistics >= observed; ties count toward the
  // tail, the conservative p-value convention.
  double tail_area = 0.0;
};

// Draws replicate estimates: theta ~ N(posterior.mean, posterior.variance),
// then theta_hat_rep ~ N(theta, sigma_hat^2). Deterministic in seed.
std::vector<double> posterior_predictive_draws(const ExperimentSummary& exp,
                                               const PosteriorSummary& posterior, int n,
                                               std::uint64_t seed);

// Runs a predictive check with n >= 100 replicates. prior_mean is only
// consulted by AbsDeviationFromPriorMean.
PredictiveCheckResult tail_area_check(const ExperimentSummary& exp,
                                      const PosteriorSummary& posterior, CheckStatistic statistic,
                                      int n, std::uint64_t seed, double prior_mean = 0.0);

// What an interval must capture to count as covering in the replication
// evaluation: the replication point estimate, or any overlap with the
// replication estimate's own interval at the same level.
enum class CoverageTarget { ReplicationPoint, ReplicationIntervalOverlap };

struct ReplicationEvaluation {
  double mae = 0.0;
  double coverage = 0.0;
  int n_pairs = 0;
  Estimator method = Estimator::FaceValue;
};

// Scores estimates against paired replication data. corpus and estimates
// must correspond elementwise (same order, same experiments); pairs without
// replication fields are skipped, and zero usable pairs is an error.
ReplicationEvaluation replication_evaluation(const std::vector<ExperimentSummary>& corpus,
                                             const std::vector<PosteriorSummary>& estimates,
                                             CoverageTarget target = CoverageTarget::ReplicationPoint);

// Seeded random half-split, e.g. to calibrate on one half and check on the
// other. Original relative order is preserved within each half.
std::pair<std::vector<ExperimentSummary>, std::vector<ExperimentSummary>> split_corpus(
    const std::vector<ExperimentSummary>& corpus, std::uint64_t seed);

}  // namespace shrinkage

#endif  // SHRINKAGE_PREDICTIVE_HPP
