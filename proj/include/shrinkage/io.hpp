#ifndef SHRINKAGE_IO_HPP
#define SHRINKAGE_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "shrinkage/calibration.hpp"
#include "shrinkage/model.hpp"
#include "shrinkage/predictive.hpp"
#include "shrinkage/simlab.hpp"

namespace shrinkage {

/* File formats. All numbers are written with %.17g so that a reread value
 * compares bitwise-equal and reruns are byte-identical. CSV fields are
 * quoted only when they contain a comma, quote, or newline.
 */

std::string format_double(double x);

struct CorpusReadResult {
  std::vector<ExperimentSummary> experiments;
  // False when the input had no `selected` column and every row was
  // defaulted to selected = true; callers decide whether to warn.
  bool selected_column_present = true;
};

// Corpus CSV: header with required columns id, theta_hat, sigma_hat and
// optional selected, replication_theta_hat, replication_sigma_hat; extra
// columns are ignored. Schema problems name the offending line.
CorpusReadResult read_corpus_csv(const std::string& path);
void write_corpus_csv(const std::string& path, const std::vector<ExperimentSummary>& corpus);

// Unit-level long format: experiment_id, unit_id, z, y; rows grouped by
// experiment_id in first-appearance order.
struct UnitLevelGroup {
  std::string id;
  UnitLevelData data;
};
std::vector<UnitLevelGroup> read_unit_level_csv(const std::string& path);

// Estimate table: id, method, mean, variance, interval_low, interval_high,
// level, lambda_used (empty when not applicable), lambda_converged.
void write_estimates_csv(const std::string& path, const std::vector<ExperimentSummary>& corpus,
                         const std::vector<PosteriorSummary>& estimates);

// Order-sensitive FNV-1a hash of the corpus's canonical serialization; ties
// a calibration artifact to the data it was fitted on.
std::uint64_t corpus_fingerprint(const std::vector<ExperimentSummary>& corpus);

// Calibration artifact: flat `key = value` lines with an explicit version.
struct CalibrationArtifact {
  int version = 1;
  CalibrationReport report;
  std::uint64_t fingerprint = 0;
};
void write_calibration_artifact(const std::string& path, const CalibrationArtifact& artifact);
CalibrationArtifact read_calibration_artifact(const std::string& path);

// Long-format metric table: method, sweep_variable, sweep_value, metric,
// value, n_selected, seed with metric in {mse, bias, coverage}.
struct MetricTable {
  std::vector<MetricsRow> rows;
  std::string sweep_variable;
  std::uint64_t seed = 0;
};
void write_metric_table(const std::string& path, const std::vector<MetricsRow>& rows,
                        const std::string& sweep_variable, std::uint64_t seed);
MetricTable read_metric_table(const std::string& path);

// Predictive-check table: id, statistic, observed, tail_area.
void write_check_csv(const std::string& path, const std::vector<std::string>& ids,
                     const std::vector<PredictiveCheckResult>& results);

}  // namespace shrinkage

#endif  // SHRINKAGE_IO_HPP
