#ifndef SHRINKAGE_SIMLAB_HPP
#define SHRINKAGE_SIMLAB_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "shrinkage/model.hpp"
#include "shrinkage/selection.hpp"

namespace shrinkage {

/* Simulation lab: generates misspecification scenarios, runs the three
 * estimators on selected experiments, and tabulates MSE / bias / coverage
 * over parameter sweeps.
 */

enum class ScenarioKind { MisspecifiedMean, HeavyTails, HiddenSelection };

const char* to_string(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& name);

// Which field a sweep varies, given the kind: mu, nu, or rho.
const char* sweep_variable_name(ScenarioKind k);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::MisspecifiedMean;
  // True effect-distribution location; the sweep variable for
  // MisspecifiedMean, a fixed location for the other kinds.
  double mu = 0.0;
  // True effect-distribution scale, read as a standard deviation.
  double epsilon = 1.0;
  // t degrees of freedom; HeavyTails sweep variable.
  double nu = 30.0;
  // Correlation of the bivariate effect; HiddenSelection sweep variable.
  double rho = 0.0;
  // Number of SELECTED experiments each generation produces.
  int n_experiments = 20000;
  double sigma_hat = 1.0;
  // Strong enough that selection binds at every default sweep point; with a
  // weaker cut the mu = 2 * epsilon point admits most draws and no estimator
  // that centers on the analysis prior can beat taking estimates at face value.
  SelectionRule rule{SelectionKind::ZThreshold, 3.0, 0.0, SelectionDirection::Greater};
  std::uint64_t seed = 0;
  // The analysis prior handed to the shrinkage estimators; deliberately
  // allowed to disagree with the generative settings above.
  HyperParams analysis_hp{0.0, 1.0, 3.0, 3.0};
  double level = 0.9;
  std::uint64_t draw_cap = kDefaultDrawCap;

  void validate() const;
};

struct ScenarioDraw {
  double theta_true = 0.0;
  ExperimentSummary exp;
};

// Generates selected experiments under the configured misspecification.
//   MisspecifiedMean: theta ~ N(mu, epsilon^2)
//   HeavyTails:       theta = mu + epsilon * t_nu
//   HiddenSelection:  (theta, theta') bivariate normal, means (mu, mu),
//                     scales epsilon, correlation rho; both coordinates'
//                     estimates must pass the rule; coordinate 1 returned.
// Always: theta_hat ~ N(theta, sigma_hat^2); only selected rows returned.
// Throws InfeasibleSelectionError when the rule accepts almost nothing.
std::vector<ScenarioDraw> generate_scenario(const ScenarioConfig& cfg);

struct MetricsRow {
  Estimator method = Estimator::FaceValue;
  double sweep_value = 0.0;
  double mse = 0.0;
  double bias = 0.0;
  double coverage = 0.0;
  int n_selected = 0;
};

// Runs every method at every sweep value. Per point, one scenario is
// generated (seed derived from base.seed and the point index) and shared by
// all methods, so cross-method comparisons are paired. jobs = 0 means one
// thread per hardware core; results are byte-identical regardless.
std::vector<MetricsRow> run_sweep(const ScenarioConfig& base, const std::vector<double>& sweep,
                                  const std::vector<Estimator>& methods, int jobs = 0);

// Writes the metric grid as a long-format CSV (one row per method x sweep
// value x metric) and returns a human-readable ordering summary.
std::string figure1_report(const std::vector<MetricsRow>& rows, const std::string& sweep_variable,
                           std::uint64_t seed, const std::string& path);

// Default sweep grids, spanning correct specification to badly misspecified.
std::vector<double> default_sweep(ScenarioKind k, double epsilon);

// Synthetic corpus of selected experiments paired with replication estimates:
// effects from the full hierarchy under hp, primary estimate selected by the
// rule, replication drawn at sigma_rep with no selection. ids are "rep-<k>".
std::vector<ExperimentSummary> generate_replication_corpus(int n_pairs, const HyperParams& hp,
                                                           double sigma, double sigma_rep,
                                                           const SelectionRule& rule,
                                                           std::uint64_t seed,
                                                           std::uint64_t draw_cap = kDefaultDrawCap);

}  // namespace shrinkage

#endif  // SHRINKAGE_SIMLAB_HPP
