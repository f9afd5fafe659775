#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "shrinkage/calibration.hpp"
#include "shrinkage/errors.hpp"
#include "shrinkage/io.hpp"
#include "shrinkage/local_shrinkage.hpp"
#include "shrinkage/model.hpp"
#include "shrinkage/predictive.hpp"
#include "shrinkage/rng.hpp"
#include "shrinkage/simlab.hpp"
#include "shrinkage/stats.hpp"

namespace {

using namespace shrinkage;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

// Sweep-point index reserved for the univariate comparator of the
// independence check, far outside any realistic sweep length.
constexpr std::uint64_t kIndependenceCheckStream = 9999991;

std::uint64_t default_seed() {
  const char* env = std::getenv("SHRINK_SEED");
  if (env == nullptr || *env == '\0') return 0;
  errno = 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (*end != '\0' || errno == ERANGE) {
    throw ValidationError(std::string("SHRINK_SEED must be a nonnegative integer, got '") + env +
                          "'");
  }
  return value;
}

std::string normalize_name(std::string s) {
  for (char& c : s) {
    if (c == '-') c = '_';
  }
  return s;
}

std::vector<double> parse_double_list(const std::string& raw, const std::string& what) {
  std::vector<double> values;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size() || errno == ERANGE) {
      throw ValidationError("cannot parse " + what + " value '" + item + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw ValidationError(what + " needs at least one value");
  return values;
}

double parse_single(const std::string& raw, const std::string& what) {
  const std::vector<double> values = parse_double_list(raw, what);
  if (values.size() != 1) {
    throw ValidationError(what + " is not the sweep variable here and must be a single value");
  }
  return values[0];
}

// Prior flags shared by the corpus-facing commands; values may come from a
// calibration artifact, individual flags, or flags layered over an artifact.
struct PriorFlags {
  std::string calibration_path;
  double m0 = 0.0;
  double tau = 1.0;
  double a = 3.0;
  double b = 3.0;
  CLI::Option* m0_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
  CLI::Option* a_opt = nullptr;
  CLI::Option* b_opt = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--calibration", calibration_path,
                    "Calibration artifact supplying m0/tau/a/b");
    m0_opt = cmd->add_option("--m0", m0, "Prior mean of the true effects");
    tau_opt = cmd->add_option("--tau", tau, "Prior base variance of the true effects");
    a_opt = cmd->add_option("--a", a, "Mixing shape (inverse-gamma a/2 parameterization)");
    b_opt = cmd->add_option("--b", b, "Mixing scale (inverse-gamma b/2 parameterization)");
  }

  // required: the command cannot run without an explicit prior.
  HyperParams resolve(bool required) const {
    HyperParams hp;
    bool have_core = false;
    if (!calibration_path.empty()) {
      hp = read_calibration_artifact(calibration_path).report.hyperparams;
      have_core = true;
    }
    if (m0_opt->count() > 0) hp.m0 = m0;
    if (tau_opt->count() > 0) hp.tau = tau;
    if (a_opt->count() > 0) hp.a = a;
    if (b_opt->count() > 0) hp.b = b;
    have_core = have_core || (m0_opt->count() > 0 && tau_opt->count() > 0);
    if (required && !have_core) {
      throw ValidationError(
          "this command needs a prior: pass --calibration, or --m0 and --tau "
          "(--a/--b default to 3)");
    }
    hp.validate();
    return hp;
  }
};

std::vector<ExperimentSummary> load_corpus(const std::string& path, bool unit_level) {
  if (unit_level) {
    std::vector<ExperimentSummary> corpus;
    for (const UnitLevelGroup& group : read_unit_level_csv(path)) {
      corpus.push_back(face_value_estimate(group.data, group.id));
    }
    return corpus;
  }
  CorpusReadResult result = read_corpus_csv(path);
  if (!result.selected_column_present) {
    std::cerr << "warning: '" << path
              << "' has no selected column; treating every row as selected\n";
  }
  return std::move(result.experiments);
}

PosteriorSummary estimate_with(const ExperimentSummary& exp, Estimator method,
                               const HyperParams& hp, double level, bool marginal) {
  switch (method) {
    case Estimator::FaceValue:
      return face_value_summary(exp, level);
    case Estimator::GlobalShrinkage:
      return global_shrinkage_estimate(exp, hp, level);
    case Estimator::HybridShrinkage:
      return marginal ? marginal_hybrid_posterior(exp, hp, level)
                      : hybrid_shrinkage_estimate(exp, hp, level);
  }
  throw ValidationError("unknown estimator");
}

int run_estimate(const std::string& input, const std::string& output, const std::string& method_name,
                 double level, bool marginal, bool unit_level, const PriorFlags& prior) {
  const Estimator method = parse_estimator(normalize_name(method_name));
  const std::vector<ExperimentSummary> corpus = load_corpus(input, unit_level);
  const HyperParams hp = prior.resolve(method != Estimator::FaceValue);
  std::vector<PosteriorSummary> estimates;
  estimates.reserve(corpus.size());
  for (const ExperimentSummary& exp : corpus) {
    estimates.push_back(estimate_with(exp, method, hp, level, marginal));
  }
  write_estimates_csv(output, corpus, estimates);
  std::cerr << "wrote " << estimates.size() << " estimates to '" << output << "'\n";
  return 0;
}

int run_calibrate(const std::string& input, const std::string& output, const std::string& fit_name,
                  double a, double b, bool selected_only_ack, double tol) {
  CorpusReadResult read = read_corpus_csv(input);
  if (!read.selected_column_present) {
    std::cerr << "warning: '" << input
              << "' has no selected column; treating every row as selected\n";
  }
  bool all_selected = true;
  for (const ExperimentSummary& exp : read.experiments) {
    all_selected = all_selected && exp.selected;
  }
  if (all_selected && !selected_only_ack) {
    throw ValidationError(
        "every row in '" + input +
        "' is post-selection; fitting the prior on selected-only data biases it toward the "
        "selection boundary and reintroduces the winner's curse. Supply the pre-selection "
        "corpus, or rerun with --selected-only-ack to fit anyway");
  }
  const std::string fit = normalize_name(fit_name);
  CalibrationReport report;
  if (fit == "moments" || fit == "method_of_moments") {
    report = fit_method_of_moments(read.experiments, a, b);
  } else if (fit == "mle" || fit == "marginal_mle") {
    report = fit_marginal_mle(read.experiments, a, b, tol);
  } else {
    throw ValidationError("unknown fit method '" + fit_name + "' (expected moments or mle)");
  }
  CalibrationArtifact artifact;
  artifact.report = report;
  artifact.fingerprint = corpus_fingerprint(read.experiments);
  write_calibration_artifact(output, artifact);
  std::cerr << "fit " << to_string(report.method) << " on " << report.n_experiments_used
            << " experiments: m0 = " << format_double(report.hyperparams.m0)
            << ", tau = " << format_double(report.hyperparams.tau)
            << ", log marginal likelihood = " << format_double(report.log_marginal_likelihood)
            << (report.tau_floored ? " (tau floored)" : "") << "\n";
  return 0;
}

int run_check(const std::string& input, const std::string& output, const std::string& stat_name,
              const std::string& method_name, double level, int n_draws, std::uint64_t seed,
              bool marginal, const PriorFlags& prior) {
  const CheckStatistic statistic = parse_check_statistic(normalize_name(stat_name));
  const Estimator method = parse_estimator(normalize_name(method_name));
  const std::vector<ExperimentSummary> corpus = load_corpus(input, false);
  const HyperParams hp = prior.resolve(method != Estimator::FaceValue);
  std::vector<std::string> ids;
  std::vector<PredictiveCheckResult> results;
  ids.reserve(corpus.size());
  results.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const PosteriorSummary posterior = estimate_with(corpus[i], method, hp, level, marginal);
    const std::uint64_t exp_seed = Rng::derive_stream_seed(seed, i);
    results.push_back(
        tail_area_check(corpus[i], posterior, statistic, n_draws, exp_seed, hp.m0));
    ids.push_back(corpus[i].id);
  }
  write_check_csv(output, ids, results);
  std::cerr << "wrote " << results.size() << " predictive checks to '" << output << "'\n";
  return 0;
}

int run_evaluate(const std::string& input, const std::string& output,
                 const std::string& target_name, double level, bool marginal,
                 const PriorFlags& prior) {
  const std::string target_key = normalize_name(target_name);
  CoverageTarget target = CoverageTarget::ReplicationPoint;
  if (target_key == "point") {
    target = CoverageTarget::ReplicationPoint;
  } else if (target_key == "overlap" || target_key == "interval_overlap") {
    target = CoverageTarget::ReplicationIntervalOverlap;
  } else {
    throw ValidationError("unknown coverage target '" + target_name +
                          "' (expected point or overlap)");
  }
  const std::vector<ExperimentSummary> corpus = load_corpus(input, false);
  const HyperParams hp = prior.resolve(true);
  const Estimator methods[] = {Estimator::FaceValue, Estimator::GlobalShrinkage,
                               Estimator::HybridShrinkage};
  std::ostringstream table;
  table << "method,mae,coverage,n_pairs\n";
  for (Estimator method : methods) {
    std::vector<PosteriorSummary> estimates;
    estimates.reserve(corpus.size());
    for (const ExperimentSummary& exp : corpus) {
      estimates.push_back(estimate_with(exp, method, hp, level, marginal));
    }
    const ReplicationEvaluation eval = replication_evaluation(corpus, estimates, target);
    table << to_string(method) << ',' << format_double(eval.mae) << ','
          << format_double(eval.coverage) << ',' << eval.n_pairs << '\n';
  }
  std::cout << table.str();
  if (!output.empty()) {
    std::ofstream out(output);
    if (!out) throw IoError("cannot open '" + output + "' for writing");
    out << table.str();
    out.flush();
    if (!out) throw IoError("write to '" + output + "' failed");
  }
  return 0;
}

struct SimulateFlags {
  std::string kind_name = "misspecified_mean";
  std::string mu_raw = "";
  std::string nu_raw = "";
  std::string rho_raw = "";
  double epsilon = 1.0;
  int n_experiments = 20000;
  double sigma_hat = 1.0;
  std::string selection_name = "z";
  double threshold = 3.0;
  double null_value = 0.0;
  std::string direction_name = "greater";
  double level = 0.9;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string methods_raw = "face_value,global_shrinkage,hybrid_shrinkage";
  std::string output;
};

std::vector<Estimator> parse_methods(const std::string& raw) {
  std::vector<Estimator> methods;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    methods.push_back(parse_estimator(normalize_name(item)));
  }
  if (methods.empty()) throw ValidationError("--methods needs at least one estimator");
  return methods;
}

const MetricsRow* find_row(const std::vector<MetricsRow>& rows, Estimator method, double value) {
  for (const MetricsRow& row : rows) {
    if (row.method == method && row.sweep_value == value) return &row;
  }
  return nullptr;
}

// Pass/fail lines for the ordering claims the sweep is meant to probe.
std::string build_claims(const ScenarioConfig& base, const std::vector<double>& sweep,
                         const std::vector<Estimator>& methods,
                         const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "\nclaims:\n";
  const auto has = [&methods](Estimator m) {
    for (Estimator e : methods) {
      if (e == m) return true;
    }
    return false;
  };
  const auto mark = [](bool ok) { return ok ? "[PASS]" : "[FAIL]"; };

  if (has(Estimator::HybridShrinkage) && has(Estimator::FaceValue)) {
    int wins = 0;
    for (double v : sweep) {
      const MetricsRow* h = find_row(rows, Estimator::HybridShrinkage, v);
      const MetricsRow* f = find_row(rows, Estimator::FaceValue, v);
      if (h != nullptr && f != nullptr && h->mse <= f->mse) ++wins;
    }
    out << "  " << mark(wins == static_cast<int>(sweep.size()))
        << " hybrid_shrinkage mse <= face_value mse at every sweep point (" << wins << "/"
        << sweep.size() << ")\n";
  }
  if (has(Estimator::FaceValue) && base.rule.kind != SelectionKind::None &&
      base.rule.direction == SelectionDirection::Greater) {
    int positive = 0;
    for (double v : sweep) {
      const MetricsRow* f = find_row(rows, Estimator::FaceValue, v);
      if (f != nullptr && f->bias > 0.0) ++positive;
    }
    out << "  " << mark(positive == static_cast<int>(sweep.size()))
        << " face_value bias > 0 at every sweep point (" << positive << "/" << sweep.size()
        << ")\n";
  }
  if (has(Estimator::GlobalShrinkage) && base.kind != ScenarioKind::HeavyTails) {
    const bool prior_matches = base.analysis_hp.tau == base.epsilon * base.epsilon;
    double correct_point = 0.0;
    bool applicable = prior_matches;
    if (base.kind == ScenarioKind::MisspecifiedMean) {
      correct_point = base.analysis_hp.m0;
    } else {
      correct_point = 0.0;
      applicable = applicable && base.mu == base.analysis_hp.m0;
    }
    const MetricsRow* g =
        applicable ? find_row(rows, Estimator::GlobalShrinkage, correct_point) : nullptr;
    if (g != nullptr) {
      const bool ok = g->coverage >= 0.885 && g->coverage <= 0.915;
      out << "  " << mark(ok) << " global_shrinkage coverage at the correctly specified point ("
          << sweep_variable_name(base.kind) << " = " << format_double(correct_point) << ") is "
          << format_double(g->coverage) << ", target 0.90 +/- 0.015\n";
    }
  }
  if (base.kind == ScenarioKind::HeavyTails && has(Estimator::HybridShrinkage) &&
      has(Estimator::GlobalShrinkage)) {
    int ok_points = 0;
    int heavy_points = 0;
    for (double v : sweep) {
      if (v > 5.0) continue;
      const MetricsRow* h = find_row(rows, Estimator::HybridShrinkage, v);
      const MetricsRow* g = find_row(rows, Estimator::GlobalShrinkage, v);
      if (h == nullptr || g == nullptr) continue;
      ++heavy_points;
      if (h->coverage >= g->coverage) ++ok_points;
    }
    if (heavy_points > 0) {
      out << "  " << mark(ok_points == heavy_points)
          << " hybrid_shrinkage coverage >= global_shrinkage coverage at nu <= 5 (" << ok_points
          << "/" << heavy_points << ")\n";
    }
  }
  if (base.kind == ScenarioKind::HiddenSelection) {
    for (std::size_t k = 0; k < sweep.size(); ++k) {
      if (sweep[k] != 0.0) continue;
      // At rho = 0 the partner coordinate's selection is independent noise,
      // so coordinate 1 must match a univariate run distributionally.
      ScenarioConfig bivariate = base;
      bivariate.rho = 0.0;
      bivariate.seed = Rng::derive_stream_seed(base.seed, k);
      ScenarioConfig univariate = base;
      univariate.kind = ScenarioKind::MisspecifiedMean;
      univariate.seed = Rng::derive_stream_seed(base.seed, kIndependenceCheckStream);
      const std::vector<ScenarioDraw> lhs = generate_scenario(bivariate);
      const std::vector<ScenarioDraw> rhs = generate_scenario(univariate);
      std::vector<double> lhs_est, rhs_est, lhs_theta, rhs_theta;
      for (const ScenarioDraw& d : lhs) {
        lhs_est.push_back(d.exp.theta_hat);
        lhs_theta.push_back(d.theta_true);
      }
      for (const ScenarioDraw& d : rhs) {
        rhs_est.push_back(d.exp.theta_hat);
        rhs_theta.push_back(d.theta_true);
      }
      const double crit = ks_two_sample_critical(0.01, lhs_est.size(), rhs_est.size());
      const double d_est = ks_distance_two_sample(lhs_est, rhs_est);
      const double d_theta = ks_distance_two_sample(lhs_theta, rhs_theta);
      const bool ok = d_est < crit && d_theta < crit;
      out << "  " << mark(ok) << " independence factorization at rho = 0: ks(theta_hat) = "
          << format_double(d_est) << ", ks(theta) = " << format_double(d_theta)
          << ", critical(0.01) = " << format_double(crit) << "\n";
      break;
    }
  }
  return out.str();
}

int run_simulate(const SimulateFlags& flags, const PriorFlags& prior) {
  ScenarioConfig base;
  base.kind = parse_scenario_kind(normalize_name(flags.kind_name));
  base.epsilon = flags.epsilon;
  base.n_experiments = flags.n_experiments;
  base.sigma_hat = flags.sigma_hat;
  base.level = flags.level;
  base.seed = flags.seed;

  const std::string selection = normalize_name(flags.selection_name);
  if (selection == "z") {
    base.rule.kind = SelectionKind::ZThreshold;
  } else if (selection == "raw") {
    base.rule.kind = SelectionKind::RawThreshold;
  } else if (selection == "none") {
    base.rule.kind = SelectionKind::None;
  } else {
    throw ValidationError("unknown selection kind '" + flags.selection_name +
                          "' (expected z, raw, or none)");
  }
  base.rule.threshold = flags.threshold;
  base.rule.null_value = flags.null_value;
  const std::string direction = normalize_name(flags.direction_name);
  if (direction == "greater") {
    base.rule.direction = SelectionDirection::Greater;
  } else if (direction == "two_sided") {
    base.rule.direction = SelectionDirection::TwoSided;
  } else {
    throw ValidationError("unknown direction '" + flags.direction_name +
                          "' (expected greater or two_sided)");
  }

  // Analysis prior: the scenario defaults (m0 = 0, tau = epsilon^2,
  // a = b = 3) unless flags or an artifact override them.
  base.analysis_hp = HyperParams{0.0, flags.epsilon * flags.epsilon, 3.0, 3.0};
  if (!prior.calibration_path.empty()) {
    base.analysis_hp = read_calibration_artifact(prior.calibration_path).report.hyperparams;
  }
  if (prior.m0_opt->count() > 0) base.analysis_hp.m0 = prior.m0;
  if (prior.tau_opt->count() > 0) base.analysis_hp.tau = prior.tau;
  if (prior.a_opt->count() > 0) base.analysis_hp.a = prior.a;
  if (prior.b_opt->count() > 0) base.analysis_hp.b = prior.b;

  // The flag matching the scenario kind carries the sweep; the other two
  // must stay scalar.
  std::vector<double> sweep;
  switch (base.kind) {
    case ScenarioKind::MisspecifiedMean:
      if (!flags.mu_raw.empty()) sweep = parse_double_list(flags.mu_raw, "--mu");
      if (!flags.nu_raw.empty()) base.nu = parse_single(flags.nu_raw, "--nu");
      if (!flags.rho_raw.empty()) base.rho = parse_single(flags.rho_raw, "--rho");
      break;
    case ScenarioKind::HeavyTails:
      if (!flags.nu_raw.empty()) sweep = parse_double_list(flags.nu_raw, "--nu");
      if (!flags.mu_raw.empty()) base.mu = parse_single(flags.mu_raw, "--mu");
      if (!flags.rho_raw.empty()) base.rho = parse_single(flags.rho_raw, "--rho");
      break;
    case ScenarioKind::HiddenSelection:
      if (!flags.rho_raw.empty()) sweep = parse_double_list(flags.rho_raw, "--rho");
      if (!flags.mu_raw.empty()) base.mu = parse_single(flags.mu_raw, "--mu");
      if (!flags.nu_raw.empty()) base.nu = parse_single(flags.nu_raw, "--nu");
      break;
  }
  if (sweep.empty()) sweep = default_sweep(base.kind, base.epsilon);

  const std::vector<Estimator> methods = parse_methods(flags.methods_raw);
  const std::vector<MetricsRow> rows = run_sweep(base, sweep, methods, flags.jobs);
  std::string summary =
      figure1_report(rows, sweep_variable_name(base.kind), flags.seed, flags.output);
  summary += build_claims(base, sweep, methods, rows);

  const std::string summary_path = flags.output + ".summary.txt";
  std::ofstream out(summary_path);
  if (!out) throw IoError("cannot open '" + summary_path + "' for writing");
  out << summary;
  out.flush();
  if (!out) throw IoError("write to '" + summary_path + "' failed");
  std::cout << summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    CLI::App app{
        "Selection-adjusted treatment-effect estimation: shrinkage estimators for corpora of "
        "threshold-selected experiments"};
    app.require_subcommand(1);
    const std::uint64_t env_seed = default_seed();

    // estimate ------------------------------------------------------------
    auto* est = app.add_subcommand("estimate", "Produce adjusted estimates for a corpus");
    std::string est_input, est_output;
    std::string est_method = "hybrid_shrinkage";
    double est_level = 0.9;
    bool est_marginal = false;
    bool est_unit_level = false;
    PriorFlags est_prior;
    est->add_option("--input", est_input, "Corpus CSV (or unit-level CSV with --unit-level)")
        ->required();
    est->add_option("--output", est_output, "Estimate table destination")->required();
    est->add_option("--method", est_method,
                    "face_value, global_shrinkage, or hybrid_shrinkage");
    est->add_option("--level", est_level, "Central interval level, default 0.90");
    est->add_flag("--marginal", est_marginal,
                  "Integrate the local scale out numerically instead of plugging in its mode "
                  "(hybrid_shrinkage only)");
    est->add_flag("--unit-level", est_unit_level,
                  "Input is unit-level (experiment_id, unit_id, z, y); ratio estimates are "
                  "formed first");
    est_prior.add_to(est);

    // calibrate -----------------------------------------------------------
    auto* cal = app.add_subcommand("calibrate", "Fit the prior on a corpus");
    std::string cal_input, cal_output;
    std::string cal_fit = "mle";
    double cal_a = 3.0;
    double cal_b = 3.0;
    double cal_tol = 1e-7;
    bool cal_ack = false;
    cal->add_option("--input", cal_input, "Corpus CSV (pre-selection population preferred)")
        ->required();
    cal->add_option("--output", cal_output, "Calibration artifact destination")->required();
    cal->add_option("--fit", cal_fit, "moments or mle (default mle)");
    cal->add_option("--a", cal_a, "Fixed mixing shape, default 3");
    cal->add_option("--b", cal_b, "Fixed mixing scale, default 3");
    cal->add_option("--tol", cal_tol, "MLE convergence tolerance on the log marginal likelihood");
    cal->add_flag("--selected-only-ack", cal_ack,
                  "Acknowledge fitting on a corpus where every row passed selection");

    // check ---------------------------------------------------------------
    auto* chk = app.add_subcommand("check", "Posterior predictive tail-area checks");
    std::string chk_input, chk_output;
    std::string chk_stat = "identity";
    std::string chk_method = "hybrid_shrinkage";
    double chk_level = 0.9;
    int chk_n = 1000;
    std::uint64_t chk_seed = env_seed;
    bool chk_marginal = false;
    PriorFlags chk_prior;
    chk->add_option("--input", chk_input, "Corpus CSV")->required();
    chk->add_option("--output", chk_output, "Check table destination")->required();
    chk->add_option("--statistic", chk_stat, "identity or abs_deviation_from_prior_mean");
    chk->add_option("--method", chk_method, "Estimator providing the posterior");
    chk->add_option("--level", chk_level, "Interval level recorded with the posterior");
    chk->add_option("--n-draws", chk_n, "Predictive replicates per experiment (>= 100)");
    chk->add_option("--seed", chk_seed, "Base seed (default from SHRINK_SEED, else 0)");
    chk->add_flag("--marginal", chk_marginal, "Use the marginalized hybrid posterior");
    chk_prior.add_to(chk);

    // evaluate ------------------------------------------------------------
    auto* eva = app.add_subcommand("evaluate",
                                   "Score estimators against paired replication estimates");
    std::string eva_input, eva_output;
    std::string eva_target = "point";
    double eva_level = 0.9;
    bool eva_marginal = false;
    PriorFlags eva_prior;
    eva->add_option("--input", eva_input, "Corpus CSV with replication columns")->required();
    eva->add_option("--output", eva_output, "Optional CSV destination (stdout always gets the table)");
    eva->add_option("--coverage-target", eva_target,
                    "point (replication estimate inside interval) or overlap (intervals overlap)");
    eva->add_option("--level", eva_level, "Interval level, default 0.90");
    eva->add_flag("--marginal", eva_marginal, "Use the marginalized hybrid posterior");
    eva_prior.add_to(eva);

    // simulate ------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Run a misspecification sweep");
    SimulateFlags simf;
    simf.seed = env_seed;
    PriorFlags sim_prior;
    sim->add_option("--kind", simf.kind_name,
                    "misspecified_mean, heavy_tails, or hidden_selection");
    sim->add_option("--mu", simf.mu_raw,
                    "True-effect location; comma list = sweep (misspecified_mean only)");
    sim->add_option("--nu", simf.nu_raw,
                    "t degrees of freedom; comma list = sweep (heavy_tails only)");
    sim->add_option("--rho", simf.rho_raw,
                    "Effect correlation; comma list = sweep (hidden_selection only)");
    sim->add_option("--epsilon", simf.epsilon, "True-effect scale (standard deviation)");
    sim->add_option("--n", simf.n_experiments, "Selected experiments per sweep point");
    sim->add_option("--sigma-hat", simf.sigma_hat, "Standard error of every estimate");
    sim->add_option("--selection", simf.selection_name, "z, raw, or none");
    sim->add_option("--threshold", simf.threshold, "Selection threshold, default 3.0");
    sim->add_option("--null-value", simf.null_value, "Reference point for z-scores, default 0");
    sim->add_option("--direction", simf.direction_name, "greater or two_sided");
    sim->add_option("--level", simf.level, "Interval level, default 0.90");
    sim->add_option("--seed", simf.seed, "Base seed (default from SHRINK_SEED, else 0)");
    sim->add_option("--jobs", simf.jobs, "Worker threads; 0 = one per core");
    sim->add_option("--methods", simf.methods_raw, "Comma list of estimators to run");
    sim->add_option("--output", simf.output, "Metric table destination (summary goes to "
                                             "<output>.summary.txt)")
        ->required();
    sim_prior.add_to(sim);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : kExitValidation;
    }

    if (*est) {
      return run_estimate(est_input, est_output, est_method, est_level, est_marginal,
                          est_unit_level, est_prior);
    }
    if (*cal) {
      return run_calibrate(cal_input, cal_output, cal_fit, cal_a, cal_b, cal_ack, cal_tol);
    }
    if (*chk) {
      return run_check(chk_input, chk_output, chk_stat, chk_method, chk_level, chk_n, chk_seed,
                       chk_marginal, chk_prior);
    }
    if (*eva) {
      return run_evaluate(eva_input, eva_output, eva_target, eva_level, eva_marginal, eva_prior);
    }
    if (*sim) {
      return run_simulate(simf, sim_prior);
    }
    std::cerr << "error: no subcommand selected\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
