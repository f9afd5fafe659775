#include "shrinkage/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <future>
#include <map>
#include <sstream>
#include <thread>
#include <utility>

#include "shrinkage/errors.hpp"
#include "shrinkage/io.hpp"
#include "shrinkage/local_shrinkage.hpp"
#include "shrinkage/rng.hpp"

namespace shrinkage {

namespace {

constexpr std::uint64_t kScenarioStream = 0xC1;
constexpr std::uint64_t kReplicationStream = 0xC4;
constexpr std::uint64_t kProbeProposals = 10000000ull;
constexpr double kMinAcceptance = 1e-6;

void check_feasibility(std::uint64_t proposed, std::size_t accepted, std::uint64_t cap) {
  if (proposed >= cap) {
    throw InfeasibleSelectionError("selection draw cap exhausted before quota was met");
  }
  if (proposed == kProbeProposals &&
      static_cast<double>(accepted) <
          kMinAcceptance * static_cast<double>(kProbeProposals)) {
    throw InfeasibleSelectionError(
        "selection rule accepts less than ~1e-6 of proposals; adjust the rule or scales");
  }
}

PosteriorSummary estimate_one(const ExperimentSummary& exp, const ScenarioConfig& cfg,
                              Estimator method) {
  switch (method) {
    case Estimator::FaceValue:
      return face_value_summary(exp, cfg.level);
    case Estimator::GlobalShrinkage:
      return global_shrinkage_estimate(exp, cfg.analysis_hp, cfg.level);
    case Estimator::HybridShrinkage:
      return hybrid_shrinkage_estimate(exp, cfg.analysis_hp, cfg.level);
  }
  throw ValidationError("unknown estimator");
}

void apply_sweep(ScenarioConfig& cfg, double value) {
  switch (cfg.kind) {
    case ScenarioKind::MisspecifiedMean:
      cfg.mu = value;
      break;
    case ScenarioKind::HeavyTails:
      cfg.nu = value;
      break;
    case ScenarioKind::HiddenSelection:
      cfg.rho = value;
      break;
  }
}

std::string format_number(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::MisspecifiedMean:
      return "misspecified_mean";
    case ScenarioKind::HeavyTails:
      return "heavy_tails";
    case ScenarioKind::HiddenSelection:
      return "hidden_selection";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "misspecified_mean") return ScenarioKind::MisspecifiedMean;
  if (name == "heavy_tails") return ScenarioKind::HeavyTails;
  if (name == "hidden_selection") return ScenarioKind::HiddenSelection;
  throw ValidationError("unknown scenario kind '" + name + "'");
}

const char* sweep_variable_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::MisspecifiedMean:
      return "mu";
    case ScenarioKind::HeavyTails:
      return "nu";
    case ScenarioKind::HiddenSelection:
      return "rho";
  }
  return "unknown";
}

void ScenarioConfig::validate() const {
  if (!std::isfinite(mu)) throw ValidationError("scenario mu must be finite");
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    throw ValidationError("scenario epsilon must be positive");
  }
  if (!std::isfinite(nu) || nu <= 2.0) {
    throw ValidationError("scenario nu must exceed 2");
  }
  if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) {
    throw ValidationError("scenario rho must lie in [-1, 1]");
  }
  if (n_experiments < 1) throw ValidationError("scenario needs at least one experiment");
  if (!std::isfinite(sigma_hat) || sigma_hat <= 0.0) {
    throw ValidationError("scenario sigma_hat must be positive");
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    throw ValidationError("interval level must lie in (0, 1)");
  }
  if (draw_cap < 1) throw ValidationError("draw cap must be positive");
  rule.validate();
  analysis_hp.validate();
}

std::vector<ScenarioDraw> generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::stream(cfg.seed, kScenarioStream);
  const std::size_t quota = static_cast<std::size_t>(cfg.n_experiments);
  std::vector<ScenarioDraw> out;
  out.reserve(quota);
  std::uint64_t proposed = 0;
  const double rho_ortho = std::sqrt(std::max(0.0, 1.0 - cfg.rho * cfg.rho));
  while (out.size() < quota) {
    check_feasibility(proposed, out.size(), cfg.draw_cap);
    ++proposed;
    double theta = 0.0;
    double est = 0.0;
    bool accepted = false;
    switch (cfg.kind) {
      case ScenarioKind::MisspecifiedMean: {
        theta = rng.normal(cfg.mu, cfg.epsilon);
        est = rng.normal(theta, cfg.sigma_hat);
        accepted = is_selected(est, cfg.sigma_hat, cfg.rule);
        break;
      }
      case ScenarioKind::HeavyTails: {
        theta = cfg.mu + cfg.epsilon * rng.student_t(cfg.nu);
        est = rng.normal(theta, cfg.sigma_hat);
        accepted = is_selected(est, cfg.sigma_hat, cfg.rule);
        break;
      }
      case ScenarioKind::HiddenSelection: {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        theta = cfg.mu + cfg.epsilon * z1;
        const double theta2 = cfg.mu + cfg.epsilon * (cfg.rho * z1 + rho_ortho * z2);
        est = rng.normal(theta, cfg.sigma_hat);
        const double est2 = rng.normal(theta2, cfg.sigma_hat);
        accepted = is_selected(est, cfg.sigma_hat, cfg.rule) &&
                   is_selected(est2, cfg.sigma_hat, cfg.rule);
        break;
      }
    }
    if (accepted) {
      out.push_back({theta, ExperimentSummary{"sim-" + std::to_string(out.size()), est,
                                              cfg.sigma_hat, true, {}, {}}});
    }
  }
  return out;
}

std::vector<MetricsRow> run_sweep(const ScenarioConfig& base, const std::vector<double>& sweep,
                                  const std::vector<Estimator>& methods, int jobs) {
  base.validate();
  if (sweep.empty()) throw ValidationError("sweep needs at least one value");
  if (methods.empty()) throw ValidationError("sweep needs at least one method");

  const auto run_point = [&base, &methods, &sweep](std::size_t k) {
    ScenarioConfig cfg = base;
    apply_sweep(cfg, sweep[k]);
    cfg.seed = Rng::derive_stream_seed(base.seed, k);
    cfg.validate();
    std::vector<ScenarioDraw> draws;
    try {
      draws = generate_scenario(cfg);
    } catch (const InfeasibleSelectionError& e) {
      throw InfeasibleSelectionError(std::string("sweep point ") +
                                     sweep_variable_name(base.kind) + " = " +
                                     format_number(sweep[k]) + ": " + e.what());
    }
    const double n = static_cast<double>(draws.size());
    std::vector<MetricsRow> rows;
    rows.reserve(methods.size());
    for (Estimator method : methods) {
      MetricsRow row;
      row.method = method;
      row.sweep_value = sweep[k];
      row.n_selected = static_cast<int>(draws.size());
      double sq_sum = 0.0;
      double err_sum = 0.0;
      int covered = 0;
      for (const ScenarioDraw& draw : draws) {
        const PosteriorSummary est = estimate_one(draw.exp, cfg, method);
        const double err = est.mean - draw.theta_true;
        sq_sum += err * err;
        err_sum += err;
        if (est.interval_low <= draw.theta_true && draw.theta_true <= est.interval_high) {
          ++covered;
        }
      }
      row.mse = sq_sum / n;
      row.bias = err_sum / n;
      row.coverage = static_cast<double>(covered) / n;
      rows.push_back(row);
    }
    return rows;
  };

  int n_jobs = jobs;
  if (n_jobs <= 0) {
    n_jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (n_jobs <= 0) n_jobs = 1;
  }

  std::vector<MetricsRow> all;
  all.reserve(sweep.size() * methods.size());
  if (n_jobs == 1 || sweep.size() == 1) {
    for (std::size_t k = 0; k < sweep.size(); ++k) {
      std::vector<MetricsRow> rows = run_point(k);
      all.insert(all.end(), rows.begin(), rows.end());
    }
    return all;
  }
  std::vector<std::future<std::vector<MetricsRow>>> futures;
  futures.reserve(sweep.size());
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    futures.push_back(std::async(std::launch::async, run_point, k));
  }
  // Joined in index order, so the output is independent of scheduling.
  for (auto& fut : futures) {
    std::vector<MetricsRow> rows = fut.get();
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return all;
}

std::string figure1_report(const std::vector<MetricsRow>& rows, const std::string& sweep_variable,
                           std::uint64_t seed, const std::string& path) {
  if (rows.empty()) throw ValidationError("no metric rows to report");
  write_metric_table(path, rows, sweep_variable, seed);

  std::vector<Estimator> methods;
  std::vector<double> values;
  std::map<std::pair<int, double>, const MetricsRow*> by_key;
  for (const MetricsRow& row : rows) {
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) {
      methods.push_back(row.method);
    }
    if (std::find(values.begin(), values.end(), row.sweep_value) == values.end()) {
      values.push_back(row.sweep_value);
    }
    by_key[{static_cast<int>(row.method), row.sweep_value}] = &row;
  }

  std::ostringstream out;
  out << "sweep over " << sweep_variable << ": " << values.size() << " points, "
      << methods.size() << " methods, seed " << seed << "\n\n";
  out << "method              " << sweep_variable << "        mse       bias   coverage\n";
  for (const MetricsRow& row : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s %7g %10.5f %10.5f %10.4f\n", to_string(row.method),
                  row.sweep_value, row.mse, row.bias, row.coverage);
    out << line;
  }

  out << "\norderings:\n";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = 0; j < methods.size(); ++j) {
      if (i == j) continue;
      int wins = 0;
      int comparable = 0;
      for (double v : values) {
        const auto it_i = by_key.find({static_cast<int>(methods[i]), v});
        const auto it_j = by_key.find({static_cast<int>(methods[j]), v});
        if (it_i == by_key.end() || it_j == by_key.end()) continue;
        ++comparable;
        if (it_i->second->mse <= it_j->second->mse) ++wins;
      }
      if (comparable > 0 && wins * 2 >= comparable) {
        out << "  " << to_string(methods[i]) << " mse <= " << to_string(methods[j]) << " mse at "
            << wins << "/" << comparable << " points\n";
      }
    }
  }
  for (Estimator m : methods) {
    int positive = 0;
    int total = 0;
    double cov_lo = 1.0;
    double cov_hi = 0.0;
    for (double v : values) {
      const auto it = by_key.find({static_cast<int>(m), v});
      if (it == by_key.end()) continue;
      ++total;
      if (it->second->bias > 0.0) ++positive;
      cov_lo = std::min(cov_lo, it->second->coverage);
      cov_hi = std::max(cov_hi, it->second->coverage);
    }
    if (total > 0) {
      out << "  " << to_string(m) << ": bias > 0 at " << positive << "/" << total
          << " points, coverage in [" << format_number(cov_lo) << ", " << format_number(cov_hi)
          << "]\n";
    }
  }
  return out.str();
}

std::vector<double> default_sweep(ScenarioKind k, double epsilon) {
  switch (k) {
    case ScenarioKind::MisspecifiedMean:
      return {0.0, 0.5 * epsilon, 1.0 * epsilon, 1.5 * epsilon, 2.0 * epsilon};
    case ScenarioKind::HeavyTails:
      return {3.0, 5.0, 10.0, 30.0, 100.0};
    case ScenarioKind::HiddenSelection:
      return {0.0, 0.25, 0.5, 0.75, 0.9};
  }
  throw ValidationError("unknown scenario kind");
}

std::vector<ExperimentSummary> generate_replication_corpus(int n_pairs, const HyperParams& hp,
                                                           double sigma, double sigma_rep,
                                                           const SelectionRule& rule,
                                                           std::uint64_t seed,
                                                           std::uint64_t draw_cap) {
  hp.validate();
  rule.validate();
  if (n_pairs < 1) throw ValidationError("replication corpus needs at least one pair");
  if (!std::isfinite(sigma) || sigma <= 0.0 || !std::isfinite(sigma_rep) || sigma_rep <= 0.0) {
    throw ValidationError("standard errors must be positive");
  }
  Rng rng = Rng::stream(seed, kReplicationStream);
  std::vector<ExperimentSummary> out;
  out.reserve(static_cast<std::size_t>(n_pairs));
  std::uint64_t proposed = 0;
  while (out.size() < static_cast<std::size_t>(n_pairs)) {
    check_feasibility(proposed, out.size(), draw_cap);
    ++proposed;
    const double lambda = rng.inverse_gamma(0.5 * hp.a, 0.5 * hp.b);
    const double theta = rng.normal(hp.m0, std::sqrt(lambda * hp.tau));
    const double est = rng.normal(theta, sigma);
    if (!is_selected(est, sigma, rule)) continue;
    const double rep = rng.normal(theta, sigma_rep);
    ExperimentSummary exp{"rep-" + std::to_string(out.size()), est, sigma, true, rep, sigma_rep};
    out.push_back(std::move(exp));
  }
  return out;
}

}  // namespace shrinkage
