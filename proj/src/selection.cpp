#include "shrinkage/selection.hpp"

#include <cmath>
#include <string>

#include "shrinkage/errors.hpp"
#include "shrinkage/rng.hpp"

namespace shrinkage {

namespace {

constexpr std::uint64_t kJointStream = 0xB1;
constexpr std::uint64_t kFixedStream = 0xB2;

// Feasibility probe: once this many proposals have been made, an acceptance
// rate below kMinAcceptance aborts the run instead of spinning to the cap.
constexpr std::uint64_t kProbeProposals = 10000000ull;
constexpr double kMinAcceptance = 1e-6;

[[noreturn]] void throw_infeasible(std::uint64_t accepted, std::uint64_t proposed) {
  throw InfeasibleSelectionError(
      "selection accepted " + std::to_string(accepted) + " of " + std::to_string(proposed) +
      " proposals; rule too strict for the requested sample");
}

template <typename DrawTheta>
SelectionBatch rejection_sample(int n, const SigmaModel& sigma, const SelectionRule& rule,
                                Rng& rng, SamplingRegime regime, std::uint64_t draw_cap,
                                DrawTheta&& draw_theta) {
  if (n <= 0) throw ValidationError("selection sampling: need n > 0");
  sigma.validate();
  rule.validate();
  if (draw_cap == 0) throw ValidationError("selection sampling: draw cap must be positive");

  SelectionBatch batch;
  batch.draws.reserve(static_cast<std::size_t>(n));
  while (batch.draws.size() < static_cast<std::size_t>(n)) {
    if (batch.n_proposed >= draw_cap) throw_infeasible(batch.draws.size(), batch.n_proposed);
    if (batch.n_proposed >= kProbeProposals &&
        static_cast<double>(batch.draws.size()) <
            kMinAcceptance * static_cast<double>(batch.n_proposed)) {
      throw_infeasible(batch.draws.size(), batch.n_proposed);
    }
    ++batch.n_proposed;
    RegimeDraw d;
    d.regime = regime;
    d.theta = draw_theta(rng);
    d.sigma_hat = sigma.sample(rng);
    d.theta_hat = rng.normal(d.theta, d.sigma_hat);
    if (is_selected(d.theta_hat, d.sigma_hat, rule)) batch.draws.push_back(d);
  }
  batch.acceptance_rate =
      static_cast<double>(batch.draws.size()) / static_cast<double>(batch.n_proposed);
  return batch;
}

}  // namespace

void SelectionRule::validate() const {
  if (!std::isfinite(threshold)) throw ValidationError("selection rule: threshold must be finite");
  if (!std::isfinite(null_value)) {
    throw ValidationError("selection rule: null_value must be finite");
  }
}

bool is_selected(double theta_hat, double sigma_hat, const SelectionRule& rule) {
  rule.validate();
  if (rule.kind == SelectionKind::None) return true;
  if (!(sigma_hat > 0.0) && rule.kind == SelectionKind::ZThreshold) {
    throw ValidationError("is_selected: z-score rule needs sigma_hat > 0");
  }
  double stat;
  if (rule.kind == SelectionKind::ZThreshold) {
    stat = (theta_hat - rule.null_value) / sigma_hat;
  } else {
    stat = rule.direction == SelectionDirection::TwoSided ? theta_hat - rule.null_value
                                                          : theta_hat;
  }
  if (rule.direction == SelectionDirection::TwoSided) return std::fabs(stat) > rule.threshold;
  return stat > rule.threshold;
}

SigmaModel SigmaModel::constant(double sigma) {
  SigmaModel m;
  m.values = {sigma};
  m.validate();
  return m;
}

void SigmaModel::validate() const {
  if (values.empty()) throw ValidationError("sigma model: need at least one value");
  for (double v : values) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw ValidationError("sigma model: every sigma must be positive and finite");
    }
  }
}

double SigmaModel::sample(Rng& rng) const {
  if (values.size() == 1) return values[0];
  const auto idx = static_cast<std::size_t>(rng.u01() * static_cast<double>(values.size()));
  return values[idx < values.size() ? idx : values.size() - 1];
}

SelectionBatch sample_selected_joint(int n, const HyperParams& hp, const SigmaModel& sigma,
                                     const SelectionRule& rule, std::uint64_t seed,
                                     LambdaSource lambda_source, std::uint64_t draw_cap) {
  hp.validate();
  Rng rng = Rng::stream(seed, kJointStream);
  return rejection_sample(n, sigma, rule, rng, SamplingRegime::JointSampling, draw_cap,
                          [&](Rng& r) {
                            const double lambda =
                                lambda_source == LambdaSource::Hierarchy
                                    ? r.inverse_gamma(0.5 * hp.a, 0.5 * hp.b)
                                    : 1.0;
                            return r.normal(hp.m0, std::sqrt(lambda * hp.tau));
                          });
}

SelectionBatch sample_selected_fixed(double theta, int n, const SigmaModel& sigma,
                                     const SelectionRule& rule, std::uint64_t seed,
                                     std::uint64_t draw_cap) {
  if (!std::isfinite(theta)) throw ValidationError("sample_selected_fixed: theta must be finite");
  Rng rng = Rng::stream(seed, kFixedStream);
  return rejection_sample(n, sigma, rule, rng, SamplingRegime::FixedParameter, draw_cap,
                          [&](Rng&) { return theta; });
}

}  // namespace shrinkage
