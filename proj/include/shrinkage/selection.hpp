#ifndef SHRINKAGE_SELECTION_HPP
#define SHRINKAGE_SELECTION_HPP

#include <cstdint>
#include <vector>

#include "shrinkage/model.hpp"

namespace shrinkage {

/* Selection rules and the two sampling regimes used to study them.
 *
 * JointSampling redraws the true effect together with its estimate on every
 * proposal, so the selected population keeps the prior's conditional
 * structure; FixedParameter holds the true effect fixed and resamples only
 * the noise, which is the classical winner's-curse setting.
 */

enum class SelectionKind { ZThreshold, RawThreshold, None };
enum class SelectionDirection { Greater, TwoSided };

struct SelectionRule {
  SelectionKind kind = SelectionKind::ZThreshold;
  double threshold = 1.645;
  // Reference point for z-scores and two-sided comparisons; 1.0 matches
  // "no effect" on the ratio scale.
  double null_value = 1.0;
  SelectionDirection direction = SelectionDirection::Greater;

  void validate() const;
};

// ZThreshold compares (theta_hat - null_value) / sigma_hat against the
// threshold; RawThreshold compares theta_hat itself (or its deviation from
// null_value when two-sided); None accepts everything.
bool is_selected(double theta_hat, double sigma_hat, const SelectionRule& rule);

// Standard error generator for simulated estimates: one value held constant,
// or a finite set sampled uniformly per draw.
struct SigmaModel {
  std::vector<double> values{1.0};

  static SigmaModel constant(double sigma);
  void validate() const;
  double sample(class Rng& rng) const;
};

enum class SamplingRegime { JointSampling, FixedParameter };

struct RegimeDraw {
  double theta = 0.0;
  double theta_hat = 0.0;
  double sigma_hat = 1.0;
  SamplingRegime regime = SamplingRegime::JointSampling;
};

struct SelectionBatch {
  std::vector<RegimeDraw> draws;
  std::uint64_t n_proposed = 0;
  double acceptance_rate = 0.0;
};

// How the true effects are generated under JointSampling: the full hierarchy
// with lambda_i ~ InverseGamma(a/2, b/2), or the single-scale special case
// lambda_i = 1.
enum class LambdaSource { Hierarchy, FixedOne };

inline constexpr std::uint64_t kDefaultDrawCap = 1000000000ull;

// Draw until n estimates pass the rule, redrawing theta every proposal.
// Throws InfeasibleSelectionError when the rule accepts less than ~1e-6 of
// proposals or the draw cap is hit.
SelectionBatch sample_selected_joint(int n, const HyperParams& hp, const SigmaModel& sigma,
                                     const SelectionRule& rule, std::uint64_t seed,
                                     LambdaSource lambda_source = LambdaSource::Hierarchy,
                                     std::uint64_t draw_cap = kDefaultDrawCap);

// Same, with the true effect pinned at `theta` for every proposal.
SelectionBatch sample_selected_fixed(double theta, int n, const SigmaModel& sigma,
                                     const SelectionRule& rule, std::uint64_t seed,
                                     std::uint64_t draw_cap = kDefaultDrawCap);

}  // namespace shrinkage

#endif  // SHRINKAGE_SELECTION_HPP
