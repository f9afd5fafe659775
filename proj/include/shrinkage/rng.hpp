#ifndef SHRINKAGE_RNG_HPP
#define SHRINKAGE_RNG_HPP

#include <cstdint>
#include <random>

namespace shrinkage {

/* Deterministic random source.
 *
 * The engine is std::mt19937_64 (fully specified by the standard), and every
 * distribution transform below is implemented by hand, so a (seed, stream)
 * pair reproduces the identical draw sequence on any build.  Streams are
 * derived from a user seed with a SplitMix64 finalizer; distinct stream
 * indices give statistically independent, non-overlapping generators, which
 * is what the samplers rely on for parallel work.
 *
 * Pinned algorithms:
 *   uniform  - 53-bit mantissa from the top engine bits
 *   normal   - Marsaglia polar method (one value cached per pair)
 *   gamma    - Marsaglia-Tsang squeeze for shape >= 1, boost by U^(1/shape)
 *              for shape < 1
 *   inverse gamma, chi-square, Student t - composed from the above
 */
class Rng {
 public:
  explicit Rng(std::uint64_t raw_seed) : engine_(raw_seed) {}

  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;
  Rng(Rng&&) = default;
  Rng& operator=(Rng&&) = default;

  // SplitMix64 mix of (seed, stream); stable across builds.
  static std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream);

  static Rng stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive_stream_seed(seed, stream));
  }

  // Uniform on [0, 1).
  double u01();
  // Uniform on (0, 1); safe under log().
  double u01_open();
  double uniform(double lo, double hi);

  double normal();
  double normal(double mean_, double sd);

  // Mean shape*scale.  Requires shape > 0, scale > 0.
  double gamma(double shape, double scale);

  double chi_square(double df);

  // Density proportional to x^(-shape-1) exp(-scale/x); mean scale/(shape-1).
  double inverse_gamma(double shape, double scale);

  double student_t(double df);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace shrinkage

#endif  // SHRINKAGE_RNG_HPP
