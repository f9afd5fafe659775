#include "shrinkage/rng.hpp"

#include <cmath>
#include <string>

#include "shrinkage/errors.hpp"

namespace shrinkage {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0xD1342543DE82EF95ull + 1ull));
}

double Rng::u01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::u01_open() {
  double u;
  do {
    u = u01();
  } while (u == 0.0);
  return u;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi)) throw ValidationError("Rng::uniform: need lo < hi");
  return lo + (hi - lo) * u01();
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * u01() - 1.0;
    v = 2.0 * u01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * f;
  has_cached_normal_ = true;
  return u * f;
}

double Rng::normal(double mean_, double sd) {
  if (!(sd >= 0.0)) throw ValidationError("Rng::normal: sd must be >= 0");
  return mean_ + sd * normal();
}

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw ValidationError("Rng::gamma: shape and scale must be positive");
  }
  if (shape < 1.0) {
    // Boost a shape+1 draw down: X_a = X_{a+1} * U^(1/a).
    const double u = u01_open();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = u01_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

double Rng::chi_square(double df) {
  if (!(df > 0.0)) throw ValidationError("Rng::chi_square: df must be positive");
  return gamma(0.5 * df, 2.0);
}

double Rng::inverse_gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw ValidationError("Rng::inverse_gamma: shape and scale must be positive");
  }
  // Reciprocal of a gamma draw with rate = scale.
  return 1.0 / gamma(shape, 1.0 / scale);
}

double Rng::student_t(double df) {
  if (!(df > 0.0)) throw ValidationError("Rng::student_t: df must be positive");
  return normal() / std::sqrt(chi_square(df) / df);
}

}  // namespace shrinkage
