#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string_view>

#include "stormrain/error.hpp"

namespace stormrain {

// All stochastic code draws through this wrapper so that runs are replayable
// from a single root seed. Distribution transforms are implemented here
// (inverse-CDF normal, Marsaglia-Tsang gamma) instead of <random>'s
// distribution objects, whose output is not pinned by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Strictly inside (0, 1): 53-bit mantissa offset by half an ulp.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) *
           (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() { return normal_quantile(uniform01()); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, rate), mean shape/rate.
  double gamma(double shape, double rate) {
    if (shape <= 0.0 || rate <= 0.0) {
      throw std::invalid_argument("gamma requires positive shape and rate");
    }
    if (shape < 1.0) {
      const double x = gamma(shape + 1.0, 1.0);
      const double u = uniform01();
      return x * std::pow(u, 1.0 / shape) / rate;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return d * v / rate;
      }
    }
  }

  // Standard normal quantile, Wichura's AS 241 (double-precision branch).
  static double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("normal_quantile requires p in (0,1)");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
      const double r = 0.180625 - q * q;
      return q *
             (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                   6.7265770927008700853e4) *
                      r +
                  4.5921953931549871457e4) *
                     r +
                 1.3731693765509461125e4) *
                    r +
                1.9715909503065514427e3) *
                   r +
               1.3314166789178437745e2) *
                  r +
              3.3871328727963666080e0) /
             (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                   3.9307895800092710610e4) *
                      r +
                  2.1213794301586595867e4) *
                     r +
                 5.3941960214247511077e3) *
                    r +
                6.8718700749205790830e2) *
                   r +
               4.2313330701600911252e1) *
                  r +
              1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
      r -= 1.6;
      val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                      r +
                  2.41780725177450611770e-1) *
                     r +
                 1.27045825245236838258e0) *
                    r +
                3.64784832476320460504e0) *
                   r +
               5.76949722146069140550e0) *
                  r +
              4.63033784615654529590e0) *
                 r +
             1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                      r +
                  1.51986665636164571966e-2) *
                     r +
                 1.48103976427480074590e-1) *
                    r +
                6.89767334985100004550e-1) *
                   r +
               1.67638483018380384940e0) *
                  r +
              2.05319162663775882187e0) *
                 r +
             1.0);
    } else {
      r -= 5.0;
      val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                      r +
                  1.24266094738807843860e-3) *
                     r +
                 2.65321895265761230930e-2) *
                    r +
                2.96560571828504891230e-1) *
                   r +
               1.78482653991729133580e0) *
                  r +
              5.46378491116411436990e0) *
                 r +
             6.65790464350110377720e0) /
            ((((((1.42151175831644588870e-7 * r + 1.84631831751005468180e-5) *
                      r +
                  7.86869131145613259100e-4) *
                     r +
                 1.48753612908506148525e-2) *
                    r +
                1.36929880922735805310e-1) *
                   r +
               5.99832206555887937690e-1) *
                  r +
             1.0);
    }
    return q < 0.0 ? -val : val;
  }

  static double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }
  // Upper tail P(Z > z), accurate deep into the tail.
  static double normal_tail(double z) { return 0.5 * std::erfc(z / kSqrt2); }

  // log P(Z > z); asymptotic branch once erfc underflows.
  static double log_normal_tail(double z) {
    if (z < 25.0) return std::log(normal_tail(z));
    const double z2 = z * z;
    return -0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * M_PI) +
           std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
  }

  // Draw from a standard normal truncated to (a, b), a < b. Inverse-CDF in
  // the better-conditioned tail; for supports entirely beyond ~37 sd (where
  // tail probabilities underflow) falls back to shifted-exponential
  // rejection. The result is strictly inside (a, b).
  double truncated_standard_normal(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("truncation requires a < b");
    double z;
    if (b <= 0.0) {
      z = -truncated_upper(-b, -a);
    } else if (a >= 0.0) {
      z = truncated_upper(a, b);
    } else {
      const double pa = normal_cdf(a);
      const double pb = normal_cdf(b);
      z = normal_quantile(uniform(pa, pb));
    }
    if (z <= a) z = std::nextafter(a, b);
    if (z >= b) z = std::nextafter(b, a);
    return z;
  }

  double truncated_normal(double mean, double sd, double lo, double hi) {
    if (!(sd > 0.0)) throw std::invalid_argument("truncated_normal sd <= 0");
    const double a = (lo - mean) / sd;
    const double b = (hi - mean) / sd;
    double x = mean + sd * truncated_standard_normal(a, b);
    if (x <= lo) x = std::nextafter(lo, hi);
    if (x >= hi) x = std::nextafter(hi, lo);
    return x;
  }

 private:
  static constexpr double kSqrt2 = 1.4142135623730951;

  // Upper-tail truncation with 0 <= a < b.
  double truncated_upper(double a, double b) {
    const double qa = normal_tail(a);
    if (qa > 0.0 && qa > std::numeric_limits<double>::min() * 16) {
      const double qb = b == std::numeric_limits<double>::infinity()
                            ? 0.0
                            : normal_tail(b);
      const double u = uniform(qb, qa);
      return -normal_quantile(u);
    }
    // Deep tail: Robert's exponential-proposal rejection on [a, b].
    const double shift = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (int tries = 0; tries < 100000; ++tries) {
      const double e = -std::log(uniform01()) / shift;
      const double z = a + e;
      if (z >= b) continue;
      const double w = z - shift;
      if (std::log(uniform01()) <= -0.5 * w * w) return z;
    }
    throw NumericError("truncated normal rejection did not converge");
  }

  std::mt19937_64 engine_;
};

// Stable per-stage / per-chain seed derivation from one root seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (const char ch : tag) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  std::uint64_t z = root ^ h ^ (index * 0x9e3779b97f4a7c15ull);
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace stormrain
