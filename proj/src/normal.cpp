#include "ascr/normal.hpp"

#include <algorithm>
#include <limits>

namespace ascr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Positive-tail draw from N(0,1) on [a, b], a >= 0.
double tail_draw(double a, double b, Rng& rng, bool& ok) {
  ok = true;
  constexpr int kMaxTries = 100000;
  if (std::isfinite(b) && 0.5 * (b - a) * (b + a) < 1.0) {
    for (int i = 0; i < kMaxTries; ++i) {
      double z = a + (b - a) * uniform01(rng);
      if (uniform01(rng) <= std::exp(-0.5 * (z * z - a * a))) return z;
    }
  } else {
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (int i = 0; i < kMaxTries; ++i) {
      double z = a - std::log1p(-uniform01(rng)) / lambda;
      if (z > b) continue;
      if (uniform01(rng) <= std::exp(-0.5 * (z - lambda) * (z - lambda))) return z;
    }
  }
  ok = false;
  return a;
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(a + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(b + 0x85157af5ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return Rng(seq);
}

double log_normal_cdf(double z) {
  if (z > -30.0) return std::log(normal_cdf(z));
  // asymptotic series of the Mills ratio
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(-z) - kLogSqrt2Pi + std::log(series);
}

double log_normal_interval(double a, double b) {
  if (!(a < b)) return -std::numeric_limits<double>::infinity();
  if (a >= 0.0) {
    const double la = log_normal_cdf(-a);
    const double lb = log_normal_cdf(-b);
    return la + std::log1p(-std::exp(lb - la));
  }
  const double lb = log_normal_cdf(b);
  const double la = log_normal_cdf(a);
  return lb + std::log1p(-std::exp(la - lb));
}

double inverse_mills(double z) {
  if (z > -30.0) return normal_pdf(z) / normal_cdf(z);
  return std::exp(-0.5 * z * z - kLogSqrt2Pi - log_normal_cdf(z));
}

double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng, bool* clamped) {
  if (clamped) *clamped = false;
  if (!(lo < hi)) {
    if (clamped) *clamped = true;
    return std::clamp(mean, std::min(lo, hi), std::max(lo, hi));
  }
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  const double mass = (a > 0.0 ? normal_cdf(-a) - normal_cdf(-b) : normal_cdf(b) - normal_cdf(a));

  bool ok = true;
  double z = 0.0;
  if (mass >= 0.25) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
      z = gauss(rng);
      if (z >= a && z <= b) break;
    }
  } else if (a >= 0.0) {
    z = tail_draw(a, b, rng, ok);
  } else if (b <= 0.0) {
    z = -tail_draw(-b, -a, rng, ok);
  } else {
    // narrow window straddling the mode
    ok = false;
    for (int i = 0; i < 100000; ++i) {
      z = a + (b - a) * uniform01(rng);
      if (uniform01(rng) <= std::exp(-0.5 * z * z)) {
        ok = true;
        break;
      }
    }
  }
  if (!ok) {
    if (clamped) *clamped = true;
    return std::clamp(mean, lo, hi);
  }
  return std::clamp(mean + sd * z, lo, hi);
}

Moments truncated_normal_moments(double mean, double sd, double lo, double hi) {
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  const double pa = std::isfinite(a) ? normal_pdf(a) : 0.0;
  const double pb = std::isfinite(b) ? normal_pdf(b) : 0.0;
  const double mass = normal_cdf(b) - normal_cdf(a);
  const double ta = std::isfinite(a) ? a * pa : 0.0;
  const double tb = std::isfinite(b) ? b * pb : 0.0;
  const double shift = (pa - pb) / mass;
  return {mean + sd * shift, sd * sd * (1.0 + (ta - tb) / mass - shift * shift)};
}

}  // namespace ascr
