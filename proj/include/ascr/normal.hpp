#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ascr {

using Rng = std::mt19937_64;

/// Child generator for (seed, a, b): streams are reproducible and independent of the
/// order in which they are created, so parallel work can draw from them safely.
Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0);

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

/// log Phi(z), accurate deep into the lower tail.
double log_normal_cdf(double z);

/// log(Phi(b) - Phi(a)) for a < b, stable in both tails.
double log_normal_interval(double a, double b);

/// phi(z) / Phi(z).
double inverse_mills(double z);

inline double normal_logpdf(double x, double mean, double sd) {
  const double u = (x - mean) / sd;
  return -0.5 * u * u - std::log(sd) - kLogSqrt2Pi;
}

/// Exact draw from N(mean, sd^2) restricted to [lo, hi] (either bound may be infinite).
///
/// Uses plain rejection when the window holds enough mass, otherwise exponential or
/// uniform envelopes in the tail. Sets *clamped and returns the nearest bound if the
/// window is empty or sampling fails to terminate.
double sample_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng,
                               bool* clamped = nullptr);

/// Mean and variance of N(mean, sd^2) truncated to [lo, hi].
struct Moments {
  double mean;
  double variance;
};
Moments truncated_normal_moments(double mean, double sd, double lo, double hi);

}  // namespace ascr
