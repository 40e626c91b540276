#include "ascr/detection_model.hpp"

#include <cmath>
#include <stdexcept>

#include "ascr/normal.hpp"

namespace ascr {

namespace {

void check_distance(double d) {
  if (!std::isfinite(d) || d < 0.0) throw std::invalid_argument("distance must be finite and non-negative");
}

// Standardized margin of the mean strength over the threshold.
inline double margin(double d, const ModelParams& p) { return (p.beta0 - p.beta1 * d - p.threshold) / p.sigma_s; }

// Probability of exactly zero / exactly one detection among g, skipping index `skip`.
inline void zero_one_probs(std::span<const double> g, int skip, double& p0, double& p1) {
  p0 = 1.0;
  p1 = 0.0;
  for (int j = 0; j < static_cast<int>(g.size()); ++j) {
    if (j == skip) continue;
    const double gj = g[static_cast<std::size_t>(j)];
    p1 = p1 * (1.0 - gj) + p0 * gj;
    p0 *= 1.0 - gj;
  }
}

}  // namespace

double expected_strength(double d, const ModelParams& p) { return p.beta0 - p.beta1 * d; }

double detect_prob(double d, const ModelParams& p) {
  check_distance(d);
  if (!std::isfinite(p.beta0) || !std::isfinite(p.beta1) || !std::isfinite(p.sigma_s) || !std::isfinite(p.threshold))
    throw std::invalid_argument("model parameters must be finite");
  return normal_cdf(margin(d, p));
}

double log_detect_prob(double d, const ModelParams& p) { return log_normal_cdf(margin(d, p)); }

double log_miss_prob(double d, const ModelParams& p) { return log_normal_cdf(-margin(d, p)); }

double logpdf_strength_given_detected(double y, double d, const ModelParams& p) {
  if (!(y >= p.threshold))
    throw std::invalid_argument("observed signal strength is below the detection threshold");
  return normal_logpdf(y, expected_strength(d, p), p.sigma_s) - log_detect_prob(d, p);
}

double logpdf_arrival_time(double t, double d, double e, const ModelParams& p, double sound_speed) {
  return normal_logpdf(t, e + d / sound_speed, p.sigma_t);
}

double overall_detect_prob_from(std::span<const double> g, int min_detectors) {
  double p0 = 0.0, p1 = 0.0;
  zero_one_probs(g, -1, p0, p1);
  if (min_detectors <= 1) return 1.0 - p0;
  if (min_detectors == 2) return std::max(0.0, 1.0 - p0 - p1);
  throw std::invalid_argument("min_detectors must be 1 or 2");
}

double overall_detect_prob(Point x, const SurveyConfig& config, const ModelParams& p, int min_detectors) {
  std::vector<double> g;
  g.reserve(config.detectors.size());
  for (const Detector& det : config.detectors) g.push_back(detect_prob(distance(x, det.position), p));
  return overall_detect_prob_from(g, min_detectors);
}

double mean_detect_prob(const SurveyConfig& config, const ModelParams& p, int min_detectors, Execution exec) {
  DetectionSurface surface(config);
  return surface.integral(p, min_detectors, exec) / surface.area();
}

DetectionSurface::DetectionSurface(const SurveyConfig& config)
    : n_cells_(config.region.grid().size()),
      n_detectors_(config.n_detectors()),
      cell_area_(config.region.cell_area()),
      distances_(n_cells_ * static_cast<std::size_t>(n_detectors_)) {
  if (n_cells_ == 0) throw std::invalid_argument("empty integration grid");
  const auto grid = config.region.grid();
  for (std::size_t c = 0; c < n_cells_; ++c)
    for (int m = 0; m < n_detectors_; ++m)
      distances_[c * static_cast<std::size_t>(n_detectors_) + static_cast<std::size_t>(m)] =
          distance(grid[c], config.detector_position(m));
}

std::vector<double> DetectionSurface::cell_probabilities(const ModelParams& p, int min_detectors,
                                                         Execution exec) const {
  if (min_detectors != 1 && min_detectors != 2) throw std::invalid_argument("min_detectors must be 1 or 2");
  std::vector<double> out(n_cells_);
  const long n = static_cast<long>(n_cells_);
  const std::size_t stride = static_cast<std::size_t>(n_detectors_);
  auto body = [&](long c) {
    std::array<double, 64> g_buf{};
    std::vector<double> g_heap;
    double* g = g_buf.data();
    if (stride > g_buf.size()) {
      g_heap.resize(stride);
      g = g_heap.data();
    }
    const double* d = &distances_[static_cast<std::size_t>(c) * stride];
    for (std::size_t m = 0; m < stride; ++m) g[m] = normal_cdf(margin(d[m], p));
    out[static_cast<std::size_t>(c)] = overall_detect_prob_from({g, stride}, min_detectors);
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (long c = 0; c < n; ++c) body(c);
  } else {
    for (long c = 0; c < n; ++c) body(c);
  }
  return out;
}

double DetectionSurface::integral(const ModelParams& p, int min_detectors, Execution exec) const {
  const std::vector<double> cells = cell_probabilities(p, min_detectors, exec);
  double sum = 0.0;
  for (double v : cells) sum += v;
  return sum * cell_area_;
}

double DetectionSurface::integral_with_gradient(const ModelParams& p, int min_detectors,
                                                std::array<double, 3>& grad, Execution exec) const {
  if (min_detectors != 1 && min_detectors != 2) throw std::invalid_argument("min_detectors must be 1 or 2");
  const std::size_t stride = static_cast<std::size_t>(n_detectors_);
  std::vector<double> cell(n_cells_ * 4);
  const long n = static_cast<long>(n_cells_);
  auto body = [&](long c) {
    std::vector<double> g(stride), dens(stride);
    const double* d = &distances_[static_cast<std::size_t>(c) * stride];
    for (std::size_t m = 0; m < stride; ++m) {
      const double u = margin(d[m], p);
      g[m] = normal_cdf(u);
      dens[m] = normal_pdf(u) / p.sigma_s;
    }
    double* out = &cell[static_cast<std::size_t>(c) * 4];
    out[0] = overall_detect_prob_from(g, min_detectors);
    out[1] = out[2] = out[3] = 0.0;
    for (std::size_t m = 0; m < stride; ++m) {
      double p0 = 0.0, p1 = 0.0;
      zero_one_probs(g, static_cast<int>(m), p0, p1);
      // dp./dg_m is P(no other detection) for >=1 and P(exactly one other) for >=2
      const double dp_dg = min_detectors == 1 ? p0 : p1;
      const double u = margin(d[m], p);
      out[1] += dp_dg * dens[m];
      out[2] -= dp_dg * dens[m] * d[m];
      out[3] -= dp_dg * dens[m] * u;
    }
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (long c = 0; c < n; ++c) body(c);
  } else {
    for (long c = 0; c < n; ++c) body(c);
  }
  double total = 0.0;
  grad = {0.0, 0.0, 0.0};
  for (std::size_t c = 0; c < n_cells_; ++c) {
    total += cell[c * 4];
    grad[0] += cell[c * 4 + 1];
    grad[1] += cell[c * 4 + 2];
    grad[2] += cell[c * 4 + 3];
  }
  for (double& v : grad) v *= cell_area_;
  return total * cell_area_;
}

}  // namespace ascr
