#pragma once

#include <array>
#include <span>
#include <vector>

#include "ascr/survey.hpp"
#include "ascr/types.hpp"

namespace ascr {

// Detection happens when the received strength y ~ N(beta0 - beta1 d, sigma_s^2) crosses
// the fixed threshold c, so g(d) = 1 - Phi((c - (beta0 - beta1 d)) / sigma_s).

double expected_strength(double d, const ModelParams& p);

/// g(d). Throws on negative or non-finite distance.
double detect_prob(double d, const ModelParams& p);
double log_detect_prob(double d, const ModelParams& p);
/// log(1 - g(d)).
double log_miss_prob(double d, const ModelParams& p);

/// Lower-truncated Gaussian log-density of an observed strength; throws if y < c.
double logpdf_strength_given_detected(double y, double d, const ModelParams& p);

/// log N(t; e + d / v, sigma_t^2).
double logpdf_arrival_time(double t, double d, double e, const ModelParams& p, double sound_speed);

/// Probability of at least `min_detectors` (1 or 2) detections given per-detector g values.
double overall_detect_prob_from(std::span<const double> g, int min_detectors);

double overall_detect_prob(Point x, const SurveyConfig& config, const ModelParams& p, int min_detectors);

/// Region average of the overall detection probability on the region grid.
double mean_detect_prob(const SurveyConfig& config, const ModelParams& p, int min_detectors,
                        Execution exec = Execution::Parallel);

/// Detector distances for every region grid cell, reused across parameter values.
class DetectionSurface {
 public:
  DetectionSurface(const SurveyConfig& config);

  std::size_t n_cells() const { return n_cells_; }
  int n_detectors() const { return n_detectors_; }
  double cell_area() const { return cell_area_; }
  double area() const { return cell_area_ * static_cast<double>(n_cells_); }

  /// Per-cell overall detection probability.
  std::vector<double> cell_probabilities(const ModelParams& p, int min_detectors, Execution exec) const;

  /// Integral of p.(x) over the region.
  double integral(const ModelParams& p, int min_detectors, Execution exec = Execution::Parallel) const;

  /// Integral plus its gradient in (beta0, beta1, sigma_s).
  double integral_with_gradient(const ModelParams& p, int min_detectors, std::array<double, 3>& grad,
                                Execution exec = Execution::Parallel) const;

 private:
  std::size_t n_cells_ = 0;
  int n_detectors_ = 0;
  double cell_area_ = 0.0;
  std::vector<double> distances_;  // cell-major, n_cells x n_detectors
};

}  // namespace ascr
