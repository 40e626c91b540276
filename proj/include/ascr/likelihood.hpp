#pragma once

#include <optional>

#include "ascr/survey.hpp"
#include "ascr/types.hpp"

namespace ascr {

/// Components of the complete-data log-likelihood. The N! location permutation constant
/// is left out; every other factor is kept exactly.
struct CompleteDataTerms {
  double location = 0.0;  // sum log f(x_n), uniform on the region
  double emission = 0.0;  // sum log f(e_n), uniform on the emission window
  double capture = 0.0;   // Bernoulli z_{m,n} given x_n
  double strength = 0.0;  // truncated-Gaussian strengths of detected entries
  double arrival = 0.0;   // Gaussian arrival times of detected entries
  double order = 0.0;     // 0 if the detection order matches predicted arrivals, -inf otherwise

  double total() const { return location + emission + capture + strength + arrival + order; }
};

double location_logpdf(const LatentState& state, const SurveyConfig& config);
double emission_logpdf(const LatentState& state, const SurveyConfig& config);
double capture_logpmf(const LatentState& state, const SurveyConfig& config, const ModelParams& p);
double strength_logpdf(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                       const ModelParams& p);
double arrival_logpdf(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                      const ModelParams& p);
double order_logpmf(const LatentState& state, const SurveyConfig& config);

CompleteDataTerms complete_data_terms(const LatentState& state, const DetectionData& data,
                                      const SurveyConfig& config, const ModelParams& p);

/// Complete-data log-likelihood; -inf (not an error) for an inconsistent detection order,
/// a call outside the region or an emission time outside the window.
double complete_data_loglik(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                            const ModelParams& p);

/// Copy of `state` holding only the calls detected by at least `min_detectors` detectors.
LatentState restrict_to_observed(const LatentState& state, int min_detectors);

/// Log-likelihood conditional on the observed-call count.
///
/// Every call with at least one detection is included and must have at least
/// `min_detectors` of them. The overall detection probability at each call location cancels
/// between the location and capture factors, leaving -log int_A p.(x) dx per call.
/// `region_integral` may carry a precomputed int_A p.(x) dx for these parameters.
double conditional_loglik(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                          const ModelParams& p, int min_detectors,
                          std::optional<double> region_integral = std::nullopt);

/// Semi-complete-data log-likelihood for a total of N calls with uniform call locations:
/// log(N!/N^u!) + N^u log(1 - pbar) plus the observed-call factors.
/// `mean_detect` may carry a precomputed pbar (at-least-once detection).
double semi_complete_loglik(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                            const ModelParams& p, long long total_calls,
                            std::optional<double> mean_detect = std::nullopt);

}  // namespace ascr
