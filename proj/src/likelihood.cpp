#include "ascr/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ascr/detection_model.hpp"
#include "ascr/latent.hpp"

namespace ascr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const Detection& detection_for(const LatentState& s, const DetectionData& data, int m, int n) {
  return data.detector(m)[static_cast<std::size_t>(s.assignment(m, n))];
}

// Observed-call factors shared by the conditional and semi-complete forms, without the
// location factor: Bernoulli captures, detected strengths and times, emission prior.
double observed_call_terms(const LatentState& s, const DetectionData& data, const SurveyConfig& config,
                           const ModelParams& p, int n) {
  const CandidateCall& call = s.call(n);
  if (call.emission < config.emission_start || call.emission > config.emission_end) return kNegInf;
  double ll = -std::log(config.emission_width());
  for (int m = 0; m < s.n_detectors(); ++m) {
    const double d = distance(call.location, config.detector_position(m));
    if (!s.detected(m, n)) {
      ll += log_miss_prob(d, p);
      continue;
    }
    const Detection& det = detection_for(s, data, m, n);
    ll += log_detect_prob(d, p);
    ll += logpdf_strength_given_detected(det.signal_strength, d, p);
    ll += logpdf_arrival_time(det.time, d, call.emission, p, config.sound_speed);
  }
  return ll;
}

}  // namespace

double location_logpdf(const LatentState& state, const SurveyConfig& config) {
  const double log_density = -std::log(config.region.area());
  double ll = 0.0;
  for (const CandidateCall& c : state.calls()) {
    if (!config.region.contains(c.location)) return kNegInf;
    ll += log_density;
  }
  return ll;
}

double emission_logpdf(const LatentState& state, const SurveyConfig& config) {
  const double log_density = -std::log(config.emission_width());
  double ll = 0.0;
  for (const CandidateCall& c : state.calls()) {
    if (c.emission < config.emission_start || c.emission > config.emission_end) return kNegInf;
    ll += log_density;
  }
  return ll;
}

double capture_logpmf(const LatentState& state, const SurveyConfig& config, const ModelParams& p) {
  double ll = 0.0;
  for (int n = 0; n < state.n_calls(); ++n) {
    for (int m = 0; m < state.n_detectors(); ++m) {
      const double d = distance(state.call(n).location, config.detector_position(m));
      ll += state.detected(m, n) ? log_detect_prob(d, p) : log_miss_prob(d, p);
    }
  }
  return ll;
}

double strength_logpdf(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                       const ModelParams& p) {
  double ll = 0.0;
  for (int n = 0; n < state.n_calls(); ++n)
    for (int m = 0; m < state.n_detectors(); ++m)
      if (state.detected(m, n))
        ll += logpdf_strength_given_detected(detection_for(state, data, m, n).signal_strength,
                                             distance(state.call(n).location, config.detector_position(m)), p);
  return ll;
}

double arrival_logpdf(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                      const ModelParams& p) {
  double ll = 0.0;
  for (int n = 0; n < state.n_calls(); ++n)
    for (int m = 0; m < state.n_detectors(); ++m)
      if (state.detected(m, n))
        ll += logpdf_arrival_time(detection_for(state, data, m, n).time,
                                  distance(state.call(n).location, config.detector_position(m)),
                                  state.call(n).emission, p, config.sound_speed);
  return ll;
}

double order_logpmf(const LatentState& state, const SurveyConfig& config) {
  return order_consistent(state, config) ? 0.0 : kNegInf;
}

CompleteDataTerms complete_data_terms(const LatentState& state, const DetectionData& data,
                                      const SurveyConfig& config, const ModelParams& p) {
  check_assignment(state, data);
  CompleteDataTerms t;
  t.location = location_logpdf(state, config);
  t.emission = emission_logpdf(state, config);
  t.capture = capture_logpmf(state, config, p);
  t.strength = strength_logpdf(state, data, config, p);
  t.arrival = arrival_logpdf(state, data, config, p);
  t.order = order_logpmf(state, config);
  return t;
}

double complete_data_loglik(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                            const ModelParams& p) {
  return complete_data_terms(state, data, config, p).total();
}

LatentState restrict_to_observed(const LatentState& state, int min_detectors) {
  std::vector<int> keep;
  for (int n = 0; n < state.n_calls(); ++n)
    if (state.detections_of(n) >= std::max(1, min_detectors)) keep.push_back(n);
  std::vector<CandidateCall> calls;
  for (int n : keep) calls.push_back(state.call(n));
  LatentState out(state.n_detectors(), std::move(calls));
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (int m = 0; m < state.n_detectors(); ++m) out.set_assignment(m, static_cast<int>(i), state.assignment(m, keep[i]));
  return out;
}

double conditional_loglik(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                          const ModelParams& p, int min_detectors, std::optional<double> region_integral) {
  double log_integral = 0.0;
  bool have_integral = false;
  double ll = 0.0;
  for (int n = 0; n < state.n_calls(); ++n) {
    const int k = state.detections_of(n);
    if (k == 0) continue;
    if (k < min_detectors)
      throw std::invalid_argument("call " + std::to_string(n) + " has " + std::to_string(k) +
                                  " detections, fewer than min_detectors");
    if (!config.region.contains(state.call(n).location)) return kNegInf;
    if (!have_integral) {
      const double integral = region_integral ? *region_integral
                                              : DetectionSurface(config).integral(p, min_detectors);
      log_integral = std::log(integral);
      have_integral = true;
    }
    ll += observed_call_terms(state, data, config, p, n) - log_integral;
  }
  return ll;
}

double semi_complete_loglik(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                            const ModelParams& p, long long total_calls, std::optional<double> mean_detect) {
  const long long observed = state.n_observed(1);
  if (total_calls < observed)
    throw std::invalid_argument("total call count is smaller than the observed call count");
  const long long unobserved = total_calls - observed;
  const double pbar = mean_detect ? *mean_detect : mean_detect_prob(config, p, 1);
  double ll = std::lgamma(static_cast<double>(total_calls) + 1.0) - std::lgamma(static_cast<double>(unobserved) + 1.0);
  if (unobserved > 0) ll += static_cast<double>(unobserved) * std::log1p(-pbar);
  const double log_area = std::log(config.region.area());
  for (int n = 0; n < state.n_calls(); ++n) {
    if (state.detections_of(n) == 0) continue;
    if (!config.region.contains(state.call(n).location)) return kNegInf;
    ll += observed_call_terms(state, data, config, p, n) - log_area;
  }
  return ll;
}

}  // namespace ascr
