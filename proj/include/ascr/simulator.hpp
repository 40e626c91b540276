#pragma once

#include <vector>

#include "ascr/normal.hpp"
#include "ascr/survey.hpp"
#include "ascr/types.hpp"

namespace ascr {

/// Per-animal call rates (calls per second): a single fixed rate or an empirical sample.
class CallRateModel {
 public:
  static CallRateModel fixed(double rate);
  static CallRateModel empirical(std::vector<double> rates);

  double draw(Rng& rng) const;
  double mean() const;
  const std::vector<double>& rates() const { return rates_; }

 private:
  explicit CallRateModel(std::vector<double> rates);
  std::vector<double> rates_;
};

/// How many calls each animal makes over the emission window.
enum class CallCountMode {
  Poisson,        // Poisson(rate * window width)
  Deterministic,  // round(rate * window width), every animal the same for a fixed rate
};

/// One generated call with every detector's draw, including detections later dropped
/// because they arrived outside [0, T].
struct SimCall {
  Point location;
  double emission = 0.0;
  int animal = -1;                // -1 for call-level simulation
  std::vector<double> strength;   // per detector
  std::vector<double> time;       // per detector
  std::vector<int> detected;      // z before the survey-window cut
  std::vector<int> kept;          // detection index in the returned data, or kUndetected
};

struct SimTruth {
  std::vector<Point> animals;
  std::vector<int> calls_per_animal;
  std::vector<SimCall> calls;
  /// All generated calls with their assignments into the returned detections.
  LatentState latent;
};

struct SimResult {
  DetectionData data;
  SimTruth truth;
};

/// Animals ~ Poisson(D_a A) uniform in A; calls per animal per the count mode; emission
/// times uniform on the emission window; detection where the sampled strength crosses c.
SimResult simulate_survey(double animal_density, const CallRateModel& rates, const SurveyConfig& config,
                          const ModelParams& params, Rng& rng, CallCountMode mode = CallCountMode::Poisson);

/// Calls ~ Poisson(D_c A W) placed independently and uniformly, W the emission window width.
SimResult simulate_calls_only(double call_density, const SurveyConfig& config, const ModelParams& params, Rng& rng);

/// Generates detections for calls at given locations and emission times.
SimResult simulate_from_calls(std::vector<CandidateCall> calls, std::vector<int> animal_of, const SurveyConfig& config,
                              const ModelParams& params, Rng& rng);

}  // namespace ascr
