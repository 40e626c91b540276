#include "ascr/survey.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ascr {

SurveyConfig SurveyConfig::make(SurveyRegion region, std::vector<Detector> detectors, double duration,
                                double sound_speed,
                                std::optional<std::pair<double, double>> emission_window) {
  SurveyConfig c;
  c.region = std::move(region);
  c.detectors = std::move(detectors);
  c.duration = duration;
  c.sound_speed = sound_speed;
  if (emission_window) {
    c.emission_start = emission_window->first;
    c.emission_end = emission_window->second;
  } else {
    c.emission_start = -c.max_travel_time();
    c.emission_end = duration;
  }
  c.validate();
  return c;
}

double SurveyConfig::max_travel_time() const {
  double best = 0.0;
  for (const Detector& d : detectors) best = std::max(best, region.max_distance_from(d.position));
  return best / sound_speed;
}

double SurveyConfig::max_inter_detector_travel_time() const {
  double best = 0.0;
  for (std::size_t a = 0; a < detectors.size(); ++a)
    for (std::size_t b = a + 1; b < detectors.size(); ++b)
      best = std::max(best, distance(detectors[a].position, detectors[b].position));
  return best / sound_speed;
}

double SurveyConfig::median_detector_spacing() const {
  if (detectors.size() < 2) return 0.0;
  std::vector<double> nearest;
  for (std::size_t a = 0; a < detectors.size(); ++a) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < detectors.size(); ++b)
      if (a != b) best = std::min(best, distance(detectors[a].position, detectors[b].position));
    nearest.push_back(best);
  }
  std::sort(nearest.begin(), nearest.end());
  const std::size_t n = nearest.size();
  return n % 2 == 1 ? nearest[n / 2] : 0.5 * (nearest[n / 2 - 1] + nearest[n / 2]);
}

void SurveyConfig::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("survey duration must be positive");
  if (!(sound_speed > 0.0)) throw std::invalid_argument("sound speed must be positive");
  if (!(emission_start < emission_end)) throw std::invalid_argument("emission window must satisfy e_l < e_r");
  if (detectors.empty()) throw std::invalid_argument("at least one detector is required");
  for (std::size_t i = 0; i < detectors.size(); ++i) {
    const Detector& d = detectors[i];
    if (d.id != static_cast<int>(i) + 1)
      throw std::invalid_argument("detector ids must be contiguous from 1; got " + std::to_string(d.id) +
                                  " at position " + std::to_string(i + 1));
    if (!std::isfinite(d.position.x) || !std::isfinite(d.position.y))
      throw std::invalid_argument("detector " + std::to_string(d.id) + " has a non-finite position");
  }
}

}  // namespace ascr
