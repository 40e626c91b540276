#pragma once

#include <optional>
#include <vector>

#include "ascr/region.hpp"
#include "ascr/types.hpp"

namespace ascr {

inline constexpr double kDefaultSoundSpeed = 330.0;

/// Survey geometry and timing shared by every module.
struct SurveyConfig {
  SurveyRegion region = SurveyRegion::rectangle(0, 0, 1, 1);
  std::vector<Detector> detectors;
  double duration = 0.0;      // T (s)
  double sound_speed = kDefaultSoundSpeed;
  double emission_start = 0.0;  // e_l
  double emission_end = 0.0;    // e_r

  /// Builds a config; the emission window defaults to (-max_travel_time, duration).
  static SurveyConfig make(SurveyRegion region, std::vector<Detector> detectors, double duration,
                           double sound_speed = kDefaultSoundSpeed,
                           std::optional<std::pair<double, double>> emission_window = std::nullopt);

  int n_detectors() const { return static_cast<int>(detectors.size()); }
  Point detector_position(int m) const { return detectors[static_cast<std::size_t>(m)].position; }
  double emission_width() const { return emission_end - emission_start; }

  /// Largest detector-to-region distance divided by the sound speed.
  double max_travel_time() const;
  /// Largest inter-detector distance divided by the sound speed.
  double max_inter_detector_travel_time() const;
  /// Median nearest-neighbour detector spacing (m); 0 with a single detector.
  double median_detector_spacing() const;

  void validate() const;
};

/// Thread-count / scheduling choice for kernels that have a serial reference path.
enum class Execution { Serial, Parallel };

}  // namespace ascr
