#pragma once

#include <optional>
#include <vector>

#include "ascr/survey.hpp"
#include "ascr/types.hpp"

namespace ascr {

/// Predicted arrival e + d / v of a call at a detector.
inline double predicted_arrival(const CandidateCall& c, Point detector, double sound_speed) {
  return c.emission + distance(c.location, detector) / sound_speed;
}

/// Detection order k_m for detector m.
///
/// `captured[n]` marks the calls detected by m. The result lists, for each captured call
/// taken in index order, the zero-based rank of its predicted arrival among the captured
/// calls; that rank is the index of the time-sorted detection it explains. Ties in
/// predicted arrival go to the lower call index.
std::vector<int> derive_order(const std::vector<CandidateCall>& calls, const std::vector<bool>& captured,
                              Point detector, double sound_speed);

/// Builds a state from a capture matrix Z (M x N, 0/1) and orders K (one derive_order-style
/// vector per detector).
LatentState latent_from_capture(std::vector<CandidateCall> calls, const std::vector<std::vector<int>>& capture,
                                const std::vector<std::vector<int>>& order);

/// Re-derives every detector's assignment from the current Z, X and e.
void reassign_from_order(LatentState& state, const SurveyConfig& config);

/// Each detection is explained by exactly one call and indices are in range.
/// Throws std::invalid_argument naming the first violation.
void check_assignment(const LatentState& state, const DetectionData& data);

/// True when the assignment on every detector matches the predicted-arrival order.
bool order_consistent(const LatentState& state, const SurveyConfig& config);

/// Padded M x N strength / time matrices with empty entries where z = 0.
struct PaddedMatrices {
  std::vector<std::vector<std::optional<double>>> strength;
  std::vector<std::vector<std::optional<double>>> time;
};

PaddedMatrices pad(const DetectionData& data, const LatentState& state);

/// Reads each padded row in arrival order (ascending time) to recover per-detector
/// detections. Inverse of pad on the observed entries.
DetectionData unpad(const PaddedMatrices& padded);

}  // namespace ascr
