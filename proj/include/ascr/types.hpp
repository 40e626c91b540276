#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ascr {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// A detector at a known position. Ids are 1-based and contiguous.
struct Detector {
  int id = 0;
  Point position;
};

/// One threshold-crossing event on one detector.
struct Detection {
  int detector_id = 0;
  double time = 0.0;             // seconds since survey start
  double signal_strength = 0.0;  // same units as the source strength beta0
};

/// Source-strength / attenuation / noise model parameters plus the fixed detection threshold.
struct ModelParams {
  double beta0 = 0.0;    // source signal strength
  double beta1 = 0.0;    // linear attenuation per meter
  double sigma_s = 1.0;  // signal strength standard deviation
  double sigma_t = 1.0;  // arrival time standard deviation (s)
  double threshold = 0.0;

  void validate() const {
    if (!std::isfinite(beta0) || !std::isfinite(beta1) || !std::isfinite(sigma_s) ||
        !std::isfinite(sigma_t) || !std::isfinite(threshold))
      throw std::invalid_argument("model parameters must be finite");
    if (beta1 < 0.0) throw std::invalid_argument("beta1 must be non-negative");
    if (sigma_s <= 0.0) throw std::invalid_argument("sigma_s must be positive");
    if (sigma_t <= 0.0) throw std::invalid_argument("sigma_t must be positive");
  }
};

struct DensityEstimate {
  double call_density = 0.0;   // calls per second per unit area
  double total_calls = 0.0;    // estimated calls over area and duration
  double mean_detect_prob = 0.0;
  double observed_calls = 0.0; // Monte Carlo mean of the observed-call count
};

/// Per-detector time-ordered detections. Index m is detector id - 1.
class DetectionData {
 public:
  DetectionData() = default;
  explicit DetectionData(int n_detectors) : per_detector_(static_cast<std::size_t>(n_detectors)) {}

  /// Sorts each detector's detections by time and perturbs exact ties by +1e-9 s steps.
  static DetectionData from_records(std::vector<Detection> records, int n_detectors);

  int n_detectors() const { return static_cast<int>(per_detector_.size()); }
  const std::vector<Detection>& detector(int m) const { return per_detector_.at(static_cast<std::size_t>(m)); }
  int count(int m) const { return static_cast<int>(detector(m).size()); }
  std::vector<int> counts() const;
  int total() const;
  bool empty() const { return total() == 0; }

  /// Appends to detector m; caller keeps the list sorted.
  void push_back(int m, Detection d) { per_detector_.at(static_cast<std::size_t>(m)).push_back(d); }

  /// Checks time range, threshold and strict within-detector ordering.
  void validate(double duration, double threshold) const;

  std::vector<Detection> flatten() const;

 private:
  std::vector<std::vector<Detection>> per_detector_;
};

inline constexpr int kUndetected = -1;

struct CandidateCall {
  Point location;
  double emission = 0.0;
};

/// A candidate-call configuration for one set of detections.
///
/// assignment(m, n) is the index of the detection on detector m explained by call n, or
/// kUndetected. Z is assignment >= 0 and the detection order K is implied by which
/// detection each call holds.
class LatentState {
 public:
  LatentState() = default;
  LatentState(int n_detectors, std::vector<CandidateCall> calls)
      : n_detectors_(n_detectors),
        calls_(std::move(calls)),
        assignment_(static_cast<std::size_t>(n_detectors) * calls_.size(), kUndetected) {}

  int n_detectors() const { return n_detectors_; }
  int n_calls() const { return static_cast<int>(calls_.size()); }

  const std::vector<CandidateCall>& calls() const { return calls_; }
  CandidateCall& call(int n) { return calls_[static_cast<std::size_t>(n)]; }
  const CandidateCall& call(int n) const { return calls_[static_cast<std::size_t>(n)]; }

  int assignment(int m, int n) const { return assignment_[index(m, n)]; }
  void set_assignment(int m, int n, int j) { assignment_[index(m, n)] = j; }
  bool detected(int m, int n) const { return assignment(m, n) != kUndetected; }

  /// Number of detectors that detected call n.
  int detections_of(int n) const;
  /// Number of calls with at least `min_detectors` detections.
  int n_observed(int min_detectors = 1) const;

  /// Capture matrix Z as 0/1 rows per detector.
  std::vector<std::vector<int>> capture_matrix() const;

 private:
  std::size_t index(int m, int n) const {
    return static_cast<std::size_t>(m) * calls_.size() + static_cast<std::size_t>(n);
  }

  int n_detectors_ = 0;
  std::vector<CandidateCall> calls_;
  std::vector<int> assignment_;
};

}  // namespace ascr
