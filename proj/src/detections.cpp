#include <algorithm>
#include <numeric>
#include <sstream>

#include "ascr/types.hpp"

namespace ascr {

DetectionData DetectionData::from_records(std::vector<Detection> records, int n_detectors) {
  DetectionData data(n_detectors);
  for (const Detection& d : records) {
    if (d.detector_id < 1 || d.detector_id > n_detectors)
      throw std::invalid_argument("detection references unknown detector id " + std::to_string(d.detector_id));
    data.per_detector_[static_cast<std::size_t>(d.detector_id - 1)].push_back(d);
  }
  for (auto& list : data.per_detector_) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Detection& a, const Detection& b) { return a.time < b.time; });
    for (std::size_t j = 1; j < list.size(); ++j)
      if (list[j].time <= list[j - 1].time) list[j].time = list[j - 1].time + 1e-9;
  }
  return data;
}

std::vector<int> DetectionData::counts() const {
  std::vector<int> c;
  c.reserve(per_detector_.size());
  for (const auto& list : per_detector_) c.push_back(static_cast<int>(list.size()));
  return c;
}

int DetectionData::total() const {
  int n = 0;
  for (const auto& list : per_detector_) n += static_cast<int>(list.size());
  return n;
}

void DetectionData::validate(double duration, double threshold) const {
  for (std::size_t m = 0; m < per_detector_.size(); ++m) {
    const auto& list = per_detector_[m];
    for (std::size_t j = 0; j < list.size(); ++j) {
      const Detection& d = list[j];
      std::ostringstream where;
      where << "detector " << (m + 1) << " detection " << j;
      if (d.detector_id != static_cast<int>(m) + 1)
        throw std::invalid_argument(where.str() + ": detector id mismatch");
      if (!std::isfinite(d.time) || d.time < 0.0 || d.time > duration)
        throw std::invalid_argument(where.str() + ": time outside [0, duration]");
      if (!std::isfinite(d.signal_strength) || d.signal_strength < threshold)
        throw std::invalid_argument(where.str() + ": signal strength below the detection threshold");
      if (j > 0 && !(d.time > list[j - 1].time))
        throw std::invalid_argument(where.str() + ": times not strictly increasing");
    }
  }
}

std::vector<Detection> DetectionData::flatten() const {
  std::vector<Detection> out;
  for (const auto& list : per_detector_) out.insert(out.end(), list.begin(), list.end());
  return out;
}

int LatentState::detections_of(int n) const {
  int k = 0;
  for (int m = 0; m < n_detectors_; ++m) k += detected(m, n) ? 1 : 0;
  return k;
}

int LatentState::n_observed(int min_detectors) const {
  int count = 0;
  for (int n = 0; n < n_calls(); ++n)
    if (detections_of(n) >= std::max(min_detectors, 1)) ++count;
  return count;
}

std::vector<std::vector<int>> LatentState::capture_matrix() const {
  std::vector<std::vector<int>> z(static_cast<std::size_t>(n_detectors_),
                                  std::vector<int>(calls_.size(), 0));
  for (int m = 0; m < n_detectors_; ++m)
    for (int n = 0; n < n_calls(); ++n) z[m][n] = detected(m, n) ? 1 : 0;
  return z;
}

}  // namespace ascr
