#pragma once

#include <utility>
#include <vector>

#include "ascr/survey.hpp"
#include "ascr/types.hpp"

namespace ascr {

inline constexpr double kDefaultSigmaTPrior = 0.005;

/// Default partition slack: three prior arrival-time standard deviations.
inline double default_partition_slack(double sigma_t_prior = kDefaultSigmaTPrior) { return 3.0 * sigma_t_prior; }

/// A detection addressed by (zero-based detector, index in that detector's time order).
struct DetectionRef {
  int detector = 0;
  int index = 0;
  double time = 0.0;
};

/// Vertices are all detections sorted by (time, detector); edges join detections on
/// different detectors that could come from one call.
struct DetectionGraph {
  std::vector<DetectionRef> vertices;
  std::vector<std::pair<int, int>> edges;  // vertex indices, first < second
  double sigma_slack = 0.0;
};

/// Edge (a, b) iff the detectors differ and |t_a - t_b| < d_ab / v + 3 sigma.
bool detections_linked(const DetectionRef& a, const DetectionRef& b, const SurveyConfig& config, double sigma_slack);

DetectionGraph build_graph(const DetectionData& data, const SurveyConfig& config, double sigma_slack);

struct DetectionGroup {
  int id = 0;  // 1-based, ordered by earliest detection time
  DetectionData data;
  /// source_index[m][j]: index in the full data of the j-th group detection on detector m.
  std::vector<std::vector<int>> source_index;

  std::vector<int> counts() const { return data.counts(); }
  int size() const { return data.total(); }
};

std::vector<DetectionGroup> connected_components(const DetectionGraph& graph, const DetectionData& data);

/// build_graph followed by connected_components.
std::vector<DetectionGroup> partition_detections(const DetectionData& data, const SurveyConfig& config,
                                                 double sigma_slack);

}  // namespace ascr
