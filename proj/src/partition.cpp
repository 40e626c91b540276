#include "ascr/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ascr {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

}  // namespace

bool detections_linked(const DetectionRef& a, const DetectionRef& b, const SurveyConfig& config, double sigma_slack) {
  if (a.detector == b.detector) return false;
  const double d = distance(config.detector_position(a.detector), config.detector_position(b.detector));
  return std::abs(a.time - b.time) < d / config.sound_speed + 3.0 * sigma_slack;
}

DetectionGraph build_graph(const DetectionData& data, const SurveyConfig& config, double sigma_slack) {
  if (!(sigma_slack >= 0.0)) throw std::invalid_argument("partition slack must be non-negative");
  if (data.n_detectors() != config.n_detectors())
    throw std::invalid_argument("detections and survey disagree on the detector count");
  DetectionGraph g;
  g.sigma_slack = sigma_slack;
  for (int m = 0; m < data.n_detectors(); ++m)
    for (int j = 0; j < data.count(m); ++j) g.vertices.push_back({m, j, data.detector(m)[static_cast<std::size_t>(j)].time});
  std::stable_sort(g.vertices.begin(), g.vertices.end(), [](const DetectionRef& a, const DetectionRef& b) {
    return a.time != b.time ? a.time < b.time : a.detector < b.detector;
  });
  // No edge can span more than the largest inter-detector travel time plus the slack.
  const double window = config.max_inter_detector_travel_time() + 3.0 * sigma_slack;
  const std::size_t n = g.vertices.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n && g.vertices[b].time - g.vertices[a].time <= window; ++b)
      if (detections_linked(g.vertices[a], g.vertices[b], config, sigma_slack))
        g.edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }
  return g;
}

std::vector<DetectionGroup> connected_components(const DetectionGraph& graph, const DetectionData& data) {
  const std::size_t n = graph.vertices.size();
  DisjointSets sets(n);
  for (const auto& [a, b] : graph.edges) sets.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b));

  // Vertices are time-sorted, so the first vertex seen for a root is the group's earliest.
  std::vector<int> group_of_root(n, -1);
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t r = sets.find(v);
    if (group_of_root[r] < 0) {
      group_of_root[r] = static_cast<int>(members.size());
      members.emplace_back();
    }
    members[static_cast<std::size_t>(group_of_root[r])].push_back(v);
  }

  const int M = data.n_detectors();
  std::vector<DetectionGroup> groups;
  groups.reserve(members.size());
  for (std::size_t gi = 0; gi < members.size(); ++gi) {
    DetectionGroup group;
    group.id = static_cast<int>(gi) + 1;
    group.data = DetectionData(M);
    group.source_index.assign(static_cast<std::size_t>(M), {});
    std::vector<DetectionRef> refs;
    for (std::size_t v : members[gi]) refs.push_back(graph.vertices[v]);
    std::sort(refs.begin(), refs.end(), [](const DetectionRef& a, const DetectionRef& b) {
      return a.detector != b.detector ? a.detector < b.detector : a.index < b.index;
    });
    for (const DetectionRef& r : refs) {
      group.data.push_back(r.detector, data.detector(r.detector)[static_cast<std::size_t>(r.index)]);
      group.source_index[static_cast<std::size_t>(r.detector)].push_back(r.index);
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

std::vector<DetectionGroup> partition_detections(const DetectionData& data, const SurveyConfig& config,
                                                 double sigma_slack) {
  return connected_components(build_graph(data, config, sigma_slack), data);
}

}  // namespace ascr
