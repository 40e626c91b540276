#include "ascr/latent.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ascr {

std::vector<int> derive_order(const std::vector<CandidateCall>& calls, const std::vector<bool>& captured,
                              Point detector, double sound_speed) {
  if (captured.size() != calls.size()) throw std::invalid_argument("capture row length must match the call count");
  std::vector<int> members;
  for (std::size_t n = 0; n < calls.size(); ++n)
    if (captured[n]) members.push_back(static_cast<int>(n));
  std::vector<double> arrival(members.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    arrival[i] = predicted_arrival(calls[static_cast<std::size_t>(members[i])], detector, sound_speed);
  std::vector<int> by_arrival(members.size());
  std::iota(by_arrival.begin(), by_arrival.end(), 0);
  std::stable_sort(by_arrival.begin(), by_arrival.end(),
                   [&](int a, int b) { return arrival[static_cast<std::size_t>(a)] < arrival[static_cast<std::size_t>(b)]; });
  std::vector<int> rank(members.size());
  for (std::size_t r = 0; r < by_arrival.size(); ++r) rank[static_cast<std::size_t>(by_arrival[r])] = static_cast<int>(r);
  return rank;
}

LatentState latent_from_capture(std::vector<CandidateCall> calls, const std::vector<std::vector<int>>& capture,
                                const std::vector<std::vector<int>>& order) {
  const int n_detectors = static_cast<int>(capture.size());
  if (order.size() != capture.size()) throw std::invalid_argument("one detection order per detector is required");
  LatentState state(n_detectors, std::move(calls));
  for (int m = 0; m < n_detectors; ++m) {
    const auto& row = capture[static_cast<std::size_t>(m)];
    if (static_cast<int>(row.size()) != state.n_calls())
      throw std::invalid_argument("capture row " + std::to_string(m) + " has the wrong length");
    std::size_t k = 0;
    for (int n = 0; n < state.n_calls(); ++n) {
      if (!row[static_cast<std::size_t>(n)]) continue;
      if (k >= order[static_cast<std::size_t>(m)].size())
        throw std::invalid_argument("detection order shorter than the captured calls on detector " + std::to_string(m));
      state.set_assignment(m, n, order[static_cast<std::size_t>(m)][k++]);
    }
    if (k != order[static_cast<std::size_t>(m)].size())
      throw std::invalid_argument("detection order longer than the captured calls on detector " + std::to_string(m));
  }
  return state;
}

void reassign_from_order(LatentState& state, const SurveyConfig& config) {
  const int n_calls = state.n_calls();
  for (int m = 0; m < state.n_detectors(); ++m) {
    std::vector<bool> captured(static_cast<std::size_t>(n_calls));
    for (int n = 0; n < n_calls; ++n) captured[static_cast<std::size_t>(n)] = state.detected(m, n);
    const std::vector<int> rank = derive_order(state.calls(), captured, config.detector_position(m), config.sound_speed);
    std::size_t k = 0;
    for (int n = 0; n < n_calls; ++n)
      if (captured[static_cast<std::size_t>(n)]) state.set_assignment(m, n, rank[k++]);
  }
}

void check_assignment(const LatentState& state, const DetectionData& data) {
  if (state.n_detectors() != data.n_detectors())
    throw std::invalid_argument("latent state and detections disagree on the detector count");
  for (int m = 0; m < state.n_detectors(); ++m) {
    std::vector<int> used(static_cast<std::size_t>(data.count(m)), 0);
    for (int n = 0; n < state.n_calls(); ++n) {
      const int j = state.assignment(m, n);
      if (j == kUndetected) continue;
      if (j < 0 || j >= data.count(m))
        throw std::invalid_argument("call " + std::to_string(n) + " holds an out-of-range detection on detector " +
                                    std::to_string(m + 1));
      if (used[static_cast<std::size_t>(j)]++)
        throw std::invalid_argument("detection " + std::to_string(j) + " on detector " + std::to_string(m + 1) +
                                    " is explained by more than one call");
    }
    for (std::size_t j = 0; j < used.size(); ++j)
      if (!used[j])
        throw std::invalid_argument("detection " + std::to_string(j) + " on detector " + std::to_string(m + 1) +
                                    " is not explained by any call");
  }
}

bool order_consistent(const LatentState& state, const SurveyConfig& config) {
  for (int m = 0; m < state.n_detectors(); ++m) {
    std::vector<bool> captured(static_cast<std::size_t>(state.n_calls()));
    for (int n = 0; n < state.n_calls(); ++n) captured[static_cast<std::size_t>(n)] = state.detected(m, n);
    const std::vector<int> rank =
        derive_order(state.calls(), captured, config.detector_position(m), config.sound_speed);
    std::size_t k = 0;
    for (int n = 0; n < state.n_calls(); ++n)
      if (captured[static_cast<std::size_t>(n)] && state.assignment(m, n) != rank[k++]) return false;
  }
  return true;
}

PaddedMatrices pad(const DetectionData& data, const LatentState& state) {
  check_assignment(state, data);
  PaddedMatrices out;
  const std::size_t M = static_cast<std::size_t>(state.n_detectors());
  const std::size_t N = static_cast<std::size_t>(state.n_calls());
  out.strength.assign(M, std::vector<std::optional<double>>(N));
  out.time.assign(M, std::vector<std::optional<double>>(N));
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t n = 0; n < N; ++n) {
      const int j = state.assignment(static_cast<int>(m), static_cast<int>(n));
      if (j == kUndetected) continue;
      const Detection& d = data.detector(static_cast<int>(m))[static_cast<std::size_t>(j)];
      out.strength[m][n] = d.signal_strength;
      out.time[m][n] = d.time;
    }
  }
  return out;
}

DetectionData unpad(const PaddedMatrices& padded) {
  const int M = static_cast<int>(padded.time.size());
  std::vector<Detection> records;
  for (int m = 0; m < M; ++m) {
    const auto& trow = padded.time[static_cast<std::size_t>(m)];
    const auto& yrow = padded.strength[static_cast<std::size_t>(m)];
    for (std::size_t n = 0; n < trow.size(); ++n) {
      if (trow[n].has_value() != yrow[n].has_value())
        throw std::invalid_argument("padded strength and time disagree on which entries are empty");
      if (trow[n]) records.push_back({m + 1, *trow[n], *yrow[n]});
    }
  }
  DetectionData data(M);
  std::stable_sort(records.begin(), records.end(), [](const Detection& a, const Detection& b) {
    return a.detector_id != b.detector_id ? a.detector_id < b.detector_id : a.time < b.time;
  });
  for (const Detection& d : records) data.push_back(d.detector_id - 1, d);
  return data;
}

}  // namespace ascr
