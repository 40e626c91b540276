#include "ascr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ascr/detection_model.hpp"

namespace ascr {

CallRateModel::CallRateModel(std::vector<double> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw std::invalid_argument("call-rate model needs at least one rate");
  for (double r : rates_)
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("call rates must be positive and finite");
}

CallRateModel CallRateModel::fixed(double rate) { return CallRateModel({rate}); }

CallRateModel CallRateModel::empirical(std::vector<double> rates) { return CallRateModel(std::move(rates)); }

double CallRateModel::draw(Rng& rng) const {
  if (rates_.size() == 1) return rates_.front();
  std::uniform_int_distribution<std::size_t> pick(0, rates_.size() - 1);
  return rates_[pick(rng)];
}

double CallRateModel::mean() const {
  return std::accumulate(rates_.begin(), rates_.end(), 0.0) / static_cast<double>(rates_.size());
}

SimResult simulate_from_calls(std::vector<CandidateCall> calls, std::vector<int> animal_of, const SurveyConfig& config,
                              const ModelParams& params, Rng& rng) {
  params.validate();
  if (animal_of.size() != calls.size()) throw std::invalid_argument("one animal index per call is required");
  const int M = config.n_detectors();
  std::normal_distribution<double> gauss(0.0, 1.0);
  SimResult out;
  out.truth.calls.resize(calls.size());

  struct Rec {
    double t;
    std::size_t call;
  };
  std::vector<std::vector<Rec>> per_detector(static_cast<std::size_t>(M));
  for (std::size_t n = 0; n < calls.size(); ++n) {
    SimCall& sc = out.truth.calls[n];
    sc.location = calls[n].location;
    sc.emission = calls[n].emission;
    sc.animal = animal_of[n];
    sc.strength.resize(static_cast<std::size_t>(M));
    sc.time.resize(static_cast<std::size_t>(M));
    sc.detected.assign(static_cast<std::size_t>(M), 0);
    sc.kept.assign(static_cast<std::size_t>(M), kUndetected);
    for (int m = 0; m < M; ++m) {
      const double d = distance(sc.location, config.detector_position(m));
      const double y = expected_strength(d, params) + params.sigma_s * gauss(rng);
      const double t = sc.emission + d / config.sound_speed + params.sigma_t * gauss(rng);
      sc.strength[static_cast<std::size_t>(m)] = y;
      sc.time[static_cast<std::size_t>(m)] = t;
      if (y >= params.threshold) {
        sc.detected[static_cast<std::size_t>(m)] = 1;
        if (t >= 0.0 && t <= config.duration) per_detector[static_cast<std::size_t>(m)].push_back({t, n});
      }
    }
  }

  out.data = DetectionData(M);
  for (int m = 0; m < M; ++m) {
    auto& recs = per_detector[static_cast<std::size_t>(m)];
    std::sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) { return a.t < b.t; });
    for (std::size_t j = 0; j < recs.size(); ++j) {
      SimCall& sc = out.truth.calls[recs[j].call];
      double t = recs[j].t;
      if (j > 0 && !(t > out.data.detector(m).back().time)) t = out.data.detector(m).back().time + 1e-9;
      out.data.push_back(m, {m + 1, t, sc.strength[static_cast<std::size_t>(m)]});
      sc.kept[static_cast<std::size_t>(m)] = static_cast<int>(j);
    }
  }

  out.truth.latent = LatentState(M, std::move(calls));
  for (std::size_t n = 0; n < out.truth.calls.size(); ++n)
    for (int m = 0; m < M; ++m)
      out.truth.latent.set_assignment(m, static_cast<int>(n), out.truth.calls[n].kept[static_cast<std::size_t>(m)]);
  return out;
}

SimResult simulate_calls_only(double call_density, const SurveyConfig& config, const ModelParams& params, Rng& rng) {
  if (!(call_density >= 0.0)) throw std::invalid_argument("call density must be non-negative");
  const double mean = call_density * config.region.area() * config.emission_width();
  const long n = mean > 0.0 ? std::poisson_distribution<long>(mean)(rng) : 0;
  std::uniform_real_distribution<double> emission(config.emission_start, config.emission_end);
  std::vector<CandidateCall> calls(static_cast<std::size_t>(n));
  for (CandidateCall& c : calls) {
    c.location = config.region.sample_uniform(rng);
    c.emission = emission(rng);
  }
  return simulate_from_calls(std::move(calls), std::vector<int>(static_cast<std::size_t>(n), -1), config, params, rng);
}

SimResult simulate_survey(double animal_density, const CallRateModel& rates, const SurveyConfig& config,
                          const ModelParams& params, Rng& rng, CallCountMode mode) {
  if (!(animal_density >= 0.0)) throw std::invalid_argument("animal density must be non-negative");
  const double mean = animal_density * config.region.area();
  const long n_animals = mean > 0.0 ? std::poisson_distribution<long>(mean)(rng) : 0;
  std::uniform_real_distribution<double> emission(config.emission_start, config.emission_end);
  std::vector<Point> animals;
  std::vector<int> counts;
  std::vector<CandidateCall> calls;
  std::vector<int> animal_of;
  for (long a = 0; a < n_animals; ++a) {
    const Point x = config.region.sample_uniform(rng);
    const double expected = rates.draw(rng) * config.emission_width();
    const long k = mode == CallCountMode::Poisson ? std::poisson_distribution<long>(expected)(rng)
                                                  : static_cast<long>(std::llround(expected));
    animals.push_back(x);
    counts.push_back(static_cast<int>(k));
    for (long i = 0; i < k; ++i) {
      calls.push_back({x, emission(rng)});
      animal_of.push_back(static_cast<int>(a));
    }
  }
  SimResult out = simulate_from_calls(std::move(calls), std::move(animal_of), config, params, rng);
  out.truth.animals = std::move(animals);
  out.truth.calls_per_animal = std::move(counts);
  return out;
}

}  // namespace ascr
