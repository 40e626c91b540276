#include "ascr/mcem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace ascr {

void McemConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("convergence tolerance must be positive");
  if (convergence_window < 1) throw std::invalid_argument("convergence window must be at least 1");
  if (max_sample_factor < 1) throw std::invalid_argument("sample cap factor must be at least 1");
  if (!(sample_growth >= 1.0)) throw std::invalid_argument("sample growth must be at least 1");
  if (warm_burn_in < 0) throw std::invalid_argument("warm burn-in must be non-negative");
  if (objective == ObjectiveKind::CompleteData) throw std::invalid_argument("MCEM needs an observed-data objective");
  if (min_detectors != 1 && min_detectors != 2) throw std::invalid_argument("min_detectors must be 1 or 2");
  if (objective == ObjectiveKind::SemiComplete && min_detectors != 1)
    throw std::invalid_argument("the semi-complete objective requires min_detectors = 1");
  if (!(sigma_t_prior > 0.0)) throw std::invalid_argument("sigma_t prior must be positive");
}

int McemConfig::samples_at(int iteration, int base) const {
  const double factor = std::ceil(std::pow(sample_growth, iteration) - 1e-12);
  const double capped = std::min(factor, static_cast<double>(max_sample_factor));
  return static_cast<int>(capped) * base;
}

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::Converged: return "converged";
    case FitStatus::NotConverged: return "not_converged";
    case FitStatus::NoEstimableCalls: return "no_estimable_calls";
  }
  return "unknown";
}

ModelParams initialize_params(const DetectionData& data, const SurveyConfig& config, double threshold,
                              double sigma_t_prior) {
  ModelParams p;
  p.threshold = threshold;
  p.sigma_t = sigma_t_prior;
  std::vector<Detection> all = data.flatten();
  if (all.empty()) {
    p.beta0 = threshold + 1.0;
    p.beta1 = 0.0;
    p.sigma_s = 1.0;
    return p;
  }
  double mean = 0.0, max_y = all.front().signal_strength;
  for (const Detection& d : all) {
    mean += d.signal_strength;
    max_y = std::max(max_y, d.signal_strength);
  }
  mean /= static_cast<double>(all.size());
  double ss = 0.0;
  for (const Detection& d : all) ss += (d.signal_strength - mean) * (d.signal_strength - mean);
  const double sd = all.size() > 1 ? std::sqrt(ss / static_cast<double>(all.size() - 1)) : 0.0;
  p.beta0 = max_y + sd;

  // A call reaching two detectors lies within about the detector spacing of both, so the
  // strength drop from beta0 to the threshold happens over roughly that distance.
  const double spacing = config.median_detector_spacing();
  p.beta1 = (sd > 0.0 && spacing > 0.0) ? std::max(0.0, p.beta0 - threshold) / spacing : 0.0;

  // Pooled within-call spread over greedily matched detections.
  std::sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) { return a.time < b.time; });
  std::vector<std::vector<Detection>> calls;
  const double slack = 3.0 * sigma_t_prior;
  for (const Detection& d : all) {
    bool placed = false;
    for (auto& c : calls) {
      bool ok = true;
      for (const Detection& o : c) {
        const double sep = distance(config.detector_position(d.detector_id - 1), config.detector_position(o.detector_id - 1));
        if (o.detector_id == d.detector_id || std::abs(d.time - o.time) >= sep / config.sound_speed + slack) {
          ok = false;
          break;
        }
      }
      if (ok) {
        c.push_back(d);
        placed = true;
        break;
      }
    }
    if (!placed) calls.push_back({d});
  }
  double within = 0.0, dof = 0.0;
  for (const auto& c : calls) {
    if (c.size() < 2) continue;
    double m = 0.0;
    for (const Detection& d : c) m += d.signal_strength;
    m /= static_cast<double>(c.size());
    for (const Detection& d : c) within += (d.signal_strength - m) * (d.signal_strength - m);
    dof += static_cast<double>(c.size() - 1);
  }
  const double sigma = dof > 0.0 ? std::sqrt(within / dof) : sd;
  p.sigma_s = std::max(sigma, 1e-2);
  return p;
}

namespace {

double relative_change(double now, double before) {
  const double scale = std::max(std::abs(before), 1e-12);
  return std::abs(now - before) / scale;
}

double max_relative_change(const IterationTrace& a, const IterationTrace& b) {
  double c = relative_change(a.params.beta0, b.params.beta0);
  c = std::max(c, relative_change(a.params.beta1, b.params.beta1));
  c = std::max(c, relative_change(a.params.sigma_s, b.params.sigma_s));
  c = std::max(c, relative_change(a.params.sigma_t, b.params.sigma_t));
  return std::max(c, relative_change(a.density.call_density, b.density.call_density));
}

bool estimable(const std::vector<DetectionGroup>& groups, int min_detectors) {
  for (const DetectionGroup& g : groups) {
    int active = 0;
    for (int c : g.counts()) active += c > 0 ? 1 : 0;
    if (active >= min_detectors) return true;
  }
  return false;
}

}  // namespace

FitResult fit(const DetectionData& data, const SurveyConfig& config, const ModelParams& init, const McemConfig& mcem,
              const SamplerConfig& sampler, Execution exec, const std::vector<LatentState>* warm_states) {
  mcem.validate();
  if (data.n_detectors() != config.n_detectors())
    throw std::invalid_argument("detections reference a different number of detectors than the survey");
  return fit_groups(partition_detections(data, config, mcem.resolved_slack()), config, init, mcem, sampler, exec,
                    warm_states);
}

FitResult fit_groups(const std::vector<DetectionGroup>& groups, const SurveyConfig& config, const ModelParams& init,
                     const McemConfig& mcem, const SamplerConfig& sampler, Execution exec,
                     const std::vector<LatentState>* warm_states) {
  const auto start = std::chrono::steady_clock::now();
  mcem.validate();
  sampler.validate();
  init.validate();
  FitResult out;
  out.initial_params = init;
  out.params = init;
  out.min_detectors = mcem.min_detectors;
  out.groups.n_groups = static_cast<int>(groups.size());
  double total = 0.0;
  for (const DetectionGroup& g : groups) {
    out.groups.largest = std::max(out.groups.largest, g.size());
    total += g.size();
  }
  out.groups.mean_size = groups.empty() ? 0.0 : total / static_cast<double>(groups.size());

  auto finish = [&](FitStatus status) {
    out.status = status;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  };
  if (groups.empty() || !estimable(groups, mcem.min_detectors)) return finish(FitStatus::NoEstimableCalls);

  const std::vector<LatentState>* warm = warm_states;
  std::vector<LatentState> states;
  ModelParams theta = init;
  int calm = 0;
  for (int r = 0; r < mcem.max_iterations; ++r) {
    SamplerConfig it = sampler;
    it.n_samples = mcem.samples_at(r, sampler.n_samples);
    it.burn_in = warm ? mcem.warm_burn_in : sampler.burn_in;
    const EStepResult est = run_estep(groups, config, theta, it, static_cast<std::uint64_t>(r), warm, exec);
    states.clear();
    for (const GroupSamples& g : est.groups) states.push_back(g.final_state);
    warm = &states;

    ElboObjective objective = ElboObjective::from_estep(est, groups, config, mcem.min_detectors, mcem.objective, exec);
    if (!(objective.detected_entries() > 0.0) || !(objective.mean_observed() > 0.0)) {
      out.final_states = states;
      out.observed_per_sample = objective.observed_counts();
      return finish(FitStatus::NoEstimableCalls);
    }
    IterationTrace tr;
    tr.iteration = r + 1;
    tr.n_samples = it.n_samples;
    if (mcem.objective == ObjectiveKind::SemiComplete) {
      tr.elbo_start = 0.0;
      const SemiCompleteResult s = mle_semi_complete(objective, theta, mcem.mstep);
      objective.set_total_calls(static_cast<double>(s.total_calls));
      tr.params = s.params;
      tr.elbo = s.value;
      tr.density = estimate_density(objective.mean_observed(), s.params, config, 1, &objective.surface());
      tr.density.total_calls = static_cast<double>(s.total_calls);
      tr.density.call_density = s.call_density;
    } else {
      tr.elbo_start = objective.value(theta);
      const MStepResult m = maximize(objective, theta, mcem.mstep);
      tr.params = m.params;
      tr.elbo = m.value;
      tr.optimizer_iterations = m.optimizer.iterations;
      tr.density = estimate_density(objective.mean_observed(), m.params, config, mcem.min_detectors, &objective.surface());
    }
    tr.observed_calls = objective.mean_observed();
    tr.capture_acceptance = est.diagnostics.capture.rate();
    tr.location_acceptance = est.diagnostics.location.rate();
    tr.emission_clamped = est.diagnostics.emission_clamped;

    if (!out.trace.empty()) calm = max_relative_change(tr, out.trace.back()) < mcem.tolerance ? calm + 1 : 0;
    out.trace.push_back(tr);
    theta = tr.params;
    out.params = tr.params;
    out.density = tr.density;
    out.observed_per_sample = objective.observed_counts();
    if (calm >= mcem.convergence_window) {
      out.final_states = states;
      return finish(FitStatus::Converged);
    }
  }
  out.final_states = states;
  return finish(FitStatus::NotConverged);
}

}  // namespace ascr
