#include "ascr/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <stdexcept>
#include <tuple>

#include "ascr/mstep.hpp"

namespace ascr {

double quantile_type7(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval percentile_ci(std::vector<double> values, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("interval level must lie in (0, 1)");
  if (values.size() < 2) throw std::invalid_argument("a percentile interval needs at least two values");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("percentile interval values must be finite");
  const double tail = 0.5 * (1.0 - level);
  return {quantile_type7(values, tail), quantile_type7(values, 1.0 - tail)};
}

ModelParams warm_start_mle(const SimTruth& truth, const SurveyConfig& config, const ModelParams& guess) {
  SampleStats stats;
  const double v = config.sound_speed;
  for (const SimCall& c : truth.calls) {
    stats.calls += 1.0;
    for (int m = 0; m < config.n_detectors(); ++m) {
      const std::size_t mi = static_cast<std::size_t>(m);
      const double d = distance(c.location, config.detector_position(m));
      if (c.detected[mi])
        stats.add_detected(c.strength[mi], d, c.time[mi] - c.emission - d / v);
      else
        stats.add_miss(d);
    }
  }
  if (!(stats.detected > 1.0)) return guess;

  // Closed-form start: least squares line through the detected strengths, RMS timing residual.
  ModelParams start = guess;
  if (stats.sdd > 0.0) {
    const double slope = stats.syd / stats.sdd;  // strength falls with distance, so slope < 0
    if (slope < 0.0) {
      start.beta1 = -slope;
      start.beta0 = stats.mean_y + start.beta1 * stats.mean_d;
      const double rss = stats.syy - slope * stats.syd;
      start.sigma_s = std::max(std::sqrt(std::max(rss, 0.0) / stats.detected), 1e-2);
    }
  }
  start.sigma_t = std::max(std::sqrt(stats.time_ss / stats.detected), 1e-6);

  ElboObjective objective({stats}, {static_cast<double>(truth.calls.size())}, config, 0, ObjectiveKind::CompleteData);
  try {
    return maximize(objective, start).params;
  } catch (const std::exception&) {
    return start;
  }
}

std::vector<LatentState> latent_from_truth(const SimTruth& truth, const std::vector<DetectionGroup>& groups,
                                           const SurveyConfig& config, Rng& rng) {
  const int M = config.n_detectors();
  // owner[m][j]: truth call holding detection j on detector m
  std::vector<std::vector<int>> owner(static_cast<std::size_t>(M));
  for (std::size_t n = 0; n < truth.calls.size(); ++n)
    for (int m = 0; m < M; ++m) {
      const int j = truth.calls[n].kept[static_cast<std::size_t>(m)];
      if (j == kUndetected) continue;
      auto& row = owner[static_cast<std::size_t>(m)];
      if (row.size() <= static_cast<std::size_t>(j)) row.resize(static_cast<std::size_t>(j) + 1, -1);
      row[static_cast<std::size_t>(j)] = static_cast<int>(n);
    }
  std::uniform_real_distribution<double> emission(config.emission_start, config.emission_end);
  std::vector<LatentState> out;
  for (const DetectionGroup& g : groups) {
    std::map<int, int> local;
    std::vector<CandidateCall> calls;
    std::vector<std::tuple<int, int, int>> assign;  // (m, local call, group index)
    for (int m = 0; m < M; ++m) {
      const auto& src = g.source_index[static_cast<std::size_t>(m)];
      for (std::size_t jg = 0; jg < src.size(); ++jg) {
        const int n = owner[static_cast<std::size_t>(m)].at(static_cast<std::size_t>(src[jg]));
        auto [it, fresh] = local.try_emplace(n, static_cast<int>(calls.size()));
        if (fresh) {
          const SimCall& sc = truth.calls[static_cast<std::size_t>(n)];
          calls.push_back({sc.location, std::clamp(sc.emission, config.emission_start, config.emission_end)});
        }
        assign.emplace_back(m, it->second, static_cast<int>(jg));
      }
    }
    while (static_cast<int>(calls.size()) < g.size()) calls.push_back({config.region.sample_uniform(rng), emission(rng)});
    LatentState s(M, std::move(calls));
    for (const auto& [m, n, j] : assign) s.set_assignment(m, n, j);
    out.push_back(std::move(s));
  }
  return out;
}

void BootstrapConfig::validate() const {
  if (replicates < 1) throw std::invalid_argument("bootstrap needs at least one replicate");
  if (warm_iterations < 1) throw std::invalid_argument("warm-start iterations must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("interval level must lie in (0, 1)");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
    throw std::invalid_argument("failure fraction must lie in [0, 1]");
}

BootstrapResult bootstrap(const FitResult& fit, const std::optional<CallRateModel>& call_rate, const SurveyConfig& config,
                          const McemConfig& mcem, const SamplerConfig& sampler, const BootstrapConfig& boot,
                          Execution exec) {
  boot.validate();
  mcem.validate();
  if (fit.status == FitStatus::NoEstimableCalls) throw std::invalid_argument("cannot bootstrap a fit without estimates");
  const ModelParams theta = fit.params;
  const double dc = fit.density.call_density;
  BootstrapResult out;
  out.level = boot.level;
  out.replicates.resize(static_cast<std::size_t>(boot.replicates));

  auto body = [&](long b) {
    ReplicateResult& rep = out.replicates[static_cast<std::size_t>(b)];
    rep.index = static_cast<int>(b);
    Rng rng = make_stream(boot.seed, 0xb0075ULL, static_cast<std::uint64_t>(b));
    rep.seed = rng();
    try {
      Rng sim_rng = make_stream(rep.seed, 1);
      SimResult sim = call_rate ? simulate_survey(dc / call_rate->mean(), *call_rate, config, theta, sim_rng, boot.count_mode)
                                : simulate_calls_only(dc, config, theta, sim_rng);
      rep.detections = sim.data.total();
      const ModelParams init = warm_start_mle(sim.truth, config, theta);
      const auto groups = partition_detections(sim.data, config, mcem.resolved_slack());
      std::vector<LatentState> warm;
      if (boot.chains_from_truth) warm = latent_from_truth(sim.truth, groups, config, sim_rng);
      McemConfig short_run = mcem;
      short_run.max_iterations = boot.warm_iterations;
      SamplerConfig s = sampler;
      s.seed = rep.seed;
      const FitResult f = fit_groups(groups, config, init, short_run, s, Execution::Serial,
                                     boot.chains_from_truth ? &warm : nullptr);
      rep.status = to_string(f.status);
      if (f.status == FitStatus::NoEstimableCalls) return;
      rep.params = f.params;
      rep.call_density = f.density.call_density;
      if (call_rate) rep.animal_density = rep.call_density / call_rate->mean();
      rep.ok = std::isfinite(rep.call_density);
    } catch (const std::exception& e) {
      rep.ok = false;
      rep.status = std::string("error: ") + e.what();
    }
  };
  const long n = boot.replicates;
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long b = 0; b < n; ++b) body(b);
  } else {
    for (long b = 0; b < n; ++b) body(b);
  }

  std::vector<double> dcs, das;
  std::array<std::vector<double>, 4> ps;
  for (const ReplicateResult& r : out.replicates) {
    if (!r.ok) {
      ++out.failures;
      continue;
    }
    dcs.push_back(r.call_density);
    if (r.animal_density) das.push_back(*r.animal_density);
    ps[0].push_back(r.params.beta0);
    ps[1].push_back(r.params.beta1);
    ps[2].push_back(r.params.sigma_s);
    ps[3].push_back(r.params.sigma_t);
  }
  if (static_cast<double>(out.failures) > boot.max_failure_fraction * static_cast<double>(boot.replicates))
    throw std::runtime_error(std::to_string(out.failures) + " of " + std::to_string(boot.replicates) +
                             " bootstrap replicates failed");
  if (dcs.empty()) throw std::runtime_error("no successful bootstrap replicates");
  double mean = 0.0;
  for (double v : dcs) mean += v;
  mean /= static_cast<double>(dcs.size());
  double ss = 0.0;
  for (double v : dcs) ss += (v - mean) * (v - mean);
  out.call_density_mean = mean;
  out.cv = dcs.size() > 1 && mean > 0.0 ? std::sqrt(ss / static_cast<double>(dcs.size() - 1)) / mean : 0.0;
  if (dcs.size() >= 2) {
    out.call_density_ci = percentile_ci(dcs, boot.level);
    for (std::size_t k = 0; k < 4; ++k) out.param_ci[k] = percentile_ci(ps[k], boot.level);
    if (das.size() >= 2) out.animal_density_ci = percentile_ci(das, boot.level);
  } else {
    out.call_density_ci = {dcs.front(), dcs.front()};
  }
  return out;
}

}  // namespace ascr
