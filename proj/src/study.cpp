#include "ascr/study.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>

namespace ascr {

SampleMoments sample_moments(const std::vector<double>& v) {
  SampleMoments s;
  const double n = static_cast<double>(v.size());
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  if (v.size() > 1) s.sd = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  if (v.size() > 2 && m2 > 0.0) s.skewness = std::sqrt(n * (n - 1.0)) / (n - 2.0) * m3 / std::pow(m2, 1.5);
  return s;
}

std::vector<QQPoint> normal_qq(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const boost::math::normal_distribution<double> standard;
  std::vector<QQPoint> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out.push_back({boost::math::quantile(standard, (static_cast<double>(i) + 0.5) / n), values[i]});
  return out;
}

StudySummary run_study(const SurveyConfig& config, const StudyConfig& study, Execution exec) {
  if (study.datasets < 1) throw std::invalid_argument("a study needs at least one dataset");
  if (study.bootstrap_datasets < 0 || study.bootstrap_datasets > study.datasets)
    throw std::invalid_argument("bootstrap subset must lie between 0 and the dataset count");
  study.truth.validate();
  StudySummary out;
  out.true_call_density = study.call_density;
  out.datasets.resize(static_cast<std::size_t>(study.datasets));

  auto body = [&](long i) {
    const auto start = std::chrono::steady_clock::now();
    StudyDataset& ds = out.datasets[static_cast<std::size_t>(i)];
    ds.index = static_cast<int>(i);
    try {
      Rng rng = make_stream(study.seed, 0x57d7ULL, static_cast<std::uint64_t>(i));
      const SimResult sim = simulate_calls_only(study.call_density, config, study.truth, rng);
      ds.detections = sim.data.total();
      const ModelParams init = initialize_params(sim.data, config, study.truth.threshold, study.mcem.sigma_t_prior);
      SamplerConfig sampler = study.sampler;
      sampler.seed = rng();
      const FitResult f = fit(sim.data, config, init, study.mcem, sampler, Execution::Serial);
      ds.status = to_string(f.status);
      if (f.status != FitStatus::NoEstimableCalls) {
        ds.ok = true;
        ds.call_density = f.density.call_density;
        ds.params = f.params;
        if (i < study.bootstrap_datasets) {
          BootstrapConfig boot = study.boot;
          boot.seed = rng();
          const BootstrapResult b = bootstrap(f, std::nullopt, config, study.mcem, study.sampler, boot, Execution::Serial);
          ds.ci = b.call_density_ci;
          ds.covered = ds.ci->lo <= study.call_density && study.call_density <= ds.ci->hi;
        }
      }
    } catch (const std::exception& e) {
      ds.ok = false;
      ds.status = std::string("error: ") + e.what();
    }
    ds.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const long n = study.datasets;
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) body(i);
  } else {
    for (long i = 0; i < n; ++i) body(i);
  }

  std::vector<double> estimates;
  double detections = 0.0;
  for (const StudyDataset& ds : out.datasets) {
    detections += ds.detections;
    if (!ds.ok) continue;
    estimates.push_back(ds.call_density);
    if (ds.ci) {
      ++out.n_intervals;
      out.n_covered += ds.covered ? 1 : 0;
    }
  }
  out.n_ok = static_cast<int>(estimates.size());
  out.mean_detections = detections / static_cast<double>(out.datasets.size());
  if (!estimates.empty()) {
    const SampleMoments mom = sample_moments(estimates);
    out.mean_estimate = mom.mean;
    out.relative_bias = study.call_density > 0.0 ? mom.mean / study.call_density - 1.0 : 0.0;
    out.empirical_cv = mom.mean > 0.0 ? mom.sd / mom.mean : 0.0;
    out.skewness = mom.skewness;
    out.qq = normal_qq(estimates);
  }
  if (out.n_intervals > 0) out.coverage = static_cast<double>(out.n_covered) / static_cast<double>(out.n_intervals);
  return out;
}

}  // namespace ascr
