#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ascr/bootstrap.hpp"
#include "ascr/mcem.hpp"

namespace ascr {

struct StudyConfig {
  int datasets = 100;
  int bootstrap_datasets = 0;  // the first k datasets also get a bootstrap interval
  double call_density = 0.0;   // true D_c
  ModelParams truth;
  McemConfig mcem;
  SamplerConfig sampler;
  BootstrapConfig boot;
  std::uint64_t seed = 1;
};

struct StudyDataset {
  int index = 0;
  bool ok = false;
  std::string status;
  int detections = 0;
  double call_density = 0.0;
  ModelParams params;
  std::optional<Interval> ci;
  bool covered = false;
  double seconds = 0.0;
};

struct QQPoint {
  double theoretical = 0.0;  // standard normal quantile
  double sample = 0.0;       // sorted estimate
};

struct SampleMoments {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;  // adjusted Fisher-Pearson
};

SampleMoments sample_moments(const std::vector<double>& v);

/// (normal quantile at (i - 0.5) / n, i-th order statistic) for each value.
std::vector<QQPoint> normal_qq(std::vector<double> values);

struct StudySummary {
  double true_call_density = 0.0;
  int n_ok = 0;
  double mean_detections = 0.0;
  double mean_estimate = 0.0;
  double relative_bias = 0.0;
  double empirical_cv = 0.0;
  double skewness = 0.0;
  int n_intervals = 0;
  int n_covered = 0;
  std::optional<double> coverage;
  std::vector<QQPoint> qq;
  std::vector<StudyDataset> datasets;
};

/// Simulates, fits and (for a subset) bootstraps independent call-level surveys.
StudySummary run_study(const SurveyConfig& config, const StudyConfig& study, Execution exec = Execution::Parallel);

}  // namespace ascr
