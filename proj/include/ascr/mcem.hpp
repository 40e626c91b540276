#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ascr/estep.hpp"
#include "ascr/mstep.hpp"
#include "ascr/partition.hpp"
#include "ascr/survey.hpp"
#include "ascr/types.hpp"

namespace ascr {

struct McemConfig {
  int max_iterations = 30;        // R
  double tolerance = 0.01;        // relative, per parameter and on D_c
  int convergence_window = 3;     // consecutive iterations that must all be within tolerance
  int max_sample_factor = 10;     // Delta_r capped at this multiple of Delta_0
  double sample_growth = 1.2;     // Delta_r = Delta_0 * ceil(growth^r)
  int warm_burn_in = 100;         // burn-in once chains continue from the previous iteration
  int min_detectors = 2;
  ObjectiveKind objective = ObjectiveKind::Conditional;
  double sigma_t_prior = kDefaultSigmaTPrior;
  double partition_slack = 0.0;   // <= 0 means 3 * sigma_t_prior
  MStepConfig mstep;

  void validate() const;
  int samples_at(int iteration, int base) const;
  double resolved_slack() const { return partition_slack > 0.0 ? partition_slack : default_partition_slack(sigma_t_prior); }
};

enum class FitStatus { Converged, NotConverged, NoEstimableCalls };
std::string to_string(FitStatus s);

struct IterationTrace {
  int iteration = 0;  // 1-based
  int n_samples = 0;
  ModelParams params;
  double elbo_start = 0.0;  // at the previous theta on this iteration's samples
  double elbo = 0.0;        // at the new theta
  double observed_calls = 0.0;
  DensityEstimate density;
  double capture_acceptance = 0.0;
  double location_acceptance = 0.0;
  long emission_clamped = 0;
  int optimizer_iterations = 0;
};

struct GroupSummary {
  int n_groups = 0;
  int largest = 0;
  double mean_size = 0.0;
};

struct FitResult {
  FitStatus status = FitStatus::NotConverged;
  ModelParams initial_params;
  ModelParams params;
  DensityEstimate density;
  int min_detectors = 2;
  std::vector<IterationTrace> trace;
  std::vector<double> observed_per_sample;  // final iteration, one per global sample
  GroupSummary groups;
  std::vector<LatentState> final_states;
  double seconds = 0.0;
};

/// Starting values from the raw detections.
ModelParams initialize_params(const DetectionData& data, const SurveyConfig& config, double threshold,
                              double sigma_t_prior = kDefaultSigmaTPrior);

/// Partition, then E-step / M-step / density until converged or R iterations.
FitResult fit(const DetectionData& data, const SurveyConfig& config, const ModelParams& init, const McemConfig& mcem,
              const SamplerConfig& sampler, Execution exec = Execution::Parallel,
              const std::vector<LatentState>* warm_states = nullptr);

/// Pre-partitioned variant; `warm_states` (one per group) seed the first E-step.
FitResult fit_groups(const std::vector<DetectionGroup>& groups, const SurveyConfig& config, const ModelParams& init,
                     const McemConfig& mcem, const SamplerConfig& sampler, Execution exec = Execution::Parallel,
                     const std::vector<LatentState>* warm_states = nullptr);

}  // namespace ascr
