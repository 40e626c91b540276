#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ascr/mcem.hpp"
#include "ascr/partition.hpp"
#include "ascr/simulator.hpp"

namespace ascr {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile interval with linearly interpolated (type 7) quantiles at (1 - level) / 2 and
/// 1 - (1 - level) / 2. Needs >= 2 finite values and level in (0, 1).
Interval percentile_ci(std::vector<double> values, double level);

/// Quantile with linear interpolation between order statistics, q in [0, 1].
double quantile_type7(std::vector<double> values, double q);

/// Maximizes the complete-data log-likelihood over theta with the simulated latent state
/// fixed at truth. `guess` supplies the threshold and the fallback starting point.
ModelParams warm_start_mle(const SimTruth& truth, const SurveyConfig& config, const ModelParams& guess);

/// Per-group chain starting states built from the simulated truth.
std::vector<LatentState> latent_from_truth(const SimTruth& truth, const std::vector<DetectionGroup>& groups,
                                           const SurveyConfig& config, Rng& rng);

struct BootstrapConfig {
  int replicates = 100;     // B
  int warm_iterations = 2;  // MCEM iterations per replicate
  double level = 0.95;
  std::uint64_t seed = 1;
  bool chains_from_truth = true;  // start each replicate's chains at the simulated latent state
  double max_failure_fraction = 0.2;
  CallCountMode count_mode = CallCountMode::Poisson;

  void validate() const;
};

struct ReplicateResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string status;
  int detections = 0;
  double call_density = 0.0;
  std::optional<double> animal_density;
  ModelParams params;
};

struct BootstrapResult {
  std::vector<ReplicateResult> replicates;
  int failures = 0;
  double level = 0.95;
  Interval call_density_ci;
  std::optional<Interval> animal_density_ci;
  std::array<Interval, 4> param_ci{};  // beta0, beta1, sigma_s, sigma_t
  double call_density_mean = 0.0;
  double cv = 0.0;  // sd / mean of the replicate call densities
};

/// Parametric bootstrap around a fitted model. With a call-rate model the replicates are
/// simulated at animal level with D_a = D_c / mean rate; without one, at call level.
BootstrapResult bootstrap(const FitResult& fit, const std::optional<CallRateModel>& call_rate, const SurveyConfig& config,
                          const McemConfig& mcem, const SamplerConfig& sampler, const BootstrapConfig& boot,
                          Execution exec = Execution::Parallel);

}  // namespace ascr
