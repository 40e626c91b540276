#pragma once

#include <array>
#include <utility>
#include <vector>

#include "ascr/detection_model.hpp"
#include "ascr/estep.hpp"
#include "ascr/optimizer.hpp"
#include "ascr/partition.hpp"
#include "ascr/survey.hpp"
#include "ascr/types.hpp"

namespace ascr {

/// Theta-sufficient summary of one latent sample's observed calls.
struct SampleStats {
  double calls = 0.0;       // calls included (weighted)
  double detected = 0.0;    // detected (m, n) entries
  double mean_y = 0.0;      // strengths and distances of detected entries, centred
  double mean_d = 0.0;
  double syy = 0.0, sdd = 0.0, syd = 0.0;
  double time_ss = 0.0;     // sum of (t - e - d / v)^2
  std::vector<std::pair<double, double>> miss;  // (distance, weight) of undetected entries

  void add_detected(double y, double d, double time_residual);
  void add_miss(double d, double weight = 1.0) { miss.emplace_back(d, weight); }
  /// Adds w * other.
  void merge(const SampleStats& other, double weight = 1.0);
  /// Sorts miss distances and folds exact duplicates.
  void compact();
};

/// Stats of the calls in `state` with at least `min_detectors` detections; min_detectors = 0
/// includes undetected calls too.
SampleStats sample_stats(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                         int min_detectors);

enum class ObjectiveKind {
  Conditional,   // conditional on the observed-call count
  SemiComplete,  // total call count N as an extra argument
  CompleteData,  // fixed latent state, no integral term; used for warm starts
};

enum class GradientMode { Analytic, FiniteDifference };

/// Monte Carlo ELBO: mean over global samples of the chosen log-likelihood.
class ElboObjective {
 public:
  /// One entry per global sample, i.e. the union over groups of each group's delta-th sample.
  ElboObjective(std::vector<SampleStats> per_sample, std::vector<double> observed_counts, const SurveyConfig& config,
                int min_detectors, ObjectiveKind kind);

  static ElboObjective from_estep(const EStepResult& estep, const std::vector<DetectionGroup>& groups,
                                  const SurveyConfig& config, int min_detectors, ObjectiveKind kind,
                                  Execution exec = Execution::Parallel);
  static ElboObjective from_states(const std::vector<LatentState>& states, const DetectionData& data,
                                   const SurveyConfig& config, int min_detectors, ObjectiveKind kind);

  ObjectiveKind kind() const { return kind_; }
  int min_detectors() const { return min_detectors_; }
  int n_samples() const { return static_cast<int>(per_sample_.size()); }
  const SurveyConfig& config() const { return *config_; }
  const DetectionSurface& surface() const { return surface_; }

  /// Mean and per-sample counts of calls with >= min_detectors detections.
  double mean_observed() const { return mean_observed_; }
  const std::vector<double>& observed_counts() const { return observed_; }
  /// Detected entries in the pooled statistics; zero means theta is not identifiable.
  double detected_entries() const { return pooled_.detected; }

  void set_total_calls(double n) { total_calls_ = n; }
  double total_calls() const { return total_calls_; }

  double value(const ModelParams& p) const;
  /// Value plus gradient in (beta0, beta1, sigma_s, sigma_t).
  double value_and_gradient(const ModelParams& p, std::array<double, 4>& grad) const;
  /// Log-likelihood of sample delta alone.
  double sample_value(int delta, const ModelParams& p) const;

 private:
  double evaluate(const SampleStats& s, double calls, const std::vector<double>& counts, const ModelParams& p,
                  std::array<double, 4>* grad) const;

  const SurveyConfig* config_;
  DetectionSurface surface_;
  int min_detectors_;
  ObjectiveKind kind_;
  std::vector<SampleStats> per_sample_;
  std::vector<double> observed_;
  SampleStats pooled_;
  double mean_observed_ = 0.0;
  double total_calls_ = 0.0;
};

struct MStepConfig {
  OptimizerConfig optimizer;
  GradientMode gradient = GradientMode::Analytic;
  double fd_step = 1e-5;
  bool log_transform = true;  // log for beta1, sigma_s, sigma_t; identity for beta0
};

struct MStepResult {
  ModelParams params;
  double value = 0.0;
  OptimizerResult optimizer;
};

MStepResult maximize(const ElboObjective& objective, const ModelParams& init, const MStepConfig& config = {});

/// D_c = N^o / (pbar A T), N = D_c A T, with pbar for the given min_detectors.
DensityEstimate estimate_density(double observed_calls, const ModelParams& p, const SurveyConfig& config,
                                 int min_detectors, const DetectionSurface* surface = nullptr);

struct SemiCompleteResult {
  ModelParams params;
  long long total_calls = 0;
  double call_density = 0.0;
  double value = 0.0;
  int rounds = 0;
};

/// Integer N maximizing the semi-complete ELBO at fixed theta.
long long best_total_calls(const ElboObjective& objective, const ModelParams& p);

/// Joint maximization over (theta, N) by alternating theta-steps and integer N-steps.
SemiCompleteResult mle_semi_complete(ElboObjective objective, const ModelParams& init, const MStepConfig& config = {});

}  // namespace ascr
