#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ascr/normal.hpp"
#include "ascr/partition.hpp"
#include "ascr/survey.hpp"
#include "ascr/types.hpp"

namespace ascr {

struct SamplerConfig {
  int n_samples = 200;        // Delta
  int burn_in = 500;
  int thinning = 5;
  double mixture_weight = 0.5;  // w, Gaussian share of the location proposal
  double proposal_sd = 0.0;     // sigma_g in meters; <= 0 means half the median detector spacing
  std::uint64_t seed = 1;

  void validate() const;
  /// sigma_g resolved against the array geometry.
  double resolved_proposal_sd(const SurveyConfig& config) const;
};

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  double rate() const { return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
  void merge(const MoveStats& o) {
    proposed += o.proposed;
    accepted += o.accepted;
  }
};

struct ChainDiagnostics {
  MoveStats capture;
  MoveStats location;
  long emission_draws = 0;
  long emission_clamped = 0;  // truncated-normal draws that fell back to a bound

  void merge(const ChainDiagnostics& o) {
    capture.merge(o.capture);
    location.merge(o.location);
    emission_draws += o.emission_draws;
    emission_clamped += o.emission_clamped;
  }
};

/// Initial latent state for one group: Sum_m J_m candidate calls, detections merged
/// greedily in time order into calls they are travel-time compatible with.
LatentState init_latent(const DetectionData& group, const SurveyConfig& config, const ModelParams& params,
                        double proposal_sd, Rng& rng);

/// Uniform capture row with `n_detections` ones among `n_calls` entries; `scratch` is reused storage.
void propose_capture(int n_calls, int n_detections, Rng& rng, std::vector<int>& scratch, std::vector<bool>& captured);

/// Draw from the location proposal w N(x, sigma_g^2 I) + (1 - w) U(A). May fall outside A.
Point propose_location(Point current, const SurveyRegion& region, double mixture_weight, double proposal_sd,
                       Rng& rng);

/// Metropolis-within-Gibbs chain over (Z, X, e) for one group. The detection order K is
/// always the one implied by predicted arrivals, so every visited state is order-consistent.
class GroupChain {
 public:
  GroupChain(const DetectionData& group, const SurveyConfig& config, const ModelParams& params,
             const SamplerConfig& sampler, LatentState initial);

  const LatentState& state() const { return state_; }
  /// Cached complete-data log-likelihood of the current state.
  double log_likelihood() const { return cached_; }
  /// Full recomputation through the likelihood module.
  double recompute_log_likelihood() const;
  const ChainDiagnostics& diagnostics() const { return diag_; }

  void set_params(const ModelParams& params);

  /// One systematic sweep: capture move per detector, location move per call, emission draw per call.
  void sweep(Rng& rng);

  void capture_move(int m, Rng& rng);
  void location_move(int n, Rng& rng);
  void emission_step(int n, Rng& rng);

  /// Log target ratio for replacing detector m's capture row with `captured` (order derived).
  double capture_log_ratio(int m, const std::vector<bool>& captured) const;
  /// Log target ratio for moving call n to `proposal`; -inf outside the region.
  double location_log_ratio(int n, Point proposal) const;

 private:
  static constexpr int kMaxDetectorsOnStack = 32;

  struct EmissionCell {
    double lo, hi, mean, log_weight;
  };

  // Detector-m factor sum with optional overrides for one call's position and emission time.
  // A null `captured` uses the current capture row. With `write` the derived detection order
  // is stored into the state.
  double eval_row(int m, const std::vector<bool>* captured, int override_call, const double* override_dist,
                  double override_emission, int* override_rank, bool write);
  double row_value(int m, const std::vector<bool>* captured, int override_call, const double* override_dist,
                   double override_emission, int* override_rank = nullptr) const;
  void commit_row(int m, const std::vector<bool>* captured);
  double constant_terms() const;
  void rebuild_cache();

  const DetectionData* data_;
  const SurveyConfig* config_;
  ModelParams params_;
  SamplerConfig sampler_;
  double proposal_sd_;
  LatentState state_;
  int M_ = 0;
  int C_ = 0;
  std::vector<double> dist_;      // M x C detector-to-call distances
  std::vector<double> miss_;      // M x C log(1 - g(d)) at the cached distances
  std::vector<double> row_value_; // per-detector factor sums
  double cached_ = 0.0;
  double log_norm_const_ = 0.0;  // log(sigma_s sigma_t 2 pi)
  std::vector<std::pair<double, int>> arrivals_;
  std::vector<int> index_scratch_;
  std::vector<bool> captured_scratch_;
  std::vector<int> emit_detecting_;
  std::vector<double> emit_cuts_, emit_dist_, emit_residual_;
  std::vector<EmissionCell> emit_cells_;
  ChainDiagnostics diag_;
};

struct GroupSamples {
  std::vector<LatentState> samples;
  LatentState final_state;
  ChainDiagnostics diagnostics;
  double final_log_likelihood = 0.0;
};

struct EStepResult {
  std::vector<GroupSamples> groups;
  ChainDiagnostics diagnostics;  // merged
  int n_samples = 0;
};

/// Runs every group's chain for burn_in + n_samples * thinning sweeps. Group i draws from
/// make_stream(seed, stream_tag, i), so the output does not depend on thread count.
/// `warm_start` (one state per group) replaces init_latent when given.
EStepResult run_estep(const std::vector<DetectionGroup>& groups, const SurveyConfig& config, const ModelParams& params,
                      const SamplerConfig& sampler, std::uint64_t stream_tag,
                      const std::vector<LatentState>* warm_start = nullptr, Execution exec = Execution::Parallel);

}  // namespace ascr
