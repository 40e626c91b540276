#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ascr/bootstrap.hpp"
#include "ascr/mcem.hpp"
#include "ascr/simulator.hpp"
#include "ascr/study.hpp"
#include "json.hpp"

namespace ascr {

inline constexpr const char* kFitSchema = "ascr.fit/1";
inline constexpr const char* kBootstrapSchema = "ascr.ci/1";
inline constexpr const char* kTruthSchema = "ascr.truth/1";
inline constexpr const char* kStudySchema = "ascr.study/1";

/// Bad user input (file contents, settings); the CLI maps it to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lines;  // 1-based file line of each row
};

/// Reads a comma-separated file whose header must equal `columns`.
CsvTable read_csv(const std::string& path, const std::vector<std::string>& columns);

std::vector<Detector> read_detectors_csv(const std::string& path);
DetectionData read_detections_csv(const std::string& path, int n_detectors);
std::vector<Point> read_polygon_csv(const std::string& path);
/// "x0,y0,x1,y1"
SurveyRegion parse_rect(const std::string& text, int grid_resolution);

void write_detectors_csv(const std::string& path, const std::vector<Detector>& detectors);
void write_detections_csv(const std::string& path, const DetectionData& data);
void write_polygon_csv(const std::string& path, const SurveyRegion& region);

/// All tunables of the tool; every field has a default.
struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 leaves the OpenMP default
  // survey
  double threshold = 130.0;
  double sound_speed = kDefaultSoundSpeed;
  double duration = 0.0;  // 0: last detection time rounded up to a whole second
  double emission_start = std::numeric_limits<double>::quiet_NaN();
  double emission_end = std::numeric_limits<double>::quiet_NaN();
  int grid_resolution = SurveyRegion::kDefaultGridResolution;
  double region_buffer = 20.0;  // simulate/study without a region: array bounding box grown by this
  // model fitting
  int min_detectors = 2;
  std::string objective = "conditional";
  std::string gradient = "analytic";
  double sigma_t_prior = kDefaultSigmaTPrior;
  double partition_slack = 0.0;
  int samples = 200;
  int burn_in = 500;
  int thinning = 5;
  double mixture_weight = 0.5;
  double proposal_sd = 0.0;
  int max_iterations = 30;
  double tolerance = 0.01;
  int convergence_window = 3;
  int warm_burn_in = 100;
  double sample_growth = 1.2;
  int max_sample_factor = 10;
  // bootstrap
  int bootstrap_replicates = 100;
  int warm_iterations = 2;
  double level = 0.95;
  bool chains_from_truth = true;
  double call_rate = 0.0;  // calls/s per animal; 0 bootstraps at call level
  std::string call_count_mode = "poisson";
  int hist_bins = 30;
  // simulation scenario
  double call_density = 0.0015;  // calls / s / m^2
  double animal_density = 0.0;   // animals / m^2; > 0 switches to animal-level simulation
  double true_beta0 = 165.0;
  double true_beta1 = 2.5;
  double true_sigma_s = 10.0;
  double true_sigma_t = 0.005;
  int replicates = 1;
  // study
  int study_datasets = 100;
  int study_bootstrap_datasets = 0;

  McemConfig mcem() const;
  SamplerConfig sampler() const;
  BootstrapConfig bootstrap() const;
  ModelParams true_params() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();
/// Throws InputError for an unknown key or a value of the wrong type.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
/// Flat "key = value" lines; '#' starts a comment.
void load_config_file(RunConfig& config, const std::string& path);

/// Default array: six detectors on a 2 x 3 grid at 10 m spacing.
std::vector<Detector> default_detector_array();
SurveyRegion buffered_region(const std::vector<Detector>& detectors, double buffer, int grid_resolution);

using Json = nlohmann::ordered_json;

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

Json params_to_json(const ModelParams& p);
ModelParams params_from_json(const Json& j);
Json fit_to_json(const FitResult& fit, const SurveyConfig& survey, const RunConfig& run);
/// Status, parameters and density of a saved fit; enough to bootstrap from.
FitResult fit_from_json(const Json& j);
void write_trace_csv(const std::string& path, const FitResult& fit);
void write_density_posterior_csv(const std::string& path, const FitResult& fit, const SurveyConfig& survey);

Json truth_to_json(const SimResult& sim, const SurveyConfig& survey, const ModelParams& params, double call_density,
                   std::optional<double> animal_density);

void write_bootstrap_csv(const std::string& path, const BootstrapResult& result);
Json bootstrap_to_json(const BootstrapResult& result, const FitResult& fit);
void write_density_hist_csv(const std::string& path, const BootstrapResult& result, int bins);

Json study_to_json(const StudySummary& summary, const RunConfig& run);
void write_qq_csv(const std::string& path, const std::vector<QQPoint>& qq);

}  // namespace ascr
