// ascr: density estimation from unmatched acoustic detections.
//
//   ascr fit --detections d.csv --detectors a.csv --rect x0,y0,x1,y1 --out results
//   ascr simulate --out sim --replicates 5
//   ascr bootstrap --fit results/fit.json --detections d.csv --detectors a.csv --rect ... --B 200
//   ascr study --replicates 100 --study-bootstrap-datasets 100 --B 100
//
// Exit codes: 0 success, 1 input error, 2 fit did not converge (results are still written).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "ascr/io.hpp"

namespace fs = std::filesystem;
using namespace ascr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;
constexpr double kDefaultSimDuration = 25.0;

struct Inputs {
  std::string config;
  std::string out = ".";
  std::string detections;
  std::string detectors;
  std::string rect;
  std::string region;
  std::string fit;
  std::map<std::string, std::string> overrides;  // config key -> flag value
};

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& c : s)
    if (c == '_') c = '-';
  return "--" + s;
}

void add_config_flags(CLI::App* app, Inputs& in, const std::map<std::string, std::string>& renamed) {
  for (const ConfigKey& k : config_keys()) {
    auto it = renamed.find(k.name);
    const std::string names = it != renamed.end() ? it->second : flag_name(k.name);
    if (names.empty()) continue;
    app->add_option_function<std::string>(
           names, [&in, key = k.name](const std::string& v) { in.overrides[key] = v; },
           k.help + " [default " + k.get(RunConfig{}) + "]")
        ->type_name("VALUE");
  }
}

void add_common(CLI::App* app, Inputs& in) {
  app->add_option("--config", in.config, "key = value settings file; flags override it");
  app->add_option("--out", in.out, "output directory")->capture_default_str();
}

void add_survey_inputs(CLI::App* app, Inputs& in, bool required) {
  auto* d = app->add_option("--detections", in.detections, "detections CSV: detector_id,time_s,signal_strength");
  auto* a = app->add_option("--detectors", in.detectors, "detectors CSV: detector_id,x_m,y_m");
  if (required) {
    d->required();
    a->required();
  }
  auto* r = app->add_option("--rect", in.rect, "rectangular region x0,y0,x1,y1 (m)");
  app->add_option("--region", in.region, "polygon region CSV: x_m,y_m")->excludes(r);
}

RunConfig resolve_config(const Inputs& in) {
  RunConfig run;
  if (!in.config.empty()) load_config_file(run, in.config);
  for (const auto& [key, value] : in.overrides) {
    try {
      apply_setting(run, key, value);
    } catch (const InputError& e) {
      throw InputError(flag_name(key) + ": " + e.what());
    }
  }
#ifdef _OPENMP
  if (run.threads > 0) omp_set_num_threads(run.threads);
#endif
  return run;
}

std::vector<Detector> load_detectors(const Inputs& in) {
  return in.detectors.empty() ? default_detector_array() : read_detectors_csv(in.detectors);
}

SurveyRegion load_region(const Inputs& in, const RunConfig& run, const std::vector<Detector>& detectors) {
  if (!in.rect.empty()) return parse_rect(in.rect, run.grid_resolution);
  if (!in.region.empty()) return SurveyRegion::polygon(read_polygon_csv(in.region), run.grid_resolution);
  return buffered_region(detectors, run.region_buffer, run.grid_resolution);
}

SurveyConfig make_survey(const RunConfig& run, SurveyRegion region, std::vector<Detector> detectors, double duration) {
  std::optional<std::pair<double, double>> window;
  if (!std::isnan(run.emission_start) || !std::isnan(run.emission_end)) {
    SurveyConfig probe = SurveyConfig::make(region, detectors, duration, run.sound_speed);
    window = std::make_pair(std::isnan(run.emission_start) ? probe.emission_start : run.emission_start,
                            std::isnan(run.emission_end) ? probe.emission_end : run.emission_end);
  }
  try {
    return SurveyConfig::make(std::move(region), std::move(detectors), duration, run.sound_speed, window);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("survey: ") + e.what());
  }
}

double data_duration(const RunConfig& run, const DetectionData& data) {
  if (run.duration > 0.0) return run.duration;
  double last = 0.0;
  for (const Detection& d : data.flatten()) last = std::max(last, d.time);
  return std::max(1.0, std::ceil(last));
}

struct LoadedSurvey {
  SurveyConfig survey;
  DetectionData data;
};

LoadedSurvey load_observed(const Inputs& in, const RunConfig& run) {
  std::vector<Detector> detectors = read_detectors_csv(in.detectors);
  const int M = static_cast<int>(detectors.size());
  DetectionData data = read_detections_csv(in.detections, M);
  SurveyRegion region = load_region(in, run, detectors);
  const double duration = data_duration(run, data);
  SurveyConfig survey = make_survey(run, std::move(region), std::move(detectors), duration);
  try {
    data.validate(survey.duration, run.threshold);
  } catch (const std::invalid_argument& e) {
    throw InputError(in.detections + ": " + e.what());
  }
  return {std::move(survey), std::move(data)};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

FitResult run_fit(const LoadedSurvey& s, const RunConfig& run) {
  const McemConfig mcem = run.mcem();
  const ModelParams init = initialize_params(s.data, s.survey, run.threshold, mcem.sigma_t_prior);
  return fit(s.data, s.survey, init, mcem, run.sampler(), Execution::Parallel);
}

int cmd_fit(const Inputs& in) {
  const RunConfig run = resolve_config(in);
  const LoadedSurvey s = load_observed(in, run);
  const FitResult f = run_fit(s, run);
  ensure_dir(in.out);
  write_json(join_path(in.out, "fit.json"), fit_to_json(f, s.survey, run));
  write_trace_csv(join_path(in.out, "trace.csv"), f);
  write_density_posterior_csv(join_path(in.out, "density_posterior.csv"), f, s.survey);
  std::cout << "status " << to_string(f.status) << "  D_c " << format_double(f.density.call_density)
            << " calls/s/m^2  iterations " << f.trace.size() << '\n';
  if (f.status == FitStatus::NoEstimableCalls) {
    std::cerr << "no call was detected by at least " << run.min_detectors << " detectors\n";
    return kExitNotConverged;
  }
  return f.status == FitStatus::Converged ? kExitOk : kExitNotConverged;
}

int cmd_simulate(const Inputs& in) {
  const RunConfig run = resolve_config(in);
  std::vector<Detector> detectors = load_detectors(in);
  SurveyRegion region = load_region(in, run, detectors);
  const double duration = run.duration > 0.0 ? run.duration : kDefaultSimDuration;
  const SurveyConfig survey = make_survey(run, std::move(region), detectors, duration);
  const ModelParams theta = run.true_params();
  theta.validate();
  if (run.replicates < 1) throw InputError("replicates must be at least 1");
  const bool animal_level = run.animal_density > 0.0;
  if (animal_level && !(run.call_rate > 0.0)) throw InputError("animal-level simulation needs call_rate > 0");
  const BootstrapConfig boot = run.bootstrap();

  for (int k = 0; k < run.replicates; ++k) {
    std::string dir = in.out;
    if (run.replicates > 1) {
      char name[16];
      std::snprintf(name, sizeof name, "%03d", k + 1);
      dir = join_path(in.out, name);
    }
    ensure_dir(dir);
    Rng rng = make_stream(run.seed, 0x5171ULL, static_cast<std::uint64_t>(k));
    SimResult sim;
    double dc = run.call_density;
    std::optional<double> da;
    if (animal_level) {
      const CallRateModel rates = CallRateModel::fixed(run.call_rate);
      sim = simulate_survey(run.animal_density, rates, survey, theta, rng, boot.count_mode);
      dc = run.animal_density * run.call_rate;
      da = run.animal_density;
    } else {
      sim = simulate_calls_only(run.call_density, survey, theta, rng);
    }
    write_detectors_csv(join_path(dir, "detectors.csv"), survey.detectors);
    write_detections_csv(join_path(dir, "detections.csv"), sim.data);
    write_polygon_csv(join_path(dir, "region.csv"), survey.region);
    write_json(join_path(dir, "truth.json"), truth_to_json(sim, survey, theta, dc, da));
    std::cout << dir << ": " << sim.data.total() << " detections from " << sim.truth.calls.size() << " calls\n";
  }
  return kExitOk;
}

int cmd_bootstrap(const Inputs& in) {
  const RunConfig run = resolve_config(in);
  const LoadedSurvey s = load_observed(in, run);
  FitResult f;
  int code = kExitOk;
  if (!in.fit.empty()) {
    f = fit_from_json(read_json(in.fit));
  } else {
    f = run_fit(s, run);
    ensure_dir(in.out);
    write_json(join_path(in.out, "fit.json"), fit_to_json(f, s.survey, run));
    if (f.status == FitStatus::NotConverged) code = kExitNotConverged;
  }
  if (f.status == FitStatus::NoEstimableCalls) throw InputError("the fit has no estimates to bootstrap");
  std::optional<CallRateModel> rates;
  if (run.call_rate > 0.0) rates = CallRateModel::fixed(run.call_rate);
  McemConfig mcem = run.mcem();
  mcem.min_detectors = f.min_detectors;
  const BootstrapResult b = bootstrap(f, rates, s.survey, mcem, run.sampler(), run.bootstrap(), Execution::Parallel);
  ensure_dir(in.out);
  write_bootstrap_csv(join_path(in.out, "bootstrap.csv"), b);
  write_json(join_path(in.out, "ci.json"), bootstrap_to_json(b, f));
  write_density_hist_csv(join_path(in.out, "density_hist.csv"), b, run.hist_bins);
  std::cout << "D_c " << format_double(f.density.call_density) << "  " << format_double(100.0 * b.level) << "% CI ("
            << format_double(b.call_density_ci.lo) << ", " << format_double(b.call_density_ci.hi) << ")  CV "
            << format_double(b.cv) << "  failures " << b.failures << '\n';
  return code;
}

int cmd_study(const Inputs& in) {
  const RunConfig run = resolve_config(in);
  std::vector<Detector> detectors = load_detectors(in);
  SurveyRegion region = load_region(in, run, detectors);
  const double duration = run.duration > 0.0 ? run.duration : kDefaultSimDuration;
  const SurveyConfig survey = make_survey(run, std::move(region), std::move(detectors), duration);
  StudyConfig sc;
  sc.datasets = run.study_datasets;
  sc.bootstrap_datasets = run.study_bootstrap_datasets;
  sc.call_density = run.call_density;
  sc.truth = run.true_params();
  sc.mcem = run.mcem();
  sc.sampler = run.sampler();
  sc.boot = run.bootstrap();
  sc.seed = run.seed;
  StudySummary summary;
  try {
    summary = run_study(survey, sc, Execution::Parallel);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  ensure_dir(in.out);
  write_json(join_path(in.out, "study_summary.json"), study_to_json(summary, run));
  write_qq_csv(join_path(in.out, "qq.csv"), summary.qq);
  std::cout << summary.n_ok << "/" << summary.datasets.size() << " fits  relative bias "
            << format_double(summary.relative_bias) << "  CV " << format_double(summary.empirical_cv) << "  skewness "
            << format_double(summary.skewness);
  if (summary.coverage) std::cout << "  coverage " << format_double(*summary.coverage);
  std::cout << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic spatial capture-recapture density estimation with unknown call identities"};
  app.require_subcommand(1);
  Inputs in;

  auto* fit_cmd = app.add_subcommand("fit", "fit the model to observed detections");
  add_common(fit_cmd, in);
  add_survey_inputs(fit_cmd, in, true);
  add_config_flags(fit_cmd, in, {{"seed", "--seed"}});

  auto* sim_cmd = app.add_subcommand("simulate", "generate surveys from a configured scenario");
  add_common(sim_cmd, in);
  sim_cmd->add_option("--detectors", in.detectors, "detectors CSV (default: 2 x 3 grid at 10 m)");
  auto* sim_rect = sim_cmd->add_option("--rect", in.rect, "rectangular region x0,y0,x1,y1 (m)");
  sim_cmd->add_option("--region", in.region, "polygon region CSV: x_m,y_m")->excludes(sim_rect);
  add_config_flags(sim_cmd, in, {});

  auto* boot_cmd = app.add_subcommand("bootstrap", "parametric bootstrap intervals for a fit");
  add_common(boot_cmd, in);
  add_survey_inputs(boot_cmd, in, true);
  boot_cmd->add_option("--fit", in.fit, "fit.json from a previous 'ascr fit' (refit when omitted)");
  add_config_flags(boot_cmd, in, {{"bootstrap_replicates", "--bootstrap-replicates,--B"}});

  auto* study_cmd = app.add_subcommand("study", "bias / coverage study over simulated surveys");
  add_common(study_cmd, in);
  study_cmd->add_option("--detectors", in.detectors, "detectors CSV (default: 2 x 3 grid at 10 m)");
  auto* study_rect = study_cmd->add_option("--rect", in.rect, "rectangular region x0,y0,x1,y1 (m)");
  study_cmd->add_option("--region", in.region, "polygon region CSV: x_m,y_m")->excludes(study_rect);
  add_config_flags(study_cmd, in,
                   {{"replicates", ""},
                    {"study_datasets", "--study-datasets,--replicates"},
                    {"bootstrap_replicates", "--bootstrap-replicates,--B"}});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*fit_cmd) return cmd_fit(in);
    if (*sim_cmd) return cmd_simulate(in);
    if (*boot_cmd) return cmd_bootstrap(in);
    return cmd_study(in);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
