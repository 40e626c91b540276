#include "ascr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ascr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || text.empty()) throw InputError(what + ": '" + text + "' is not a number");
  return v;
}

long long parse_integer(const std::string& text, const std::string& what) {
  long long v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || text.empty()) throw InputError(what + ": '" + text + "' is not an integer");
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InputError(what + ": '" + text + "' is not a boolean");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

CsvTable read_csv(const std::string& path, const std::vector<std::string>& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  CsvTable t;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split(line, ',');
    if (!have_header) {
      if (cells != columns)
        throw InputError(path + " line " + std::to_string(line_no) + ": expected header '" + join(columns) + "'");
      t.header = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != columns.size())
      throw InputError(path + " line " + std::to_string(line_no) + ": expected " + std::to_string(columns.size()) +
                       " fields, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.lines.push_back(line_no);
  }
  if (!have_header) throw InputError(path + ": missing header '" + join(columns) + "'");
  return t;
}

std::vector<Detector> read_detectors_csv(const std::string& path) {
  const CsvTable t = read_csv(path, {"detector_id", "x_m", "y_m"});
  std::vector<Detector> dets;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = path + " line " + std::to_string(t.lines[r]);
    const long long id = parse_integer(t.rows[r][0], where);
    const Point p{parse_double(t.rows[r][1], where), parse_double(t.rows[r][2], where)};
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InputError(where + ": non-finite detector position");
    dets.push_back({static_cast<int>(id), p});
  }
  std::sort(dets.begin(), dets.end(), [](const Detector& a, const Detector& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (dets[i].id != static_cast<int>(i) + 1)
      throw InputError(path + ": detector ids must be unique and contiguous from 1");
  if (dets.empty()) throw InputError(path + ": no detectors");
  return dets;
}

DetectionData read_detections_csv(const std::string& path, int n_detectors) {
  const CsvTable t = read_csv(path, {"detector_id", "time_s", "signal_strength"});
  std::vector<Detection> recs;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = path + " line " + std::to_string(t.lines[r]);
    const long long id = parse_integer(t.rows[r][0], where);
    if (id < 1 || id > n_detectors) throw InputError(where + ": unknown detector id " + std::to_string(id));
    const double time = parse_double(t.rows[r][1], where);
    const double y = parse_double(t.rows[r][2], where);
    if (!std::isfinite(time) || !std::isfinite(y)) throw InputError(where + ": non-finite value");
    recs.push_back({static_cast<int>(id), time, y});
  }
  return DetectionData::from_records(std::move(recs), n_detectors);
}

std::vector<Point> read_polygon_csv(const std::string& path) {
  const CsvTable t = read_csv(path, {"x_m", "y_m"});
  std::vector<Point> pts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = path + " line " + std::to_string(t.lines[r]);
    pts.push_back({parse_double(t.rows[r][0], where), parse_double(t.rows[r][1], where)});
  }
  if (pts.size() < 3) throw InputError(path + ": a polygon needs at least three vertices");
  return pts;
}

SurveyRegion parse_rect(const std::string& text, int grid_resolution) {
  const std::vector<std::string> cells = split(text, ',');
  if (cells.size() != 4) throw InputError("--rect expects x0,y0,x1,y1");
  double v[4];
  for (int i = 0; i < 4; ++i) v[i] = parse_double(cells[static_cast<std::size_t>(i)], "--rect");
  if (!(v[2] > v[0] && v[3] > v[1])) throw InputError("--rect needs x1 > x0 and y1 > y0");
  return SurveyRegion::rectangle(v[0], v[1], v[2], v[3], grid_resolution);
}

void write_detectors_csv(const std::string& path, const std::vector<Detector>& detectors) {
  std::ofstream out = open_out(path);
  out << "detector_id,x_m,y_m\n";
  for (const Detector& d : detectors)
    out << d.id << ',' << format_double(d.position.x) << ',' << format_double(d.position.y) << '\n';
}

void write_detections_csv(const std::string& path, const DetectionData& data) {
  std::ofstream out = open_out(path);
  out << "detector_id,time_s,signal_strength\n";
  std::vector<Detection> all = data.flatten();
  std::stable_sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) { return a.time < b.time; });
  for (const Detection& d : all)
    out << d.detector_id << ',' << format_double(d.time) << ',' << format_double(d.signal_strength) << '\n';
}

void write_polygon_csv(const std::string& path, const SurveyRegion& region) {
  std::ofstream out = open_out(path);
  out << "x_m,y_m\n";
  for (const Point& p : region.vertices()) out << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

McemConfig RunConfig::mcem() const {
  McemConfig m;
  m.max_iterations = max_iterations;
  m.tolerance = tolerance;
  m.convergence_window = convergence_window;
  m.max_sample_factor = max_sample_factor;
  m.sample_growth = sample_growth;
  m.warm_burn_in = warm_burn_in;
  m.min_detectors = min_detectors;
  m.sigma_t_prior = sigma_t_prior;
  m.partition_slack = partition_slack;
  if (objective == "conditional")
    m.objective = ObjectiveKind::Conditional;
  else if (objective == "semi_complete")
    m.objective = ObjectiveKind::SemiComplete;
  else
    throw InputError("objective must be 'conditional' or 'semi_complete'");
  if (gradient == "analytic")
    m.mstep.gradient = GradientMode::Analytic;
  else if (gradient == "finite_difference")
    m.mstep.gradient = GradientMode::FiniteDifference;
  else
    throw InputError("gradient must be 'analytic' or 'finite_difference'");
  return m;
}

SamplerConfig RunConfig::sampler() const {
  SamplerConfig s;
  s.n_samples = samples;
  s.burn_in = burn_in;
  s.thinning = thinning;
  s.mixture_weight = mixture_weight;
  s.proposal_sd = proposal_sd;
  s.seed = seed;
  return s;
}

BootstrapConfig RunConfig::bootstrap() const {
  BootstrapConfig b;
  b.replicates = bootstrap_replicates;
  b.warm_iterations = warm_iterations;
  b.level = level;
  b.seed = seed;
  b.chains_from_truth = chains_from_truth;
  if (call_count_mode == "poisson")
    b.count_mode = CallCountMode::Poisson;
  else if (call_count_mode == "deterministic")
    b.count_mode = CallCountMode::Deterministic;
  else
    throw InputError("call_count_mode must be 'poisson' or 'deterministic'");
  return b;
}

ModelParams RunConfig::true_params() const {
  ModelParams p;
  p.beta0 = true_beta0;
  p.beta1 = true_beta1;
  p.sigma_s = true_sigma_s;
  p.sigma_t = true_sigma_t;
  p.threshold = threshold;
  return p;
}

namespace {

template <class T>
ConfigKey number_key(std::string name, std::string help, T RunConfig::*field) {
  ConfigKey k;
  k.name = name;
  k.help = std::move(help);
  k.set = [field, name](RunConfig& c, const std::string& v) {
    if constexpr (std::is_floating_point_v<T>) {
      c.*field = parse_double(v, name);
    } else {
      const long long x = parse_integer(v, name);
      if constexpr (std::is_unsigned_v<T>) {
        if (x < 0) throw InputError(name + " must be non-negative");
      }
      c.*field = static_cast<T>(x);
    }
  };
  k.get = [field](const RunConfig& c) {
    if constexpr (std::is_floating_point_v<T>)
      return format_double(c.*field);
    else
      return std::to_string(c.*field);
  };
  return k;
}

ConfigKey string_key(std::string name, std::string help, std::string RunConfig::*field) {
  return {std::move(name), std::move(help), [field](RunConfig& c, const std::string& v) { c.*field = v; },
          [field](const RunConfig& c) { return c.*field; }};
}

ConfigKey bool_key(std::string name, std::string help, bool RunConfig::*field) {
  return {name, std::move(help), [field, name](RunConfig& c, const std::string& v) { c.*field = parse_bool(v, name); },
          [field](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      number_key("seed", "root random seed", &RunConfig::seed),
      number_key("threads", "worker threads (0 = OpenMP default)", &RunConfig::threads),
      number_key("threshold", "detection threshold c on signal strength", &RunConfig::threshold),
      number_key("sound_speed", "speed of sound (m/s)", &RunConfig::sound_speed),
      number_key("duration", "survey duration T (s); 0 = last detection rounded up", &RunConfig::duration),
      number_key("emission_start", "emission window start (s); default -max travel time", &RunConfig::emission_start),
      number_key("emission_end", "emission window end (s); default the duration", &RunConfig::emission_end),
      number_key("grid_resolution", "integration lattice cells per side", &RunConfig::grid_resolution),
      number_key("region_buffer", "buffer (m) around the array when no region is given", &RunConfig::region_buffer),
      number_key("min_detectors", "calls need this many detections in the M-step (1 or 2)", &RunConfig::min_detectors),
      string_key("objective", "conditional | semi_complete", &RunConfig::objective),
      string_key("gradient", "analytic | finite_difference", &RunConfig::gradient),
      number_key("sigma_t_prior", "prior arrival-time sd (s)", &RunConfig::sigma_t_prior),
      number_key("partition_slack", "partition slack sigma (s); 0 = 3 * sigma_t_prior", &RunConfig::partition_slack),
      number_key("samples", "retained MC samples in the first iteration", &RunConfig::samples),
      number_key("burn_in", "burn-in sweeps for fresh chains", &RunConfig::burn_in),
      number_key("thinning", "sweeps between retained samples", &RunConfig::thinning),
      number_key("mixture_weight", "Gaussian share of the location proposal", &RunConfig::mixture_weight),
      number_key("proposal_sd", "location proposal sd (m); 0 = half the median spacing", &RunConfig::proposal_sd),
      number_key("max_iterations", "maximum MCEM iterations", &RunConfig::max_iterations),
      number_key("tolerance", "relative convergence tolerance", &RunConfig::tolerance),
      number_key("convergence_window", "consecutive calm iterations needed", &RunConfig::convergence_window),
      number_key("warm_burn_in", "burn-in sweeps for continued chains", &RunConfig::warm_burn_in),
      number_key("sample_growth", "per-iteration sample growth factor", &RunConfig::sample_growth),
      number_key("max_sample_factor", "cap on samples as a multiple of the first iteration", &RunConfig::max_sample_factor),
      number_key("bootstrap_replicates", "bootstrap replicates B", &RunConfig::bootstrap_replicates),
      number_key("warm_iterations", "MCEM iterations per bootstrap replicate", &RunConfig::warm_iterations),
      number_key("level", "percentile interval level", &RunConfig::level),
      bool_key("chains_from_truth", "start replicate chains at the simulated latent state", &RunConfig::chains_from_truth),
      number_key("call_rate", "calls/s per animal for animal-level bootstrap; 0 = call level", &RunConfig::call_rate),
      string_key("call_count_mode", "poisson | deterministic calls per animal", &RunConfig::call_count_mode),
      number_key("hist_bins", "bins in density_hist.csv", &RunConfig::hist_bins),
      number_key("call_density", "simulated call density (calls/s/m^2)", &RunConfig::call_density),
      number_key("animal_density", "simulated animal density (animals/m^2); > 0 uses call_rate", &RunConfig::animal_density),
      number_key("true_beta0", "simulated source strength", &RunConfig::true_beta0),
      number_key("true_beta1", "simulated attenuation per meter", &RunConfig::true_beta1),
      number_key("true_sigma_s", "simulated strength sd", &RunConfig::true_sigma_s),
      number_key("true_sigma_t", "simulated arrival-time sd (s)", &RunConfig::true_sigma_t),
      number_key("replicates", "simulated datasets", &RunConfig::replicates),
      number_key("study_datasets", "datasets in a study", &RunConfig::study_datasets),
      number_key("study_bootstrap_datasets", "study datasets that also get bootstrap intervals",
                 &RunConfig::study_bootstrap_datasets),
  };
  return keys;
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  for (const ConfigKey& k : config_keys())
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  throw InputError("unknown configuration key '" + key + "'");
}

void load_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(path + " line " + std::to_string(line_no) + ": expected key = value");
    try {
      apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InputError& e) {
      throw InputError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::vector<Detector> default_detector_array() {
  std::vector<Detector> d;
  int id = 1;
  for (int row = 0; row < 2; ++row)
    for (int col = 0; col < 3; ++col) d.push_back({id++, {10.0 * col, 10.0 * row}});
  return d;
}

SurveyRegion buffered_region(const std::vector<Detector>& detectors, double buffer, int grid_resolution) {
  if (detectors.empty()) throw InputError("no detectors");
  double x0 = detectors.front().position.x, x1 = x0, y0 = detectors.front().position.y, y1 = y0;
  for (const Detector& d : detectors) {
    x0 = std::min(x0, d.position.x);
    x1 = std::max(x1, d.position.x);
    y0 = std::min(y0, d.position.y);
    y1 = std::max(y1, d.position.y);
  }
  return SurveyRegion::rectangle(x0 - buffer, y0 - buffer, x1 + buffer, y1 + buffer, grid_resolution);
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

Json params_to_json(const ModelParams& p) {
  return Json{{"beta0", p.beta0}, {"beta1", p.beta1}, {"sigma_s", p.sigma_s}, {"sigma_t", p.sigma_t},
              {"threshold", p.threshold}};
}

ModelParams params_from_json(const Json& j) {
  try {
    ModelParams p;
    p.beta0 = j.at("beta0").get<double>();
    p.beta1 = j.at("beta1").get<double>();
    p.sigma_s = j.at("sigma_s").get<double>();
    p.sigma_t = j.at("sigma_t").get<double>();
    p.threshold = j.at("threshold").get<double>();
    p.validate();
    return p;
  } catch (const std::exception& e) {
    throw InputError(std::string("bad parameter block: ") + e.what());
  }
}

Json fit_to_json(const FitResult& fit, const SurveyConfig& survey, const RunConfig& run) {
  Json trace = Json::array();
  for (const IterationTrace& t : fit.trace)
    trace.push_back(Json{{"iteration", t.iteration},
                         {"n_samples", t.n_samples},
                         {"params", params_to_json(t.params)},
                         {"elbo_start", t.elbo_start},
                         {"elbo", t.elbo},
                         {"observed_calls", t.observed_calls},
                         {"call_density", t.density.call_density},
                         {"capture_acceptance", t.capture_acceptance},
                         {"location_acceptance", t.location_acceptance},
                         {"emission_clamped", t.emission_clamped},
                         {"optimizer_iterations", t.optimizer_iterations}});
  Json settings = Json::object();
  for (const ConfigKey& k : config_keys()) settings[k.name] = k.get(run);
  return Json{{"schema", kFitSchema},
              {"status", to_string(fit.status)},
              {"call_density", fit.density.call_density},
              {"call_density_units", "calls/s/m^2"},
              {"total_calls", fit.density.total_calls},
              {"mean_detect_prob", fit.density.mean_detect_prob},
              {"observed_calls", fit.density.observed_calls},
              {"min_detectors", fit.min_detectors},
              {"params", params_to_json(fit.params)},
              {"initial_params", params_to_json(fit.initial_params)},
              {"survey",
               Json{{"area_m2", survey.region.area()},
                    {"duration_s", survey.duration},
                    {"sound_speed", survey.sound_speed},
                    {"emission_start", survey.emission_start},
                    {"emission_end", survey.emission_end},
                    {"n_detectors", survey.n_detectors()}}},
              {"groups",
               Json{{"count", fit.groups.n_groups}, {"largest", fit.groups.largest}, {"mean_size", fit.groups.mean_size}}},
              {"iterations", fit.trace.size()},
              {"trace", trace},
              {"settings", settings},
              {"timing", Json{{"seconds", fit.seconds}}}};
}

FitResult fit_from_json(const Json& j) {
  if (j.value("schema", std::string()) != kFitSchema) throw InputError("not a fit file (schema mismatch)");
  FitResult f;
  try {
    const std::string status = j.at("status").get<std::string>();
    if (status == "converged")
      f.status = FitStatus::Converged;
    else if (status == "not_converged")
      f.status = FitStatus::NotConverged;
    else
      f.status = FitStatus::NoEstimableCalls;
    f.params = params_from_json(j.at("params"));
    f.initial_params = params_from_json(j.at("initial_params"));
    f.density.call_density = j.at("call_density").get<double>();
    f.density.total_calls = j.at("total_calls").get<double>();
    f.density.mean_detect_prob = j.at("mean_detect_prob").get<double>();
    f.density.observed_calls = j.at("observed_calls").get<double>();
    f.min_detectors = j.at("min_detectors").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad fit file: ") + e.what());
  }
  return f;
}

void write_trace_csv(const std::string& path, const FitResult& fit) {
  std::ofstream out = open_out(path);
  out << "iteration,n_samples,beta0,beta1,sigma_s,sigma_t,elbo_start,elbo,observed_calls,call_density,"
         "capture_acceptance,location_acceptance\n";
  for (const IterationTrace& t : fit.trace)
    out << t.iteration << ',' << t.n_samples << ',' << format_double(t.params.beta0) << ','
        << format_double(t.params.beta1) << ',' << format_double(t.params.sigma_s) << ','
        << format_double(t.params.sigma_t) << ',' << format_double(t.elbo_start) << ',' << format_double(t.elbo) << ','
        << format_double(t.observed_calls) << ',' << format_double(t.density.call_density) << ','
        << format_double(t.capture_acceptance) << ',' << format_double(t.location_acceptance) << '\n';
}

void write_density_posterior_csv(const std::string& path, const FitResult& fit, const SurveyConfig& survey) {
  std::ofstream out = open_out(path);
  out << "sample,observed_calls,call_density\n";
  const double scale = fit.density.mean_detect_prob * survey.region.area() * survey.duration;
  for (std::size_t i = 0; i < fit.observed_per_sample.size(); ++i)
    out << i << ',' << format_double(fit.observed_per_sample[i]) << ','
        << format_double(scale > 0.0 ? fit.observed_per_sample[i] / scale : 0.0) << '\n';
}

Json truth_to_json(const SimResult& sim, const SurveyConfig& survey, const ModelParams& params, double call_density,
                   std::optional<double> animal_density) {
  Json calls = Json::array();
  for (const SimCall& c : sim.truth.calls) {
    Json kept = Json::array();
    for (int k : c.kept) kept.push_back(k);
    calls.push_back(Json{{"x", c.location.x}, {"y", c.location.y}, {"emission", c.emission}, {"animal", c.animal},
                         {"detections", kept}});
  }
  Json animals = Json::array();
  for (std::size_t a = 0; a < sim.truth.animals.size(); ++a)
    animals.push_back(Json{{"x", sim.truth.animals[a].x},
                           {"y", sim.truth.animals[a].y},
                           {"calls", sim.truth.calls_per_animal[a]}});
  int observed = 0;
  for (int n = 0; n < sim.truth.latent.n_calls(); ++n) observed += sim.truth.latent.detections_of(n) > 0 ? 1 : 0;
  Json j{{"schema", kTruthSchema},
         {"params", params_to_json(params)},
         {"call_density", call_density},
         {"duration_s", survey.duration},
         {"area_m2", survey.region.area()},
         {"emission_start", survey.emission_start},
         {"emission_end", survey.emission_end},
         {"n_calls", sim.truth.calls.size()},
         {"n_observed_calls", observed},
         {"n_detections", sim.data.total()},
         {"calls", calls}};
  if (animal_density) {
    j["animal_density"] = *animal_density;
    j["animals"] = animals;
  }
  return j;
}

void write_bootstrap_csv(const std::string& path, const BootstrapResult& result) {
  std::ofstream out = open_out(path);
  out << "replicate,seed,status,detections,call_density,animal_density,beta0,beta1,sigma_s,sigma_t\n";
  for (const ReplicateResult& r : result.replicates) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << r.index << ',' << r.seed << ',' << (r.ok ? "ok" : status) << ',' << r.detections << ','
        << (r.ok ? format_double(r.call_density) : "") << ','
        << (r.animal_density ? format_double(*r.animal_density) : "") << ','
        << (r.ok ? format_double(r.params.beta0) : "") << ',' << (r.ok ? format_double(r.params.beta1) : "") << ','
        << (r.ok ? format_double(r.params.sigma_s) : "") << ',' << (r.ok ? format_double(r.params.sigma_t) : "")
        << '\n';
  }
}

Json bootstrap_to_json(const BootstrapResult& result, const FitResult& fit) {
  auto interval = [](const Interval& i) { return Json{{"lo", i.lo}, {"hi", i.hi}}; };
  Json j{{"schema", kBootstrapSchema},
         {"level", result.level},
         {"replicates", result.replicates.size()},
         {"failures", result.failures},
         {"call_density", fit.density.call_density},
         {"call_density_ci", interval(result.call_density_ci)},
         {"call_density_replicate_mean", result.call_density_mean},
         {"cv", result.cv},
         {"params_ci",
          Json{{"beta0", interval(result.param_ci[0])},
               {"beta1", interval(result.param_ci[1])},
               {"sigma_s", interval(result.param_ci[2])},
               {"sigma_t", interval(result.param_ci[3])}}}};
  if (result.animal_density_ci) j["animal_density_ci"] = interval(*result.animal_density_ci);
  return j;
}

void write_density_hist_csv(const std::string& path, const BootstrapResult& result, int bins) {
  if (bins < 1) throw InputError("hist_bins must be at least 1");
  std::vector<double> v;
  for (const ReplicateResult& r : result.replicates)
    if (r.ok) v.push_back(r.call_density);
  std::ofstream out = open_out(path);
  out << "bin_lo,bin_hi,count,density\n";
  if (v.empty()) return;
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double lo = *mn;
  const double width = *mx > lo ? (*mx - lo) / bins : 1.0;
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  for (double x : v) {
    int b = static_cast<int>((x - lo) / width);
    counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
  }
  for (int b = 0; b < bins; ++b) {
    const double c = counts[static_cast<std::size_t>(b)];
    out << format_double(lo + b * width) << ',' << format_double(lo + (b + 1) * width) << ','
        << counts[static_cast<std::size_t>(b)] << ',' << format_double(c / (static_cast<double>(v.size()) * width))
        << '\n';
  }
}

Json study_to_json(const StudySummary& s, const RunConfig& run) {
  Json datasets = Json::array();
  for (const StudyDataset& d : s.datasets) {
    Json e{{"index", d.index}, {"status", d.status}, {"detections", d.detections}, {"seconds", d.seconds}};
    if (d.ok) {
      e["call_density"] = d.call_density;
      e["params"] = params_to_json(d.params);
    }
    if (d.ci) {
      e["ci"] = Json{{"lo", d.ci->lo}, {"hi", d.ci->hi}};
      e["covered"] = d.covered;
    }
    datasets.push_back(e);
  }
  Json settings = Json::object();
  for (const ConfigKey& k : config_keys()) settings[k.name] = k.get(run);
  Json j{{"schema", kStudySchema},
         {"true_call_density", s.true_call_density},
         {"datasets", s.datasets.size()},
         {"successful_fits", s.n_ok},
         {"mean_detections", s.mean_detections},
         {"mean_estimate", s.mean_estimate},
         {"relative_bias", s.relative_bias},
         {"empirical_cv", s.empirical_cv},
         {"skewness", s.skewness},
         {"intervals", s.n_intervals},
         {"covered", s.n_covered},
         {"coverage", s.coverage ? Json(*s.coverage) : Json(nullptr)},
         {"per_dataset", datasets},
         {"settings", settings}};
  return j;
}

void write_qq_csv(const std::string& path, const std::vector<QQPoint>& qq) {
  std::ofstream out = open_out(path);
  out << "normal_quantile,estimate\n";
  for (const QQPoint& p : qq) out << format_double(p.theoretical) << ',' << format_double(p.sample) << '\n';
}

}  // namespace ascr
