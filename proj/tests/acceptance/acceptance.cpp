// End-to-end acceptance checks; one PASS / FAIL / SKIP line per criterion.
//
//   acceptance                       full scale (hours on one core)
//   acceptance --datasets 100 --boot-datasets 40 --B 50 --samples 50 --burn-in 200
//
// Exit status is 1 when any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "ascr/bootstrap.hpp"
#include "ascr/detection_model.hpp"
#include "ascr/estep.hpp"
#include "ascr/io.hpp"
#include "ascr/likelihood.hpp"
#include "ascr/mcem.hpp"
#include "ascr/mstep.hpp"
#include "ascr/normal.hpp"
#include "ascr/partition.hpp"
#include "ascr/simulator.hpp"
#include "ascr/study.hpp"
#include "enumeration.hpp"

using namespace ascr;
namespace fs = std::filesystem;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Line {
  int criterion;
  Outcome outcome;
  std::string detail;
};

struct Options {
  int c1_instances = 20;
  int c1_samples = 20000;
  int datasets = 100;
  int boot_datasets = 100;
  int B = 100;
  int samples = 200;
  int burn_in = 500;
  int mcem_iterations = 30;
  std::uint64_t seed = 1;
  std::string out = ".";
  bool skip_study = false;
  std::string frog_detections, frog_detectors, frog_rect, frog_region;
  double frog_duration = 0.0;
  double frog_call_rate = 0.0;
  double frog_scale = 1.0;  // multiplies the estimate into the reported units
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

ModelParams scenario_truth() {
  ModelParams p;
  p.beta0 = 165.0;
  p.beta1 = 2.5;
  p.sigma_s = 10.0;
  p.sigma_t = 0.005;
  p.threshold = 130.0;
  return p;
}

SurveyConfig scenario_survey() {
  return SurveyConfig::make(buffered_region(default_detector_array(), 20.0, SurveyRegion::kDefaultGridResolution),
                            default_detector_array(), 25.0);
}

// ---------------------------------------------------------------------------------------------
// 1. Sampler against the exact matching posterior.

struct MicroInstance {
  SurveyConfig config;
  ModelParams params;
  DetectionData data;
};

std::optional<MicroInstance> draw_micro_instance(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int M = u(rng) < 0.5 ? 2 : 3;
  std::vector<Detector> det;
  for (int m = 0; m < M; ++m) det.push_back({m + 1, {25.0 * u(rng), 25.0 * u(rng)}});
  double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
  for (const Detector& d : det) {
    x0 = std::min(x0, d.position.x);
    y0 = std::min(y0, d.position.y);
    x1 = std::max(x1, d.position.x);
    y1 = std::max(y1, d.position.y);
  }
  MicroInstance inst{SurveyConfig::make(SurveyRegion::rectangle(x0 - 15, y0 - 15, x1 + 15, y1 + 15), det, 10.0), {}, {}};
  ModelParams& p = inst.params;
  p.beta0 = 150.0 + 20.0 * u(rng);
  p.beta1 = 1.0 + 2.0 * u(rng);
  p.sigma_s = 5.0 + 5.0 * u(rng);
  p.sigma_t = 0.005 + 0.03 * u(rng);
  p.threshold = 130.0;
  const int n_calls = u(rng) < 0.5 ? 1 : 2;
  std::vector<CandidateCall> calls;
  for (int n = 0; n < n_calls; ++n) calls.push_back({inst.config.region.sample_uniform(rng), 4.95 + 0.02 * u(rng)});
  const SimResult sim = simulate_from_calls(calls, std::vector<int>(calls.size(), -1), inst.config, p, rng);
  const int total = sim.data.total();
  if (total < 2 || total > 4) return std::nullopt;
  for (int m = 0; m < M; ++m)
    if (sim.data.count(m) > 2) return std::nullopt;
  if (partition_detections(sim.data, inst.config, default_partition_slack(p.sigma_t)).size() != 1) return std::nullopt;
  inst.data = sim.data;
  return inst;
}

Line criterion_1(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_stream(o.seed, 0xc1);
  double worst = 0.0;
  int instances = 0, nontrivial = 0;
  for (int attempt = 0; instances < o.c1_instances && attempt < 100000; ++attempt) {
    const std::optional<MicroInstance> inst = draw_micro_instance(rng);
    if (!inst) continue;
    ++instances;
    const auto exact = oracle::exact_matching_posterior(inst->data, inst->config, inst->params);
    double top = 0.0;
    for (const auto& [m, w] : exact) top = std::max(top, w);
    if (top < 0.95) ++nontrivial;

    SamplerConfig sc;
    sc.burn_in = 2000;
    sc.thinning = 5;
    Rng chain_rng = make_stream(o.seed, 0xc1c, static_cast<std::uint64_t>(instances));
    GroupChain chain(inst->data, inst->config, inst->params, sc,
                     init_latent(inst->data, inst->config, inst->params, sc.resolved_proposal_sd(inst->config), chain_rng));
    for (int i = 0; i < sc.burn_in; ++i) chain.sweep(chain_rng);
    std::map<oracle::Matching, double> seen;
    for (int i = 0; i < o.c1_samples; ++i) {
      for (int t = 0; t < sc.thinning; ++t) chain.sweep(chain_rng);
      seen[oracle::matching_of(chain.state(), inst->data)] += 1.0 / o.c1_samples;
    }
    worst = std::max(worst, oracle::total_variation(exact, seen));
  }
  const double secs = seconds_since(t0);
  const bool ok = instances == o.c1_instances && worst < 0.05 && secs < 300.0;
  return {1, ok ? Outcome::Pass : Outcome::Fail,
          "sampler vs enumeration: " + std::to_string(instances) + " instances (" + std::to_string(nontrivial) +
              " with no matching above 0.95), max TV " + fmt(worst) + " < 0.05, " +
              std::to_string(o.c1_samples) + " samples each, " + fmt(secs, 3) + " s < 300 s"};
}

// ---------------------------------------------------------------------------------------------
// 2. Expected semi-complete log-likelihood: full enumeration vs observed-call marginal.

Line criterion_2(const Options& o) {
  Rng rng = make_stream(o.seed, 0xc2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int compared = 0;
  for (int inst = 0; inst < 5; ++inst) {
    const int M = inst % 2 == 0 ? 2 : 3;
    std::vector<Detector> det;
    for (int m = 0; m < M; ++m) det.push_back({m + 1, {12.0 * m + 3.0 * u(rng), 6.0 * u(rng)}});
    const SurveyConfig c = SurveyConfig::make(SurveyRegion::rectangle(-10, -10, 12.0 * M + 5, 15), det, 10.0);
    // At most three detections, at most one detector holding two.
    std::vector<Detection> rec;
    const int doubled = static_cast<int>(u(rng) * M);
    const int total = 2 + inst % 2;
    for (int m = 0; m < M && static_cast<int>(rec.size()) < total; ++m) {
      const int k = (m == doubled && static_cast<int>(rec.size()) + 2 <= total) ? 2 : 1;
      for (int j = 0; j < k; ++j) rec.push_back({m + 1, 5.0 + 0.3 * (u(rng) - 0.5), 131.0 + 25.0 * u(rng)});
    }
    const DetectionData data = DetectionData::from_records(rec, M);

    oracle::LatentGrid grid;
    for (int i = 0; i < 5; ++i) grid.locations.push_back(c.region.sample_uniform(rng));
    for (int i = 0; i < 4; ++i) grid.emissions.push_back(4.7 + 0.1 * i + 0.05 * u(rng));

    ModelParams current;
    current.beta0 = 150 + 10 * u(rng);
    current.beta1 = 0.5 + u(rng);
    current.sigma_s = 8 + 4 * u(rng);
    current.sigma_t = 0.5;
    current.threshold = 130;
    std::vector<ModelParams> thetas;
    for (int k = 0; k < 5; ++k) {
      ModelParams q = current;
      q.beta0 = 140 + 30 * u(rng);
      q.beta1 = 0.2 + 2 * u(rng);
      q.sigma_s = 4 + 10 * u(rng);
      q.sigma_t = 0.2 + 0.8 * u(rng);
      thetas.push_back(q);
    }
    const std::vector<double> full = oracle::expected_semi_complete_full(data, c, current, thetas, grid);
    const std::vector<double> marginal = oracle::expected_semi_complete_marginal(data, c, current, thetas, grid);
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      worst = std::max(worst, std::abs(full[k] - marginal[k]));
      ++compared;
    }
  }
  return {2, worst <= 1e-8 ? Outcome::Pass : Outcome::Fail,
          "ELBO identity over " + std::to_string(compared) + " (instance, theta) pairs: max |Q_full - Q_marginal| " +
              fmt(worst, 3) + " <= 1e-8"};
}

// ---------------------------------------------------------------------------------------------
// 3. Conditional and semi-complete M-steps on the same E-step samples.

double field(const ModelParams& p, int k) {
  const double v[4] = {p.beta0, p.beta1, p.sigma_s, p.sigma_t};
  return v[k];
}

Line criterion_3(const Options& o) {
  const SurveyConfig c = scenario_survey();
  const ModelParams p = scenario_truth();
  Rng rng = make_stream(o.seed, 0xc3);
  const SimResult sim = simulate_calls_only(0.0045, c, p, rng);
  const auto groups = partition_detections(sim.data, c, default_partition_slack());
  SamplerConfig sc;
  sc.n_samples = 20;
  sc.burn_in = 200;
  sc.seed = o.seed;
  const EStepResult est = run_estep(groups, c, p, sc, 0xc3);
  const ElboObjective cond = ElboObjective::from_estep(est, groups, c, 1, ObjectiveKind::Conditional);
  const ElboObjective semi = ElboObjective::from_estep(est, groups, c, 1, ObjectiveKind::SemiComplete);
  const MStepResult a = maximize(cond, p);
  const SemiCompleteResult b = mle_semi_complete(semi, p);
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(field(b.params, k) / field(a.params, k) - 1.0));
  const DensityEstimate d = estimate_density(cond.mean_observed(), a.params, c, 1, &cond.surface());
  return {3, worst < 0.01 ? Outcome::Pass : Outcome::Fail,
          "dual-route MLE on " + fmt(cond.mean_observed(), 4) + " detected calls: max relative theta gap " +
              fmt(worst, 3) + " < 0.01 (N semi " + std::to_string(b.total_calls) + ", N conditional " +
              fmt(d.total_calls, 5) + ")"};
}

// ---------------------------------------------------------------------------------------------
// 4-6. Simulation study.

std::vector<Line> criteria_4_to_6(const Options& o) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyConfig s;
  s.datasets = o.datasets;
  s.bootstrap_datasets = std::min(o.boot_datasets, o.datasets);
  s.call_density = 0.0015;
  s.truth = scenario_truth();
  s.mcem.max_iterations = o.mcem_iterations;
  s.sampler.n_samples = o.samples;
  s.sampler.burn_in = o.burn_in;
  s.boot.replicates = o.B;
  s.seed = o.seed;
  const StudySummary r = run_study(scenario_survey(), s);
  const std::string scale = std::to_string(o.datasets) + " datasets, " + std::to_string(s.bootstrap_datasets) +
                            " with B=" + std::to_string(o.B) + ", " + std::to_string(o.samples) + " samples, " +
                            fmt(seconds_since(t0), 4) + " s";
  fs::create_directories(o.out);
  const std::string qq = (fs::path(o.out) / "qq.csv").string();
  write_qq_csv(qq, r.qq);

  std::vector<Line> out;
  const bool detections_ok = r.mean_detections >= 50 && r.mean_detections <= 300;
  out.push_back({4, std::abs(r.relative_bias) <= 0.10 && detections_ok && r.n_ok > 0 ? Outcome::Pass : Outcome::Fail,
                 "relative bias " + fmt(r.relative_bias, 3) + " within +-0.10 over " + std::to_string(r.n_ok) +
                     " fits, mean detections " + fmt(r.mean_detections, 4) + " in [50, 300], CV " +
                     fmt(r.empirical_cv, 3) + " (" + scale + ")"});
  if (r.coverage)
    out.push_back({5, *r.coverage >= 0.85 && *r.coverage <= 0.99 ? Outcome::Pass : Outcome::Fail,
                   "coverage " + std::to_string(r.n_covered) + "/" + std::to_string(r.n_intervals) + " = " +
                       fmt(*r.coverage, 3) + " in [0.85, 0.99]"});
  else
    out.push_back({5, Outcome::Fail, "no bootstrap intervals"});
  out.push_back({6, fs::exists(qq) && r.skewness > 0.0 ? Outcome::Pass : Outcome::Fail,
                 "skewness " + fmt(r.skewness, 3) + " > 0, " + qq + " written"});
  return out;
}

// ---------------------------------------------------------------------------------------------
// 7. Field survey, when supplied.

Line criterion_7(const Options& o) {
  if (o.frog_detections.empty() || o.frog_detectors.empty())
    return {7, Outcome::Skip, "no field survey supplied (--frog-detections, --frog-detectors)"};
  const std::vector<Detector> det = read_detectors_csv(o.frog_detectors);
  const DetectionData data = read_detections_csv(o.frog_detections, static_cast<int>(det.size()));
  RunConfig run;
  const SurveyRegion region = !o.frog_rect.empty() ? parse_rect(o.frog_rect, run.grid_resolution)
                              : !o.frog_region.empty()
                                  ? SurveyRegion::polygon(read_polygon_csv(o.frog_region), run.grid_resolution)
                                  : buffered_region(det, run.region_buffer, run.grid_resolution);
  double duration = o.frog_duration;
  if (!(duration > 0.0))
    for (const Detection& d : data.flatten()) duration = std::max(duration, std::ceil(d.time));
  const SurveyConfig c = SurveyConfig::make(region, det, duration);
  const FitResult f = fit(data, c, initialize_params(data, c, run.threshold), run.mcem(), run.sampler());
  std::optional<CallRateModel> rate;
  if (o.frog_call_rate > 0.0) rate = CallRateModel::fixed(o.frog_call_rate);
  BootstrapConfig bc = run.bootstrap();
  bc.replicates = o.B;
  const BootstrapResult b = bootstrap(f, rate, c, run.mcem(), run.sampler(), bc);
  const double est = o.frog_scale * (rate ? f.density.call_density / o.frog_call_rate : f.density.call_density);
  const bool ok = est > 30.24 && est < 88.00 && b.cv > 0.15 && b.cv < 0.40;
  return {7, ok ? Outcome::Pass : Outcome::Fail,
          "field estimate " + fmt(est, 5) + " in (30.24, 88.00), bootstrap CV " + fmt(b.cv, 3) + " in (0.15, 0.40)"};
}

// ---------------------------------------------------------------------------------------------
// 8. Component numerics.

std::vector<std::string> component_failures(const Options& o) {
  std::vector<std::string> bad;
  std::mt19937_64 gen(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Truncated strength density integrates to one.
  for (int i = 0; i < 20; ++i) {
    ModelParams p = scenario_truth();
    p.beta0 = 140 + 40 * u(gen);
    p.beta1 = 0.5 + 3 * u(gen);
    p.sigma_s = 2 + 10 * u(gen);
    const double d = 30 * u(gen);
    const double lo = p.threshold, hi = std::max(p.threshold, expected_strength(d, p)) + 40 * p.sigma_s;
    const int n = 20000;
    const double h = (hi - lo) / n;
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      s += w * std::exp(logpdf_strength_given_detected(lo + k * h, d, p));
    }
    if (std::abs(s * h / 3.0 - 1.0) > 1e-6) bad.push_back("truncated strength pdf integral " + fmt(s * h / 3.0, 10));
  }

  // Truncated-normal sampler moments.
  const double windows[][2] = {{-1, 1}, {2, 3}, {-8, -5}, {0, INFINITY}, {-INFINITY, -3}, {4, 4.01}, {-0.2, 6}};
  Rng rng = make_stream(o.seed, 0xc8);
  for (const auto& w : windows) {
    const Moments m = truncated_normal_moments(0.0, 1.0, w[0], w[1]);
    const int n = 400000;
    double s1 = 0.0, s2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = sample_truncated_normal(0.0, 1.0, w[0], w[1], rng);
      s1 += x;
      s2 += x * x;
    }
    const double mean = s1 / n, var = s2 / n - mean * mean;
    if (std::abs(mean - m.mean) > 0.01 * std::sqrt(m.variance) || std::abs(var / m.variance - 1.0) > 0.01)
      bad.push_back("truncated normal moments on [" + fmt(w[0]) + ", " + fmt(w[1]) + "]");
  }

  // Gradient against central differences, with second-order decay.
  const SurveyConfig c = scenario_survey();
  Rng srng = make_stream(o.seed, 0xc8, 1);
  const SimResult sim = simulate_calls_only(0.0015, c, scenario_truth(), srng);
  for (ObjectiveKind kind : {ObjectiveKind::Conditional, ObjectiveKind::SemiComplete}) {
    const int k = kind == ObjectiveKind::Conditional ? 2 : 1;
    ElboObjective obj = ElboObjective::from_states({restrict_to_observed(sim.truth.latent, k)}, sim.data, c, k, kind);
    obj.set_total_calls(static_cast<double>(sim.truth.latent.n_calls()));
    ModelParams q = scenario_truth();
    q.beta0 = 160;
    q.sigma_t = 0.006;
    std::array<double, 4> g{};
    obj.value_and_gradient(q, g);
    const double scale[4] = {1.0, 0.1, 1.0, 1e-5};
    for (int j = 0; j < 4; ++j) {
      auto at = [&](double delta) {
        ModelParams r = q;
        double* f[4] = {&r.beta0, &r.beta1, &r.sigma_s, &r.sigma_t};
        *f[j] += delta;
        return obj.value(r);
      };
      const double h = 0.2 * scale[j];
      const double fd1 = (at(h) - at(-h)) / (2 * h), fd2 = (at(h / 2) - at(-h / 2)) / h;
      const double e1 = std::abs(fd1 - g[static_cast<std::size_t>(j)]), e2 = std::abs(fd2 - g[static_cast<std::size_t>(j)]);
      const double rich = std::abs((4 * fd2 - fd1) / 3 - g[static_cast<std::size_t>(j)]);
      const double tol = 1e-6 * std::max(1.0, std::abs(g[static_cast<std::size_t>(j)]));
      if (rich > tol || (e1 > 1e-7 && e1 / e2 < 3.0))
        bad.push_back("gradient component " + std::to_string(j) + " errors " + fmt(e1, 3) + " " + fmt(e2, 3));
    }
  }

  // Partition against a brute-force transitive closure.
  for (int trial = 0; trial < 20; ++trial) {
    const int M = 2 + trial % 4;
    std::vector<Detector> det;
    for (int m = 0; m < M; ++m) det.push_back({m + 1, {60 * u(gen), 60 * u(gen)}});
    const SurveyConfig pc = SurveyConfig::make(SurveyRegion::rectangle(-20, -20, 80, 80), det, 5.0);
    std::vector<Detection> rec;
    for (int i = 0; i < 40; ++i) rec.push_back({1 + static_cast<int>(u(gen) * M), 5 * u(gen), 140});
    const DetectionData data = DetectionData::from_records(rec, M);
    const double slack = 0.01 * (trial % 3);
    const auto groups = partition_detections(data, pc, slack);
    std::vector<DetectionRef> v;
    std::map<std::pair<int, int>, int> label;
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
      for (int m = 0; m < M; ++m)
        for (int j : groups[gi].source_index[static_cast<std::size_t>(m)]) label[{m, j}] = static_cast<int>(gi);
    for (int m = 0; m < M; ++m)
      for (int j = 0; j < data.count(m); ++j) v.push_back({m, j, data.detector(m)[static_cast<std::size_t>(j)].time});
    const std::size_t n = v.size();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) reach[i][k] = i == k || detections_linked(v[i], v[k], pc, slack);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i)
        if (reach[i][k])
          for (std::size_t j = 0; j < n; ++j) reach[i][j] |= reach[k][j];
    bool same = label.size() == n;
    for (std::size_t i = 0; i < n && same; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if ((label[{v[i].detector, v[i].index}] == label[{v[j].detector, v[j].index}]) != static_cast<bool>(reach[i][j]))
          same = false;
    if (!same) bad.push_back("partition differs from transitive closure in trial " + std::to_string(trial));
  }

  // Determinism across thread counts and reruns.
  const auto groups = partition_detections(sim.data, c, default_partition_slack());
  SamplerConfig sc;
  sc.n_samples = 10;
  sc.burn_in = 50;
  sc.seed = o.seed;
  const EStepResult ref = run_estep(groups, c, scenario_truth(), sc, 8, nullptr, Execution::Serial);
  auto same_result = [&](const EStepResult& e) {
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
      for (std::size_t s = 0; s < ref.groups[gi].samples.size(); ++s) {
        const LatentState& a = ref.groups[gi].samples[s];
        const LatentState& b = e.groups[gi].samples[s];
        for (int n = 0; n < a.n_calls(); ++n) {
          if (a.call(n).location.x != b.call(n).location.x || a.call(n).emission != b.call(n).emission) return false;
          for (int m = 0; m < a.n_detectors(); ++m)
            if (a.assignment(m, n) != b.assignment(m, n)) return false;
        }
      }
    return true;
  };
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    if (!same_result(run_estep(groups, c, scenario_truth(), sc, 8, nullptr, Execution::Parallel)))
      bad.push_back("E-step differs with " + std::to_string(threads) + " threads");
  }
  omp_set_num_threads(saved);
#else
  if (!same_result(run_estep(groups, c, scenario_truth(), sc, 8, nullptr, Execution::Parallel)))
    bad.push_back("E-step parallel path differs from serial");
#endif
  McemConfig mc;
  mc.max_iterations = 2;
  mc.max_sample_factor = 1;
  const ModelParams init = initialize_params(sim.data, c, 130.0);
  const FitResult f1 = fit(sim.data, c, init, mc, sc);
  const FitResult f2 = fit(sim.data, c, init, mc, sc, Execution::Serial);
  if (f1.density.call_density != f2.density.call_density || f1.params.beta0 != f2.params.beta0)
    bad.push_back("fit differs between reruns");
  const double pbar_s = mean_detect_prob(c, scenario_truth(), 2, Execution::Serial);
  const double pbar_p = mean_detect_prob(c, scenario_truth(), 2, Execution::Parallel);
  if (std::abs(pbar_s - pbar_p) > 1e-12 * pbar_s) bad.push_back("mean detection probability serial vs parallel");
  return bad;
}

Line criterion_8(const Options& o) {
  const std::vector<std::string> bad = component_failures(o);
  std::string detail = "truncated pdf normalisation, sampler moments, FD gradients with Richardson decay, "
                       "partition closure, thread-count determinism";
  for (const std::string& b : bad) detail += "; " + b;
  return {8, bad.empty() ? Outcome::Pass : Outcome::Fail, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Options o;
  app.add_option("--c1-instances", o.c1_instances);
  app.add_option("--c1-samples", o.c1_samples);
  app.add_option("--datasets", o.datasets, "simulated surveys for bias and skewness");
  app.add_option("--boot-datasets", o.boot_datasets, "surveys that also get a bootstrap interval");
  app.add_option("--B", o.B, "bootstrap replicates per interval");
  app.add_option("--samples", o.samples, "E-step samples per MCEM iteration");
  app.add_option("--burn-in", o.burn_in);
  app.add_option("--mcem-iterations", o.mcem_iterations);
  app.add_option("--seed", o.seed);
  app.add_option("--out", o.out, "directory for qq.csv");
  app.add_flag("--skip-study", o.skip_study, "report criteria 4-6 as skipped");
  app.add_option("--frog-detections", o.frog_detections, "field detections CSV");
  app.add_option("--frog-detectors", o.frog_detectors, "field detectors CSV");
  app.add_option("--frog-rect", o.frog_rect, "field region x0,y0,x1,y1 (m)");
  app.add_option("--frog-region", o.frog_region, "field region polygon CSV");
  app.add_option("--frog-duration", o.frog_duration, "field survey duration (s)");
  app.add_option("--frog-call-rate", o.frog_call_rate, "calls/s per animal; reports animal density when set");
  app.add_option("--frog-scale", o.frog_scale, "factor converting the estimate to the reference units");
  CLI11_PARSE(app, argc, argv);

  bool failed = false;
  auto report = [&](const Line& l) {
    const char* tag = l.outcome == Outcome::Pass ? "PASS" : l.outcome == Outcome::Fail ? "FAIL" : "SKIP";
    std::cout << "criterion " << l.criterion << " " << tag << ": " << l.detail << std::endl;
    failed = failed || l.outcome == Outcome::Fail;
  };
  auto guarded = [&](int n, const std::function<std::vector<Line>()>& f) {
    try {
      for (const Line& l : f()) report(l);
    } catch (const std::exception& e) {
      report({n, Outcome::Fail, std::string("error: ") + e.what()});
    }
  };
  guarded(1, [&] { return std::vector<Line>{criterion_1(o)}; });
  guarded(2, [&] { return std::vector<Line>{criterion_2(o)}; });
  guarded(3, [&] { return std::vector<Line>{criterion_3(o)}; });
  if (o.skip_study)
    for (int n : {4, 5, 6}) report({n, Outcome::Skip, "--skip-study"});
  else
    guarded(4, [&] { return criteria_4_to_6(o); });
  guarded(7, [&] { return std::vector<Line>{criterion_7(o)}; });
  guarded(8, [&] { return std::vector<Line>{criterion_8(o)}; });
  return failed ? 1 : 0;
}
