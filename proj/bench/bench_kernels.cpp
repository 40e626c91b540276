// Serial reference paths against their OpenMP versions.
//
//   ascr_bench --benchmark_filter=EStep

#include <benchmark/benchmark.h>

#include "ascr/bootstrap.hpp"
#include "ascr/detection_model.hpp"
#include "ascr/estep.hpp"
#include "ascr/io.hpp"
#include "ascr/mstep.hpp"
#include "ascr/partition.hpp"
#include "ascr/simulator.hpp"

using namespace ascr;

namespace {

ModelParams truth() {
  ModelParams p;
  p.beta0 = 165.0;
  p.beta1 = 2.5;
  p.sigma_s = 10.0;
  p.sigma_t = 0.005;
  p.threshold = 130.0;
  return p;
}

struct Scenario {
  SurveyConfig config;
  SimResult sim;
  std::vector<DetectionGroup> groups;
};

const Scenario& scenario() {
  static const Scenario s = [] {
    Scenario out{SurveyConfig::make(buffered_region(default_detector_array(), 20.0, SurveyRegion::kDefaultGridResolution),
                                    default_detector_array(), 25.0),
                 {},
                 {}};
    Rng rng = make_stream(1);
    out.sim = simulate_calls_only(0.0015, out.config, truth(), rng);
    out.groups = partition_detections(out.sim.data, out.config, default_partition_slack());
    return out;
  }();
  return s;
}

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::Parallel : Execution::Serial; }

void BM_EStep(benchmark::State& st) {
  const Scenario& s = scenario();
  SamplerConfig sc;
  sc.n_samples = 20;
  sc.burn_in = 50;
  for (auto _ : st) benchmark::DoNotOptimize(run_estep(s.groups, s.config, truth(), sc, 1, nullptr, mode(st)));
}

void BM_MeanDetectProb(benchmark::State& st) {
  const Scenario& s = scenario();
  for (auto _ : st) benchmark::DoNotOptimize(mean_detect_prob(s.config, truth(), 2, mode(st)));
}

void BM_ObjectiveFromEStep(benchmark::State& st) {
  const Scenario& s = scenario();
  SamplerConfig sc;
  sc.n_samples = 50;
  sc.burn_in = 20;
  const EStepResult est = run_estep(s.groups, s.config, truth(), sc, 1);
  for (auto _ : st)
    benchmark::DoNotOptimize(ElboObjective::from_estep(est, s.groups, s.config, 2, ObjectiveKind::Conditional, mode(st)));
}

void BM_Bootstrap(benchmark::State& st) {
  const Scenario& s = scenario();
  FitResult f;
  f.status = FitStatus::Converged;
  f.params = truth();
  f.density.call_density = 0.0015;
  McemConfig mc;
  mc.max_iterations = 1;
  SamplerConfig sc;
  sc.n_samples = 10;
  sc.burn_in = 20;
  BootstrapConfig bc;
  bc.replicates = 4;
  bc.warm_iterations = 1;
  for (auto _ : st) benchmark::DoNotOptimize(bootstrap(f, std::nullopt, s.config, mc, sc, bc, mode(st)));
}

}  // namespace

BENCHMARK(BM_EStep)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeanDetectProb)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ObjectiveFromEStep)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
