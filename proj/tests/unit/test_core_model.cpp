#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ascr/detection_model.hpp"
#include "ascr/latent.hpp"
#include "ascr/likelihood.hpp"
#include "ascr/mstep.hpp"
#include "ascr/normal.hpp"
#include "ascr/region.hpp"
#include "ascr/survey.hpp"

using namespace ascr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams base_params() {
  ModelParams p;
  p.beta0 = 150.0;
  p.beta1 = 3.0;
  p.sigma_s = 10.0;
  p.sigma_t = 0.01;
  p.threshold = 130.0;
  return p;
}

std::vector<Detector> line_detectors(int n, double spacing) {
  std::vector<Detector> d;
  for (int i = 0; i < n; ++i) d.push_back({i + 1, {spacing * i, 0.0}});
  return d;
}

SurveyConfig small_survey(int n_detectors = 2) {
  return SurveyConfig::make(SurveyRegion::rectangle(-20, -20, 30, 20), line_detectors(n_detectors, 10.0), 10.0);
}

// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("region area and grid", "[region]") {
  const SurveyRegion r = SurveyRegion::rectangle(0, 0, 10, 5);
  CHECK(r.area() == 50.0);
  CHECK(r.grid().size() == 64u * 64u);
  CHECK_THAT(r.cell_area() * static_cast<double>(r.grid().size()), WithinRel(50.0, 1e-12));

  const SurveyRegion tri = SurveyRegion::polygon({{0, 0}, {100, 0}, {0, 100}});
  CHECK_THAT(tri.area(), WithinRel(5000.0, 1e-12));
  for (const Point& c : tri.grid()) CHECK(tri.contains(c));
  // Centres (i + 1/2, j + 1/2) / 64 inside x + y < 1: i + j <= 62, 63 * 64 / 2 of them.
  CHECK(tri.grid().size() == 2016u);

  const SurveyRegion hex = SurveyRegion::polygon({{0, 0}, {40, -10}, {70, 10}, {60, 50}, {20, 60}, {-10, 30}});
  const BoundingBox& b = hex.bounds();
  const double hex_cell = (b.width() / 64.0) * (b.height() / 64.0);
  // Lattice coverage error is bounded by perimeter times half a cell diagonal.
  double perimeter = 0.0;
  const std::vector<Point> hv{{0, 0}, {40, -10}, {70, 10}, {60, 50}, {20, 60}, {-10, 30}};
  for (std::size_t i = 0; i < hv.size(); ++i) perimeter += distance(hv[i], hv[(i + 1) % hv.size()]);
  const double half_diag = 0.5 * std::hypot(b.width() / 64.0, b.height() / 64.0);
  CHECK(std::abs(hex_cell * static_cast<double>(hex.grid().size()) - hex.area()) <= perimeter * half_diag);

  CHECK_THROWS(SurveyRegion::rectangle(0, 0, 0, 1));
  CHECK_THROWS(SurveyRegion::polygon({{0, 0}, {1, 1}}));
  CHECK_THROWS(SurveyRegion::polygon({{0, 0}, {1, 1}, {2, 2}}));
}

TEST_CASE("survey config defaults and validation", "[survey]") {
  const SurveyConfig c = small_survey();
  CHECK(c.sound_speed == 330.0);
  CHECK(c.emission_end == 10.0);
  CHECK_THAT(c.emission_start, WithinRel(-c.max_travel_time(), 1e-15));
  CHECK(c.emission_start < 0.0);
  CHECK_THROWS(SurveyConfig::make(SurveyRegion::rectangle(0, 0, 1, 1), line_detectors(1, 1.0), 0.0));
  CHECK_THROWS(SurveyConfig::make(SurveyRegion::rectangle(0, 0, 1, 1), line_detectors(1, 1.0), 1.0, -1.0));
  CHECK_THROWS(SurveyConfig::make(SurveyRegion::rectangle(0, 0, 1, 1), line_detectors(1, 1.0), 1.0, 330.0,
                                  std::make_pair(2.0, 1.0)));
  std::vector<Detector> gap{{1, {0, 0}}, {3, {1, 0}}};
  CHECK_THROWS(SurveyConfig::make(SurveyRegion::rectangle(0, 0, 1, 1), gap, 1.0));
}

TEST_CASE("detection data sorting and tie perturbation", "[detections]") {
  const DetectionData d = DetectionData::from_records({{1, 2.0, 140}, {1, 1.0, 150}, {1, 2.0, 135}, {2, 0.5, 131}}, 2);
  REQUIRE(d.counts() == std::vector<int>{3, 1});
  CHECK(d.detector(0)[0].time == 1.0);
  CHECK(d.detector(0)[1].time == 2.0);
  CHECK(d.detector(0)[2].time == 2.0 + 1e-9);
  CHECK(d.detector(0)[1].signal_strength == 140.0);  // stable among ties
  CHECK_NOTHROW(d.validate(10.0, 130.0));
  CHECK_THROWS(d.validate(1.5, 130.0));
  CHECK_THROWS(d.validate(10.0, 132.0));
  CHECK_THROWS(DetectionData::from_records({{3, 1.0, 140}}, 2));
}

TEST_CASE("detect_prob closed form and oracle", "[detection_model]") {
  const ModelParams p = base_params();
  // Oracle: integrate the strength density over the detection region y >= c.
  const double mu = expected_strength(0.0, p);
  const double by_quadrature =
      simpson([&](double y) { return std::exp(normal_logpdf(y, mu, p.sigma_s)); }, p.threshold, mu + 12 * p.sigma_s, 4000);
  CHECK_THAT(detect_prob(0.0, p), WithinAbs(0.97725, 5e-6));
  CHECK_THAT(detect_prob(0.0, p), WithinAbs(by_quadrature, 1e-10));
  CHECK_THAT(detect_prob(20.0 / 3.0, p), WithinAbs(0.5, 1e-12));
  const double far = (p.beta0 - (p.threshold - 5.0 * p.sigma_s)) / p.beta1;
  CHECK(detect_prob(far, p) <= 3e-7);
  CHECK(detect_prob(far, p) > 0.0);
  CHECK_THROWS(detect_prob(-1.0, p));
  CHECK_THROWS(detect_prob(std::numeric_limits<double>::quiet_NaN(), p));
  CHECK_THAT(log_detect_prob(3.0, p), WithinAbs(std::log(detect_prob(3.0, p)), 1e-12));
  CHECK_THAT(log_miss_prob(3.0, p), WithinAbs(std::log1p(-detect_prob(3.0, p)), 1e-12));
}

TEST_CASE("detect_prob is monotone and bounded", "[detection_model][property]") {
  const ModelParams p = base_params();
  double prev = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const double g = detect_prob(0.1 * i, p);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
    CHECK(g <= prev);
    prev = g;
  }
}

TEST_CASE("expected strength", "[detection_model]") {
  ModelParams p = base_params();
  CHECK(expected_strength(0.0, p) == 150.0);
  CHECK(expected_strength(10.0, p) == 120.0);
  p.beta1 = 0.0;
  CHECK(expected_strength(37.0, p) == 150.0);
}

TEST_CASE("truncated strength density", "[detection_model]") {
  const ModelParams p = base_params();
  const double d = 4.0;
  const double y = expected_strength(d, p);
  const double expected = std::log(normal_pdf(0.0) / 10.0) - std::log(detect_prob(d, p));
  CHECK_THAT(logpdf_strength_given_detected(y, d, p), WithinAbs(expected, 1e-12));
  CHECK_THROWS(logpdf_strength_given_detected(p.threshold - 0.1, d, p));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ud(0.0, 15.0), ub0(140.0, 180.0), ub1(0.5, 5.0), us(2.0, 15.0);
  for (int i = 0; i < 20; ++i) {
    ModelParams q = p;
    q.beta0 = ub0(rng);
    q.beta1 = ub1(rng);
    q.sigma_s = us(rng);
    const double di = ud(rng);
    const double top = std::max(q.threshold, expected_strength(di, q)) + 14.0 * q.sigma_s;
    const double mass = simpson([&](double yy) { return std::exp(logpdf_strength_given_detected(yy, di, q)); },
                                q.threshold, top, 20000);
    CHECK_THAT(mass, WithinAbs(1.0, 1e-6));
  }
}

TEST_CASE("arrival time density", "[detection_model]") {
  const ModelParams p = base_params();
  const double at_mean = -std::log(p.sigma_t * std::sqrt(2.0 * M_PI));
  CHECK_THAT(logpdf_arrival_time(1.0 + 5.0 / 330.0, 5.0, 1.0, p, 330.0), WithinAbs(at_mean, 1e-9));
  CHECK_THAT(logpdf_arrival_time(2.0, 330.0, 1.0, p, 330.0), WithinAbs(at_mean, 1e-12));
  const double mu = 1.0 + 20.0 / 330.0;
  for (double delta : {0.001, 0.01, 0.03})
    CHECK_THAT(logpdf_arrival_time(mu + delta, 20.0, 1.0, p, 330.0),
               WithinAbs(logpdf_arrival_time(mu - delta, 20.0, 1.0, p, 330.0), 1e-9));
}

TEST_CASE("overall detection probability", "[detection_model]") {
  const std::vector<double> half{0.5, 0.5};
  CHECK_THAT(overall_detect_prob_from(half, 1), WithinAbs(0.75, 1e-15));
  CHECK_THAT(overall_detect_prob_from(half, 2), WithinAbs(0.25, 1e-15));
  const std::vector<double> g{0.9, 0.9, 0.9};
  double brute = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    double pr = 1.0;
    int hits = 0;
    for (int m = 0; m < 3; ++m) {
      const bool hit = (mask >> m) & 1;
      hits += hit;
      pr *= hit ? g[static_cast<std::size_t>(m)] : 1.0 - g[static_cast<std::size_t>(m)];
    }
    if (hits >= 2) brute += pr;
  }
  CHECK_THAT(overall_detect_prob_from(g, 2), WithinAbs(0.972, 1e-12));
  CHECK_THAT(overall_detect_prob_from(g, 2), WithinAbs(brute, 1e-14));

  const SurveyConfig c = small_survey(3);
  const ModelParams p = base_params();
  const Point x{3.0, 2.0};
  std::vector<double> gx;
  for (int m = 0; m < 3; ++m) gx.push_back(detect_prob(distance(x, c.detector_position(m)), p));
  CHECK_THAT(overall_detect_prob(x, c, p, 1), WithinAbs(overall_detect_prob_from(gx, 1), 1e-15));
}

TEST_CASE("mean detection probability", "[detection_model]") {
  const SurveyConfig c = small_survey(3);
  ModelParams sure = base_params();
  sure.beta1 = 0.0;
  sure.beta0 = 1000.0;
  CHECK_THAT(mean_detect_prob(c, sure, 1), WithinAbs(1.0, 1e-12));
  CHECK_THAT(mean_detect_prob(c, sure, 2), WithinAbs(1.0, 1e-12));
  ModelParams never = base_params();
  never.beta0 = 0.0;
  CHECK(mean_detect_prob(c, never, 1) < 1e-12);

  ModelParams smooth = base_params();
  smooth.beta1 = 1.0;
  SurveyConfig coarse = c;
  coarse.region = c.region.with_resolution(32);
  for (int k : {1, 2}) {
    const double fine = mean_detect_prob(c, smooth, k);
    CHECK(std::abs(fine - mean_detect_prob(coarse, smooth, k)) < 1e-3);
    CHECK_THAT(mean_detect_prob(c, smooth, k, Execution::Serial), WithinAbs(fine, 1e-14));
  }
  const DetectionSurface surface(c);
  CHECK_THAT(surface.integral(smooth, 1) / c.region.area(), WithinAbs(mean_detect_prob(c, smooth, 1), 1e-12));
}

TEST_CASE("derive_order", "[latent]") {
  // Two calls heard on detector 1; the one emitted second is closer and arrives first.
  const Point det{0.0, 0.0};
  std::vector<CandidateCall> calls{{{330.0, 0.0}, 1.0}, {{33.0, 0.0}, 1.2}};
  CHECK(derive_order(calls, {true, true}, det, 330.0) == std::vector<int>{1, 0});
  CHECK(derive_order(calls, {true, false}, det, 330.0) == std::vector<int>{0});
  CHECK(derive_order(calls, {false, true}, det, 330.0) == std::vector<int>{0});
  std::vector<CandidateCall> twins{{{5.0, 5.0}, 2.0}, {{5.0, 5.0}, 2.0}, {{5.0, 5.0}, 2.0}};
  CHECK(derive_order(twins, {true, true, true}, det, 330.0) == std::vector<int>{0, 1, 2});
}

namespace {

struct FigureOne {
  SurveyConfig config;
  DetectionData data;
  LatentState state;
};

// Two detectors; detector 1 hears both calls (the second call first), detector 2 only call 1.
FigureOne figure_one() {
  FigureOne f;
  f.config = SurveyConfig::make(SurveyRegion::rectangle(-400, -400, 400, 400),
                                std::vector<Detector>{{1, {0, 0}}, {2, {330, 0}}}, 10.0);
  f.data = DetectionData::from_records({{1, 2.0, 150}, {1, 2.5, 133}, {2, 1.7, 140}}, 2);
  std::vector<CandidateCall> calls{{{165.0, 0.0}, 2.5 - 0.5}, {{33.0, 0.0}, 2.0 - 0.1}};
  f.state = latent_from_capture(calls, {{1, 1}, {1, 0}}, {{1, 0}, {0}});
  return f;
}

}  // namespace

TEST_CASE("pad and unpad on the two-call example", "[latent]") {
  const FigureOne f = figure_one();
  const PaddedMatrices pm = pad(f.data, f.state);
  REQUIRE(pm.strength.size() == 2);
  CHECK(pm.strength[0][0] == 133.0);
  CHECK(pm.strength[0][1] == 150.0);
  CHECK(pm.strength[1][0] == 140.0);
  CHECK_FALSE(pm.strength[1][1].has_value());
  CHECK(pm.time[0][0] == 2.5);
  CHECK(pm.time[0][1] == 2.0);
  CHECK(pm.time[1][0] == 1.7);
  CHECK_FALSE(pm.time[1][1].has_value());

  const DetectionData back = unpad(pm);
  REQUIRE(back.counts() == f.data.counts());
  for (int m = 0; m < 2; ++m)
    for (int j = 0; j < f.data.count(m); ++j) {
      CHECK(back.detector(m)[static_cast<std::size_t>(j)].time == f.data.detector(m)[static_cast<std::size_t>(j)].time);
      CHECK(back.detector(m)[static_cast<std::size_t>(j)].signal_strength ==
            f.data.detector(m)[static_cast<std::size_t>(j)].signal_strength);
    }
  CHECK_NOTHROW(check_assignment(f.state, f.data));
  CHECK(f.state.n_observed() == 2);

  const DetectionData none(2);
  const LatentState empty(2, {{{0, 0}, 0.0}, {{1, 1}, 0.0}});
  const PaddedMatrices pe = pad(none, empty);
  for (const auto& row : pe.strength)
    for (const auto& v : row) CHECK_FALSE(v.has_value());
}

TEST_CASE("pad round trip on random consistent states", "[latent][property]") {
  std::mt19937_64 rng(3);
  const SurveyConfig c = small_survey(3);
  std::uniform_real_distribution<double> ux(-20, 30), uy(-20, 20), ue(0.0, 9.0);
  std::bernoulli_distribution hit(0.6);
  for (int trial = 0; trial < 50; ++trial) {
    const int N = 4;
    std::vector<CandidateCall> calls;
    for (int n = 0; n < N; ++n) calls.push_back({{ux(rng), uy(rng)}, ue(rng)});
    std::vector<std::vector<int>> Z(3, std::vector<int>(N, 0));
    std::vector<std::vector<int>> K(3);
    std::vector<Detection> records;
    for (int m = 0; m < 3; ++m) {
      std::vector<bool> captured(N);
      for (int n = 0; n < N; ++n) captured[static_cast<std::size_t>(n)] = Z[m][n] = hit(rng);
      K[static_cast<std::size_t>(m)] = derive_order(calls, captured, c.detector_position(m), c.sound_speed);
      for (int n = 0; n < N; ++n)
        if (captured[static_cast<std::size_t>(n)])
          records.push_back({m + 1, predicted_arrival(calls[static_cast<std::size_t>(n)], c.detector_position(m), c.sound_speed),
                             131.0 + n + 10 * m});
    }
    const DetectionData data = DetectionData::from_records(records, 3);
    const LatentState s = latent_from_capture(calls, Z, K);
    CHECK(order_consistent(s, c));
    CHECK_NOTHROW(check_assignment(s, data));
    const DetectionData back = unpad(pad(data, s));
    for (int m = 0; m < 3; ++m) {
      REQUIRE(back.count(m) == data.count(m));
      for (int j = 0; j < data.count(m); ++j)
        CHECK(back.detector(m)[static_cast<std::size_t>(j)].signal_strength ==
              data.detector(m)[static_cast<std::size_t>(j)].signal_strength);
    }
  }
}

TEST_CASE("complete-data log-likelihood", "[likelihood]") {
  const SurveyConfig c = SurveyConfig::make(SurveyRegion::rectangle(0, 0, 20, 10), line_detectors(1, 1.0), 5.0);
  const ModelParams p = base_params();
  const Point x{4.0, 3.0};
  const double e = 1.0;
  const double d = distance(x, c.detector_position(0));
  const double t = e + d / c.sound_speed + 0.004;
  const double y = 141.0;
  const DetectionData data = DetectionData::from_records({{1, t, y}}, 1);
  LatentState s(1, {{x, e}});
  s.set_assignment(0, 0, 0);

  const double mu = p.beta0 - p.beta1 * d;
  const double g = 0.5 * std::erfc((p.threshold - mu) / (p.sigma_s * std::sqrt(2.0)));
  const double hand = std::log(1.0 / 200.0) + std::log(1.0 / c.emission_width()) + std::log(g) +
                      std::log(std::exp(-0.5 * std::pow((y - mu) / p.sigma_s, 2)) / (p.sigma_s * std::sqrt(2 * M_PI)) / g) +
                      std::log(std::exp(-0.5 * std::pow((t - e - d / c.sound_speed) / p.sigma_t, 2)) /
                               (p.sigma_t * std::sqrt(2 * M_PI)));
  CHECK_THAT(complete_data_loglik(s, data, c, p), WithinAbs(hand, 1e-10));

  LatentState out = s;
  out.call(0).location = {25.0, 3.0};
  CHECK(complete_data_loglik(out, data, c, p) == -std::numeric_limits<double>::infinity());
  LatentState late = s;
  late.call(0).emission = 6.0;
  CHECK(complete_data_loglik(late, data, c, p) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("complete-data terms, relabelling and order", "[likelihood][property]") {
  const FigureOne f = figure_one();
  ModelParams p = base_params();
  p.beta1 = 0.05;
  p.sigma_t = 0.05;
  const CompleteDataTerms t = complete_data_terms(f.state, f.data, f.config, p);
  CHECK_THAT(t.total(), WithinAbs(location_logpdf(f.state, f.config) + emission_logpdf(f.state, f.config) +
                                      capture_logpmf(f.state, f.config, p) +
                                      strength_logpdf(f.state, f.data, f.config, p) +
                                      arrival_logpdf(f.state, f.data, f.config, p) + order_logpmf(f.state, f.config),
                                  1e-12));
  CHECK(std::isfinite(t.total()));

  // Swap the two calls' labels.
  const LatentState swapped = latent_from_capture({f.state.call(1), f.state.call(0)}, {{1, 1}, {0, 1}}, {{0, 1}, {0}});
  CHECK_THAT(complete_data_loglik(swapped, f.data, f.config, p), WithinAbs(t.total(), 1e-10));

  // Same capture, wrong order on detector 1.
  const LatentState wrong = latent_from_capture({f.state.call(0), f.state.call(1)}, {{1, 1}, {1, 0}}, {{0, 1}, {0}});
  CHECK(complete_data_loglik(wrong, f.data, f.config, p) == -std::numeric_limits<double>::infinity());
}

namespace {

LatentState all_detected_call(const SurveyConfig& c, Point x, double e, DetectionData& data, const ModelParams& p) {
  std::vector<Detection> rec;
  for (int m = 0; m < c.n_detectors(); ++m) {
    const double d = distance(x, c.detector_position(m));
    rec.push_back({m + 1, e + d / c.sound_speed + 0.002 * (m - 1), std::max(p.threshold + 0.5, expected_strength(d, p) + 1.5)});
  }
  data = DetectionData::from_records(rec, c.n_detectors());
  LatentState s(c.n_detectors(), {{x, e}});
  for (int m = 0; m < c.n_detectors(); ++m) s.set_assignment(m, 0, 0);
  return s;
}

}  // namespace

TEST_CASE("conditional log-likelihood term by term", "[likelihood]") {
  const SurveyConfig c = small_survey(3);
  const ModelParams p = base_params();
  DetectionData data;
  const Point x{6.0, 4.0};
  const LatentState s = all_detected_call(c, x, 2.0, data, p);
  for (int k : {1, 2}) {
    // Independent pieces: grid integral of p.(x), then each factor of the conditional form.
    double integral = 0.0;
    for (const Point& cell : c.region.grid()) integral += overall_detect_prob(cell, c, p, k) * c.region.cell_area();
    const double pdot = overall_detect_prob(x, c, p, k);
    double oracle = std::log(pdot) - std::log(integral) - std::log(pdot) - std::log(c.emission_width());
    for (int m = 0; m < 3; ++m) {
      const Detection& det = data.detector(m)[0];
      const double d = distance(x, c.detector_position(m));
      oracle += std::log(detect_prob(d, p)) + logpdf_strength_given_detected(det.signal_strength, d, p) +
                logpdf_arrival_time(det.time, d, 2.0, p, c.sound_speed);
    }
    CHECK_THAT(conditional_loglik(s, data, c, p, k), WithinAbs(oracle, 1e-10));
  }

  // A detector far away with g ~ 0 everywhere barely changes anything.
  std::vector<Detector> more = c.detectors;
  more.push_back({4, {1e4, 1e4}});
  const SurveyConfig c4 = SurveyConfig::make(c.region, more, c.duration, c.sound_speed,
                                             std::make_pair(c.emission_start, c.emission_end));
  LatentState s4(4, {{x, 2.0}});
  for (int m = 0; m < 3; ++m) s4.set_assignment(m, 0, 0);
  std::vector<Detection> rec = data.flatten();
  const DetectionData data4 = DetectionData::from_records(rec, 4);
  CHECK(std::abs(conditional_loglik(s4, data4, c4, p, 2) - conditional_loglik(s, data, c, p, 2)) < 1e-6);

  // A call with one detection cannot enter the two-detector form.
  LatentState single(3, {{x, 2.0}});
  single.set_assignment(0, 0, 0);
  const DetectionData d1 = DetectionData::from_records({data.detector(0)[0]}, 3);
  CHECK_THROWS(conditional_loglik(single, d1, c, p, 2));
}

TEST_CASE("conditional log-likelihood with one detector", "[likelihood]") {
  const SurveyConfig c = SurveyConfig::make(SurveyRegion::rectangle(-30, -30, 30, 30), line_detectors(1, 1.0), 10.0);
  const ModelParams p = base_params();
  const Point x{2.0, -3.0};
  const double d = distance(x, c.detector_position(0));
  const DetectionData data = DetectionData::from_records({{1, 4.0 + d / 330.0, 141.0}}, 1);
  LatentState s(1, {{x, 4.0}});
  s.set_assignment(0, 0, 0);
  const double location = std::log(detect_prob(d, p)) - std::log(DetectionSurface(c).integral(p, 1));
  const double expected = logpdf_strength_given_detected(141.0, d, p) +
                          logpdf_arrival_time(data.detector(0)[0].time, d, 4.0, p, 330.0) + location -
                          std::log(c.emission_width());
  CHECK_THAT(conditional_loglik(s, data, c, p, 1), WithinAbs(expected, 1e-10));
}

TEST_CASE("conditional log-likelihood permutation invariance", "[likelihood][property]") {
  const SurveyConfig c = small_survey(3);
  ModelParams p = base_params();
  p.beta1 = 1.0;
  const DetectionData data =
      DetectionData::from_records({{1, 1.000, 140}, {2, 1.020, 138}, {1, 3.000, 145}, {3, 3.050, 135}, {2, 3.030, 139}}, 3);
  LatentState s(3, {{{4, 1}, 0.99}, {{12, -2}, 2.98}});
  s.set_assignment(0, 0, 0);
  s.set_assignment(1, 0, 0);
  s.set_assignment(0, 1, 1);
  s.set_assignment(1, 1, 1);
  s.set_assignment(2, 1, 0);
  const double base = conditional_loglik(s, data, c, p, 2);
  CHECK(std::isfinite(base));

  LatentState swapped(3, {s.call(1), s.call(0)});
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 2; ++n) swapped.set_assignment(m, 1 - n, s.assignment(m, n));
  CHECK_THAT(conditional_loglik(swapped, data, c, p, 2), WithinAbs(base, 1e-10));

  // Relabel detectors 1 <-> 3 together with their data.
  std::vector<Detector> dets{{1, c.detectors[2].position}, {2, c.detectors[1].position}, {3, c.detectors[0].position}};
  const SurveyConfig cr = SurveyConfig::make(c.region, dets, c.duration, c.sound_speed,
                                             std::make_pair(c.emission_start, c.emission_end));
  std::vector<Detection> rec;
  for (Detection d : data.flatten()) {
    d.detector_id = 4 - d.detector_id;
    rec.push_back(d);
  }
  const DetectionData dr = DetectionData::from_records(rec, 3);
  LatentState sr(3, s.calls());
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 2; ++n) sr.set_assignment(2 - m, n, s.assignment(m, n));
  CHECK_THAT(conditional_loglik(sr, dr, cr, p, 2), WithinAbs(base, 1e-9));
}

TEST_CASE("conditional log-likelihood gradient by finite differences", "[likelihood][property]") {
  const SurveyConfig c = small_survey(3);
  ModelParams p = base_params();
  p.beta1 = 2.0;
  p.sigma_t = 0.004;
  DetectionData data;
  const LatentState s = all_detected_call(c, {5.0, 3.0}, 2.0, data, p);
  const ElboObjective obj = ElboObjective::from_states({s}, data, c, 2, ObjectiveKind::Conditional);
  std::array<double, 4> grad{};
  const double value = obj.value_and_gradient(p, grad);
  CHECK_THAT(value, WithinAbs(conditional_loglik(s, data, c, p, 2), 1e-10));

  auto at = [&](int k, double delta) {
    ModelParams q = p;
    double* field[4] = {&q.beta0, &q.beta1, &q.sigma_s, &q.sigma_t};
    *field[k] += delta;
    return conditional_loglik(s, data, c, q, 2);
  };
  const double scale[4] = {1.0, 0.1, 1.0, 0.001};
  for (int k = 0; k < 4; ++k) {
    const double h = 0.2 * scale[k];
    const double fd_h = (at(k, h) - at(k, -h)) / (2 * h);
    const double fd_h2 = (at(k, h / 2) - at(k, -h / 2)) / h;
    const double err_h = std::abs(fd_h - grad[static_cast<std::size_t>(k)]);
    const double err_h2 = std::abs(fd_h2 - grad[static_cast<std::size_t>(k)]);
    const double extrapolated = (4.0 * fd_h2 - fd_h) / 3.0;
    INFO("parameter " << k << " grad " << grad[static_cast<std::size_t>(k)] << " errors " << err_h << " " << err_h2);
    CHECK(std::abs(extrapolated - grad[static_cast<std::size_t>(k)]) <= 1e-6 * std::max(1.0, std::abs(grad[static_cast<std::size_t>(k)])));
    // At least second-order decay: halving h divides the error by four or more.
    if (err_h > 1e-7) CHECK(err_h / err_h2 > 3.0);
  }
}

TEST_CASE("semi-complete log-likelihood", "[likelihood]") {
  const SurveyConfig c = small_survey(3);
  const ModelParams p = base_params();
  DetectionData data;
  const Point x{6.0, 4.0};
  const LatentState s = all_detected_call(c, x, 2.0, data, p);
  double observed = -std::log(c.region.area()) - std::log(c.emission_width());
  for (int m = 0; m < 3; ++m) {
    const Detection& det = data.detector(m)[0];
    const double d = distance(x, c.detector_position(m));
    observed += log_detect_prob(d, p) + logpdf_strength_given_detected(det.signal_strength, d, p) +
                logpdf_arrival_time(det.time, d, 2.0, p, c.sound_speed);
  }
  CHECK_THAT(semi_complete_loglik(s, data, c, p, 1), WithinAbs(observed, 1e-10));
  const double pbar = mean_detect_prob(c, p, 1);
  CHECK_THAT(semi_complete_loglik(s, data, c, p, 5),
             WithinAbs(observed + std::log(5.0) + 4.0 * std::log1p(-pbar), 1e-10));
  CHECK_THROWS(semi_complete_loglik(s, data, c, p, 0));

  // Integer scan over N at fixed latent state against N^o / pbar.
  const FigureOne f = figure_one();
  ModelParams q = base_params();
  q.beta1 = 0.08;
  q.sigma_t = 0.05;
  const double pb = mean_detect_prob(f.config, q, 1);
  long long best_n = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (long long n = 2; n < 2000; ++n) {
    const double v = semi_complete_loglik(f.state, f.data, f.config, q, n, pb);
    if (v > best) {
      best = v;
      best_n = n;
    }
  }
  CHECK(std::abs(static_cast<double>(best_n) - 2.0 / pb) <= 1.0);
}
