#include "ascr/mstep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ascr/normal.hpp"

namespace ascr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMissBlock = 4096;

}  // namespace

void SampleStats::add_detected(double y, double d, double time_residual) {
  detected += 1.0;
  const double dy = y - mean_y;
  const double dd = d - mean_d;
  mean_y += dy / detected;
  mean_d += dd / detected;
  syy += dy * (y - mean_y);
  sdd += dd * (d - mean_d);
  syd += dy * (d - mean_d);
  time_ss += time_residual * time_residual;
}

void SampleStats::merge(const SampleStats& other, double weight) {
  calls += weight * other.calls;
  time_ss += weight * other.time_ss;
  for (const auto& [d, w] : other.miss) miss.emplace_back(d, w * weight);
  const double nb = weight * other.detected;
  if (nb <= 0.0) return;
  const double na = detected;
  const double n = na + nb;
  const double dy = other.mean_y - mean_y;
  const double dd = other.mean_d - mean_d;
  const double cross = na * nb / n;
  syy += weight * other.syy + dy * dy * cross;
  sdd += weight * other.sdd + dd * dd * cross;
  syd += weight * other.syd + dy * dd * cross;
  mean_y += dy * nb / n;
  mean_d += dd * nb / n;
  detected = n;
}

void SampleStats::compact() {
  if (miss.empty()) return;
  std::sort(miss.begin(), miss.end());
  std::size_t out = 0;
  for (std::size_t i = 1; i < miss.size(); ++i) {
    if (miss[i].first == miss[out].first)
      miss[out].second += miss[i].second;
    else
      miss[++out] = miss[i];
  }
  miss.resize(out + 1);
}

SampleStats sample_stats(const LatentState& state, const DetectionData& data, const SurveyConfig& config,
                         int min_detectors) {
  SampleStats s;
  const double v = config.sound_speed;
  for (int n = 0; n < state.n_calls(); ++n) {
    const int k = state.detections_of(n);
    if (k < min_detectors || (min_detectors > 0 && k == 0)) continue;
    s.calls += 1.0;
    const CandidateCall& c = state.call(n);
    for (int m = 0; m < state.n_detectors(); ++m) {
      const double d = distance(c.location, config.detector_position(m));
      const int j = state.assignment(m, n);
      if (j == kUndetected) {
        s.add_miss(d);
        continue;
      }
      const Detection& det = data.detector(m)[static_cast<std::size_t>(j)];
      s.add_detected(det.signal_strength, d, det.time - c.emission - d / v);
    }
  }
  return s;
}

ElboObjective::ElboObjective(std::vector<SampleStats> per_sample, std::vector<double> observed_counts,
                             const SurveyConfig& config, int min_detectors, ObjectiveKind kind)
    : config_(&config),
      surface_(config),
      min_detectors_(min_detectors),
      kind_(kind),
      per_sample_(std::move(per_sample)),
      observed_(std::move(observed_counts)) {
  if (per_sample_.empty()) throw std::invalid_argument("the ELBO needs at least one sample");
  if (observed_.size() != per_sample_.size()) throw std::invalid_argument("one observed count per sample is required");
  if (kind_ == ObjectiveKind::SemiComplete && min_detectors_ != 1)
    throw std::invalid_argument("the semi-complete objective uses calls detected at least once");
  if (kind_ != ObjectiveKind::CompleteData && min_detectors_ != 1 && min_detectors_ != 2)
    throw std::invalid_argument("min_detectors must be 1 or 2");
  const double w = 1.0 / static_cast<double>(per_sample_.size());
  for (const SampleStats& s : per_sample_) pooled_.merge(s, w);
  pooled_.compact();
  double sum = 0.0;
  for (double c : observed_) sum += c;
  mean_observed_ = sum * w;
  total_calls_ = std::max(mean_observed_, 0.0);
}

ElboObjective ElboObjective::from_estep(const EStepResult& estep, const std::vector<DetectionGroup>& groups,
                                        const SurveyConfig& config, int min_detectors, ObjectiveKind kind,
                                        Execution exec) {
  if (estep.groups.size() != groups.size()) throw std::invalid_argument("E-step result and groups disagree");
  const int n = estep.n_samples;
  std::vector<SampleStats> stats(static_cast<std::size_t>(n));
  std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
  auto body = [&](long delta) {
    const std::size_t d = static_cast<std::size_t>(delta);
    SampleStats total;
    double observed = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const LatentState& s = estep.groups[g].samples[d];
      total.merge(sample_stats(s, groups[g].data, config, min_detectors));
      observed += s.n_observed(std::max(1, min_detectors));
    }
    stats[d] = std::move(total);
    counts[d] = observed;
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (long delta = 0; delta < n; ++delta) body(delta);
  } else {
    for (long delta = 0; delta < n; ++delta) body(delta);
  }
  return ElboObjective(std::move(stats), std::move(counts), config, min_detectors, kind);
}

ElboObjective ElboObjective::from_states(const std::vector<LatentState>& states, const DetectionData& data,
                                         const SurveyConfig& config, int min_detectors, ObjectiveKind kind) {
  std::vector<SampleStats> stats;
  std::vector<double> counts;
  for (const LatentState& s : states) {
    stats.push_back(sample_stats(s, data, config, min_detectors));
    counts.push_back(s.n_observed(std::max(1, min_detectors)));
  }
  return ElboObjective(std::move(stats), std::move(counts), config, min_detectors, kind);
}

double ElboObjective::evaluate(const SampleStats& s, double calls, const std::vector<double>& counts,
                               const ModelParams& p, std::array<double, 4>* grad) const {
  if (!(p.sigma_s > 0.0) || !(p.sigma_t > 0.0) || !(p.beta1 >= 0.0) || !std::isfinite(p.beta0)) return kNegInf;
  std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
  double value = 0.0;

  // Detected strengths: sum log N(y; beta0 - beta1 d, sigma_s^2).
  if (s.detected > 0.0) {
    const double n = s.detected;
    const double a = s.mean_y - p.beta0 + p.beta1 * s.mean_d;
    const double q = s.syy + 2.0 * p.beta1 * s.syd + p.beta1 * p.beta1 * s.sdd + n * a * a;
    const double v2 = p.sigma_s * p.sigma_s;
    value += -n * (std::log(p.sigma_s) + kLogSqrt2Pi) - q / (2.0 * v2);
    g[0] += n * a / v2;
    g[1] += -(s.syd + p.beta1 * s.sdd + n * s.mean_d * a) / v2;
    g[2] += -n / p.sigma_s + q / (v2 * p.sigma_s);
    const double t2 = p.sigma_t * p.sigma_t;
    value += -n * (std::log(p.sigma_t) + kLogSqrt2Pi) - s.time_ss / (2.0 * t2);
    g[3] += -n / p.sigma_t + s.time_ss / (t2 * p.sigma_t);
  }

  // Undetected entries: sum w log Phi(-u), u = (beta0 - beta1 d - c) / sigma_s. Fixed-size
  // blocks summed in order keep the result independent of the thread count.
  const std::size_t n_miss = s.miss.size();
  const std::size_t n_blocks = (n_miss + kMissBlock - 1) / kMissBlock;
  std::vector<std::array<double, 4>> blocks(n_blocks);
  auto block = [&](long b) {
    std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
    const std::size_t lo = static_cast<std::size_t>(b) * kMissBlock;
    const std::size_t hi = std::min(n_miss, lo + kMissBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto [d, w] = s.miss[i];
      const double u = (p.beta0 - p.beta1 * d - p.threshold) / p.sigma_s;
      acc[0] += w * log_normal_cdf(-u);
      if (grad) {
        const double dl_du = -w * inverse_mills(-u);
        acc[1] += dl_du;
        acc[2] += dl_du * d;
        acc[3] += dl_du * u;
      }
    }
    blocks[static_cast<std::size_t>(b)] = acc;
  };
  const long nb = static_cast<long>(n_blocks);
  if (nb > 1) {
#pragma omp parallel for schedule(static)
    for (long b = 0; b < nb; ++b) block(b);
  } else {
    for (long b = 0; b < nb; ++b) block(b);
  }
  for (const auto& acc : blocks) {
    value += acc[0];
    g[0] += acc[1] / p.sigma_s;
    g[1] -= acc[2] / p.sigma_s;
    g[2] -= acc[3] / p.sigma_s;
  }

  const double log_w = std::log(config_->emission_width());
  if (kind_ == ObjectiveKind::Conditional && calls > 0.0) {
    std::array<double, 3> dI{};
    const double I = grad ? surface_.integral_with_gradient(p, min_detectors_, dI)
                          : surface_.integral(p, min_detectors_);
    if (!(I > 0.0)) return kNegInf;
    value -= calls * (std::log(I) + log_w);
    for (int k = 0; k < 3; ++k) g[static_cast<std::size_t>(k)] -= calls * dI[static_cast<std::size_t>(k)] / I;
  } else if (kind_ == ObjectiveKind::SemiComplete) {
    std::array<double, 3> dI{};
    const double I = grad ? surface_.integral_with_gradient(p, 1, dI) : surface_.integral(p, 1);
    const double A = surface_.area();
    const double pbar = I / A;
    const double N = total_calls_;
    double comb = 0.0, mean_count = 0.0;
    for (double c : counts) {
      if (N < c) return kNegInf;
      comb += std::lgamma(N + 1.0) - std::lgamma(N - c + 1.0);
      mean_count += c;
    }
    comb /= static_cast<double>(counts.size());
    mean_count /= static_cast<double>(counts.size());
    const double missing = N - mean_count;
    value += comb - calls * (std::log(config_->region.area()) + log_w);
    if (missing > 0.0) {
      if (!(pbar < 1.0)) return kNegInf;
      value += missing * std::log1p(-pbar);
      for (int k = 0; k < 3; ++k)
        g[static_cast<std::size_t>(k)] -= missing * dI[static_cast<std::size_t>(k)] / (A * (1.0 - pbar));
    }
  }
  if (grad) *grad = g;
  return value;
}

double ElboObjective::value(const ModelParams& p) const { return evaluate(pooled_, pooled_.calls, observed_, p, nullptr); }

double ElboObjective::value_and_gradient(const ModelParams& p, std::array<double, 4>& grad) const {
  return evaluate(pooled_, pooled_.calls, observed_, p, &grad);
}

double ElboObjective::sample_value(int delta, const ModelParams& p) const {
  const SampleStats& s = per_sample_.at(static_cast<std::size_t>(delta));
  return evaluate(s, s.calls, {observed_[static_cast<std::size_t>(delta)]}, p, nullptr);
}

namespace {

ModelParams from_vector(const std::vector<double>& z, const ModelParams& base, bool log_transform) {
  ModelParams p = base;
  p.beta0 = z[0];
  if (log_transform) {
    p.beta1 = std::exp(z[1]);
    p.sigma_s = std::exp(z[2]);
    p.sigma_t = std::exp(z[3]);
  } else {
    p.beta1 = z[1];
    p.sigma_s = z[2];
    p.sigma_t = z[3];
  }
  return p;
}

std::vector<double> to_vector(const ModelParams& p, bool log_transform) {
  if (log_transform)
    return {p.beta0, std::log(std::max(p.beta1, 1e-8)), std::log(p.sigma_s), std::log(p.sigma_t)};
  return {p.beta0, p.beta1, p.sigma_s, p.sigma_t};
}

}  // namespace

MStepResult maximize(const ElboObjective& objective, const ModelParams& init, const MStepConfig& config) {
  init.validate();
  const bool lt = config.log_transform;
  auto value_at = [&](const std::vector<double>& z) { return objective.value(from_vector(z, init, lt)); };
  Objective f = [&](const std::vector<double>& z, std::vector<double>& grad) {
    const ModelParams p = from_vector(z, init, lt);
    grad.assign(4, 0.0);
    if (config.gradient == GradientMode::FiniteDifference) {
      const double v = objective.value(p);
      if (std::isfinite(v)) grad = central_difference(value_at, z, config.fd_step);
      return v;
    }
    std::array<double, 4> g{};
    const double v = objective.value_and_gradient(p, g);
    grad = {g[0], g[1], g[2], g[3]};
    if (lt) {
      grad[1] *= p.beta1;
      grad[2] *= p.sigma_s;
      grad[3] *= p.sigma_t;
    }
    return v;
  };
  MStepResult out;
  out.optimizer = maximize_bfgs(f, to_vector(init, lt), config.optimizer);
  out.params = from_vector(out.optimizer.x, init, lt);
  out.value = out.optimizer.value;
  return out;
}

DensityEstimate estimate_density(double observed_calls, const ModelParams& p, const SurveyConfig& config,
                                 int min_detectors, const DetectionSurface* surface) {
  const double integral = surface ? surface->integral(p, min_detectors) : DetectionSurface(config).integral(p, min_detectors);
  const double area = config.region.area();
  const double pbar = integral / area;
  if (!(pbar > 0.0)) throw std::domain_error("mean detection probability is zero");
  DensityEstimate d;
  d.mean_detect_prob = pbar;
  d.observed_calls = observed_calls;
  d.call_density = observed_calls / (pbar * area * config.duration);
  d.total_calls = d.call_density * area * config.duration;
  return d;
}

long long best_total_calls(const ElboObjective& objective, const ModelParams& p) {
  if (objective.kind() != ObjectiveKind::SemiComplete) throw std::invalid_argument("objective is not semi-complete");
  const std::vector<double>& counts = objective.observed_counts();
  const double pbar = objective.surface().integral(p, 1) / objective.surface().area();
  long long lo = 0;
  for (double c : counts) lo = std::max(lo, static_cast<long long>(std::llround(c)));
  if (!(pbar < 1.0)) return lo;
  const double log_escape = std::log1p(-pbar);
  // f(N + 1) - f(N) is decreasing in N; find the first N where it stops being positive.
  auto gain = [&](long long N) {
    double s = 0.0;
    for (double c : counts) s += std::log((static_cast<double>(N) + 1.0) / (static_cast<double>(N) + 1.0 - c));
    return s / static_cast<double>(counts.size()) + log_escape;
  };
  if (gain(lo) <= 0.0) return lo;
  long long hi = std::max<long long>(lo + 1, 2 * lo);
  while (gain(hi) > 0.0) hi *= 2;
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    if (gain(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

SemiCompleteResult mle_semi_complete(ElboObjective objective, const ModelParams& init, const MStepConfig& config) {
  SemiCompleteResult out;
  out.params = init;
  long long N = best_total_calls(objective, init);
  for (out.rounds = 1; out.rounds <= 50; ++out.rounds) {
    objective.set_total_calls(static_cast<double>(N));
    const MStepResult m = maximize(objective, out.params, config);
    out.params = m.params;
    out.value = m.value;
    const long long next = best_total_calls(objective, out.params);
    if (next == N) break;
    N = next;
  }
  out.total_calls = N;
  out.call_density = static_cast<double>(N) / (objective.config().region.area() * objective.config().duration);
  return out;
}

}  // namespace ascr
