#include "ascr/estep.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ascr/detection_model.hpp"
#include "ascr/latent.hpp"
#include "ascr/likelihood.hpp"

namespace ascr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  if (!(log_ratio > kNegInf)) return false;
  return std::log(uniform01(rng)) < log_ratio;
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_samples < 1) throw std::invalid_argument("sampler n_samples must be at least 1");
  if (burn_in < 0) throw std::invalid_argument("sampler burn_in must be non-negative");
  if (thinning < 1) throw std::invalid_argument("sampler thinning must be at least 1");
  if (!(mixture_weight >= 0.0 && mixture_weight <= 1.0))
    throw std::invalid_argument("proposal mixture weight must lie in [0, 1]");
  if (!std::isfinite(proposal_sd)) throw std::invalid_argument("proposal sd must be finite");
}

double SamplerConfig::resolved_proposal_sd(const SurveyConfig& config) const {
  if (proposal_sd > 0.0) return proposal_sd;
  const double spacing = config.median_detector_spacing();
  if (spacing > 0.0) return 0.5 * spacing;
  const BoundingBox& b = config.region.bounds();
  return 0.1 * std::max(b.width(), b.height());
}

Point propose_location(Point current, const SurveyRegion& region, double mixture_weight, double proposal_sd,
                       Rng& rng) {
  if (uniform01(rng) < mixture_weight) {
    std::normal_distribution<double> gauss(0.0, proposal_sd);
    const double dx = gauss(rng);
    const double dy = gauss(rng);
    return {current.x + dx, current.y + dy};
  }
  return region.sample_uniform(rng);
}

void propose_capture(int n_calls, int n_detections, Rng& rng, std::vector<int>& scratch, std::vector<bool>& captured) {
  if (n_detections < 0 || n_detections > n_calls) throw std::invalid_argument("capture row needs 0 <= J <= N_cand");
  scratch.resize(static_cast<std::size_t>(n_calls));
  std::iota(scratch.begin(), scratch.end(), 0);
  for (int i = 0; i < n_detections; ++i) {
    std::uniform_int_distribution<int> pick(i, n_calls - 1);
    std::swap(scratch[static_cast<std::size_t>(i)], scratch[static_cast<std::size_t>(pick(rng))]);
  }
  captured.assign(static_cast<std::size_t>(n_calls), false);
  for (int i = 0; i < n_detections; ++i) captured[static_cast<std::size_t>(scratch[static_cast<std::size_t>(i)])] = true;
}

LatentState init_latent(const DetectionData& group, const SurveyConfig& config, const ModelParams& params,
                        double proposal_sd, Rng& rng) {
  const int M = group.n_detectors();
  const int C = group.total();
  struct Ref {
    int m, j;
    double t;
  };
  std::vector<Ref> refs;
  for (int m = 0; m < M; ++m)
    for (int j = 0; j < group.count(m); ++j) refs.push_back({m, j, group.detector(m)[static_cast<std::size_t>(j)].time});
  std::stable_sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) { return a.t != b.t ? a.t < b.t : a.m < b.m; });

  const double slack = 3.0 * params.sigma_t;
  std::vector<std::vector<Ref>> merged;
  for (const Ref& r : refs) {
    bool placed = false;
    for (auto& call : merged) {
      bool ok = true;
      for (const Ref& o : call) {
        const double d = distance(config.detector_position(r.m), config.detector_position(o.m));
        if (o.m == r.m || std::abs(r.t - o.t) >= d / config.sound_speed + slack) {
          ok = false;
          break;
        }
      }
      if (ok) {
        call.push_back(r);
        placed = true;
        break;
      }
    }
    if (!placed) merged.push_back({r});
  }

  std::normal_distribution<double> gauss(0.0, proposal_sd);
  std::uniform_real_distribution<double> emission(config.emission_start, config.emission_end);
  std::vector<CandidateCall> calls(static_cast<std::size_t>(C));
  for (std::size_t n = 0; n < calls.size(); ++n) {
    if (n >= merged.size()) {
      calls[n].location = config.region.sample_uniform(rng);
      calls[n].emission = emission(rng);
      continue;
    }
    const auto& members = merged[n];
    Point centroid{0.0, 0.0};
    for (const Ref& r : members) {
      centroid.x += config.detector_position(r.m).x;
      centroid.y += config.detector_position(r.m).y;
    }
    centroid.x /= static_cast<double>(members.size());
    centroid.y /= static_cast<double>(members.size());
    Point x = centroid;
    bool inside = false;
    for (int attempt = 0; attempt < 100 && !inside; ++attempt) {
      const double dx = gauss(rng);
      const double dy = gauss(rng);
      x = {centroid.x + dx, centroid.y + dy};
      inside = config.region.contains(x);
    }
    if (!inside) x = config.region.contains(centroid) ? centroid : config.region.sample_uniform(rng);
    const Ref& first = members.front();
    const double e = first.t - distance(x, config.detector_position(first.m)) / config.sound_speed;
    calls[n].location = x;
    calls[n].emission = std::clamp(e, config.emission_start, config.emission_end);
  }

  LatentState state(M, std::move(calls));
  for (std::size_t n = 0; n < merged.size(); ++n)
    for (const Ref& r : merged[n]) state.set_assignment(r.m, static_cast<int>(n), r.j);
  reassign_from_order(state, config);
  return state;
}

GroupChain::GroupChain(const DetectionData& group, const SurveyConfig& config, const ModelParams& params,
                       const SamplerConfig& sampler, LatentState initial)
    : data_(&group),
      config_(&config),
      params_(params),
      sampler_(sampler),
      proposal_sd_(sampler.resolved_proposal_sd(config)),
      state_(std::move(initial)),
      M_(group.n_detectors()),
      C_(state_.n_calls()) {
  if (state_.n_detectors() != M_) throw std::invalid_argument("initial state has the wrong detector count");
  check_assignment(state_, group);
  for (int n = 0; n < C_; ++n)
    if (!config.region.contains(state_.call(n).location))
      throw std::invalid_argument("initial call location lies outside the survey region");
  reassign_from_order(state_, config);
  dist_.resize(static_cast<std::size_t>(M_) * static_cast<std::size_t>(C_));
  for (int m = 0; m < M_; ++m)
    for (int n = 0; n < C_; ++n)
      dist_[static_cast<std::size_t>(m * C_ + n)] = distance(state_.call(n).location, config.detector_position(m));
  rebuild_cache();
}

void GroupChain::set_params(const ModelParams& params) {
  params_ = params;
  rebuild_cache();
}

double GroupChain::constant_terms() const {
  return -static_cast<double>(C_) * (std::log(config_->region.area()) + std::log(config_->emission_width()));
}

void GroupChain::rebuild_cache() {
  miss_.resize(dist_.size());
  for (std::size_t i = 0; i < dist_.size(); ++i) miss_[i] = log_miss_prob(dist_[i], params_);
  log_norm_const_ = std::log(params_.sigma_s) + std::log(params_.sigma_t) + 2.0 * kLogSqrt2Pi;
  row_value_.assign(static_cast<std::size_t>(M_), 0.0);
  for (int m = 0; m < M_; ++m) {
    row_value_[static_cast<std::size_t>(m)] = row_value(m, nullptr, -1, nullptr, 0.0);
  }
  cached_ = constant_terms() + std::accumulate(row_value_.begin(), row_value_.end(), 0.0);
}

double GroupChain::recompute_log_likelihood() const {
  return complete_data_loglik(state_, *data_, *config_, params_);
}

double GroupChain::eval_row(int m, const std::vector<bool>* captured, int override_call, const double* override_dist,
                            double override_emission, int* override_rank, bool write) {
  double value = 0.0;
  const double v = config_->sound_speed;
  auto& arrivals = arrivals_;
  arrivals.clear();
  const std::size_t base = static_cast<std::size_t>(m * C_);
  for (int n = 0; n < C_; ++n) {
    const bool over = n == override_call;
    if (captured ? (*captured)[static_cast<std::size_t>(n)] : state_.detected(m, n)) {
      const double d = over ? override_dist[m] : dist_[base + static_cast<std::size_t>(n)];
      const double e = over ? override_emission : state_.call(n).emission;
      arrivals.emplace_back(e + d / v, n);
    } else {
      value += over ? log_miss_prob(override_dist[m], params_) : miss_[base + static_cast<std::size_t>(n)];
    }
  }
  if (static_cast<int>(arrivals.size()) != data_->count(m))
    throw std::logic_error("capture row does not match the detection count");
  std::sort(arrivals.begin(), arrivals.end());
  const auto& dets = data_->detector(m);
  if (write)
    for (int n = 0; n < C_; ++n) state_.set_assignment(m, n, kUndetected);
  for (std::size_t r = 0; r < arrivals.size(); ++r) {
    const auto [pred, n] = arrivals[r];
    const double d = n == override_call ? override_dist[m] : dist_[base + static_cast<std::size_t>(n)];
    // log g + log f(y | d, z = 1) collapses to the untruncated Gaussian density
    const double us = (dets[r].signal_strength - expected_strength(d, params_)) / params_.sigma_s;
    const double ut = (dets[r].time - pred) / params_.sigma_t;
    value += -0.5 * (us * us + ut * ut) - log_norm_const_;
    if (n == override_call && override_rank) *override_rank = static_cast<int>(r);
    if (write) state_.set_assignment(m, n, static_cast<int>(r));
  }
  return value;
}

double GroupChain::row_value(int m, const std::vector<bool>* captured, int override_call, const double* override_dist,
                             double override_emission, int* override_rank) const {
  return const_cast<GroupChain*>(this)->eval_row(m, captured, override_call, override_dist, override_emission,
                                                 override_rank, false);
}

void GroupChain::commit_row(int m, const std::vector<bool>* captured) {
  row_value_[static_cast<std::size_t>(m)] = eval_row(m, captured, -1, nullptr, 0.0, nullptr, true);
}

double GroupChain::capture_log_ratio(int m, const std::vector<bool>& captured) const {
  return row_value(m, &captured, -1, nullptr, 0.0) - row_value_[static_cast<std::size_t>(m)];
}

double GroupChain::location_log_ratio(int n, Point proposal) const {
  if (!config_->region.contains(proposal)) return kNegInf;
  std::vector<double> nd(static_cast<std::size_t>(M_));
  for (int m = 0; m < M_; ++m) nd[static_cast<std::size_t>(m)] = distance(proposal, config_->detector_position(m));
  double delta = 0.0;
  for (int m = 0; m < M_; ++m) {
    if (state_.detected(m, n))
      delta += row_value(m, nullptr, n, nd.data(), state_.call(n).emission) - row_value_[static_cast<std::size_t>(m)];
    else
      delta += log_miss_prob(nd[static_cast<std::size_t>(m)], params_) - miss_[static_cast<std::size_t>(m * C_ + n)];
  }
  return delta;
}

void GroupChain::capture_move(int m, Rng& rng) {
  const int J = data_->count(m);
  if (J == 0) return;
  auto& captured = captured_scratch_;
  propose_capture(C_, J, rng, index_scratch_, captured);
  const double ratio = row_value(m, &captured, -1, nullptr, 0.0) - row_value_[static_cast<std::size_t>(m)];
  ++diag_.capture.proposed;
  if (accept(ratio, rng)) {
    ++diag_.capture.accepted;
    cached_ += ratio;
    commit_row(m, &captured);
  }
}

void GroupChain::location_move(int n, Rng& rng) {
  const Point proposal =
      propose_location(state_.call(n).location, config_->region, sampler_.mixture_weight, proposal_sd_, rng);
  ++diag_.location.proposed;
  if (!config_->region.contains(proposal)) return;
  double nd[kMaxDetectorsOnStack];
  double new_miss[kMaxDetectorsOnStack];
  std::vector<double> nd_heap, miss_heap;
  double* ndp = nd;
  double* missp = new_miss;
  if (M_ > kMaxDetectorsOnStack) {
    nd_heap.resize(static_cast<std::size_t>(M_));
    miss_heap.resize(static_cast<std::size_t>(M_));
    ndp = nd_heap.data();
    missp = miss_heap.data();
  }
  for (int m = 0; m < M_; ++m) ndp[m] = distance(proposal, config_->detector_position(m));
  double delta = 0.0;
  for (int m = 0; m < M_; ++m) {
    const std::size_t i = static_cast<std::size_t>(m * C_ + n);
    missp[m] = log_miss_prob(ndp[m], params_);
    if (state_.detected(m, n))
      delta += row_value(m, nullptr, n, ndp, state_.call(n).emission) - row_value_[static_cast<std::size_t>(m)];
    else
      delta += missp[m] - miss_[i];
  }
  if (!accept(delta, rng)) return;
  ++diag_.location.accepted;
  state_.call(n).location = proposal;
  for (int m = 0; m < M_; ++m) {
    const std::size_t i = static_cast<std::size_t>(m * C_ + n);
    if (!state_.detected(m, n)) row_value_[static_cast<std::size_t>(m)] += missp[m] - miss_[i];
    dist_[i] = ndp[m];
    miss_[i] = missp[m];
  }
  for (int m = 0; m < M_; ++m)
    if (state_.detected(m, n)) commit_row(m, nullptr);
  cached_ += delta;
}

// Exact Gibbs draw of e_n. The order-cell boundaries (where call n's predicted arrival
// crosses another call's on a shared detector) split the window into intervals; on each
// the detection order is fixed and the conditional is a truncated Gaussian in e_n.
void GroupChain::emission_step(int n, Rng& rng) {
  ++diag_.emission_draws;
  auto& detecting = emit_detecting_;
  detecting.clear();
  for (int m = 0; m < M_; ++m)
    if (state_.detected(m, n)) detecting.push_back(m);
  const double lo = config_->emission_start;
  const double hi = config_->emission_end;
  if (detecting.empty()) {
    state_.call(n).emission = std::uniform_real_distribution<double>(lo, hi)(rng);
    return;
  }
  const double v = config_->sound_speed;
  const double sigma = params_.sigma_t;
  const double k = static_cast<double>(detecting.size());

  auto& cuts = emit_cuts_;
  cuts.assign({lo, hi});
  for (int m : detecting) {
    const double own = dist_[static_cast<std::size_t>(m * C_ + n)] / v;
    for (int j = 0; j < C_; ++j) {
      if (j == n || !state_.detected(m, j)) continue;
      const double b = state_.call(j).emission + dist_[static_cast<std::size_t>(m * C_ + j)] / v - own;
      if (b > lo && b < hi) cuts.push_back(b);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto& dist_col = emit_dist_;
  dist_col.resize(static_cast<std::size_t>(M_));
  for (int m = 0; m < M_; ++m) dist_col[static_cast<std::size_t>(m)] = dist_[static_cast<std::size_t>(m * C_ + n)];

  auto& cells = emit_cells_;
  cells.clear();
  const double sd_e = sigma / std::sqrt(k);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    double base = 0.0;
    auto& residual = emit_residual_;
    residual.clear();
    for (int m : detecting) {
      int rank = 0;
      const double row = row_value(m, nullptr, n, dist_col.data(), mid, &rank);
      const double t = data_->detector(m)[static_cast<std::size_t>(rank)].time;
      const double d = dist_col[static_cast<std::size_t>(m)];
      base += row - normal_logpdf(t, mid + d / v, sigma);
      residual.push_back(t - d / v);
    }
    const double mu = std::accumulate(residual.begin(), residual.end(), 0.0) / k;
    double ss = 0.0;
    for (double r : residual) ss += (r - mu) * (r - mu);
    const double log_int = -k * (std::log(sigma) + kLogSqrt2Pi) - ss / (2.0 * sigma * sigma) +
                           std::log(sd_e) + kLogSqrt2Pi + log_normal_interval((a - mu) / sd_e, (b - mu) / sd_e);
    cells.push_back({a, b, mu, base + log_int});
  }
  if (cells.empty()) return;

  double top = kNegInf;
  for (const EmissionCell& c : cells) top = std::max(top, c.log_weight);
  std::size_t chosen = 0;
  if (cells.size() > 1 && top > kNegInf) {
    double total = 0.0;
    for (const EmissionCell& c : cells) total += std::exp(c.log_weight - top);
    double u = uniform01(rng) * total;
    for (chosen = 0; chosen + 1 < cells.size(); ++chosen) {
      u -= std::exp(cells[chosen].log_weight - top);
      if (u < 0.0) break;
    }
  } else if (top == kNegInf) {
    // every cell underflowed: stay in the current one
    const double e = state_.call(n).emission;
    for (chosen = 0; chosen + 1 < cells.size() && !(e <= cells[chosen].hi); ++chosen) {
    }
  }
  const EmissionCell& cell = cells[chosen];
  bool clamped = false;
  double e = sample_truncated_normal(cell.mean, sd_e, cell.lo, cell.hi, rng, &clamped);
  if (clamped) ++diag_.emission_clamped;
  state_.call(n).emission = e;
  for (int m : detecting) commit_row(m, nullptr);
  cached_ = constant_terms() + std::accumulate(row_value_.begin(), row_value_.end(), 0.0);
}

void GroupChain::sweep(Rng& rng) {
  for (int m = 0; m < M_; ++m) capture_move(m, rng);
  for (int n = 0; n < C_; ++n) location_move(n, rng);
  for (int n = 0; n < C_; ++n) emission_step(n, rng);
}

EStepResult run_estep(const std::vector<DetectionGroup>& groups, const SurveyConfig& config, const ModelParams& params,
                      const SamplerConfig& sampler, std::uint64_t stream_tag, const std::vector<LatentState>* warm_start,
                      Execution exec) {
  sampler.validate();
  params.validate();
  if (warm_start && warm_start->size() != groups.size())
    throw std::invalid_argument("warm start must hold one state per group");
  EStepResult result;
  result.n_samples = sampler.n_samples;
  result.groups.resize(groups.size());
  std::vector<std::exception_ptr> errors(groups.size());
  const double sd = sampler.resolved_proposal_sd(config);

  auto body = [&](long i) {
    try {
      const std::size_t gi = static_cast<std::size_t>(i);
      Rng rng = make_stream(sampler.seed, stream_tag, gi);
      LatentState init = warm_start ? (*warm_start)[gi] : init_latent(groups[gi].data, config, params, sd, rng);
      GroupChain chain(groups[gi].data, config, params, sampler, std::move(init));
      for (int s = 0; s < sampler.burn_in; ++s) chain.sweep(rng);
      GroupSamples& out = result.groups[gi];
      out.samples.reserve(static_cast<std::size_t>(sampler.n_samples));
      for (int s = 0; s < sampler.n_samples; ++s) {
        for (int t = 0; t < sampler.thinning; ++t) chain.sweep(rng);
        out.samples.push_back(chain.state());
      }
      out.final_state = chain.state();
      out.diagnostics = chain.diagnostics();
      out.final_log_likelihood = chain.log_likelihood();
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  const long n = static_cast<long>(groups.size());
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) body(i);
  } else {
    for (long i = 0; i < n; ++i) body(i);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const GroupSamples& g : result.groups) result.diagnostics.merge(g.diagnostics);
  return result;
}

}  // namespace ascr
