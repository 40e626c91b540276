#include "ascr/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ascr {

namespace {

double inf_norm(const std::vector<double>& g) {
  double n = 0.0;
  for (double v : g) n = std::max(n, std::abs(v));
  return n;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

OptimizerResult maximize_bfgs(const Objective& f, std::vector<double> x0, const OptimizerConfig& config) {
  const std::size_t n = x0.size();
  std::vector<double> g(n);
  double fx = f(x0, g);
  if (!std::isfinite(fx) || !finite_all(g)) throw std::invalid_argument("objective is not finite at the initial point");

  // H approximates the inverse of the negated Hessian.
  std::vector<double> H(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;

  OptimizerResult res;
  res.x = x0;
  res.value = fx;
  res.gradient_norm = inf_norm(g);
  std::vector<double> x = x0, dir(n), xt(n), gt(n), s(n), y(n), Hy(n);
  int stalled = 0;
  for (int it = 0; it < config.max_iterations; ++it) {
    if (res.gradient_norm < config.gradient_tolerance) {
      res.converged = true;
      break;
    }
    res.iterations = it + 1;
    for (std::size_t i = 0; i < n; ++i) {
      dir[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j) dir[i] += H[i * n + j] * g[j];
    }
    double slope = dot(dir, g);
    if (!(slope > 0.0)) {
      // lost ascent direction: reset to steepest ascent
      std::fill(H.begin(), H.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
      dir = g;
      slope = dot(g, g);
    }
    // Keep the first step bounded on the (transformed) scale.
    double step = 1.0;
    const double dn = inf_norm(dir);
    if (dn > 1.0 && it == 0) step = 1.0 / dn;
    bool found = false;
    double ft = fx;
    for (int ls = 0; ls < config.max_line_search; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + step * dir[i];
      ft = f(xt, gt);
      if (std::isfinite(ft) && finite_all(gt) && ft >= fx + 1e-4 * step * slope) {
        found = true;
        break;
      }
      step *= 0.5;
    }
    if (!found) break;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xt[i] - x[i];
      y[i] = g[i] - gt[i];  // gradient of the negated objective changes by -(gt - g)
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      for (std::size_t i = 0; i < n; ++i) {
        Hy[i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i * n + j] * y[j];
      }
      const double yHy = dot(y, Hy);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          H[i * n + j] += ((sy + yHy) * s[i] * s[j]) / (sy * sy) - (Hy[i] * s[j] + s[i] * Hy[j]) / sy;
    }
    const double change = std::abs(ft - fx) / std::max(1.0, std::abs(fx));
    x = xt;
    g = gt;
    fx = ft;
    res.x = x;
    res.value = fx;
    res.gradient_norm = inf_norm(g);
    stalled = change < config.function_tolerance ? stalled + 1 : 0;
    if (stalled >= 3) break;
  }
  if (res.gradient_norm < config.gradient_tolerance) res.converged = true;
  return res;
}

std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& value,
                                       const std::vector<double>& x, double h) {
  std::vector<double> g(x.size());
  std::vector<double> xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = value(xp);
    xp[i] = x[i] - h;
    const double fm = value(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace ascr
