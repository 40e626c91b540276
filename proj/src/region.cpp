#include "ascr/region.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ascr {

namespace {

double shoelace_area(std::span<const Point> v) {
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& a = v[i];
    const Point& b = v[(i + 1) % v.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(twice);
}

}  // namespace

SurveyRegion SurveyRegion::rectangle(double x0, double y0, double x1, double y1, int grid_resolution) {
  if (!(x1 > x0) || !(y1 > y0) || !std::isfinite(x0) || !std::isfinite(x1) || !std::isfinite(y0) ||
      !std::isfinite(y1))
    throw std::invalid_argument("rectangle must have finite corners with x1 > x0 and y1 > y0");
  SurveyRegion r;
  r.rectangle_ = true;
  r.vertices_ = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  r.bounds_ = {x0, y0, x1, y1};
  r.area_ = (x1 - x0) * (y1 - y0);
  r.resolution_ = grid_resolution;
  r.build_grid();
  return r;
}

SurveyRegion SurveyRegion::polygon(std::vector<Point> vertices, int grid_resolution) {
  if (vertices.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  SurveyRegion r;
  r.rectangle_ = false;
  r.bounds_ = {vertices[0].x, vertices[0].y, vertices[0].x, vertices[0].y};
  for (const Point& p : vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw std::invalid_argument("polygon vertex not finite");
    r.bounds_.x0 = std::min(r.bounds_.x0, p.x);
    r.bounds_.x1 = std::max(r.bounds_.x1, p.x);
    r.bounds_.y0 = std::min(r.bounds_.y0, p.y);
    r.bounds_.y1 = std::max(r.bounds_.y1, p.y);
  }
  r.vertices_ = std::move(vertices);
  r.area_ = shoelace_area(r.vertices_);
  if (!(r.area_ > 0.0)) throw std::invalid_argument("polygon has zero area");
  r.resolution_ = grid_resolution;
  r.build_grid();
  return r;
}

SurveyRegion SurveyRegion::with_resolution(int grid_resolution) const {
  SurveyRegion r = *this;
  r.resolution_ = grid_resolution;
  r.build_grid();
  return r;
}

bool SurveyRegion::contains(Point p) const {
  if (p.x < bounds_.x0 || p.x > bounds_.x1 || p.y < bounds_.y0 || p.y > bounds_.y1) return false;
  if (rectangle_) return true;
  // even-odd ray casting
  bool inside = false;
  for (std::size_t i = 0, j = vertices_.size() - 1; i < vertices_.size(); j = i++) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

void SurveyRegion::build_grid() {
  if (resolution_ < 1) throw std::invalid_argument("grid resolution must be >= 1");
  grid_.clear();
  const double dx = bounds_.width() / resolution_;
  const double dy = bounds_.height() / resolution_;
  grid_.reserve(static_cast<std::size_t>(resolution_) * static_cast<std::size_t>(resolution_));
  for (int iy = 0; iy < resolution_; ++iy) {
    for (int ix = 0; ix < resolution_; ++ix) {
      Point c{bounds_.x0 + (ix + 0.5) * dx, bounds_.y0 + (iy + 0.5) * dy};
      if (contains(c)) grid_.push_back(c);
    }
  }
  if (grid_.empty()) throw std::invalid_argument("integration grid has no cells inside the region");
  // Polygon cells are reweighted so the quadrature integrates 1 to the exact area.
  cell_area_ = area_ / static_cast<double>(grid_.size());
}

double SurveyRegion::max_distance_from(Point from) const {
  double best = 0.0;
  for (const Point& v : vertices_) best = std::max(best, distance(from, v));
  return best;
}

}  // namespace ascr
