#pragma once

#include <random>
#include <span>
#include <vector>

#include "ascr/types.hpp"

namespace ascr {

struct BoundingBox {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

/// Survey region: an axis-aligned rectangle or a simple polygon, with a quadrature grid
/// of cell centers on a regular lattice over the bounding box, masked to the region.
class SurveyRegion {
 public:
  static constexpr int kDefaultGridResolution = 64;

  static SurveyRegion rectangle(double x0, double y0, double x1, double y1,
                                int grid_resolution = kDefaultGridResolution);
  static SurveyRegion polygon(std::vector<Point> vertices,
                              int grid_resolution = kDefaultGridResolution);

  bool contains(Point p) const;
  double area() const { return area_; }
  bool is_rectangle() const { return rectangle_; }
  const BoundingBox& bounds() const { return bounds_; }
  std::span<const Point> vertices() const { return vertices_; }

  int grid_resolution() const { return resolution_; }
  std::span<const Point> grid() const { return grid_; }
  /// Quadrature weight per grid cell; grid().size() * cell_area() == area().
  double cell_area() const { return cell_area_; }

  /// Rebuilds with a different lattice resolution.
  SurveyRegion with_resolution(int grid_resolution) const;

  /// Uniform draw from the region (rejection from the bounding box for polygons).
  template <class Engine>
  Point sample_uniform(Engine& rng) const {
    std::uniform_real_distribution<double> ux(bounds_.x0, bounds_.x1);
    std::uniform_real_distribution<double> uy(bounds_.y0, bounds_.y1);
    for (;;) {
      Point p{ux(rng), uy(rng)};
      if (rectangle_ || contains(p)) return p;
    }
  }

  /// Largest distance from `from` to any point of the region.
  double max_distance_from(Point from) const;

 private:
  SurveyRegion() = default;
  void build_grid();

  bool rectangle_ = true;
  std::vector<Point> vertices_;
  BoundingBox bounds_;
  double area_ = 0.0;
  int resolution_ = kDefaultGridResolution;
  std::vector<Point> grid_;
  double cell_area_ = 0.0;
};

}  // namespace ascr
