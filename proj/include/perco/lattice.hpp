#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace perco {

using Coord = std::int64_t;
using SiteIndex = std::int64_t;

// A lattice point of Z^d, one entry per axis.
using Point = std::vector<Coord>;

constexpr SiteIndex kNoSite = -1;

Coord l1_norm(const Point& p);
Coord linf_norm(const Point& p);
Point point_add(const Point& a, const Point& b);
Point point_sub(const Point& a, const Point& b);
Point scaled_unit(int dim, int axis, Coord value);

enum class Geometry : std::uint8_t { box = 0, torus = 1 };

// Finite window of Z^d. Box windows cover anchor + [0, sides)^d and never
// wrap; torus windows require equal sides N, zero anchor, and always use the
// wrap-around metric. Site indexing is row-major over coordinates in the
// fixed axis order (axis d-1 fastest), so serialized occupancy is portable.
class Window {
 public:
  Window(Geometry geometry, Point anchor, std::vector<Coord> sides);

  static Window box(Point anchor, std::vector<Coord> sides);
  // B(center, half) as a window: anchor center-half, each side 2*half+1.
  static Window centered_box(int dim, Coord half_side);
  static Window torus(int dim, Coord n);

  int dim() const { return static_cast<int>(sides_.size()); }
  Geometry geometry() const { return geometry_; }
  const Point& anchor() const { return anchor_; }
  const std::vector<Coord>& sides() const { return sides_; }
  Coord side(int axis) const { return sides_[axis]; }
  std::int64_t num_sites() const { return num_sites_; }

  bool contains(const Point& p) const;
  SiteIndex index_of(const Point& p) const;
  Point point_at(SiteIndex s) const;

  // Neighbor along axis in direction dir (+1/-1); kNoSite when it falls off a
  // box window. Torus wraps.
  SiteIndex neighbor(SiteIndex s, int axis, int dir) const;

  // b - a. On a torus each axis is reduced to the minimal image in
  // (-N/2, N/2], ties to the positive representative.
  Point delta(const Point& a, const Point& b) const;
  Coord linf_distance(const Point& a, const Point& b) const;
  Coord l1_distance(const Point& a, const Point& b) const;

  bool operator==(const Window& o) const;

 private:
  Geometry geometry_;
  Point anchor_;
  std::vector<Coord> sides_;
  std::vector<std::int64_t> strides_;
  std::int64_t num_sites_;
};

// All window sites y with |y - center|_inf <= floor(r); torus distance when
// the geometry is torus. Throws if center lies outside a box window.
std::vector<SiteIndex> linf_ball(const Point& center, double r, const Window& w);

// Exact max pairwise l1 distance via the 2^(d-1) signed projections
// max_eps (max eps.x - min eps.x); O(n 2^(d-1)) instead of O(n^2).
Coord l1_diameter(const std::vector<Point>& sites);

// Streaming form of the same computation, for per-component accumulation.
class L1DiameterAccumulator {
 public:
  explicit L1DiameterAccumulator(int dim);
  void add(const Point& p);
  bool empty() const { return empty_; }
  Coord diameter() const;

 private:
  int dim_;
  bool empty_;
  std::vector<Coord> lo_, hi_;
};

}  // namespace perco
