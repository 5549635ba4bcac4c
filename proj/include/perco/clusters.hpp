#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "perco/config.hpp"
#include "perco/lattice.hpp"

namespace perco {

// Half-open axis box [lo, hi) in absolute coordinates.
struct IBox {
  Point lo;
  Point hi;

  bool contains(const Point& p) const;
  std::int64_t volume() const;
  // Local row-major cell index (last axis fastest).
  std::int64_t cell_index(const Point& p) const;
  Point cell_point(std::int64_t idx) const;
};

IBox anchored_box(const Point& corner, Coord side);

// Connected components of the occupied set under l1-distance-1 adjacency
// (torus wrap when applicable). Ids are dense, assigned in order of first
// site occurrence; vacant sites carry -1.
struct ClusterLabeling {
  std::vector<std::int32_t> component_id;  // per window site
  std::vector<std::int64_t> sizes;         // per component
  std::vector<Coord> l1_diameters;         // per component, lattice units
  int num_components() const { return static_cast<int>(sizes.size()); }
};

ClusterLabeling label_components(const Config& config);

// Per-site membership mask of S_r: 1 where the component l1-diameter is >= r.
std::vector<std::uint8_t> s_r_mask(const Config& config, const ClusterLabeling& labeling, double r);

// Occupancy restricted to components of l1-diameter >= r.
Config restrict_S_r(const Config& config, const ClusterLabeling& labeling, double r);

// Finite-window stand-in for the infinite-component set. diameter_span keeps
// every component whose l1-diameter reaches the (smallest) window side;
// largest keeps the unique max-diameter component, ties broken by larger
// size, then by the smallest labelling value among contained sites.
enum class ProxyPolicy { diameter_span, largest };

Config s_infty_proxy(const Config& config, const ClusterLabeling& labeling, ProxyPolicy policy);

// Norm-ordered labelling of Z^d: smaller |x|_inf first, ties lexicographic
// on coordinates. Only the induced order is ever needed.
struct Labelling {
  bool less(const Point& a, const Point& b) const;
};

// Phi(x, V): the element of V minimizing the labelling value of (y - x).
Point closest_in_set(const Point& x, const std::vector<Point>& candidates, const Labelling& labelling);

// Same projection onto the occupied sites of a mask config; searches
// outward by linf shells. Throws when the mask is empty.
SiteIndex closest_occupied(const Point& x, const Config& mask, const Labelling& labelling);

// BFS over occupied sites with reusable scratch; one instance per worker.
class ChemicalBfs {
 public:
  explicit ChemicalBfs(const Config& config);

  // Shortest-path length inside the occupied set; nullopt across components.
  std::optional<std::int64_t> distance(SiteIndex from, SiteIndex to);
  // Sites within chemical distance floor(r), ascending site order.
  std::vector<SiteIndex> ball(SiteIndex from, double r);
  // All distances from `from` (-1 unreachable); valid until the next query.
  const std::vector<std::int32_t>& distances_from(SiteIndex from);
  std::int32_t eccentricity(SiteIndex from, SiteIndex* farthest = nullptr);

 private:
  void reset();
  const Config& config_;
  std::vector<std::int32_t> dist_;
  std::vector<SiteIndex> queue_;
};

std::optional<std::int64_t> chemical_distance(const Config& config, const Point& x, const Point& y);
std::vector<SiteIndex> chemical_ball(const Config& config, const Point& x, double r);

// rho-tilde: chemical distance between the Phi-projections onto the proxy.
std::optional<std::int64_t> pseudo_distance(const Config& config, const Config& proxy, const Point& x,
                                            const Point& y, const Labelling& labelling);

// Components of (occupied AND filter) restricted to a box, adjacency within
// the box only. filter, when non-null, is a per-window-site mask.
struct BoxLabeling {
  IBox box;
  std::vector<std::int32_t> label;  // per box cell, -1 where absent
  std::vector<std::int64_t> sizes;
  int num_components() const { return static_cast<int>(sizes.size()); }
};

BoxLabeling label_in_box(const Config& config, const IBox& box, const std::uint8_t* filter = nullptr);

// Shortest path from `source` to any target inside the box, restricted to
// occupied sites; both given as window site indices. Empty optional when
// unreachable. The returned path includes both endpoints.
std::optional<std::vector<SiteIndex>> bfs_path_in_box(const Config& config, const IBox& box, SiteIndex source,
                                                      const std::vector<std::uint8_t>& target_mask);

}  // namespace perco
