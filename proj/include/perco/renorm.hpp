#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perco/clusters.hpp"
#include "perco/config.hpp"
#include "perco/events.hpp"
#include "perco/scales.hpp"

namespace perco {

// Nearest-neighbor path in the renormalized lattice G_k = L_k Z^d.
struct LatticePath {
  int level = 0;
  Coord spacing = 1;
  std::vector<Point> vertices;  // absolute coordinates, consecutive |delta|_1 = spacing

  std::int64_t steps() const { return static_cast<std::int64_t>(vertices.size()) - 1; }
  void validate() const;
};

// One descent step of the path construction: given a nearest-neighbor path
// of k-good vertices, returns a nearest-neighbor path of (k-1)-good vertices
// whose endpoints stay in the first/last blocks and whose length is at most
// (1 + 8 r_{k-1}/l_{k-1}) l_{k-1} m. Hyperplane offsets are searched
// smallest-first over [0, 4 r_{k-1}]; absence of an admissible offset
// signals a corrupted goodness field and throws.
LatticePath descend_path(const LatticePath& pi, const GoodnessField& goodness, const ScaleLadder& ladder);

// Independent postcondition checker for descend_path; deliberately shares no
// construction code with it.
struct DescentCheck {
  bool ok = true;
  std::string reason;
};
DescentCheck check_descended_path(const LatticePath& pi, const LatticePath& pi_prime,
                                  const GoodnessField& goodness, const ScaleLadder& ladder);

// Level-0 gluing: walks the unique macroscopic components C_z of consecutive
// 0-good vertices and connects them by BFS inside the shared 2L0-box,
// returning a nearest-neighbor path in the occupied set.
struct GluedPath {
  std::vector<SiteIndex> sites;
  std::vector<std::int64_t> per_step_lengths;  // BFS segment lengths, each < (2L0)^d
};

GluedPath glue_level0(const LatticePath& pi0, const Config& config, const ClusterLabeling& labeling,
                      const EventParams& params);

// Event-H diagnosis and the end-to-end short-path pipeline.
enum class HClause { none, goodness, local_connect };

struct PathCertificate {
  std::int64_t big_r = 0;
  int top_scale = 0;
  std::vector<std::int64_t> level_steps;  // index k: steps of the level-k path
  std::int64_t glue_length = 0;
  std::int64_t connect_x_length = 0;
  std::int64_t connect_y_length = 0;
  std::int64_t total_length = 0;
  double certified_bound = 0.0;  // (2L0)^d (N''+1) + 2 (4 L_s)^d
  double product_bound = 0.0;    // prod_k (1 + 8 r_{k-1}/l_{k-1}) * (L_s/L0) * N'
};

struct ShortPathResult {
  bool h_holds = false;
  HClause failed_clause = HClause::none;
  Point failed_block;           // block anchor when H fails
  std::vector<SiteIndex> path;  // nearest-neighbor path in S from x to y
  PathCertificate certificate;
};

// Window half-side needed around B(0, 2R) for goodness seeds and the
// local-connection boxes at top scale s.
Coord short_path_margin(const ScaleLadder& ladder, int top_scale);

ShortPathResult construct_short_path(const Config& config, const ClusterLabeling& labeling, const Point& x,
                                     const Point& y, Coord big_r, const ScaleLadder& ladder,
                                     const EventParams& params);

}  // namespace perco
