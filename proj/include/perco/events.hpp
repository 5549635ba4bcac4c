#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "perco/clusters.hpp"
#include "perco/config.hpp"
#include "perco/scales.hpp"

namespace perco {

struct EventParams {
  Coord L0 = 2;
  double eta_hat = 1.0;  // plug-in estimate of the infinite-component density
  double u = 0.0;        // model parameter, carried for provenance

  void validate() const;
  // ceil(3/4 eta L0^d) and floor(5/4 eta L0^d)
  std::int64_t size_lower_threshold(int dim) const;
  std::int64_t count_upper_threshold(int dim) const;
};

// Boolean field on the level-k renormalized lattice; cell c stands for the
// vertex c*spacing of G_k, and the domain is the half-open cell box
// [cell_lo, cell_hi).
struct LevelField {
  int level = 0;
  Coord spacing = 1;
  Point cell_lo;
  Point cell_hi;
  std::vector<std::uint8_t> values;

  std::int64_t num_cells() const;
  bool in_domain(const Point& cell) const;
  std::int64_t cell_index(const Point& cell) const;
  Point cell_at(std::int64_t idx) const;
  bool at(const Point& cell) const { return values[cell_index(cell)] != 0; }
  void set(const Point& cell, bool v) { values[cell_index(cell)] = v ? 1 : 0; }
};

LevelField make_level_field(int level, Coord spacing, Point cell_lo, Point cell_hi, bool value = false);

// Shared per-config context: global labeling plus the S_{L0} membership mask.
class EventEvaluator {
 public:
  EventEvaluator(const Config& config, const ClusterLabeling& labeling, const EventParams& params);

  // Increasing seed event: every subbox x+eL0+[0,L0)^d holds a connected
  // component of S_{L0} with >= ceil(3/4 eta L0^d) sites, and some single
  // component of S cap (x+[0,2L0)^d) contains a qualifying component of
  // every subbox.
  bool event_A(const Point& x) const;

  // Decreasing seed event: every subbox satisfies
  // |S_{L0} cap subbox| <= floor(5/4 eta L0^d).
  bool event_B(const Point& x) const;

  const EventParams& params() const { return params_; }

 private:
  const Config& config_;
  EventParams params_;
  std::vector<std::uint8_t> s_l0_mask_;
  std::int64_t thresh_a_;
  std::int64_t thresh_b_;
};

bool event_A(const Config& config, const Point& x, const EventParams& params);
bool event_B(const Config& config, const Point& x, const EventParams& params);

// Condition S1, first clause: S_R meets B(0,R).
bool event_crossing(const Config& config, const ClusterLabeling& labeling, Coord big_r);
bool event_crossing(const Config& config, Coord big_r);

// Condition S1, second clause: every pair of S_{R/10} sites in B(0,R) is
// connected inside S cap B(0,2R); vacuously true when the set is empty.
bool event_local_uniqueness(const Config& config, const ClusterLabeling& labeling, Coord big_r);
bool event_local_uniqueness(const Config& config, Coord big_r);

// One cascade step: the level-k event holds at x iff the true level-(k-1)
// cells inside Lambda_{x,k} contain two sites at linf distance
// > r_{k-1} L_{k-1}, i.e. their coordinate extremes spread further than
// r_{k-1} cells along some axis.
LevelField cascade_level(const LevelField& prev, Coord spacing_k, Coord l_prev, Coord r_prev);

// Full cascade from the level-0 seed field up to ladder.kmax.
std::vector<LevelField> cascade_field(const LevelField& seeds, const ScaleLadder& ladder);

struct GoodnessField {
  std::vector<LevelField> a_bad;  // index = level
  std::vector<LevelField> b_bad;

  int levels() const { return static_cast<int>(a_bad.size()); }
  bool in_domain(int k, const Point& cell) const { return a_bad[k].in_domain(cell); }
  bool is_a_bad(int k, const Point& cell) const { return checked(a_bad[k], cell); }
  bool is_b_bad(int k, const Point& cell) const { return checked(b_bad[k], cell); }
  bool is_good(int k, const Point& cell) const { return !is_a_bad(k, cell) && !is_b_bad(k, cell); }
  LevelField good_level(int k) const;

 private:
  static bool checked(const LevelField& f, const Point& cell);
};

// Seeds A_bar[0] = not event_A, B_bar[0] = not event_B on every G_0 cell
// whose measurability box x+[-L0,3L0)^d fits the window, then cascades each
// family separately through the ladder levels.
GoodnessField goodness_field(const Config& config, const ClusterLabeling& labeling, const ScaleLadder& ladder,
                             const EventParams& params);

// Run-length-encoded dump, one record per level, of the goodness field.
void dump_goodness(const GoodnessField& field, std::ostream& out);

}  // namespace perco
