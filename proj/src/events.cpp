#include "perco/events.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

namespace perco {

namespace {

Coord floor_div(Coord a, Coord b) {
  Coord q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

Coord ceil_div(Coord a, Coord b) { return -floor_div(-a, b); }

double int_pow(Coord base, int exp) {
  double v = 1;
  for (int i = 0; i < exp; ++i) v *= static_cast<double>(base);
  return v;
}

}  // namespace

void EventParams::validate() const {
  if (L0 < 2) throw std::invalid_argument("event params require L0 >= 2");
  if (!(eta_hat > 0.0 && eta_hat <= 1.0)) throw std::invalid_argument("eta_hat must lie in (0,1]");
}

std::int64_t EventParams::size_lower_threshold(int dim) const {
  double q = 0.75 * eta_hat * int_pow(L0, dim);
  return static_cast<std::int64_t>(std::ceil(q - 1e-9));
}

std::int64_t EventParams::count_upper_threshold(int dim) const {
  double q = 1.25 * eta_hat * int_pow(L0, dim);
  return static_cast<std::int64_t>(std::floor(q + 1e-9));
}

std::int64_t LevelField::num_cells() const {
  std::int64_t n = 1;
  for (std::size_t i = 0; i < cell_lo.size(); ++i) n *= std::max<Coord>(0, cell_hi[i] - cell_lo[i]);
  return n;
}

bool LevelField::in_domain(const Point& cell) const {
  for (std::size_t i = 0; i < cell_lo.size(); ++i) {
    if (cell[i] < cell_lo[i] || cell[i] >= cell_hi[i]) return false;
  }
  return true;
}

std::int64_t LevelField::cell_index(const Point& cell) const {
  std::int64_t idx = 0;
  for (std::size_t i = 0; i < cell_lo.size(); ++i) {
    idx = idx * (cell_hi[i] - cell_lo[i]) + (cell[i] - cell_lo[i]);
  }
  return idx;
}

Point LevelField::cell_at(std::int64_t idx) const {
  Point p(cell_lo.size());
  for (int i = static_cast<int>(cell_lo.size()) - 1; i >= 0; --i) {
    Coord ext = cell_hi[i] - cell_lo[i];
    p[i] = cell_lo[i] + idx % ext;
    idx /= ext;
  }
  return p;
}

LevelField make_level_field(int level, Coord spacing, Point cell_lo, Point cell_hi, bool value) {
  LevelField f;
  f.level = level;
  f.spacing = spacing;
  f.cell_lo = std::move(cell_lo);
  f.cell_hi = std::move(cell_hi);
  f.values.assign(f.num_cells(), value ? 1 : 0);
  return f;
}

EventEvaluator::EventEvaluator(const Config& config, const ClusterLabeling& labeling, const EventParams& params)
    : config_(config), params_(params) {
  params_.validate();
  if (config.window().geometry() != Geometry::box) {
    throw std::invalid_argument("seed events are defined on box windows");
  }
  s_l0_mask_ = s_r_mask(config, labeling, static_cast<double>(params.L0));
  thresh_a_ = params_.size_lower_threshold(config.window().dim());
  thresh_b_ = params_.count_upper_threshold(config.window().dim());
}

bool EventEvaluator::event_A(const Point& x) const {
  const Window& w = config_.window();
  int d = w.dim();
  Coord L0 = params_.L0;
  {
    Point lo = x;
    Point hi = x;
    for (int i = 0; i < d; ++i) {
      lo[i] -= L0;
      hi[i] += 3 * L0 - 1;
    }
    if (!w.contains(lo) || !w.contains(hi)) {
      throw std::out_of_range("event anchor box x+[-L0,3L0)^d leaves the window");
    }
  }

  // labels of S cap (x + [0,2L0)^d), adjacency within the big box
  BoxLabeling big = label_in_box(config_, anchored_box(x, 2 * L0));

  // For each subbox, the set of big-box labels of its qualifying components;
  // the event needs one label common to all 2^d subboxes.
  std::vector<std::int32_t> common;
  bool first = true;
  Point corner(d);
  for (std::uint32_t e = 0; e < (1u << d); ++e) {
    for (int i = 0; i < d; ++i) corner[i] = x[i] + ((e >> i) & 1 ? L0 : 0);
    BoxLabeling sub = label_in_box(config_, anchored_box(corner, L0), s_l0_mask_.data());

    std::set<std::int32_t> labels;
    std::vector<std::uint8_t> qualifying(sub.sizes.size(), 0);
    for (std::size_t c = 0; c < sub.sizes.size(); ++c) {
      if (sub.sizes[c] >= thresh_a_) qualifying[c] = 1;
    }
    bool any = false;
    for (std::int64_t cell = 0; cell < sub.box.volume(); ++cell) {
      std::int32_t c = sub.label[cell];
      if (c < 0 || !qualifying[c]) continue;
      any = true;
      labels.insert(big.label[big.box.cell_index(sub.box.cell_point(cell))]);
    }
    if (!any) return false;
    if (first) {
      common.assign(labels.begin(), labels.end());
      first = false;
    } else {
      std::vector<std::int32_t> keep;
      for (auto v : common) {
        if (labels.count(v)) keep.push_back(v);
      }
      common.swap(keep);
    }
    if (common.empty()) return false;
  }
  return true;
}

bool EventEvaluator::event_B(const Point& x) const {
  const Window& w = config_.window();
  int d = w.dim();
  Coord L0 = params_.L0;
  {
    Point lo = x;
    Point hi = x;
    for (int i = 0; i < d; ++i) {
      lo[i] -= L0;
      hi[i] += 3 * L0 - 1;
    }
    if (!w.contains(lo) || !w.contains(hi)) {
      throw std::out_of_range("event anchor box x+[-L0,3L0)^d leaves the window");
    }
  }
  Point corner(d);
  for (std::uint32_t e = 0; e < (1u << d); ++e) {
    for (int i = 0; i < d; ++i) corner[i] = x[i] + ((e >> i) & 1 ? L0 : 0);
    IBox sub = anchored_box(corner, L0);
    std::int64_t count = 0;
    for (std::int64_t cell = 0; cell < sub.volume(); ++cell) {
      if (s_l0_mask_[w.index_of(sub.cell_point(cell))]) ++count;
    }
    if (count > thresh_b_) return false;
  }
  return true;
}

bool event_A(const Config& config, const Point& x, const EventParams& params) {
  auto labeling = label_components(config);
  return EventEvaluator(config, labeling, params).event_A(x);
}

bool event_B(const Config& config, const Point& x, const EventParams& params) {
  auto labeling = label_components(config);
  return EventEvaluator(config, labeling, params).event_B(x);
}

bool event_crossing(const Config& config, const ClusterLabeling& labeling, Coord big_r) {
  const Window& w = config.window();
  Point zero(w.dim(), 0);
  Point lo(w.dim(), -big_r);
  Point hi(w.dim(), big_r);
  if (!w.contains(lo) || !w.contains(hi)) throw std::out_of_range("window too small for B(0,R)");
  for (SiteIndex s : linf_ball(zero, static_cast<double>(big_r), w)) {
    std::int32_t c = labeling.component_id[s];
    if (c >= 0 && labeling.l1_diameters[c] >= big_r) return true;
  }
  return false;
}

bool event_crossing(const Config& config, Coord big_r) {
  auto labeling = label_components(config);
  return event_crossing(config, labeling, big_r);
}

bool event_local_uniqueness(const Config& config, const ClusterLabeling& labeling, Coord big_r) {
  const Window& w = config.window();
  int d = w.dim();
  Point lo(d, -2 * big_r);
  Point hi(d, 2 * big_r);
  if (!w.contains(lo) || !w.contains(hi)) throw std::out_of_range("window too small for B(0,2R)");

  auto mask = s_r_mask(config, labeling, static_cast<double>(big_r) / 10.0);
  IBox big{Point(d, -2 * big_r), Point(d, 2 * big_r + 1)};
  BoxLabeling restricted = label_in_box(config, big);

  Point zero(d, 0);
  std::int32_t found = -1;
  for (SiteIndex s : linf_ball(zero, static_cast<double>(big_r), w)) {
    if (!mask[s]) continue;
    std::int32_t lab = restricted.label[big.cell_index(w.point_at(s))];
    if (found < 0) {
      found = lab;
    } else if (lab != found) {
      return false;
    }
  }
  return true;  // vacuous when no S_{R/10} site lies in the ball
}

bool event_local_uniqueness(const Config& config, Coord big_r) {
  auto labeling = label_components(config);
  return event_local_uniqueness(config, labeling, big_r);
}

LevelField cascade_level(const LevelField& prev, Coord spacing_k, Coord l_prev, Coord r_prev) {
  int d = static_cast<int>(prev.cell_lo.size());
  if (spacing_k != prev.spacing * l_prev) throw std::invalid_argument("spacing mismatch in cascade");
  Point lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = ceil_div(prev.cell_lo[i], l_prev);
    hi[i] = floor_div(prev.cell_hi[i] - l_prev, l_prev) + 1;
    if (hi[i] <= lo[i]) {
      throw std::invalid_argument("cascade level has empty domain: ladder exceeds window");
    }
  }
  LevelField out = make_level_field(prev.level + 1, spacing_k, lo, hi);

  Point block(d);
  Point sub(d);
  for (std::int64_t idx = 0; idx < out.num_cells(); ++idx) {
    block = out.cell_at(idx);
    // coordinate extremes of true prev-cells in the block
    Point mn(d, 0), mx(d, 0);
    bool any = false;
    std::int64_t block_cells = 1;
    for (int i = 0; i < d; ++i) block_cells *= l_prev;
    for (std::int64_t j = 0; j < block_cells; ++j) {
      std::int64_t t = j;
      for (int i = d - 1; i >= 0; --i) {
        sub[i] = block[i] * l_prev + (t % l_prev);
        t /= l_prev;
      }
      if (!prev.at(sub)) continue;
      if (!any) {
        mn = sub;
        mx = sub;
        any = true;
      } else {
        for (int i = 0; i < d; ++i) {
          mn[i] = std::min(mn[i], sub[i]);
          mx[i] = std::max(mx[i], sub[i]);
        }
      }
    }
    if (!any) continue;
    // spread in absolute units: (mx - mn) * prev.spacing > r_prev * prev.spacing
    bool far = false;
    for (int i = 0; i < d; ++i) far = far || (mx[i] - mn[i] > r_prev);
    out.values[idx] = far ? 1 : 0;
  }
  return out;
}

std::vector<LevelField> cascade_field(const LevelField& seeds, const ScaleLadder& ladder) {
  if (seeds.level != 0 || seeds.spacing != ladder.L0) {
    throw std::invalid_argument("cascade seeds must live on G_0 with spacing L0");
  }
  std::vector<LevelField> out;
  out.push_back(seeds);
  for (int k = 1; k <= ladder.kmax; ++k) {
    out.push_back(cascade_level(out.back(), ladder.L[k], ladder.l[k - 1], ladder.r[k - 1]));
  }
  return out;
}

bool GoodnessField::checked(const LevelField& f, const Point& cell) {
  if (!f.in_domain(cell)) throw std::out_of_range("goodness cell outside the field domain");
  return f.at(cell);
}

LevelField GoodnessField::good_level(int k) const {
  LevelField out = a_bad[k];
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (!a_bad[k].values[i] && !b_bad[k].values[i]) ? 1 : 0;
  }
  return out;
}

GoodnessField goodness_field(const Config& config, const ClusterLabeling& labeling, const ScaleLadder& ladder,
                             const EventParams& params) {
  const Window& w = config.window();
  if (w.geometry() != Geometry::box) throw std::invalid_argument("goodness fields require a box window");
  if (params.L0 != ladder.L0) throw std::invalid_argument("params.L0 must equal ladder.L0");
  int d = w.dim();
  Coord L0 = params.L0;

  // cells c with c*L0 + [-L0, 3L0)^d inside the window
  Point lo(d), hi(d);
  for (int i = 0; i < d; ++i) {
    lo[i] = ceil_div(w.anchor()[i] + L0, L0);
    hi[i] = floor_div(w.anchor()[i] + w.side(i) - 3 * L0, L0) + 1;
    if (hi[i] <= lo[i]) throw std::invalid_argument("window too small for any seed event anchor");
  }

  EventEvaluator eval(config, labeling, params);
  LevelField a0 = make_level_field(0, L0, lo, hi);
  LevelField b0 = make_level_field(0, L0, lo, hi);
  Point x(d);
  for (std::int64_t idx = 0; idx < a0.num_cells(); ++idx) {
    Point cell = a0.cell_at(idx);
    for (int i = 0; i < d; ++i) x[i] = cell[i] * L0;
    a0.values[idx] = eval.event_A(x) ? 0 : 1;
    b0.values[idx] = eval.event_B(x) ? 0 : 1;
  }

  GoodnessField out;
  out.a_bad = cascade_field(a0, ladder);
  out.b_bad = cascade_field(b0, ladder);
  return out;
}

void dump_goodness(const GoodnessField& field, std::ostream& out) {
  for (int k = 0; k < field.levels(); ++k) {
    LevelField good = field.good_level(k);
    out << "level=" << k << " spacing=" << good.spacing << " lo=";
    for (std::size_t i = 0; i < good.cell_lo.size(); ++i) out << (i ? "," : "") << good.cell_lo[i];
    out << " hi=";
    for (std::size_t i = 0; i < good.cell_hi.size(); ++i) out << (i ? "," : "") << good.cell_hi[i];
    out << " rle=";
    std::int64_t n = good.num_cells();
    std::int64_t i = 0;
    bool first = true;
    while (i < n) {
      std::int64_t j = i;
      while (j < n && good.values[j] == good.values[i]) ++j;
      out << (first ? "" : ",") << int(good.values[i]) << "x" << (j - i);
      first = false;
      i = j;
    }
    out << "\n";
  }
}

}  // namespace perco
