#include "perco/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perco {

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;

  explicit UnionFind(std::int64_t n) : parent(n) {
    for (std::int64_t i = 0; i < n; ++i) parent[i] = static_cast<std::int32_t>(i);
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];  // path halving
      x = parent[x];
    }
    return x;
  }
  void merge(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a; else parent[a] = b;
  }
};

int lex_compare(const Point& a, const Point& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

}  // namespace

bool IBox::contains(const Point& p) const {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (p[i] < lo[i] || p[i] >= hi[i]) return false;
  }
  return true;
}

std::int64_t IBox::volume() const {
  std::int64_t v = 1;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= std::max<Coord>(0, hi[i] - lo[i]);
  return v;
}

std::int64_t IBox::cell_index(const Point& p) const {
  std::int64_t idx = 0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    idx = idx * (hi[i] - lo[i]) + (p[i] - lo[i]);
  }
  return idx;
}

Point IBox::cell_point(std::int64_t idx) const {
  Point p(lo.size());
  for (int i = static_cast<int>(lo.size()) - 1; i >= 0; --i) {
    Coord ext = hi[i] - lo[i];
    p[i] = lo[i] + idx % ext;
    idx /= ext;
  }
  return p;
}

IBox anchored_box(const Point& corner, Coord side) {
  IBox b;
  b.lo = corner;
  b.hi = corner;
  for (auto& v : b.hi) v += side;
  return b;
}

ClusterLabeling label_components(const Config& config) {
  const Window& w = config.window();
  std::int64_t n = w.num_sites();
  int d = w.dim();
  UnionFind uf(n);
  for (SiteIndex s = 0; s < n; ++s) {
    if (!config.occupied(s)) continue;
    for (int axis = 0; axis < d; ++axis) {
      SiteIndex t = w.neighbor(s, axis, 1);
      if (t != kNoSite && config.occupied(t)) {
        uf.merge(static_cast<std::int32_t>(s), static_cast<std::int32_t>(t));
      }
    }
  }

  ClusterLabeling out;
  out.component_id.assign(n, -1);
  std::vector<std::int32_t> root_id(n, -1);
  for (SiteIndex s = 0; s < n; ++s) {
    if (!config.occupied(s)) continue;
    std::int32_t r = uf.find(static_cast<std::int32_t>(s));
    if (root_id[r] < 0) {
      root_id[r] = static_cast<std::int32_t>(out.sizes.size());
      out.sizes.push_back(0);
    }
    out.component_id[s] = root_id[r];
    out.sizes[root_id[r]] += 1;
  }

  int num = out.num_components();
  out.l1_diameters.assign(num, 0);
  if (num == 0) return out;

  std::size_t nproj = std::size_t{1} << (d - 1);
  std::vector<Coord> lo(static_cast<std::size_t>(num) * nproj);
  std::vector<Coord> hi(static_cast<std::size_t>(num) * nproj);
  std::vector<std::uint8_t> seen(num, 0);

  auto accumulate = [&](std::int32_t comp, const Point& p) {
    for (std::size_t mask = 0; mask < nproj; ++mask) {
      Coord proj = p[0];
      for (int i = 1; i < d; ++i) proj += (mask >> (i - 1)) & 1 ? -p[i] : p[i];
      std::size_t at = static_cast<std::size_t>(comp) * nproj + mask;
      if (!seen[comp]) {
        lo[at] = hi[at] = proj;
      } else {
        lo[at] = std::min(lo[at], proj);
        hi[at] = std::max(hi[at], proj);
      }
    }
    if (!seen[comp]) seen[comp] = 1;
  };

  if (w.geometry() == Geometry::box) {
    for (SiteIndex s = 0; s < n; ++s) {
      std::int32_t comp = out.component_id[s];
      if (comp >= 0) accumulate(comp, w.point_at(s));
    }
  } else {
    // Unwrap each component by BFS so the projection trick applies; a
    // component that winds around the torus gets clamped to the metric cap
    // d*floor(N/2) below.
    std::vector<Coord> unwrapped(static_cast<std::size_t>(n) * d);
    std::vector<std::uint8_t> visited(n, 0);
    std::vector<SiteIndex> queue;
    for (SiteIndex start = 0; start < n; ++start) {
      if (out.component_id[start] < 0 || visited[start]) continue;
      std::int32_t comp = out.component_id[start];
      visited[start] = 1;
      Point p0 = w.point_at(start);
      for (int i = 0; i < d; ++i) unwrapped[static_cast<std::size_t>(start) * d + i] = p0[i];
      queue.clear();
      queue.push_back(start);
      Point tmp(d);
      for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        SiteIndex s = queue[qi];
        for (int i = 0; i < d; ++i) tmp[i] = unwrapped[static_cast<std::size_t>(s) * d + i];
        accumulate(comp, tmp);
        for (int axis = 0; axis < d; ++axis) {
          for (int dir = -1; dir <= 1; dir += 2) {
            SiteIndex t = w.neighbor(s, axis, dir);
            if (t == kNoSite || visited[t] || !config.occupied(t)) continue;
            visited[t] = 1;
            for (int i = 0; i < d; ++i) {
              unwrapped[static_cast<std::size_t>(t) * d + i] =
                  unwrapped[static_cast<std::size_t>(s) * d + i] + (i == axis ? dir : 0);
            }
            queue.push_back(t);
          }
        }
      }
    }
  }

  for (std::int32_t c = 0; c < num; ++c) {
    Coord best = 0;
    for (std::size_t mask = 0; mask < nproj; ++mask) {
      std::size_t at = static_cast<std::size_t>(c) * nproj + mask;
      best = std::max(best, hi[at] - lo[at]);
    }
    if (w.geometry() == Geometry::torus) {
      best = std::min<Coord>(best, static_cast<Coord>(d) * (w.side(0) / 2));
    }
    out.l1_diameters[c] = best;
  }
  return out;
}

std::vector<std::uint8_t> s_r_mask(const Config& config, const ClusterLabeling& labeling, double r) {
  std::int64_t n = config.window().num_sites();
  if (static_cast<std::int64_t>(labeling.component_id.size()) != n) {
    throw std::invalid_argument("labeling does not match config");
  }
  std::vector<std::uint8_t> mask(n, 0);
  for (SiteIndex s = 0; s < n; ++s) {
    std::int32_t c = labeling.component_id[s];
    if (c >= 0 && static_cast<double>(labeling.l1_diameters[c]) >= r) mask[s] = 1;
  }
  return mask;
}

Config restrict_S_r(const Config& config, const ClusterLabeling& labeling, double r) {
  auto mask = s_r_mask(config, labeling, r);
  return Config::from_bits(config.window(), mask, config.model_tag(), config.seed());
}

bool Labelling::less(const Point& a, const Point& b) const {
  Coord na = linf_norm(a);
  Coord nb = linf_norm(b);
  if (na != nb) return na < nb;
  return lex_compare(a, b) < 0;
}

Config s_infty_proxy(const Config& config, const ClusterLabeling& labeling, ProxyPolicy policy) {
  const Window& w = config.window();
  if (policy == ProxyPolicy::diameter_span) {
    Coord threshold = *std::min_element(w.sides().begin(), w.sides().end());
    return restrict_S_r(config, labeling, static_cast<double>(threshold));
  }
  if (labeling.num_components() == 0) {
    throw std::invalid_argument("s_infty_proxy(largest) on an empty config");
  }
  // Unique max-diameter component; ties by size, then by the labelling-least
  // contained site.
  Coord best_diam = *std::max_element(labeling.l1_diameters.begin(), labeling.l1_diameters.end());
  std::vector<std::int32_t> candidates;
  for (std::int32_t c = 0; c < labeling.num_components(); ++c) {
    if (labeling.l1_diameters[c] == best_diam) candidates.push_back(c);
  }
  if (candidates.size() > 1) {
    std::int64_t best_size = 0;
    for (auto c : candidates) best_size = std::max(best_size, labeling.sizes[c]);
    std::erase_if(candidates, [&](std::int32_t c) { return labeling.sizes[c] != best_size; });
  }
  std::int32_t chosen = candidates[0];
  if (candidates.size() > 1) {
    Labelling ell;
    bool have = false;
    Point best_point;
    std::vector<std::uint8_t> in_race(labeling.num_components(), 0);
    for (auto c : candidates) in_race[c] = 1;
    for (SiteIndex s = 0; s < w.num_sites(); ++s) {
      std::int32_t c = labeling.component_id[s];
      if (c < 0 || !in_race[c]) continue;
      Point p = w.point_at(s);
      if (!have || ell.less(p, best_point)) {
        have = true;
        best_point = p;
        chosen = c;
      }
    }
  }
  std::vector<std::uint8_t> bits(w.num_sites(), 0);
  for (SiteIndex s = 0; s < w.num_sites(); ++s) {
    if (labeling.component_id[s] == chosen) bits[s] = 1;
  }
  return Config::from_bits(w, bits, config.model_tag(), config.seed());
}

Point closest_in_set(const Point& x, const std::vector<Point>& candidates, const Labelling& labelling) {
  if (candidates.empty()) throw std::invalid_argument("closest_in_set on empty set");
  const Point* best = nullptr;
  Point best_delta;
  for (const Point& y : candidates) {
    Point delta = point_sub(y, x);
    if (best == nullptr || labelling.less(delta, best_delta)) {
      best = &y;
      best_delta = std::move(delta);
    }
  }
  return *best;
}

SiteIndex closest_occupied(const Point& x, const Config& mask, const Labelling& labelling) {
  const Window& w = mask.window();
  int d = w.dim();
  Coord rmax = 0;
  if (w.geometry() == Geometry::torus) {
    rmax = w.side(0) / 2;
  } else {
    for (int i = 0; i < d; ++i) {
      rmax = std::max(rmax, std::max(std::abs(x[i] - w.anchor()[i]),
                                     std::abs(w.anchor()[i] + w.side(i) - 1 - x[i])));
    }
  }
  Point p(d);
  SiteIndex best = kNoSite;
  Point best_delta;
  // Expand linf shells; the first non-empty shell holds the minimizer since
  // the labelling orders by |.|_inf first.
  for (Coord r = 0; r <= rmax; ++r) {
    bool found = false;
    auto consider = [&](const Point& cand) {
      if (w.geometry() == Geometry::box && !w.contains(cand)) return;
      SiteIndex s = w.index_of(cand);
      if (!mask.occupied(s)) return;
      Point delta = w.delta(x, w.point_at(s));
      if (best == kNoSite || labelling.less(delta, best_delta)) {
        best = s;
        best_delta = std::move(delta);
      }
      found = true;
    };
    if (r == 0) {
      consider(x);
    } else {
      // faces of the linf sphere: axis `a` pinned to +-r; axes before `a`
      // range over (-r, r), axes after over [-r, r]
      for (int a = 0; a < d; ++a) {
        std::vector<Coord> offs(d, 0);
        for (int sign = -1; sign <= 1; sign += 2) {
          for (int i = 0; i < d; ++i) offs[i] = i < a ? -(r - 1) : -r;
          offs[a] = sign * r;
          while (true) {
            for (int i = 0; i < d; ++i) p[i] = x[i] + offs[i];
            consider(p);
            int axis = d - 1;
            while (axis >= 0) {
              if (axis == a) {
                --axis;
                continue;
              }
              Coord cap = axis < a ? r - 1 : r;
              if (++offs[axis] <= cap) break;
              offs[axis] = axis < a ? -(r - 1) : -r;
              --axis;
            }
            if (axis < 0) break;
          }
        }
      }
    }
    if (found) return best;
  }
  throw std::invalid_argument("closest_occupied: mask has no occupied site");
}

ChemicalBfs::ChemicalBfs(const Config& config) : config_(config) {
  dist_.assign(config.window().num_sites(), -1);
}

void ChemicalBfs::reset() {
  std::fill(dist_.begin(), dist_.end(), -1);
  queue_.clear();
}

const std::vector<std::int32_t>& ChemicalBfs::distances_from(SiteIndex from) {
  if (!config_.occupied(from)) throw std::invalid_argument("BFS source not occupied");
  reset();
  const Window& w = config_.window();
  int d = w.dim();
  dist_[from] = 0;
  queue_.push_back(from);
  for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
    SiteIndex s = queue_[qi];
    std::int32_t nd = dist_[s] + 1;
    for (int axis = 0; axis < d; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        SiteIndex t = w.neighbor(s, axis, dir);
        if (t == kNoSite || dist_[t] >= 0 || !config_.occupied(t)) continue;
        dist_[t] = nd;
        queue_.push_back(t);
      }
    }
  }
  return dist_;
}

std::optional<std::int64_t> ChemicalBfs::distance(SiteIndex from, SiteIndex to) {
  if (!config_.occupied(from) || !config_.occupied(to)) {
    throw std::invalid_argument("chemical distance endpoint not occupied");
  }
  if (from == to) return 0;
  reset();
  const Window& w = config_.window();
  int d = w.dim();
  dist_[from] = 0;
  queue_.push_back(from);
  for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
    SiteIndex s = queue_[qi];
    std::int32_t nd = dist_[s] + 1;
    for (int axis = 0; axis < d; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        SiteIndex t = w.neighbor(s, axis, dir);
        if (t == kNoSite || dist_[t] >= 0 || !config_.occupied(t)) continue;
        if (t == to) return nd;
        dist_[t] = nd;
        queue_.push_back(t);
      }
    }
  }
  return std::nullopt;
}

std::vector<SiteIndex> ChemicalBfs::ball(SiteIndex from, double r) {
  if (!config_.occupied(from)) throw std::invalid_argument("chemical ball center not occupied");
  if (r < 0) throw std::invalid_argument("radius must be nonnegative");
  auto depth = static_cast<std::int32_t>(std::floor(r));
  reset();
  const Window& w = config_.window();
  int d = w.dim();
  dist_[from] = 0;
  queue_.push_back(from);
  for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
    SiteIndex s = queue_[qi];
    std::int32_t nd = dist_[s] + 1;
    if (nd > depth) break;
    for (int axis = 0; axis < d; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        SiteIndex t = w.neighbor(s, axis, dir);
        if (t == kNoSite || dist_[t] >= 0 || !config_.occupied(t)) continue;
        dist_[t] = nd;
        queue_.push_back(t);
      }
    }
  }
  std::vector<SiteIndex> out(queue_.begin(), queue_.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::int32_t ChemicalBfs::eccentricity(SiteIndex from, SiteIndex* farthest) {
  distances_from(from);
  std::int32_t best = 0;
  SiteIndex arg = from;
  for (SiteIndex s = 0; s < static_cast<SiteIndex>(dist_.size()); ++s) {
    if (dist_[s] > best) {
      best = dist_[s];
      arg = s;
    }
  }
  if (farthest != nullptr) *farthest = arg;
  return best;
}

std::optional<std::int64_t> chemical_distance(const Config& config, const Point& x, const Point& y) {
  ChemicalBfs bfs(config);
  return bfs.distance(config.window().index_of(x), config.window().index_of(y));
}

std::vector<SiteIndex> chemical_ball(const Config& config, const Point& x, double r) {
  ChemicalBfs bfs(config);
  return bfs.ball(config.window().index_of(x), r);
}

std::optional<std::int64_t> pseudo_distance(const Config& config, const Config& proxy, const Point& x,
                                            const Point& y, const Labelling& labelling) {
  SiteIndex px = closest_occupied(x, proxy, labelling);
  SiteIndex py = closest_occupied(y, proxy, labelling);
  ChemicalBfs bfs(config);
  return bfs.distance(px, py);
}

BoxLabeling label_in_box(const Config& config, const IBox& box, const std::uint8_t* filter) {
  const Window& w = config.window();
  int d = w.dim();
  for (int i = 0; i < d; ++i) {
    if (box.hi[i] - box.lo[i] > w.side(i)) {
      throw std::invalid_argument("box span exceeds window period");
    }
  }
  BoxLabeling out;
  out.box = box;
  std::int64_t vol = box.volume();
  out.label.assign(vol, -1);

  std::vector<SiteIndex> site(vol, kNoSite);
  std::vector<std::uint8_t> present(vol, 0);
  for (std::int64_t c = 0; c < vol; ++c) {
    Point p = box.cell_point(c);
    if (w.geometry() == Geometry::box && !w.contains(p)) continue;
    SiteIndex s = w.index_of(p);
    if (!config.occupied(s)) continue;
    if (filter != nullptr && !filter[s]) continue;
    site[c] = s;
    present[c] = 1;
  }

  UnionFind uf(vol);
  std::vector<std::int64_t> stride(d, 1);
  for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * (box.hi[i + 1] - box.lo[i + 1]);
  for (std::int64_t c = 0; c < vol; ++c) {
    if (!present[c]) continue;
    Point p = box.cell_point(c);
    for (int axis = 0; axis < d; ++axis) {
      if (p[axis] + 1 >= box.hi[axis]) continue;
      std::int64_t t = c + stride[axis];
      if (present[t]) uf.merge(static_cast<std::int32_t>(c), static_cast<std::int32_t>(t));
    }
  }
  std::vector<std::int32_t> root_id(vol, -1);
  for (std::int64_t c = 0; c < vol; ++c) {
    if (!present[c]) continue;
    std::int32_t r = uf.find(static_cast<std::int32_t>(c));
    if (root_id[r] < 0) {
      root_id[r] = static_cast<std::int32_t>(out.sizes.size());
      out.sizes.push_back(0);
    }
    out.label[c] = root_id[r];
    out.sizes[root_id[r]] += 1;
  }
  return out;
}

std::optional<std::vector<SiteIndex>> bfs_path_in_box(const Config& config, const IBox& box, SiteIndex source,
                                                      const std::vector<std::uint8_t>& target_mask) {
  const Window& w = config.window();
  int d = w.dim();
  std::int64_t vol = box.volume();
  Point src_pt = w.point_at(source);
  if (!box.contains(src_pt)) throw std::invalid_argument("bfs source outside box");
  if (!config.occupied(source)) throw std::invalid_argument("bfs source not occupied");

  std::vector<std::int64_t> parent(vol, -2);  // -2 unvisited, -1 root
  std::vector<std::int64_t> queue;
  std::int64_t src_cell = box.cell_index(src_pt);
  parent[src_cell] = -1;
  queue.push_back(src_cell);

  auto emit = [&](std::int64_t cell) {
    std::vector<SiteIndex> path;
    for (std::int64_t c = cell; c != -1; c = parent[c]) {
      path.push_back(w.index_of(box.cell_point(c)));
    }
    std::reverse(path.begin(), path.end());
    return path;
  };
  if (target_mask[source]) return emit(src_cell);

  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    std::int64_t c = queue[qi];
    Point p = box.cell_point(c);
    for (int axis = 0; axis < d; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        Point q = p;
        q[axis] += dir;
        if (!box.contains(q)) continue;
        if (w.geometry() == Geometry::box && !w.contains(q)) continue;
        std::int64_t tc = box.cell_index(q);
        if (parent[tc] != -2) continue;
        SiteIndex ts = w.index_of(q);
        if (!config.occupied(ts)) continue;
        parent[tc] = c;
        if (target_mask[ts]) return emit(tc);
        queue.push_back(tc);
      }
    }
  }
  return std::nullopt;
}

}  // namespace perco
