#include "perco/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace perco {

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  if (a != 0 && b > std::numeric_limits<std::int64_t>::max() / a) {
    throw std::overflow_error("window site count overflows 64 bits");
  }
  return a * b;
}

Coord floor_mod(Coord v, Coord n) {
  Coord m = v % n;
  return m < 0 ? m + n : m;
}

}  // namespace

Coord l1_norm(const Point& p) {
  Coord s = 0;
  for (Coord c : p) s += std::llabs(c);
  return s;
}

Coord linf_norm(const Point& p) {
  Coord m = 0;
  for (Coord c : p) m = std::max(m, static_cast<Coord>(std::llabs(c)));
  return m;
}

Point point_add(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  Point r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

Point point_sub(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  Point r(a);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

Point scaled_unit(int dim, int axis, Coord value) {
  Point p(dim, 0);
  p[axis] = value;
  return p;
}

Window::Window(Geometry geometry, Point anchor, std::vector<Coord> sides)
    : geometry_(geometry), anchor_(std::move(anchor)), sides_(std::move(sides)) {
  if (sides_.size() < 2) throw std::invalid_argument("window dimension must be >= 2");
  if (anchor_.size() != sides_.size()) throw std::invalid_argument("anchor/sides dimension mismatch");
  for (Coord s : sides_) {
    if (s < 1) throw std::invalid_argument("window sides must be >= 1");
  }
  if (geometry_ == Geometry::torus) {
    for (Coord s : sides_) {
      if (s != sides_[0]) throw std::invalid_argument("torus window requires equal sides");
    }
    for (Coord a : anchor_) {
      if (a != 0) throw std::invalid_argument("torus window requires zero anchor");
    }
  }
  strides_.assign(sides_.size(), 1);
  num_sites_ = 1;
  for (int i = static_cast<int>(sides_.size()) - 1; i >= 0; --i) {
    strides_[i] = num_sites_;
    num_sites_ = checked_mul(num_sites_, sides_[i]);
  }
}

Window Window::box(Point anchor, std::vector<Coord> sides) {
  return Window(Geometry::box, std::move(anchor), std::move(sides));
}

Window Window::centered_box(int dim, Coord half_side) {
  return Window(Geometry::box, Point(dim, -half_side), std::vector<Coord>(dim, 2 * half_side + 1));
}

Window Window::torus(int dim, Coord n) {
  return Window(Geometry::torus, Point(dim, 0), std::vector<Coord>(dim, n));
}

bool Window::contains(const Point& p) const {
  if (static_cast<int>(p.size()) != dim()) return false;
  if (geometry_ == Geometry::torus) return true;
  for (int i = 0; i < dim(); ++i) {
    Coord off = p[i] - anchor_[i];
    if (off < 0 || off >= sides_[i]) return false;
  }
  return true;
}

SiteIndex Window::index_of(const Point& p) const {
  if (static_cast<int>(p.size()) != dim()) throw std::invalid_argument("point dimension mismatch");
  std::int64_t idx = 0;
  for (int i = 0; i < dim(); ++i) {
    Coord off = p[i] - anchor_[i];
    if (geometry_ == Geometry::torus) {
      off = floor_mod(off, sides_[i]);
    } else if (off < 0 || off >= sides_[i]) {
      throw std::out_of_range("point outside box window");
    }
    idx += off * strides_[i];
  }
  return idx;
}

Point Window::point_at(SiteIndex s) const {
  if (s < 0 || s >= num_sites_) throw std::out_of_range("site index out of range");
  Point p(dim());
  for (int i = 0; i < dim(); ++i) {
    p[i] = anchor_[i] + (s / strides_[i]) % sides_[i];
  }
  return p;
}

SiteIndex Window::neighbor(SiteIndex s, int axis, int dir) const {
  Coord off = (s / strides_[axis]) % sides_[axis];
  if (geometry_ == Geometry::torus) {
    Coord n = sides_[axis];
    Coord noff = floor_mod(off + dir, n);
    return s + (noff - off) * strides_[axis];
  }
  Coord noff = off + dir;
  if (noff < 0 || noff >= sides_[axis]) return kNoSite;
  return s + static_cast<Coord>(dir) * strides_[axis];
}

Point Window::delta(const Point& a, const Point& b) const {
  Point d = point_sub(b, a);
  if (geometry_ == Geometry::torus) {
    Coord n = sides_[0];
    for (Coord& v : d) {
      v = floor_mod(v, n);
      if (2 * v > n) v -= n;  // representative in (-N/2, N/2]
    }
  }
  return d;
}

Coord Window::linf_distance(const Point& a, const Point& b) const {
  return linf_norm(delta(a, b));
}

Coord Window::l1_distance(const Point& a, const Point& b) const {
  return l1_norm(delta(a, b));
}

bool Window::operator==(const Window& o) const {
  return geometry_ == o.geometry_ && anchor_ == o.anchor_ && sides_ == o.sides_;
}

std::vector<SiteIndex> linf_ball(const Point& center, double r, const Window& w) {
  if (r < 0) throw std::invalid_argument("radius must be nonnegative");
  if (static_cast<int>(center.size()) != w.dim()) throw std::invalid_argument("center dimension mismatch");
  if (w.geometry() == Geometry::box && !w.contains(center)) {
    throw std::invalid_argument("ball center outside box window");
  }
  Coord rad = static_cast<Coord>(std::floor(r));
  int d = w.dim();
  // Per-axis offset ranges, clipped (box) or capped at a full period (torus).
  std::vector<std::vector<Coord>> axis_offsets(d);
  for (int i = 0; i < d; ++i) {
    if (w.geometry() == Geometry::torus) {
      Coord n = w.side(i);
      Coord lo = -std::min(rad, n / 2);
      Coord hi = std::min(rad, (n - 1) / 2);
      for (Coord o = lo; o <= hi; ++o) axis_offsets[i].push_back(o);
    } else {
      Coord lo = std::max(center[i] - rad, w.anchor()[i]) - center[i];
      Coord hi = std::min(center[i] + rad, w.anchor()[i] + w.side(i) - 1) - center[i];
      for (Coord o = lo; o <= hi; ++o) axis_offsets[i].push_back(o);
    }
  }
  std::vector<SiteIndex> out;
  Point p(center);
  std::vector<std::size_t> cursor(d, 0);
  while (true) {
    for (int i = 0; i < d; ++i) p[i] = center[i] + axis_offsets[i][cursor[i]];
    out.push_back(w.index_of(p));
    int axis = d - 1;
    while (axis >= 0 && ++cursor[axis] == axis_offsets[axis].size()) {
      cursor[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return out;
}

L1DiameterAccumulator::L1DiameterAccumulator(int dim)
    : dim_(dim), empty_(true) {
  if (dim < 2 || dim > 20) throw std::invalid_argument("unsupported dimension");
  std::size_t m = std::size_t{1} << (dim - 1);
  lo_.assign(m, 0);
  hi_.assign(m, 0);
}

void L1DiameterAccumulator::add(const Point& p) {
  std::size_t m = lo_.size();
  for (std::size_t mask = 0; mask < m; ++mask) {
    // sign of axis 0 fixed to +1; bit i-1 of mask flips axis i
    Coord proj = p[0];
    for (int i = 1; i < dim_; ++i) {
      proj += (mask >> (i - 1)) & 1 ? -p[i] : p[i];
    }
    if (empty_) {
      lo_[mask] = hi_[mask] = proj;
    } else {
      lo_[mask] = std::min(lo_[mask], proj);
      hi_[mask] = std::max(hi_[mask], proj);
    }
  }
  empty_ = false;
}

Coord L1DiameterAccumulator::diameter() const {
  if (empty_) throw std::invalid_argument("l1_diameter of empty set");
  Coord best = 0;
  for (std::size_t mask = 0; mask < lo_.size(); ++mask) {
    best = std::max(best, hi_[mask] - lo_[mask]);
  }
  return best;
}

Coord l1_diameter(const std::vector<Point>& sites) {
  if (sites.empty()) throw std::invalid_argument("l1_diameter of empty set");
  L1DiameterAccumulator acc(static_cast<int>(sites[0].size()));
  for (const Point& p : sites) acc.add(p);
  return acc.diameter();
}

}  // namespace perco
