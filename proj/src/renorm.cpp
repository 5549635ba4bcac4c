#include "perco/renorm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace perco {

namespace {

Coord floor_div(Coord a, Coord b) {
  Coord q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

Point cell_of(const Point& v, Coord spacing) {
  Point c(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] % spacing != 0) throw std::invalid_argument("path vertex not on the renormalized lattice");
    c[i] = v[i] / spacing;
  }
  return c;
}

double int_pow(Coord base, int exp) {
  double v = 1;
  for (int i = 0; i < exp; ++i) v *= static_cast<double>(base);
  return v;
}

}  // namespace

void LatticePath::validate() const {
  if (vertices.empty()) throw std::invalid_argument("lattice path must have at least one vertex");
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    if (l1_norm(point_sub(vertices[i + 1], vertices[i])) != spacing) {
      throw std::invalid_argument("lattice path is not nearest-neighbor at its level");
    }
  }
}

LatticePath descend_path(const LatticePath& pi, const GoodnessField& goodness, const ScaleLadder& ladder) {
  pi.validate();
  int k = pi.level;
  if (k < 1 || k >= goodness.levels()) throw std::invalid_argument("descend_path needs 1 <= level < goodness levels");
  if (pi.spacing != ladder.L[k]) throw std::invalid_argument("path spacing does not match ladder L_k");
  const Coord spacing_prev = ladder.L[k - 1];
  const Coord l_prev = ladder.l[k - 1];
  const Coord r_prev = ladder.r[k - 1];
  const int d = static_cast<int>(pi.vertices.front().size());
  const std::int64_t m = pi.steps();

  std::vector<Point> block(pi.vertices.size());
  for (std::size_t i = 0; i < pi.vertices.size(); ++i) {
    block[i] = cell_of(pi.vertices[i], ladder.L[k]);
    if (!goodness.in_domain(k, block[i]) || !goodness.is_good(k, block[i])) {
      throw std::invalid_argument("descend_path requires every path vertex to be k-good");
    }
  }

  // level-(k-1) bad cells of a block, as offsets in [0, l_prev)^d
  auto bad_offsets = [&](const Point& blk) {
    std::vector<Point> out;
    Point cell(d);
    std::int64_t n = 1;
    for (int i = 0; i < d; ++i) n *= l_prev;
    for (std::int64_t j = 0; j < n; ++j) {
      std::int64_t t = j;
      for (int i = d - 1; i >= 0; --i) {
        cell[i] = blk[i] * l_prev + (t % l_prev);
        t /= l_prev;
      }
      if (goodness.is_a_bad(k - 1, cell) || goodness.is_b_bad(k - 1, cell)) {
        Point off(d);
        for (int i = 0; i < d; ++i) off[i] = cell[i] - blk[i] * l_prev;
        out.push_back(off);
      }
    }
    return out;
  };

  std::vector<std::vector<Point>> bad(pi.vertices.size());
  for (std::size_t i = 0; i < pi.vertices.size(); ++i) bad[i] = bad_offsets(block[i]);

  LatticePath out;
  out.level = k - 1;
  out.spacing = spacing_prev;

  if (m == 0) {
    // first good cell of the only block, row-major
    Point cell(d);
    std::int64_t n = 1;
    for (int i = 0; i < d; ++i) n *= l_prev;
    for (std::int64_t j = 0; j < n; ++j) {
      std::int64_t t = j;
      for (int i = d - 1; i >= 0; --i) {
        cell[i] = block[0][i] * l_prev + (t % l_prev);
        t /= l_prev;
      }
      if (goodness.is_good(k - 1, cell)) {
        Point v(d);
        for (int i = 0; i < d; ++i) v[i] = cell[i] * spacing_prev;
        out.vertices.push_back(v);
        return out;
      }
    }
    throw std::runtime_error("descend_path: no good cell in a k-good block; goodness field corrupted");
  }

  // step axes and the orthogonal hyperplane axes alpha_i
  std::vector<int> step_axis(m);
  std::vector<int> alpha(m);
  for (std::int64_t i = 0; i < m; ++i) {
    int axis = -1;
    for (int a = 0; a < d; ++a) {
      if (pi.vertices[i + 1][a] != pi.vertices[i][a]) axis = a;
    }
    step_axis[i] = axis;
    alpha[i] = axis == 0 ? 1 : 0;  // smallest axis orthogonal to the step
  }

  // hyperplane offsets j_i in [0, 4 r_prev], smallest admissible first,
  // avoiding every bad cell of blocks i and i+1 along axis alpha_i
  std::vector<Coord> hyper(m, -1);
  for (std::int64_t i = 0; i < m; ++i) {
    std::set<Coord> blocked;
    for (const Point& off : bad[i]) blocked.insert(off[alpha[i]]);
    for (const Point& off : bad[i + 1]) blocked.insert(off[alpha[i]]);
    for (Coord j = 0; j <= 4 * r_prev; ++j) {
      if (!blocked.count(j)) {
        hyper[i] = j;
        break;
      }
    }
    if (hyper[i] < 0) {
      throw std::runtime_error("descend_path: no admissible hyperplane offset; goodness field corrupted");
    }
  }

  auto vertex_at = [&](const Point& blk, int axis, Coord off) {
    Point v(d);
    for (int i = 0; i < d; ++i) v[i] = blk[i] * l_prev * spacing_prev;
    v[axis] += off * spacing_prev;
    return v;
  };
  auto append_line = [&](const Point& target) {
    Point cur = out.vertices.back();
    int axis = -1;
    for (int a = 0; a < d; ++a) {
      if (target[a] != cur[a]) axis = a;
    }
    if (axis < 0) return;
    Coord dir = target[axis] > cur[axis] ? spacing_prev : -spacing_prev;
    while (cur[axis] != target[axis]) {
      cur[axis] += dir;
      out.vertices.push_back(cur);
    }
  };

  out.vertices.push_back(vertex_at(block[0], alpha[0], hyper[0]));
  for (std::int64_t i = 0; i < m; ++i) {
    if (i >= 1) {
      // connector z*_i -> y*_i inside block i
      Point z_star = vertex_at(block[i], alpha[i - 1], hyper[i - 1]);
      Point y_star = vertex_at(block[i], alpha[i], hyper[i]);
      if (z_star != y_star) {
        if (alpha[i] != alpha[i - 1]) {
          Point corner = vertex_at(block[i], alpha[i - 1], hyper[i - 1]);
          corner[alpha[i]] += hyper[i] * spacing_prev;
          append_line(corner);
          append_line(y_star);
        } else {
          // same hyperplane axis: detour along the incoming step axis
          int beta = step_axis[i - 1];
          Coord detour = -1;
          for (Coord cand = 0; cand <= 2 * r_prev && detour < 0; ++cand) {
            bool hit = false;
            for (const Point& off : bad[i]) {
              bool other_zero = true;
              for (int a = 0; a < d; ++a) {
                if (a == alpha[i] || a == beta) continue;
                if (off[a] != 0) other_zero = false;
              }
              if (other_zero && off[beta] == cand) hit = true;
            }
            if (!hit) detour = cand;
          }
          if (detour < 0) {
            throw std::runtime_error("descend_path: no admissible detour line; goodness field corrupted");
          }
          Point via1 = z_star;
          via1[beta] += detour * spacing_prev;
          Point via2 = y_star;
          via2[beta] += detour * spacing_prev;
          append_line(via1);
          append_line(via2);
          append_line(y_star);
        }
      }
    }
    Point z_next = vertex_at(block[i + 1], alpha[i], hyper[i]);
    append_line(z_next);
  }
  return out;
}

GluedPath glue_level0(const LatticePath& pi0, const Config& config, const ClusterLabeling& labeling,
                      const EventParams& params) {
  pi0.validate();
  if (pi0.level != 0) throw std::invalid_argument("glue_level0 takes a level-0 path");
  if (pi0.spacing != params.L0) throw std::invalid_argument("path spacing must equal L0");
  const Window& w = config.window();
  const int d = w.dim();
  const Coord L0 = params.L0;
  const std::int64_t thresh = params.size_lower_threshold(d);
  auto mask = s_r_mask(config, labeling, static_cast<double>(L0));

  // unique macroscopic component of S_{L0} in z + [0,L0)^d per path vertex
  auto component_sites = [&](const Point& z) {
    IBox box = anchored_box(z, L0);
    BoxLabeling lab = label_in_box(config, box, mask.data());
    int chosen = -1;
    for (std::size_t c = 0; c < lab.sizes.size(); ++c) {
      if (lab.sizes[c] >= thresh) {
        if (chosen >= 0) {
          throw std::runtime_error("glue_level0: macroscopic component not unique; eta_hat miscalibrated");
        }
        chosen = static_cast<int>(c);
      }
    }
    if (chosen < 0) {
      throw std::runtime_error("glue_level0: no macroscopic component in a 0-good block");
    }
    std::vector<SiteIndex> sites;
    for (std::int64_t cell = 0; cell < box.volume(); ++cell) {
      if (lab.label[cell] == chosen) sites.push_back(w.index_of(box.cell_point(cell)));
    }
    return sites;
  };

  GluedPath out;
  std::vector<SiteIndex> first = component_sites(pi0.vertices.front());
  out.sites.push_back(*std::min_element(first.begin(), first.end()));

  std::vector<std::uint8_t> target(w.num_sites(), 0);
  for (std::int64_t i = 0; i + 1 < static_cast<std::int64_t>(pi0.vertices.size()); ++i) {
    const Point& z = pi0.vertices[i];
    const Point& znext = pi0.vertices[i + 1];
    std::vector<SiteIndex> next_sites = component_sites(znext);
    for (SiteIndex s : next_sites) target[s] = 1;

    Point corner(d);
    for (int a = 0; a < d; ++a) corner[a] = std::min(z[a], znext[a]);
    auto segment = bfs_path_in_box(config, anchored_box(corner, 2 * L0), out.sites.back(), target);
    for (SiteIndex s : next_sites) target[s] = 0;
    if (!segment.has_value()) {
      throw std::runtime_error("glue_level0: consecutive components not connected in the shared box");
    }
    out.per_step_lengths.push_back(static_cast<std::int64_t>(segment->size()) - 1);
    out.sites.insert(out.sites.end(), segment->begin() + 1, segment->end());
  }
  return out;
}

Coord short_path_margin(const ScaleLadder& ladder, int top_scale) {
  Coord ls = ladder.L[top_scale];
  return std::max(3 * ls, ls + 3 * ladder.L0);
}

ShortPathResult construct_short_path(const Config& config, const ClusterLabeling& labeling, const Point& x,
                                     const Point& y, Coord big_r, const ScaleLadder& ladder,
                                     const EventParams& params) {
  const Window& w = config.window();
  if (w.geometry() != Geometry::box) throw std::invalid_argument("short paths require a box window");
  const int d = w.dim();
  if (linf_norm(x) > big_r || linf_norm(y) > big_r) {
    throw std::invalid_argument("endpoints must lie in B(0,R)");
  }
  if (!config.occupied_at(x) || !config.occupied_at(y)) {
    throw std::invalid_argument("endpoints must be occupied");
  }
  {
    auto cx = labeling.component_id[w.index_of(x)];
    auto cy = labeling.component_id[w.index_of(y)];
    if (labeling.l1_diameters[cx] < big_r || labeling.l1_diameters[cy] < big_r) {
      throw std::invalid_argument("endpoints must lie in S_R");
    }
  }

  const int s = select_top_scale(ladder, big_r, d);
  ScaleLadder sub = build_ladder(ladder.l0, ladder.r0, ladder.L0, ladder.theta_sc, s);
  const Coord ls = sub.L[s];

  {
    Coord margin = short_path_margin(sub, s);
    Point lo(d, -(2 * big_r + margin));
    Point hi(d, 2 * big_r + margin);
    if (!w.contains(lo) || !w.contains(hi)) {
      throw std::invalid_argument("window must cover B(0, 2R + margin) for the top scale");
    }
  }

  GoodnessField goodness = goodness_field(config, labeling, sub, params);

  ShortPathResult res;
  res.certificate.big_r = big_r;
  res.certificate.top_scale = s;

  // H clause (a): every G_s vertex in B(0,2R) is s-good
  const Coord cell_rad = floor_div(2 * big_r, ls);
  {
    Point cell(d, -cell_rad);
    while (true) {
      if (!goodness.in_domain(s, cell)) {
        throw std::invalid_argument("goodness field does not cover B(0,2R); window too small");
      }
      if (!goodness.is_good(s, cell)) {
        res.h_holds = false;
        res.failed_clause = HClause::goodness;
        res.failed_block = cell;
        for (auto& v : res.failed_block) v *= ls;
        return res;
      }
      int axis = d - 1;
      while (axis >= 0 && ++cell[axis] > cell_rad) {
        cell[axis] = -cell_rad;
        --axis;
      }
      if (axis < 0) break;
    }
  }

  // H clause (b'): within every block, all S_{L_s} sites of the 2L_s-box are
  // connected by a simple path in S cap (z + [-L_s, 3L_s)^d)
  auto mask_ls = s_r_mask(config, labeling, static_cast<double>(ls));
  {
    Point cell(d, -cell_rad);
    while (true) {
      Point z(d);
      for (int a = 0; a < d; ++a) z[a] = cell[a] * ls;
      IBox big{z, z};
      for (int a = 0; a < d; ++a) {
        big.lo[a] -= ls;
        big.hi[a] += 3 * ls;
      }
      BoxLabeling lab = label_in_box(config, big);
      IBox inner = anchored_box(z, 2 * ls);
      std::int32_t found = -1;
      bool ok = true;
      for (std::int64_t c = 0; c < inner.volume() && ok; ++c) {
        Point p = inner.cell_point(c);
        SiteIndex site = w.index_of(p);
        if (!mask_ls[site]) continue;
        std::int32_t lb = lab.label[big.cell_index(p)];
        if (found < 0) {
          found = lb;
        } else if (lb != found) {
          ok = false;
        }
      }
      if (!ok) {
        res.h_holds = false;
        res.failed_clause = HClause::local_connect;
        res.failed_block = z;
        return res;
      }
      int axis = d - 1;
      while (axis >= 0 && ++cell[axis] > cell_rad) {
        cell[axis] = -cell_rad;
        --axis;
      }
      if (axis < 0) break;
    }
  }
  res.h_holds = true;

  // cells of x and y at the top scale
  Point xcell(d), ycell(d);
  for (int a = 0; a < d; ++a) {
    xcell[a] = floor_div(x[a], ls);
    ycell[a] = floor_div(y[a], ls);
  }

  auto bfs_connect = [&](const Point& zcell, SiteIndex from, SiteIndex to) {
    IBox box(anchored_box(Point(d), 4 * ls));
    for (int a = 0; a < d; ++a) {
      box.lo[a] = zcell[a] * ls - ls;
      box.hi[a] = zcell[a] * ls + 3 * ls;
    }
    std::vector<std::uint8_t> target(w.num_sites(), 0);
    target[to] = 1;
    auto seg = bfs_path_in_box(config, box, from, target);
    if (!seg.has_value()) {
      throw std::runtime_error("H holds but a local connection failed; internal invariant violated");
    }
    return *seg;
  };

  Coord cell_gap = 0;
  for (int a = 0; a < d; ++a) cell_gap = std::max(cell_gap, std::abs(xcell[a] - ycell[a]));

  if (cell_gap <= 1) {
    // x and y share a 2L_s box: one local connection suffices
    Point zcell(d);
    for (int a = 0; a < d; ++a) zcell[a] = std::min(xcell[a], ycell[a]);
    auto seg = bfs_connect(zcell, w.index_of(x), w.index_of(y));
    res.path = seg;
    res.certificate.total_length = static_cast<std::int64_t>(seg.size()) - 1;
    res.certificate.level_steps.assign(s + 1, 0);
    res.certificate.certified_bound = int_pow(2 * ladder.L0, d) + 2.0 * int_pow(4 * ls, d);
    res.certificate.product_bound = 0.0;
    return res;
  }

  // staircase path in G_s from x' to y', axis by axis
  LatticePath top;
  top.level = s;
  top.spacing = ls;
  {
    Point cur = xcell;
    top.vertices.push_back(cur);
    for (int a = 0; a < d; ++a) {
      while (cur[a] != ycell[a]) {
        cur[a] += ycell[a] > cur[a] ? 1 : -1;
        top.vertices.push_back(cur);
      }
    }
    for (auto& v : top.vertices) {
      for (int a = 0; a < d; ++a) v[a] *= ls;
    }
  }
  res.certificate.level_steps.assign(s + 1, 0);
  res.certificate.level_steps[s] = top.steps();

  LatticePath cur = top;
  for (int k = s; k >= 1; --k) {
    cur = descend_path(cur, goodness, sub);
    res.certificate.level_steps[k - 1] = cur.steps();
  }

  GluedPath glued = glue_level0(cur, config, labeling, params);
  res.certificate.glue_length = static_cast<std::int64_t>(glued.sites.size()) - 1;

  auto head = bfs_connect(xcell, w.index_of(x), glued.sites.front());
  auto tail = bfs_connect(ycell, glued.sites.back(), w.index_of(y));
  res.certificate.connect_x_length = static_cast<std::int64_t>(head.size()) - 1;
  res.certificate.connect_y_length = static_cast<std::int64_t>(tail.size()) - 1;

  res.path = head;
  res.path.insert(res.path.end(), glued.sites.begin() + 1, glued.sites.end());
  res.path.insert(res.path.end(), tail.begin() + 1, tail.end());
  res.certificate.total_length = static_cast<std::int64_t>(res.path.size()) - 1;

  const std::int64_t n0 = res.certificate.level_steps[0];
  res.certificate.certified_bound =
      int_pow(2 * ladder.L0, d) * static_cast<double>(n0 + 1) + 2.0 * int_pow(4 * ls, d);
  double prod = 1.0;
  for (int k = 1; k <= s; ++k) {
    prod *= 1.0 + 8.0 * static_cast<double>(sub.r[k - 1]) / static_cast<double>(sub.l[k - 1]);
  }
  res.certificate.product_bound =
      prod * static_cast<double>(ls) / static_cast<double>(ladder.L0) * static_cast<double>(top.steps());
  return res;
}

}  // namespace perco
