#include <doctest.h>

#include <cmath>

#include "perco/renorm.hpp"
#include "perco/samplers.hpp"
#include "synthetic_goodness.hpp"

using namespace perco;
using perco_test::random_good_path;
using perco_test::synthetic_goodness;

namespace {

GoodnessField all_good_field(const ScaleLadder& ladder, int dim, Coord blocks_per_axis) {
  Coord cells0 = blocks_per_axis;
  for (int k = 0; k < ladder.kmax; ++k) cells0 *= ladder.l[k];
  LevelField a0 = make_level_field(0, ladder.L0, Point(dim, 0), Point(dim, cells0));
  GoodnessField out;
  out.a_bad = cascade_field(a0, ladder);
  out.b_bad = cascade_field(a0, ladder);
  return out;
}

void validate_site_path(const Config& c, const std::vector<SiteIndex>& path) {
  const Window& w = c.window();
  REQUIRE(!path.empty());
  for (std::size_t i = 0; i < path.size(); ++i) {
    CHECK(c.occupied(path[i]));
    if (i + 1 < path.size()) {
      CHECK(w.l1_distance(w.point_at(path[i]), w.point_at(path[i + 1])) == 1);
    }
  }
}

}  // namespace

TEST_CASE("descend on an all-good field is a straight refinement") {
  ScaleLadder lad = build_ladder(5, 1, 2, 1, 1);
  GoodnessField good = all_good_field(lad, 2, 4);
  LatticePath pi;
  pi.level = 1;
  pi.spacing = lad.L[1];
  pi.vertices = {{0, 0}, {10, 0}, {20, 0}, {20, 10}};
  LatticePath down = descend_path(pi, good, lad);
  CHECK(down.level == 0);
  CHECK(down.steps() == lad.l0 * pi.steps());  // j_i = 0 everywhere
  auto check = check_descended_path(pi, down, good, lad);
  CHECK(check.ok);

  // single vertex input
  LatticePath single;
  single.level = 1;
  single.spacing = lad.L[1];
  single.vertices = {{10, 10}};
  LatticePath one = descend_path(single, good, lad);
  CHECK(one.vertices.size() == 1);
  CHECK(check_descended_path(single, one, good, lad).ok);
}

TEST_CASE("descend rejects bad or misaligned inputs") {
  ScaleLadder lad = build_ladder(5, 1, 2, 1, 1);
  GoodnessField good = all_good_field(lad, 2, 4);
  LatticePath pi;
  pi.level = 1;
  pi.spacing = lad.L[1];
  pi.vertices = {{0, 0}, {7, 3}};
  CHECK_THROWS(descend_path(pi, good, lad));  // not nearest neighbor

  // a bad vertex violates the precondition
  GoodnessField bad = all_good_field(lad, 2, 4);
  bad.a_bad[1].set({0, 0}, true);
  LatticePath pi2;
  pi2.level = 1;
  pi2.spacing = lad.L[1];
  pi2.vertices = {{0, 0}, {10, 0}};
  CHECK_THROWS(descend_path(pi2, bad, lad));
}

TEST_CASE("checker flags corrupted outputs") {
  ScaleLadder lad = build_ladder(5, 1, 2, 1, 1);
  GoodnessField good = all_good_field(lad, 2, 4);
  LatticePath pi;
  pi.level = 1;
  pi.spacing = lad.L[1];
  pi.vertices = {{0, 0}, {10, 0}};
  LatticePath down = descend_path(pi, good, lad);
  REQUIRE(check_descended_path(pi, down, good, lad).ok);

  LatticePath stretched = down;
  for (int rep = 0; rep < 12; ++rep) {
    Point a = stretched.vertices.back();
    Point b = a;
    b[1] += lad.L0;
    stretched.vertices.push_back(b);
    stretched.vertices.push_back(a);
  }
  auto c1 = check_descended_path(pi, stretched, good, lad);
  CHECK(!c1.ok);  // length bound

  LatticePath wrong_end = down;
  wrong_end.vertices.push_back(wrong_end.vertices.back());  // zero step
  auto c2 = check_descended_path(pi, wrong_end, good, lad);
  CHECK(!c2.ok);
}

TEST_CASE("randomized descent property suite") {
  // d=2, two levels of descent through fields with contrived bad boxes
  ScaleLadder lad2 = build_ladder(5, 1, 2, 1, 2);
  CounterRng rng(2024, 0);
  int descents = 0;
  for (int rep = 0; rep < 60; ++rep) {
    GoodnessField g = synthetic_goodness(lad2, 2, 3, rng);
    LatticePath top = random_good_path(g, lad2, 2, 1 + rng.next_below(6), rng);
    LatticePath mid = descend_path(top, g, lad2);
    auto c1 = check_descended_path(top, mid, g, lad2);
    REQUIRE_MESSAGE(c1.ok, c1.reason);
    LatticePath low = descend_path(mid, g, lad2);
    auto c2 = check_descended_path(mid, low, g, lad2);
    REQUIRE_MESSAGE(c2.ok, c2.reason);
    descents += 2;

    // telescoped level-0 bound
    double prod = (1.0 + 8.0 * lad2.r[0] / static_cast<double>(lad2.l[0])) *
                  (1.0 + 8.0 * lad2.r[1] / static_cast<double>(lad2.l[1]));
    double bound = prod * static_cast<double>(lad2.L[2] / lad2.L0) * static_cast<double>(top.steps());
    if (top.steps() > 0) CHECK(static_cast<double>(low.steps()) <= bound);
  }

  // d=3, one level
  ScaleLadder lad3 = build_ladder(5, 1, 2, 1, 1);
  for (int rep = 0; rep < 40; ++rep) {
    GoodnessField g = synthetic_goodness(lad3, 3, 3, rng);
    LatticePath top = random_good_path(g, lad3, 1, 1 + rng.next_below(5), rng);
    LatticePath low = descend_path(top, g, lad3);
    auto c = check_descended_path(top, low, g, lad3);
    REQUIRE_MESSAGE(c.ok, c.reason);
    ++descents;
  }
  CHECK(descents == 160);
}

TEST_CASE("glue on the full lattice follows geodesics") {
  Window w = Window::box({-4, -4}, {40, 40});
  Config ones = Config::constant(w, true, "ones", 0);
  auto lab = label_components(ones);
  EventParams params;
  params.L0 = 4;
  params.eta_hat = 1.0;

  LatticePath pi0;
  pi0.level = 0;
  pi0.spacing = 4;
  pi0.vertices = {{0, 0}, {4, 0}, {8, 0}, {8, 4}, {8, 8}};
  GluedPath glued = glue_level0(pi0, ones, lab, params);
  validate_site_path(ones, glued.sites);
  CHECK(static_cast<std::int64_t>(glued.sites.size()) - 1 <= 2 * params.L0 * pi0.steps());
  for (auto len : glued.per_step_lengths) {
    CHECK(len <= 2 * params.L0);  // full-lattice BFS is geodesic
    CHECK(len >= 1);
  }
  // endpoints inside the first/last unique components
  CHECK(IBox{{0, 0}, {4, 4}}.contains(w.point_at(glued.sites.front())));
  CHECK(IBox{{8, 8}, {12, 12}}.contains(w.point_at(glued.sites.back())));

  LatticePath single;
  single.level = 0;
  single.spacing = 4;
  single.vertices = {{12, 12}};
  GluedPath one = glue_level0(single, ones, lab, params);
  CHECK(one.sites.size() == 1);
}

TEST_CASE("glue on random dense configs replays its postconditions") {
  Window w = Window::box({-4, -4}, {44, 44});
  EventParams params;
  params.L0 = 4;
  params.eta_hat = 0.9;
  int glued_count = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    Config c = sample_bernoulli(0.96, w, seed);
    auto lab = label_components(c);
    EventEvaluator eval(c, lab, params);
    // walk along 0-good anchors as far as possible
    LatticePath pi0;
    pi0.level = 0;
    pi0.spacing = 4;
    Point at{0, 0};
    if (!eval.event_A(at) || !eval.event_B(at)) continue;
    pi0.vertices.push_back(at);
    for (Coord step = 0; step < 7; ++step) {
      Point next = at;
      next[step % 2] += 4;
      if (!eval.event_A(next) || !eval.event_B(next)) break;
      pi0.vertices.push_back(next);
      at = next;
    }
    if (pi0.vertices.size() < 2) continue;
    GluedPath glued = glue_level0(pi0, c, lab, params);
    validate_site_path(c, glued.sites);
    std::int64_t box_cap = 1;
    for (int i = 0; i < 2; ++i) box_cap *= 2 * params.L0;
    for (auto len : glued.per_step_lengths) CHECK(len < box_cap);
    ++glued_count;
  }
  CHECK(glued_count >= 6);  // p=0.96 makes 0-good corridors common
}

TEST_CASE("construct_short_path on the full lattice") {
  ScaleLadder lad = build_ladder(5, 1, 4, 1, 3);
  const Coord R = 100;
  int s = select_top_scale(lad, R, 2);
  CHECK(s == 0);  // L_1 = 20 > 10 = R^(1/2)
  Coord half = 2 * R + short_path_margin(build_ladder(5, 1, 4, 1, s), s);
  Window w = Window::centered_box(2, half);
  Config ones = Config::constant(w, true, "ones", 0);
  auto lab = label_components(ones);
  EventParams params;
  params.L0 = 4;
  params.eta_hat = 1.0;

  Point x{-40, -77};
  Point y{88, 13};
  auto res = construct_short_path(ones, lab, x, y, R, lad, params);
  REQUIRE(res.h_holds);
  validate_site_path(ones, res.path);
  CHECK(w.point_at(res.path.front()) == x);
  CHECK(w.point_at(res.path.back()) == y);
  CHECK(res.certificate.total_length >= l1_norm(point_sub(y, x)));
  CHECK(static_cast<double>(res.certificate.total_length) <= res.certificate.certified_bound);

  // BFS is optimal, the construction is a witness
  auto direct = chemical_distance(ones, x, y);
  REQUIRE(direct.has_value());
  CHECK(*direct <= res.certificate.total_length);
  CHECK(*direct == l1_norm(point_sub(y, x)));
}

TEST_CASE("construct_short_path reports an H failure on a moated snake") {
  // all ones except a 1-wide moat isolating a column of diameter L_s: every
  // anchor stays 0-good, but the 2L_s-box holding the snake violates local
  // connectivity.
  ScaleLadder lad = build_ladder(5, 1, 8, 1, 2);
  const Coord R = 100;
  CHECK(select_top_scale(lad, R, 2) == 0);
  Coord half = 2 * R + short_path_margin(build_ladder(5, 1, 8, 1, 0), 0);
  Window w = Window::centered_box(2, half);
  std::vector<std::uint8_t> bits(w.num_sites(), 1);
  for (Coord yy = 2; yy <= 12; ++yy) {
    bits[w.index_of({-1, yy})] = 0;
    bits[w.index_of({1, yy})] = 0;
  }
  bits[w.index_of({0, 2})] = 0;
  bits[w.index_of({0, 12})] = 0;  // snake = column (0, 3..11), diameter 8 = L_s
  Config c = Config::from_bits(w, bits, "moat", 0);
  auto lab = label_components(c);
  EventParams params;
  params.L0 = 8;
  params.eta_hat = 0.8;

  Point x{-60, -60};
  Point y{60, 60};
  auto res = construct_short_path(c, lab, x, y, R, lad, params);
  CHECK(!res.h_holds);
  CHECK(res.failed_clause == HClause::local_connect);
  // the offending block sits near the snake
  CHECK(linf_norm(res.failed_block) <= 24);
}

TEST_CASE("construct_short_path succeeds through two scales on dense bernoulli") {
  ScaleLadder lad = build_ladder(5, 1, 4, 1, 3);
  const Coord R = 400;
  int s = select_top_scale(lad, R, 2);
  CHECK(s == 1);  // L_1 = 20 <= 20 = R^(1/2) < L_2
  Coord half = 2 * R + short_path_margin(build_ladder(5, 1, 4, 1, s), s);
  Window w = Window::centered_box(2, half);
  EventParams params;
  params.L0 = 4;
  params.eta_hat = 0.95;

  int successes = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Config c = sample_bernoulli(0.98, w, seed);
    auto lab = label_components(c);
    Point x{-R + 3, 0};
    Point y{R - 5, R - 9};
    // nudge endpoints onto occupied S_R sites
    auto fix = [&](Point p) {
      for (Coord dx = 0; dx < 6; ++dx) {
        Point q = p;
        q[0] += dx;
        SiteIndex sidx = w.index_of(q);
        auto comp = lab.component_id[sidx];
        if (c.occupied(sidx) && comp >= 0 && lab.l1_diameters[comp] >= R) return q;
      }
      return p;
    };
    x = fix(x);
    y = fix(y);
    if (!c.occupied_at(x) || !c.occupied_at(y)) continue;
    auto res = construct_short_path(c, lab, x, y, R, lad, params);
    if (!res.h_holds) continue;
    ++successes;
    validate_site_path(c, res.path);
    CHECK(w.point_at(res.path.front()) == x);
    CHECK(w.point_at(res.path.back()) == y);
    CHECK(static_cast<double>(res.certificate.total_length) <= res.certificate.certified_bound);
    // level-0 step count obeys the telescoped product bound
    CHECK(static_cast<double>(res.certificate.level_steps[0]) <= res.certificate.product_bound);
    ChemicalBfs bfs(c);
    auto direct = bfs.distance(w.index_of(x), w.index_of(y));
    REQUIRE(direct.has_value());
    CHECK(*direct <= res.certificate.total_length);
  }
  CHECK(successes >= 1);
}
