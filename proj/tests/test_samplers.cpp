#include <doctest.h>

#include <cmath>
#include <random>

#include "perco/clusters.hpp"
#include "perco/rng.hpp"
#include "perco/samplers.hpp"

using namespace perco;

namespace {

// Lattice Green function g(0,0) in d=3 by midpoint quadrature of
// 1/(1 - (cos k1 + cos k2 + cos k3)/3) over [-pi,pi]^3, Richardson
// extrapolated in the mesh (error is O(h) from the integrable singularity).
double green_origin_quadrature() {
  auto midpoint = [](int n) {
    std::vector<double> c(n);
    for (int i = 0; i < n; ++i) {
      double k = (i + 0.5) / n * 2.0 * M_PI - M_PI;
      c[i] = std::cos(k);
    }
    double sum = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        double cab = c[a] + c[b];
        for (int e = 0; e < n; ++e) {
          sum += 1.0 / (1.0 - (cab + c[e]) / 3.0);
        }
      }
    }
    return sum / (static_cast<double>(n) * n * n);
  };
  double i1 = midpoint(100);
  double i2 = midpoint(200);
  return 2.0 * i2 - i1;
}

}  // namespace

TEST_CASE("bernoulli degenerate and density") {
  Window w = Window::box({0, 0}, {64, 64});
  CHECK(sample_bernoulli(1.0, w, 5).occupied_count() == 64 * 64);
  CHECK(sample_bernoulli(0.0, w, 5).occupied_count() == 0);

  Config c = sample_bernoulli(0.5, w, 2024);
  double density = static_cast<double>(c.occupied_count()) / (64.0 * 64.0);
  CHECK(std::abs(density - 0.5) < 0.02);

  // determinism
  CHECK(sample_bernoulli(0.5, w, 2024).same_occupancy(c));
  CHECK(!sample_bernoulli(0.5, w, 2025).same_occupancy(c));
}

TEST_CASE("bernoulli coupling is monotone in p for a shared seed") {
  Window w = Window::box({0, 0}, {32, 32});
  Config lo = sample_bernoulli(0.4, w, 9);
  Config hi = sample_bernoulli(0.7, w, 9);
  for (SiteIndex s = 0; s < w.num_sites(); ++s) {
    if (lo.occupied(s)) CHECK(hi.occupied(s));
  }
  CHECK(lo.occupied_count() < hi.occupied_count());
}

TEST_CASE("green matrix: symmetry, positivity, pad monotonicity") {
  Window w = Window::box({0, 0, 0}, {3, 3, 3});
  GreenMatrix g4 = build_green_matrix(w, 4);
  GreenMatrix g8 = build_green_matrix(w, 8);
  std::int64_t n = w.num_sites();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      CHECK(g4.values(i, j) == doctest::Approx(g4.values(j, i)).epsilon(1e-12));
      CHECK(g4.values(i, j) >= 0.0);
      CHECK(g4.values(i, i) + 1e-12 >= g4.values(i, j));
    }
    // domain monotonicity
    CHECK(g4.values(i, i) <= g8.values(i, i) + 1e-12);
  }
  CHECK_THROWS(build_green_matrix(w, 4, /*dense_cap=*/10));
  CHECK_THROWS(build_green_matrix(Window::box({0, 0}, {3, 3}), 4));
}

TEST_CASE("green diagonal approaches the full-space value") {
  Window w = Window::box({0, 0, 0}, {1, 1, 1});
  double oracle = green_origin_quadrature();
  CHECK(oracle == doctest::Approx(1.5163861).epsilon(1e-4));
  double g16 = build_green_matrix(w, 16).values(0, 0);
  CHECK(std::abs(g16 - oracle) / oracle < 0.05);
  double g8 = build_green_matrix(w, 8).values(0, 0);
  CHECK(g8 < g16);  // monotone toward the full-space value
}

TEST_CASE("gff sampler statistics match the green matrix") {
  Window w = Window::box({-1, -1, -1}, {3, 3, 3});
  GffSampler sampler(w, 8);
  const auto& g = sampler.green().values;
  std::int64_t n = w.num_sites();
  SiteIndex origin = w.index_of({0, 0, 0});

  const int draws = 10000;
  Eigen::MatrixXd phi = sampler.sample_columns(777, 0, draws);
  // mean of phi_0 near zero
  double mean0 = phi.row(origin).mean();
  double sd0 = std::sqrt(g(origin, origin));
  CHECK(std::abs(mean0) < 3.0 * sd0 / std::sqrt(static_cast<double>(draws)));
  // sign symmetry
  int nonneg = 0;
  for (int j = 0; j < draws; ++j) nonneg += phi(origin, j) >= 0.0;
  CHECK(std::abs(nonneg / static_cast<double>(draws) - 0.5) < 0.02);

  // empirical covariance within 3 standard errors on a probe of pairs
  CounterRng pick(31, 0);
  for (int rep = 0; rep < 20; ++rep) {
    auto i = static_cast<std::int64_t>(pick.next_below(static_cast<std::uint64_t>(n)));
    auto j = static_cast<std::int64_t>(pick.next_below(static_cast<std::uint64_t>(n)));
    double cov = (phi.row(i).array() * phi.row(j).array()).mean();
    double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / draws);
    CHECK(std::abs(cov - g(i, j)) < 3.0 * se);
  }

  // single-draw interface is deterministic and matches the batch
  RealField f0 = sampler.sample(777, 0);
  for (std::int64_t i = 0; i < n; ++i) CHECK(f0.values[i] == doctest::Approx(phi(i, 0)).epsilon(1e-12));
}

TEST_CASE("level sets are nested and degenerate correctly") {
  Window w = Window::box({0, 0, 0}, {3, 3, 3});
  GffSampler sampler(w, 6);
  RealField f = sampler.sample(5, 3);
  double lo = *std::min_element(f.values.begin(), f.values.end());
  double hi = *std::max_element(f.values.begin(), f.values.end());
  CHECK(level_set(f, lo - 1.0).occupied_count() == w.num_sites());
  CHECK(level_set(f, hi + 1e-9).occupied_count() == 0);
  Config at0 = level_set(f, 0.0);
  Config atm1 = level_set(f, -1.0);
  for (SiteIndex s = 0; s < w.num_sites(); ++s) {
    if (at0.occupied(s)) CHECK(atm1.occupied(s));
  }
}

TEST_CASE("capacity of the empty set and the origin") {
  CHECK(estimate_capacity({}, 8, 100, 1).cap == 0.0);

  const Coord rho = 12;
  auto est = estimate_capacity({{0, 0, 0}}, rho, 20000, 42);
  // With matched truncation, the escape probability from the origin equals
  // 1/g_D(0,0) for the Dirichlet Green function on the same linf ball.
  Window w = Window::box({0, 0, 0}, {1, 1, 1});
  double gd = build_green_matrix(w, rho, 20000).values(0, 0);
  CHECK(std::abs(est.cap - 1.0 / gd) < 3.5 * est.stderr_);
  // near the full-space value 1/g(0,0), up to the documented truncation bias
  CHECK(std::abs(est.cap - 1.0 / 1.5163861) < 0.035);

  CHECK_THROWS(estimate_capacity({{0, 0, 0}}, rho, 0, 1));
  CHECK_THROWS(estimate_capacity({{0, 0, 0}, {9, 0, 0}}, 8, 10, 1));  // radius < 4x
}

TEST_CASE("capacity is monotone under set inclusion (shared walks)") {
  std::vector<Point> small{{0, 0, 0}};
  std::vector<Point> big;
  for (Coord a = -1; a <= 1; ++a) {
    for (Coord b = -1; b <= 1; ++b) {
      for (Coord c = -1; c <= 1; ++c) big.push_back({a, b, c});
    }
  }
  auto cs = estimate_capacity(small, 24, 4000, 7);
  auto cb = estimate_capacity(big, 24, 4000, 7);
  CHECK(cs.cap < cb.cap);
}

TEST_CASE("interlacement basics: u=0, complement, coupling") {
  Window w = Window::centered_box(3, 2);
  InterlacementSampler s(w, 12, 400, 99);
  CHECK(s.sample(0.0, 1).occupied_count() == 0);
  CHECK(s.sample_vacant(0.0, 1).occupied_count() == w.num_sites());

  Config trace = s.sample(1.0, 5);
  Config vacant = s.sample_vacant(1.0, 5);
  for (SiteIndex i = 0; i < w.num_sites(); ++i) {
    CHECK((trace.occupied(i) ^ vacant.occupied(i)) == true);
  }

  Config lo = s.sample(0.6, 5);
  Config hi = s.sample(1.4, 5);
  for (SiteIndex i = 0; i < w.num_sites(); ++i) {
    if (lo.occupied(i)) CHECK(hi.occupied(i));
  }

  // determinism through the free-function interface
  Config a = sample_interlacement(0.8, w, 12, 200, 31);
  Config b = sample_interlacement(0.8, w, 12, 200, 31);
  CHECK(a.same_occupancy(b));
}

TEST_CASE("interlacement hitting law at the origin") {
  // P[0 in I^u] should match 1 - exp(-u cap({0})) within combined errors.
  const double u = 1.0;
  const Coord rho = 16;
  auto cap0 = estimate_capacity({{0, 0, 0}}, rho, 20000, 12);

  Window w = Window::centered_box(3, 2);
  InterlacementSampler s(w, rho, 800, 99);
  SiteIndex origin = w.index_of({0, 0, 0});
  const int trials = 3000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    if (s.sample(u, derive_seed(404, t)).occupied(origin)) ++hits;
  }
  double phat = static_cast<double>(hits) / trials;
  double target = 1.0 - std::exp(-u * cap0.cap);
  double se_p = std::sqrt(phat * (1.0 - phat) / trials);
  double se_t = u * std::exp(-u * cap0.cap) * cap0.stderr_;
  double se = std::sqrt(se_p * se_p + se_t * se_t);
  CHECK(std::abs(phat - target) < 3.5 * se + 0.01);
}

TEST_CASE("torus vacant walk") {
  CHECK(sample_torus_vacant(0.0, 8, 3, 3).occupied_count() == 512);

  Config c = sample_torus_vacant(0.25, 8, 3, 3);
  auto steps = static_cast<std::int64_t>(0.25 * 512);
  CHECK(512 - c.occupied_count() <= steps + 1);  // trace cardinality bound
  CHECK(c.window().geometry() == Geometry::torus);

  CHECK_THROWS(sample_torus_vacant(0.5, 2, 3, 1));
  CHECK_THROWS(sample_torus_vacant(0.5, 8, 2, 1));
}

TEST_CASE("torus vacant density matches an independent walk implementation") {
  const Coord n = 8;
  const double u = 0.25;
  const int trials = 400;

  double mean_sampler = 0.0;
  for (int t = 0; t < trials; ++t) {
    Config c = sample_torus_vacant(u, n, 3, derive_seed(88, t));
    mean_sampler += static_cast<double>(c.occupied_count()) / 512.0;
  }
  mean_sampler /= trials;

  // independent oracle: plain coordinate walk with std::mt19937_64
  std::mt19937_64 gen(1234567);
  std::uniform_int_distribution<int> coord(0, static_cast<int>(n) - 1);
  std::uniform_int_distribution<int> move(0, 5);
  double mean_oracle = 0.0;
  std::vector<std::uint8_t> vis(512);
  auto steps = static_cast<std::int64_t>(u * 512);
  for (int t = 0; t < trials; ++t) {
    std::fill(vis.begin(), vis.end(), 0);
    int x = coord(gen), y = coord(gen), z = coord(gen);
    auto mark = [&](int a, int b, int c) { vis[(a * 8 + b) * 8 + c] = 1; };
    mark(x, y, z);
    for (std::int64_t i = 0; i < steps; ++i) {
      int m = move(gen);
      int d = (m & 1) ? 1 : 7;  // +1 or -1 mod 8
      if (m < 2) x = (x + d) & 7;
      else if (m < 4) y = (y + d) & 7;
      else z = (z + d) & 7;
      mark(x, y, z);
    }
    std::int64_t vacant = 512;
    for (auto v : vis) vacant -= v;
    mean_oracle += static_cast<double>(vacant) / 512.0;
  }
  mean_oracle /= trials;

  // density sd per trial is small; allow 3 combined sigma with a floor
  CHECK(std::abs(mean_sampler - mean_oracle) < 0.02);
}

TEST_CASE("model sampler dispatch and determinism") {
  ModelSpec spec;
  spec.family = ModelFamily::bernoulli;
  spec.dim = 2;
  spec.p = 0.6;
  ModelSampler ms(spec, Window::box({0, 0}, {16, 16}));
  CHECK(ms.sample(4).same_occupancy(ms.sample(4)));
  CHECK(ms.sample_at(1.0, 4).occupied_count() == 256);

  ModelSpec bad;
  bad.family = ModelFamily::gff_level;
  bad.dim = 2;
  CHECK_THROWS(bad.validate());
  ModelSpec torus;
  torus.family = ModelFamily::torus_vacant;
  torus.dim = 3;
  torus.u = 0.3;
  torus.torus_n = 6;
  CHECK_THROWS(ModelSampler(torus, Window::box({0, 0, 0}, {6, 6, 6})));
}

TEST_CASE("torus step counter overflow guard") {
  CHECK_THROWS_AS(sample_torus_vacant(1e16, 8, 3, 1), std::overflow_error);
}
