#include <doctest.h>

#include <cmath>

#include "perco/estimators.hpp"
#include "perco/rng.hpp"

using namespace perco;

namespace {

ModelSpec bernoulli_spec(double p, int dim = 2) {
  ModelSpec s;
  s.family = ModelFamily::bernoulli;
  s.dim = dim;
  s.p = p;
  return s;
}

}  // namespace

TEST_CASE("summary statistics and quantiles") {
  std::vector<double> v(40);
  for (int i = 0; i < 40; ++i) v[i] = i;
  auto s = summarize(v);
  CHECK(s.mean == doctest::Approx(19.5));
  CHECK(s.ci_lo < s.mean);
  CHECK(quantile(v, 0.5) == 19.0);
  CHECK(quantile(v, 0.99) == 39.0);
  CHECK_THROWS(summarize(std::vector<double>(10, 1.0)));
  CHECK_THROWS(quantile({}, 0.5));
}

TEST_CASE("density estimator degenerate and coupled sweep") {
  Window w = Window::box({-24, -24}, {48, 48});
  auto one = estimate_density(bernoulli_spec(1.0), w, 30, 7);
  CHECK(one.eta_hat == 1.0);
  auto zero = estimate_density(bernoulli_spec(0.0), w, 30, 7);
  CHECK(zero.eta_hat == 0.0);

  // coupled sweep: same master seed shares uniforms, so the proxy grows
  // sitewise and the estimate is monotone exactly
  auto lo = estimate_density(bernoulli_spec(0.62), w, 40, 99);
  auto mid = estimate_density(bernoulli_spec(0.75), w, 40, 99);
  auto hi = estimate_density(bernoulli_spec(0.9), w, 40, 99);
  CHECK(lo.eta_hat <= mid.eta_hat);
  CHECK(mid.eta_hat <= hi.eta_hat);

  // determinism under worker counts
  auto again = estimate_density(bernoulli_spec(0.75), w, 40, 99, ProxyPolicy::diameter_span, 3);
  CHECK(again.eta_hat == mid.eta_hat);
  REQUIRE(again.report.observables.size() == mid.report.observables.size());
  for (std::size_t i = 0; i < again.report.observables.size(); ++i) {
    CHECK(again.report.observables[i].value == mid.report.observables[i].value);
    CHECK(again.report.observables[i].trial == mid.report.observables[i].trial);
  }
}

TEST_CASE("stretch on the full lattice attains the corner ratio") {
  const Coord R = 16;
  Window w = Window::centered_box(2, 2 * R + 2);
  auto est = estimate_chem_stretch(bernoulli_spec(1.0), w, R, 30, 5);
  CHECK(est.excluded_empty == 0);
  CHECK(est.excluded_disconnected == 0);
  // opposite corners of B(0,R) sit at chemical distance 4R on the full
  // lattice, and the extremal probes find them
  for (double r : est.max_ratios) CHECK(r == doctest::Approx(4.0));
  CHECK(est.q99 == doctest::Approx(4.0));
}

TEST_CASE("stretch excludes empty trials") {
  const Coord R = 16;
  Window w = Window::centered_box(2, 2 * R + 2);
  CHECK_THROWS(estimate_chem_stretch(bernoulli_spec(0.0), w, R, 30, 5));
}

TEST_CASE("norm estimate on the full lattice is the l1 norm") {
  auto est = estimate_norm(bernoulli_spec(1.0), {2, 1}, {2, 4, 8}, 30, 11);
  CHECK(est.p_hat == doctest::Approx(3.0));  // |x|_1 = 3 exactly
  CHECK(est.stderr_ == doctest::Approx(0.0));
  for (double m : est.per_n_mean) CHECK(m == doctest::Approx(3.0));
  CHECK(est.subadditivity_violations == 0);
  CHECK(est.excluded == 0);
}

TEST_CASE("norm estimate on supercritical bernoulli") {
  auto est = estimate_norm(bernoulli_spec(0.85), {1, 0}, {4, 8, 16}, 60, 13);
  CHECK(est.subadditivity_violations == 0);
  CHECK(est.p_hat >= 1.0);     // p_u dominates the l1 norm
  CHECK(est.p_hat < 2.0);      // and stays modest at p = 0.85
  // symmetry p(x) = p(-x) within a few stderr
  auto neg = estimate_norm(bernoulli_spec(0.85), {-1, 0}, {4, 8, 16}, 60, 13);
  double se = std::sqrt(est.stderr_ * est.stderr_ + neg.stderr_ * neg.stderr_);
  CHECK(std::abs(est.p_hat - neg.p_hat) <= 3.0 * se + 1e-12);
}

TEST_CASE("shape on the full lattice is the l1 diamond") {
  std::vector<Point> dirs{{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}};
  auto est = estimate_shape(bernoulli_spec(1.0), dirs, {2, 4, 8}, 30, 3);
  REQUIRE(est.p_hat.size() == dirs.size());
  CHECK(est.p_hat[0] == doctest::Approx(1.0));
  CHECK(est.p_hat[1] == doctest::Approx(1.0));
  CHECK(est.p_hat[2] == doctest::Approx(2.0));
  CHECK(est.p_hat[3] == doctest::Approx(2.0));
  CHECK(est.p_hat[4] == doctest::Approx(3.0));
  CHECK(est.subadditivity_violations == 0);
  CHECK(est.convexity_violation == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(est.asymmetry_score == doctest::Approx(0.0).epsilon(1e-9));
  REQUIRE(est.hull.size() == 4);  // diamond corners only; grid points are collinear

  // coupled inclusion across parameters: same master seed
  auto lower = estimate_shape(bernoulli_spec(0.8), dirs, {2, 4, 8}, 40, 17);
  auto upper = estimate_shape(bernoulli_spec(0.9), dirs, {2, 4, 8}, 40, 17);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    double se = std::sqrt(lower.stderr_[i] * lower.stderr_[i] + upper.stderr_[i] * upper.stderr_[i]);
    CHECK(lower.p_hat[i] >= upper.p_hat[i] - se);  // D_{0.8} inside D_{0.9}
  }
}

TEST_CASE("decorrelation on bernoulli with disjoint supports") {
  RegularityProfile prof;
  LocalEvent ev;
  ev.kind = LocalEventKind::occupied_count_at_least;
  ev.radius = 2;
  ev.threshold = 13;  // ~half the 25-site box
  auto rep = check_decorrelation(bernoulli_spec(0.55), 0.55, 0.55, /*L=*/2, /*R=*/4, ev, 400, 21, prof);
  CHECK(rep.monotonicity_violations == 0);
  // product measure: joint = product exactly, up to Monte Carlo noise
  CHECK(std::abs(rep.raw_diff) <= 3.0 * rep.margin_se + 1e-9);
  CHECK(rep.lhs <= rep.product + rep.fp_term + 3.0 * rep.margin_se);

  // support exceeding B(x, 10L) violates the measurability precondition
  LocalEvent wide = ev;
  wide.radius = 30;
  CHECK_THROWS(check_decorrelation(bernoulli_spec(0.55), 0.55, 0.55, 2, 4, wide, 30, 21, prof));
}

TEST_CASE("decorrelation with a sprinkled parameter favors the inequality") {
  RegularityProfile prof;
  LocalEvent ev;
  ev.kind = LocalEventKind::crossing;
  ev.radius = 3;
  // increasing event: joint at the sparser parameter, marginals at the denser
  auto rep = check_decorrelation(bernoulli_spec(0.6), 0.6, 0.68, 2, 4, ev, 400, 23, prof);
  CHECK(rep.monotonicity_violations == 0);
  CHECK(rep.margin >= -3.0 * rep.margin_se);
}

TEST_CASE("covariance decay on bernoulli") {
  auto spec = bernoulli_spec(0.3, 3);
  auto cov = covariance_decay(spec, {0, 1, 2, 4, 8}, 300, 31);
  REQUIRE(cov.covariance.size() == 5);
  // distance 0: variance of a bernoulli indicator
  CHECK(std::abs(cov.covariance[0] - 0.3 * 0.7) <= 4.0 * cov.cov_se[0]);
  // independence: distances >= 1 within noise of zero
  for (std::size_t i = 1; i < cov.covariance.size(); ++i) {
    CHECK(std::abs(cov.covariance[i]) <= 4.0 * cov.cov_se[i]);
  }
}

TEST_CASE("covariance decay on interlacements has a negative slope") {
  ModelSpec spec;
  spec.family = ModelFamily::interlacement;
  spec.dim = 3;
  spec.u = 1.0;
  spec.capacity_trials = 120;
  auto cov = covariance_decay(spec, {1, 2, 3, 5, 8}, 400, 37);
  int used = 0;
  for (auto u8 : cov.used_in_fit) used += u8;
  REQUIRE(used >= 3);
  CHECK(cov.slope < -0.3);
  CHECK(cov.slope > -2.5);
}

TEST_CASE("torus giant diameter at u=0 is exact") {
  const Coord n = 8;
  auto est = torus_giant_diameter(0.0, n, 3, 30, 41);
  for (double r : est.ratios) CHECK(r == doctest::Approx(3.0 * (n / 2) / static_cast<double>(n)));
  CHECK(est.median == doctest::Approx(1.5));
}

TEST_CASE("double sweep is a lower bound for the exact diameter on N=8") {
  const Coord n = 8;
  Window torus = Window::torus(3, n);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Config c = sample_torus_vacant(0.5, n, 3, seed);
    auto lab = label_components(c);
    REQUIRE(lab.num_components() > 0);
    std::int32_t giant = 0;
    for (std::int32_t comp = 1; comp < lab.num_components(); ++comp) {
      if (lab.sizes[comp] > lab.sizes[giant]) giant = comp;
    }
    std::vector<SiteIndex> members;
    for (SiteIndex s = 0; s < torus.num_sites(); ++s) {
      if (lab.component_id[s] == giant) members.push_back(s);
    }
    ChemicalBfs bfs(c);
    // exact diameter by all-pairs BFS
    std::int32_t exact = 0;
    for (SiteIndex s : members) {
      const auto& dist = bfs.distances_from(s);
      for (SiteIndex o : members) exact = std::max(exact, dist[o]);
    }
    SiteIndex far = members[0];
    bfs.eccentricity(members[0], &far);
    std::int32_t sweep = bfs.eccentricity(far, nullptr);
    CHECK(sweep <= exact);
    CHECK(sweep >= exact / 2);  // double sweep is within a factor two always
  }
}

TEST_CASE("mesoscopic event frequencies") {
  const Coord n = 8;
  auto full = check_torus_mesoscopic(0.0, n, 3, 6.0, 30, 51);
  CHECK(full.frequency == doctest::Approx(1.0));
  CHECK(full.all_z_frequency == doctest::Approx(1.0));

  auto packed = check_torus_mesoscopic(8.0, n, 3, 6.0, 30, 51);
  CHECK(packed.frequency <= 0.3);

  // monotone in the distance constant (nested events, same seeds)
  auto loose = check_torus_mesoscopic(0.6, n, 3, 6.0, 40, 53);
  auto tight = check_torus_mesoscopic(0.6, n, 3, 1.0, 40, 53);
  CHECK(tight.frequency <= loose.frequency);
}

TEST_CASE("shape rejects degenerate direction sets") {
  auto spec = bernoulli_spec(1.0);
  CHECK_THROWS(estimate_shape(spec, {{1, 0}, {2, 0}, {-1, 0}}, {2, 4}, 30, 1));
  CHECK_THROWS(estimate_shape(spec, {{1, 0}, {0, 1}}, {2, 4}, 30, 1));
}
