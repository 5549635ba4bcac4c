#include "perco/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "perco/parallel.hpp"
#include "perco/rng.hpp"

namespace perco {

namespace {

constexpr double kZ95 = 1.959963984540054;


void append_observables(TrialReport& report, std::vector<std::vector<TrialObservable>>& per_trial) {
  for (auto& rows : per_trial) {
    for (auto& row : rows) report.observables.push_back(std::move(row));
  }
}

Window central_half_window(const Window& w) {
  Point lo(w.dim());
  std::vector<Coord> sides(w.dim());
  for (int i = 0; i < w.dim(); ++i) {
    Coord half = std::max<Coord>(1, w.side(i) / 2);
    lo[i] = w.anchor()[i] + (w.side(i) - half) / 2;
    sides[i] = half;
  }
  return Window::box(std::move(lo), std::move(sides));
}

}  // namespace

double pairwise_sum(const std::vector<double>& values) {
  // pairwise reduction: associative, order-independent across worker counts
  std::vector<double> buf(values);
  std::size_t n = buf.size();
  while (n > 1) {
    std::size_t m = 0;
    for (std::size_t i = 0; i + 1 < n; i += 2) buf[m++] = buf[i] + buf[i + 1];
    if (n % 2 == 1) buf[m++] = buf[n - 1];
    n = m;
  }
  return n == 0 ? 0.0 : buf[0];
}

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  s.n = static_cast<std::int64_t>(values.size());
  if (s.n < 30) throw std::invalid_argument("refusing to summarize fewer than 30 effective trials");
  s.mean = pairwise_sum(values) / static_cast<double>(s.n);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - s.mean) * (values[i] - s.mean);
  s.variance = pairwise_sum(sq) / static_cast<double>(s.n - 1);
  s.stderr_ = std::sqrt(s.variance / static_cast<double>(s.n));
  s.ci_lo = s.mean - kZ95 * s.stderr_;
  s.ci_hi = s.mean + kZ95 * s.stderr_;
  return s;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::int64_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::int64_t>(rank, 1, static_cast<std::int64_t>(values.size()));
  return values[rank - 1];
}

// --- density ----------------------------------------------------------------

DensityEstimate estimate_density(const ModelSpec& spec, const Window& window, std::int64_t trials,
                                 std::uint64_t master_seed, ProxyPolicy policy, int workers) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  ModelSampler sampler(spec, window);
  Window central = central_half_window(window);
  std::vector<SiteIndex> central_sites;
  for (SiteIndex s = 0; s < central.num_sites(); ++s) {
    central_sites.push_back(window.index_of(central.point_at(s)));
  }

  std::vector<double> density(trials);
  std::vector<std::vector<TrialObservable>> rows(trials);
  run_trials(trials, workers, [&](std::int64_t t) {
    std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(t));
    Config c = sampler.sample(seed);
    auto lab = label_components(c);
    std::int64_t inside = 0;
    if (lab.num_components() > 0) {
      Config proxy = s_infty_proxy(c, lab, policy);
      for (SiteIndex s : central_sites) inside += proxy.occupied(s);
    }
    density[t] = static_cast<double>(inside) / static_cast<double>(central_sites.size());
    rows[t].push_back({t, seed, "density", density[t], ""});
  });

  DensityEstimate out;
  out.stats = summarize(density);
  out.eta_hat = out.stats.mean;
  out.report.spec = spec;
  out.report.master_seed = master_seed;
  out.report.trials = trials;
  append_observables(out.report, rows);
  return out;
}

// --- chemical stretch --------------------------------------------------------

StretchEstimate estimate_chem_stretch(const ModelSpec& spec, const Window& window, Coord big_r,
                                      std::int64_t trials, std::uint64_t master_seed, int workers) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  {
    Point lo(window.dim(), -2 * big_r);
    Point hi(window.dim(), 2 * big_r);
    if (!window.contains(lo) || !window.contains(hi)) {
      throw std::invalid_argument("stretch estimation needs the window to cover B(0, 2R)");
    }
  }
  ModelSampler sampler(spec, window);
  const int d = window.dim();
  const auto probe_target =
      static_cast<std::size_t>(std::ceil(std::pow(std::log(static_cast<double>(big_r)), 2.0)));

  std::vector<double> ratio(trials, -1.0);  // -1 empty, -2 disconnected
  std::vector<std::vector<TrialObservable>> rows(trials);
  run_trials(trials, workers, [&](std::int64_t t) {
    std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(t));
    Config c = sampler.sample(seed);
    auto lab = label_components(c);
    auto mask = s_r_mask(c, lab, static_cast<double>(big_r));
    std::vector<SiteIndex> set;
    for (SiteIndex s : linf_ball(Point(d, 0), static_cast<double>(big_r), window)) {
      if (mask[s]) set.push_back(s);
    }
    std::sort(set.begin(), set.end());
    if (set.empty()) {
      rows[t].push_back({t, seed, "stretch_excluded", 1.0, "empty"});
      return;
    }

    // extremal probe sites in the 2^d signed directions, then random fill
    std::vector<SiteIndex> probe;
    for (std::uint32_t e = 0; e < (1u << d); ++e) {
      SiteIndex best = set.front();
      std::int64_t best_proj = 0;
      bool first = true;
      for (SiteIndex s : set) {
        Point p = window.point_at(s);
        std::int64_t proj = 0;
        for (int i = 0; i < d; ++i) proj += ((e >> i) & 1 ? -1 : 1) * p[i];
        if (first || proj > best_proj) {
          best = s;
          best_proj = proj;
          first = false;
        }
      }
      probe.push_back(best);
    }
    CounterRng rng(seed, 0xF111);
    while (probe.size() < std::min(probe_target, set.size())) {
      probe.push_back(set[rng.next_below(set.size())]);
    }
    std::sort(probe.begin(), probe.end());
    probe.erase(std::unique(probe.begin(), probe.end()), probe.end());

    ChemicalBfs bfs(c);
    std::int64_t max_dist = 0;
    bool disconnected = false;
    for (SiteIndex p : probe) {
      const auto& dist = bfs.distances_from(p);
      for (SiteIndex s : set) {
        if (dist[s] < 0) {
          disconnected = true;
          break;
        }
        max_dist = std::max<std::int64_t>(max_dist, dist[s]);
      }
      if (disconnected) break;
    }
    if (disconnected) {
      ratio[t] = -2.0;
      rows[t].push_back({t, seed, "stretch_excluded", 1.0, "disconnected"});
      return;
    }
    ratio[t] = static_cast<double>(max_dist) / static_cast<double>(big_r);
    rows[t].push_back({t, seed, "stretch_max_ratio", ratio[t], "R=" + std::to_string(big_r)});
  });

  StretchEstimate out;
  for (std::int64_t t = 0; t < trials; ++t) {
    if (ratio[t] >= 0.0) {
      out.max_ratios.push_back(ratio[t]);
    } else if (ratio[t] == -1.0) {
      ++out.excluded_empty;
    } else {
      ++out.excluded_disconnected;
    }
  }
  if (static_cast<std::int64_t>(out.max_ratios.size()) < 30) {
    throw std::runtime_error("fewer than 30 effective stretch trials");
  }
  out.q50 = quantile(out.max_ratios, 0.50);
  out.q90 = quantile(out.max_ratios, 0.90);
  out.q99 = quantile(out.max_ratios, 0.99);
  out.report.spec = spec;
  out.report.master_seed = master_seed;
  out.report.trials = trials;
  if (out.excluded_empty > 0) {
    out.report.notes.push_back("excluded " + std::to_string(out.excluded_empty) + " trials: S_R empty in B(0,R)");
  }
  if (out.excluded_disconnected > 0) {
    out.report.notes.push_back("excluded " + std::to_string(out.excluded_disconnected) +
                               " trials: S_R pairs disconnected");
  }
  append_observables(out.report, rows);
  return out;
}

// --- norm and shape ----------------------------------------------------------

namespace {

Window norm_window(const ModelSpec& spec, const std::vector<Point>& directions, std::int64_t n_max) {
  Coord reach = 0;
  for (const Point& x : directions) reach = std::max(reach, n_max * linf_norm(x));
  Coord margin = std::max<Coord>(12, reach / 8);
  return Window::centered_box(spec.dim, reach + margin);
}

struct DirectionSample {
  std::vector<double> ratio_at_nmax;   // per trial
  std::vector<std::vector<double>> per_n;  // [n_grid index][trial]
  std::int64_t subadd_violations = 0;
  std::int64_t excluded = 0;
};

// rho~(0, n x) along the grid for every direction on shared samples
std::vector<DirectionSample> sample_directions(const ModelSpec& spec, const std::vector<Point>& directions,
                                               const std::vector<std::int64_t>& n_grid, std::int64_t trials,
                                               std::uint64_t master_seed, int workers, TrialReport& report) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (n_grid.empty()) throw std::invalid_argument("n_grid must be nonempty");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] <= n_grid[i - 1]) throw std::invalid_argument("n_grid must be increasing");
  }
  for (const Point& x : directions) {
    if (static_cast<int>(x.size()) != spec.dim) throw std::invalid_argument("direction dimension mismatch");
    if (l1_norm(x) == 0) throw std::invalid_argument("direction must be nonzero");
  }
  Window window = norm_window(spec, directions, n_grid.back());
  ModelSampler sampler(spec, window);
  Labelling ell;

  const std::size_t nd = directions.size();
  const std::size_t ng = n_grid.size();
  std::vector<DirectionSample> out(nd);
  for (auto& dsm : out) dsm.per_n.assign(ng, {});

  struct TrialResult {
    bool excluded = false;
    std::vector<std::vector<double>> value;  // [dir][n]
    std::int64_t violations = 0;
  };
  std::vector<TrialResult> results(trials);
  std::vector<std::vector<TrialObservable>> rows(trials);

  run_trials(trials, workers, [&](std::int64_t t) {
    std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(t));
    Config c = sampler.sample(seed);
    auto lab = label_components(c);
    TrialResult& res = results[t];
    if (lab.num_components() == 0) {
      res.excluded = true;
      rows[t].push_back({t, seed, "norm_excluded", 1.0, "empty config"});
      return;
    }
    Config proxy = s_infty_proxy(c, lab, ProxyPolicy::largest);
    res.value.assign(nd, std::vector<double>(ng, -1.0));
    Point zero(spec.dim, 0);
    for (std::size_t di = 0; di < nd; ++di) {
      const Point& x = directions[di];
      std::vector<std::optional<std::int64_t>> from_zero(ng);
      bool bad = false;
      for (std::size_t ni = 0; ni < ng && !bad; ++ni) {
        Point target(spec.dim);
        for (int i = 0; i < spec.dim; ++i) target[i] = n_grid[ni] * x[i];
        from_zero[ni] = pseudo_distance(c, proxy, zero, target, ell);
        if (!from_zero[ni].has_value()) bad = true;
      }
      if (bad) {
        res.excluded = true;
        rows[t].push_back({t, seed, "norm_excluded", 1.0, "proxy disconnected"});
        return;
      }
      for (std::size_t ni = 0; ni < ng; ++ni) {
        res.value[di][ni] = static_cast<double>(*from_zero[ni]) / static_cast<double>(n_grid[ni]);
        rows[t].push_back({t, seed, "rho_over_n", res.value[di][ni],
                           "dir=" + std::to_string(di) + ",n=" + std::to_string(n_grid[ni])});
      }
      // per-sample subadditivity along consecutive grid points
      for (std::size_t ni = 0; ni + 1 < ng; ++ni) {
        Point a(spec.dim), b(spec.dim);
        for (int i = 0; i < spec.dim; ++i) {
          a[i] = n_grid[ni] * x[i];
          b[i] = n_grid[ni + 1] * x[i];
        }
        auto leg = pseudo_distance(c, proxy, a, b, ell);
        if (!leg.has_value() || *from_zero[ni + 1] > *from_zero[ni] + *leg) {
          res.violations += 1;
        }
      }
    }
  });

  for (std::int64_t t = 0; t < trials; ++t) {
    const TrialResult& res = results[t];
    if (res.excluded) {
      for (auto& dsm : out) ++dsm.excluded;
      continue;
    }
    for (std::size_t di = 0; di < nd; ++di) {
      out[di].subadd_violations += res.violations;
      out[di].ratio_at_nmax.push_back(res.value[di][ng - 1]);
      for (std::size_t ni = 0; ni < ng; ++ni) out[di].per_n[ni].push_back(res.value[di][ni]);
    }
  }
  report.trials = trials;
  report.master_seed = master_seed;
  append_observables(report, rows);
  return out;
}

}  // namespace

NormEstimate estimate_norm(const ModelSpec& spec, const Point& direction, const std::vector<std::int64_t>& n_grid,
                           std::int64_t trials, std::uint64_t master_seed, int workers) {
  NormEstimate out;
  out.direction = direction;
  out.report.spec = spec;
  auto samples = sample_directions(spec, {direction}, n_grid, trials, master_seed, workers, out.report);
  const DirectionSample& ds = samples[0];
  SummaryStats stats = summarize(ds.ratio_at_nmax);
  out.p_hat = stats.mean;
  out.stderr_ = stats.stderr_;
  for (const auto& column : ds.per_n) out.per_n_mean.push_back(summarize(column).mean);
  out.subadditivity_violations = ds.subadd_violations;
  out.excluded = ds.excluded;
  return out;
}

namespace {

// monotone-chain hull of 2d points, counterclockwise
std::vector<std::array<double, 2>> hull_2d(std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                  const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

// Depth by which p sits strictly inside the hull. A boundary point of any
// norm ball never falls inside the hull of the other measured boundary
// points, so a positive depth certifies a subadditivity-inconsistent
// estimate; a point outside the hull is an ordinary extremal direction.
double depth_inside_hull(const std::array<double, 2>& p, const std::vector<std::array<double, 2>>& hull) {
  if (hull.size() < 3) return 0.0;
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                  const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 1e-12) return 0.0;  // on or outside an edge
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    double vx = b[0] - a[0], vy = b[1] - a[1];
    double wx = p[0] - a[0], wy = p[1] - a[1];
    double t = std::clamp((vx * wx + vy * wy) / (vx * vx + vy * vy), 0.0, 1.0);
    double dx = wx - t * vx, dy = wy - t * vy;
    best = std::min(best, std::sqrt(dx * dx + dy * dy));
  }
  return best;
}

std::vector<Coord> orbit_signature(const Point& x) {
  std::vector<Coord> sig(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sig[i] = std::llabs(x[i]);
  std::sort(sig.begin(), sig.end());
  return sig;
}

}  // namespace

ShapeEstimate estimate_shape(const ModelSpec& spec, const std::vector<Point>& directions,
                             const std::vector<std::int64_t>& n_grid, std::int64_t trials,
                             std::uint64_t master_seed, int workers) {
  if (static_cast<int>(directions.size()) < spec.dim + 1) {
    throw std::invalid_argument("shape estimation needs at least d+1 directions");
  }
  {
    // directions must span R^d: Gaussian elimination rank check
    std::vector<std::vector<double>> m;
    for (const Point& x : directions) m.emplace_back(x.begin(), x.end());
    int rank = 0;
    for (int col = 0; col < spec.dim; ++col) {
      int pivot = -1;
      for (std::size_t row = rank; row < m.size(); ++row) {
        if (std::abs(m[row][col]) > 1e-12) {
          pivot = static_cast<int>(row);
          break;
        }
      }
      if (pivot < 0) continue;
      std::swap(m[rank], m[pivot]);
      for (std::size_t row = 0; row < m.size(); ++row) {
        if (static_cast<int>(row) == rank) continue;
        double f = m[row][col] / m[rank][col];
        for (int c2 = 0; c2 < spec.dim; ++c2) m[row][c2] -= f * m[rank][c2];
      }
      ++rank;
    }
    if (rank < spec.dim) throw std::invalid_argument("shape directions do not span R^d");
  }
  ShapeEstimate out;
  switch (spec.family) {
    case ModelFamily::bernoulli: out.parameter = spec.p; break;
    case ModelFamily::gff_level: out.parameter = spec.h; break;
    default: out.parameter = spec.u; break;
  }
  out.directions = directions;
  out.report.spec = spec;
  auto samples = sample_directions(spec, directions, n_grid, trials, master_seed, workers, out.report);
  for (const auto& ds : samples) {
    SummaryStats stats = summarize(ds.ratio_at_nmax);
    out.p_hat.push_back(stats.mean);
    out.stderr_.push_back(stats.stderr_);
    out.subadditivity_violations += ds.subadd_violations;
  }

  if (spec.dim == 2) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i = 0; i < directions.size(); ++i) {
      double px = static_cast<double>(directions[i][0]) / out.p_hat[i];
      double py = static_cast<double>(directions[i][1]) / out.p_hat[i];
      pts.push_back({px, py});
      pts.push_back({-px, -py});
    }
    out.hull = hull_2d(pts);
    for (std::size_t i = 0; i < directions.size(); ++i) {
      std::vector<std::array<double, 2>> others;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j != 2 * i) others.push_back(pts[j]);
      }
      out.convexity_violation = std::max(out.convexity_violation, depth_inside_hull(pts[2 * i], hull_2d(others)));
    }
  }

  // relative spread of p_hat over lattice-symmetry orbits
  for (std::size_t i = 0; i < directions.size(); ++i) {
    double lo = out.p_hat[i], hi = out.p_hat[i];
    for (std::size_t j = 0; j < directions.size(); ++j) {
      if (orbit_signature(directions[i]) == orbit_signature(directions[j])) {
        lo = std::min(lo, out.p_hat[j]);
        hi = std::max(hi, out.p_hat[j]);
      }
    }
    if (lo > 0) out.asymmetry_score = std::max(out.asymmetry_score, (hi - lo) / (0.5 * (hi + lo)));
  }
  return out;
}

// --- decorrelation -----------------------------------------------------------

bool local_event_increasing(const LocalEvent& event) {
  return event.kind != LocalEventKind::vacant_count_at_least;
}

bool eval_local_event(const Config& config, const LocalEvent& event, const Point& center) {
  const Window& w = config.window();
  int d = w.dim();
  IBox box{center, center};
  for (int i = 0; i < d; ++i) {
    box.lo[i] -= event.radius;
    box.hi[i] += event.radius + 1;
  }
  switch (event.kind) {
    case LocalEventKind::occupied_count_at_least: {
      std::int64_t count = 0;
      for (std::int64_t c = 0; c < box.volume(); ++c) count += config.occupied(w.index_of(box.cell_point(c)));
      return count >= event.threshold;
    }
    case LocalEventKind::vacant_count_at_least: {
      std::int64_t count = 0;
      for (std::int64_t c = 0; c < box.volume(); ++c) count += !config.occupied(w.index_of(box.cell_point(c)));
      return count >= event.threshold;
    }
    case LocalEventKind::crossing: {
      BoxLabeling lab = label_in_box(config, box);
      if (lab.num_components() == 0) return false;
      std::vector<std::uint8_t> lo_face(lab.sizes.size(), 0);
      for (std::int64_t c = 0; c < box.volume(); ++c) {
        Point p = box.cell_point(c);
        std::int32_t l = lab.label[c];
        if (l < 0) continue;
        if (p[0] == box.lo[0]) lo_face[l] = 1;
        if (p[0] == box.hi[0] - 1 && lo_face[l]) return true;
      }
      // second pass in case the hi face was visited before the lo face
      std::vector<std::uint8_t> hi_face(lab.sizes.size(), 0);
      for (std::int64_t c = 0; c < box.volume(); ++c) {
        Point p = box.cell_point(c);
        std::int32_t l = lab.label[c];
        if (l < 0) continue;
        if (p[0] == box.hi[0] - 1) hi_face[l] = 1;
      }
      for (std::size_t l = 0; l < lo_face.size(); ++l) {
        if (lo_face[l] && hi_face[l]) return true;
      }
      return false;
    }
  }
  return false;
}

DecorrelationReport check_decorrelation(const ModelSpec& spec, double param_joint, double param_marginal,
                                        Coord big_l, Coord big_r, const LocalEvent& event, std::int64_t trials,
                                        std::uint64_t master_seed, const RegularityProfile& profile,
                                        int workers) {
  if (trials < 30) throw std::invalid_argument("decorrelation check needs >= 30 trials");
  if (big_l < 1 || big_r < 1) throw std::invalid_argument("L and R must be >= 1");
  if (event.radius > 10 * big_l) {
    throw std::invalid_argument("event support exceeds B(x, 10L); precondition of the decorrelation inequality");
  }
  const int d = spec.dim;
  const Coord separation = big_r * big_l;  // |x1 - x2|_inf = R L exactly
  Point x1(d, 0);
  Point x2(d, 0);
  x2[0] = separation;

  Point lo(d, -(event.radius + 2));
  std::vector<Coord> sides(d, 2 * (event.radius + 2) + 1);
  sides[0] += separation;
  Window window = Window::box(lo, sides);
  ModelSampler sampler(spec, window);

  std::vector<double> joint(trials), m1(trials), m2(trials);
  std::vector<std::int64_t> mono(trials, 0);
  std::vector<std::vector<TrialObservable>> rows(trials);
  const bool increasing = local_event_increasing(event);
  run_trials(trials, workers, [&](std::int64_t t) {
    std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(t));
    Config cj = sampler.sample_at(param_joint, seed);
    Config cm = sampler.sample_at(param_marginal, seed);
    bool j1 = eval_local_event(cj, event, x1);
    bool j2 = eval_local_event(cj, event, x2);
    bool k1 = eval_local_event(cm, event, x1);
    bool k2 = eval_local_event(cm, event, x2);
    joint[t] = (j1 && j2) ? 1.0 : 0.0;
    m1[t] = k1 ? 1.0 : 0.0;
    m2[t] = k2 ? 1.0 : 0.0;
    // coupled monotonicity spot check: the config at the sparser parameter
    // is a subset of the denser one, so the indicator must not invert
    if (t < 50) {
      bool denser_has_more = cm.occupied_count() >= cj.occupied_count();
      bool lo1 = denser_has_more ? j1 : k1;
      bool hi1 = denser_has_more ? k1 : j1;
      if (increasing ? (lo1 && !hi1) : (!lo1 && hi1)) mono[t] = 1;
    }
    rows[t].push_back({t, seed, "joint", joint[t], ""});
    rows[t].push_back({t, seed, "marginal1", m1[t], ""});
    rows[t].push_back({t, seed, "marginal2", m2[t], ""});
  });

  DecorrelationReport out;
  SummaryStats sj = summarize(joint);
  SummaryStats s1 = summarize(m1);
  SummaryStats s2 = summarize(m2);
  out.lhs = sj.mean;
  out.lhs_se = sj.stderr_;
  out.product = s1.mean * s2.mean;
  out.product_se = std::sqrt(s2.mean * s2.mean * s1.stderr_ * s1.stderr_ +
                             s1.mean * s1.mean * s2.stderr_ * s2.stderr_);
  out.fp_term = std::exp(-std::exp(profile.log_f_p(static_cast<double>(big_l))));
  out.raw_diff = out.lhs - out.product;
  out.margin = out.product + out.fp_term - out.lhs;
  out.margin_se = std::sqrt(out.lhs_se * out.lhs_se + out.product_se * out.product_se);
  for (auto v : mono) out.monotonicity_violations += v;
  out.report.spec = spec;
  out.report.master_seed = master_seed;
  out.report.trials = trials;
  append_observables(out.report, rows);
  return out;
}

// --- covariance decay ---------------------------------------------------------

CovarianceDecay covariance_decay(const ModelSpec& spec, const std::vector<Coord>& pair_distances,
                                 std::int64_t trials, std::uint64_t master_seed, int workers) {
  if (pair_distances.size() < 4) throw std::invalid_argument("need at least 4 pair distances");
  if (spec.dim < 3) throw std::invalid_argument("covariance decay requires d >= 3");
  Coord max_dist = *std::max_element(pair_distances.begin(), pair_distances.end());

  Point lo(spec.dim, -4);
  std::vector<Coord> sides(spec.dim, 9);
  sides[0] = max_dist + 9;
  Window window = Window::box(lo, sides);
  ModelSampler sampler(spec, window);

  const std::size_t nr = pair_distances.size();
  // Uncentered pair products per trial, centered afterwards with the global
  // density; a per-trial centering would subtract the trajectory-count
  // fluctuation that carries the long-range correlation.
  std::vector<std::vector<double>> product(nr, std::vector<double>(trials));
  std::vector<double> density(trials);
  std::vector<std::vector<TrialObservable>> rows(trials);
  run_trials(trials, workers, [&](std::int64_t t) {
    std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(t));
    Config c = sampler.sample(seed);
    density[t] = static_cast<double>(c.occupied_count()) / static_cast<double>(window.num_sites());
    for (std::size_t ri = 0; ri < nr; ++ri) {
      Coord r = pair_distances[ri];
      std::int64_t acc = 0;
      std::int64_t pairs = 0;
      for (SiteIndex s = 0; s < window.num_sites(); ++s) {
        Point p = window.point_at(s);
        if (p[0] + r >= lo[0] + sides[0]) continue;
        Point q2 = p;
        q2[0] += r;
        acc += (c.occupied(s) && c.occupied(window.index_of(q2))) ? 1 : 0;
        ++pairs;
      }
      product[ri][t] = static_cast<double>(acc) / static_cast<double>(pairs);
      rows[t].push_back({t, seed, "pair_product", product[ri][t], "r=" + std::to_string(r)});
    }
  });

  CovarianceDecay out;
  out.distances = pair_distances;
  SummaryStats qs = summarize(density);
  for (std::size_t ri = 0; ri < nr; ++ri) {
    SummaryStats s = summarize(product[ri]);
    out.covariance.push_back(s.mean - qs.mean * qs.mean);
    out.cov_se.push_back(std::sqrt(s.stderr_ * s.stderr_ +
                                   4.0 * qs.mean * qs.mean * qs.stderr_ * qs.stderr_));
  }

  // weighted least squares on log-log axes using points with clear sign
  std::vector<double> lx, ly, wgt;
  out.used_in_fit.assign(nr, 0);
  for (std::size_t ri = 0; ri < nr; ++ri) {
    if (pair_distances[ri] < 1) continue;
    if (out.covariance[ri] <= 0.0 || out.covariance[ri] < 2.0 * out.cov_se[ri]) continue;
    out.used_in_fit[ri] = 1;
    lx.push_back(std::log(static_cast<double>(pair_distances[ri])));
    ly.push_back(std::log(out.covariance[ri]));
    double se_log = out.cov_se[ri] / out.covariance[ri];
    wgt.push_back(1.0 / (se_log * se_log));
  }
  if (lx.size() < 3) {
    out.report.notes.push_back("too few usable covariance points for a slope fit");
    out.slope = 0.0;
    out.slope_se = std::numeric_limits<double>::infinity();
  } else {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sw += wgt[i];
      sx += wgt[i] * lx[i];
      sy += wgt[i] * ly[i];
      sxx += wgt[i] * lx[i] * lx[i];
      sxy += wgt[i] * lx[i] * ly[i];
    }
    double denom = sw * sxx - sx * sx;
    out.slope = (sw * sxy - sx * sy) / denom;
    out.slope_se = std::sqrt(sw / denom);
  }
  out.report.spec = spec;
  out.report.master_seed = master_seed;
  out.report.trials = trials;
  append_observables(out.report, rows);
  return out;
}

// --- torus ---------------------------------------------------------------------

TorusDiameterEstimate torus_giant_diameter(double u, Coord n, int dim, std::int64_t trials,
                                           std::uint64_t master_seed, int workers) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  TorusDiameterEstimate out;
  out.n = n;
  std::vector<double> ratios(trials, -1.0);
  std::vector<std::vector<TrialObservable>> rows(trials);
  run_trials(trials, workers, [&](std::int64_t t) {
    std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(t));
    Config c = sample_torus_vacant(u, n, dim, seed);
    auto lab = label_components(c);
    if (lab.num_components() == 0) {
      rows[t].push_back({t, seed, "torus_excluded", 1.0, "vacant set empty"});
      return;
    }
    std::int32_t giant = 0;
    for (std::int32_t comp = 1; comp < lab.num_components(); ++comp) {
      if (lab.sizes[comp] > lab.sizes[giant]) giant = comp;
    }
    SiteIndex start = kNoSite;
    for (SiteIndex s = 0; s < c.window().num_sites(); ++s) {
      if (lab.component_id[s] == giant) {
        start = s;
        break;
      }
    }
    ChemicalBfs bfs(c);
    SiteIndex far = start;
    bfs.eccentricity(start, &far);
    std::int32_t diameter = bfs.eccentricity(far, nullptr);
    ratios[t] = static_cast<double>(diameter) / static_cast<double>(n);
    rows[t].push_back({t, seed, "diameter_over_n", ratios[t], "N=" + std::to_string(n)});
  });

  for (std::int64_t t = 0; t < trials; ++t) {
    if (ratios[t] >= 0.0) out.ratios.push_back(ratios[t]);
  }
  if (static_cast<std::int64_t>(out.ratios.size()) < 30) {
    throw std::runtime_error("fewer than 30 effective torus trials");
  }
  out.median = quantile(out.ratios, 0.5);
  out.q25 = quantile(out.ratios, 0.25);
  out.q75 = quantile(out.ratios, 0.75);
  out.report.master_seed = master_seed;
  out.report.trials = trials;
  out.report.spec.family = ModelFamily::torus_vacant;
  out.report.spec.dim = dim;
  out.report.spec.u = u;
  out.report.spec.torus_n = n;
  append_observables(out.report, rows);
  return out;
}

MesoscopicReport check_torus_mesoscopic(double u, Coord n, int dim, double c_factor, std::int64_t trials,
                                        std::uint64_t master_seed, int workers) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  MesoscopicReport out;
  out.n = n;
  out.meso = std::max<Coord>(1, static_cast<Coord>(std::floor(std::cbrt(static_cast<double>(n)))));
  const Coord meso = out.meso;
  const Coord density_radius =
      std::max<Coord>(1, static_cast<Coord>(std::floor(std::pow(static_cast<double>(meso), 1.0 / dim))));
  Window torus = Window::torus(dim, n);

  // coarse grid: multiples of meso
  std::vector<Point> grid;
  {
    Point z(dim, 0);
    while (true) {
      grid.push_back(z);
      int axis = dim - 1;
      while (axis >= 0) {
        z[axis] += meso;
        if (z[axis] < n) break;
        z[axis] = 0;
        --axis;
      }
      if (axis < 0) break;
    }
  }

  std::vector<double> freq(trials, 0.0);
  std::vector<double> allz(trials, 0.0);
  std::vector<std::vector<TrialObservable>> rows(trials);
  run_trials(trials, workers, [&](std::int64_t t) {
    std::uint64_t seed = derive_seed(master_seed, static_cast<std::uint64_t>(t));
    Config c = sample_torus_vacant(u, n, dim, seed);
    std::int64_t hits = 0;
    bool all = true;
    for (const Point& z : grid) {
      IBox box{z, z};
      for (int i = 0; i < dim; ++i) {
        box.lo[i] -= meso;
        box.hi[i] += meso + 1;
      }
      BoxLabeling lab = label_in_box(c, box);
      bool ok = false;
      if (lab.num_components() > 0) {
        std::int32_t cand = 0;
        for (std::int32_t comp = 1; comp < lab.num_components(); ++comp) {
          if (lab.sizes[comp] > lab.sizes[cand]) cand = comp;
        }
        // (i) pairwise chemical distance within the restricted candidate
        std::vector<std::int64_t> members;
        for (std::int64_t cell = 0; cell < box.volume(); ++cell) {
          if (lab.label[cell] == cand) members.push_back(cell);
        }
        std::int64_t max_pair = 0;
        {
          // BFS inside the box restricted to the candidate component
          std::vector<std::int64_t> stride(dim, 1);
          for (int i = dim - 2; i >= 0; --i) stride[i] = stride[i + 1] * (box.hi[i + 1] - box.lo[i + 1]);
          std::vector<std::int32_t> dist(box.volume());
          std::vector<std::int64_t> queue;
          for (std::int64_t src : members) {
            std::fill(dist.begin(), dist.end(), -1);
            queue.clear();
            dist[src] = 0;
            queue.push_back(src);
            for (std::size_t qi = 0; qi < queue.size(); ++qi) {
              std::int64_t cell = queue[qi];
              Point p = box.cell_point(cell);
              for (int axis = 0; axis < dim; ++axis) {
                for (int dir = -1; dir <= 1; dir += 2) {
                  Point q = p;
                  q[axis] += dir;
                  if (!box.contains(q)) continue;
                  std::int64_t tc = box.cell_index(q);
                  if (dist[tc] >= 0 || lab.label[tc] != cand) continue;
                  dist[tc] = dist[cell] + 1;
                  queue.push_back(tc);
                }
              }
            }
            for (std::int64_t other : members) max_pair = std::max<std::int64_t>(max_pair, dist[other]);
          }
        }
        bool pairwise_ok = static_cast<double>(max_pair) <= c_factor * static_cast<double>(meso);

        // (ii) density: every x in B(z, meso/2) is within density_radius of the candidate
        bool density_ok = true;
        std::vector<std::uint8_t> cand_mask(torus.num_sites(), 0);
        for (std::int64_t cell : members) cand_mask[torus.index_of(box.cell_point(cell))] = 1;
        for (SiteIndex xs : linf_ball(z, static_cast<double>(meso) / 2.0, torus)) {
          bool near = false;
          for (SiteIndex ys : linf_ball(torus.point_at(xs), static_cast<double>(density_radius), torus)) {
            if (cand_mask[ys]) {
              near = true;
              break;
            }
          }
          if (!near) {
            density_ok = false;
            break;
          }
        }
        ok = pairwise_ok && density_ok;
      }
      hits += ok;
      all = all && ok;
    }
    freq[t] = static_cast<double>(hits) / static_cast<double>(grid.size());
    allz[t] = all ? 1.0 : 0.0;
    rows[t].push_back({t, seed, "mesoscopic_fraction", freq[t], "N=" + std::to_string(n)});
  });

  out.frequency = pairwise_sum(freq) / static_cast<double>(trials);
  out.all_z_frequency = pairwise_sum(allz) / static_cast<double>(trials);
  out.report.master_seed = master_seed;
  out.report.trials = trials;
  out.report.spec.family = ModelFamily::torus_vacant;
  out.report.spec.dim = dim;
  out.report.spec.u = u;
  out.report.spec.torus_n = n;
  append_observables(out.report, rows);
  return out;
}

}  // namespace perco
