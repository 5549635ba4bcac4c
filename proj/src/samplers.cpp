#include "perco/samplers.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "perco/clusters.hpp"
#include "perco/rng.hpp"

namespace perco {

namespace {

std::uint64_t point_stream(const Point& p) {
  std::uint64_t h = 0x243f6a8885a308d3ull;
  for (Coord c : p) h = mix64(h ^ static_cast<std::uint64_t>(c));
  return h;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Membership bitmap over the bounding box of a finite site set.
struct SetBitmap {
  IBox bounds;
  std::vector<std::uint8_t> bits;

  explicit SetBitmap(const std::vector<Point>& sites) {
    int d = static_cast<int>(sites.front().size());
    bounds.lo = sites.front();
    bounds.hi = sites.front();
    for (const Point& p : sites) {
      for (int i = 0; i < d; ++i) {
        bounds.lo[i] = std::min(bounds.lo[i], p[i]);
        bounds.hi[i] = std::max(bounds.hi[i], p[i] + 1);
      }
    }
    bits.assign(bounds.volume(), 0);
    for (const Point& p : sites) bits[bounds.cell_index(p)] = 1;
  }
  bool contains(const Point& p) const {
    return bounds.contains(p) && bits[bounds.cell_index(p)];
  }
};

Point bounding_center(const IBox& b) {
  Point c(b.lo.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = (b.lo[i] + b.hi[i] - 1) / 2;
  return c;
}

}  // namespace

std::string family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::bernoulli: return "bernoulli";
    case ModelFamily::gff_level: return "gff_level";
    case ModelFamily::interlacement: return "interlacement";
    case ModelFamily::vacant_interlacement: return "vacant_interlacement";
    case ModelFamily::torus_vacant: return "torus_vacant";
  }
  return "?";
}

void ModelSpec::validate() const {
  if (dim < 2) throw std::invalid_argument("dimension must be >= 2");
  switch (family) {
    case ModelFamily::bernoulli:
      if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli p must lie in [0,1]");
      break;
    case ModelFamily::gff_level:
      if (dim < 3) throw std::invalid_argument("gff_level requires d >= 3");
      if (pad < 0) throw std::invalid_argument("pad must be >= 1 (or 0 for the default)");
      break;
    case ModelFamily::interlacement:
    case ModelFamily::vacant_interlacement:
      if (dim < 3) throw std::invalid_argument("interlacement families require d >= 3");
      if (u <= 0.0) throw std::invalid_argument("u must be positive");
      if (capacity_trials < 1) throw std::invalid_argument("capacity_trials must be >= 1");
      break;
    case ModelFamily::torus_vacant:
      if (dim < 3) throw std::invalid_argument("torus_vacant requires d >= 3");
      if (u < 0.0) throw std::invalid_argument("u must be nonnegative");
      if (torus_n < 4) throw std::invalid_argument("torus_vacant requires N >= 4");
      break;
  }
  if (sweep_lo != 0.0 || sweep_hi != 0.0) {
    if (!(sweep_lo < sweep_hi)) throw std::invalid_argument("sweep range must satisfy a < b");
  }
}

std::string ModelSpec::tag() const {
  std::string t = family_name(family);
  switch (family) {
    case ModelFamily::bernoulli: t += "(p=" + format_double(p) + ")"; break;
    case ModelFamily::gff_level: t += "(h=" + format_double(h) + ",pad=" + std::to_string(pad) + ")"; break;
    case ModelFamily::interlacement:
    case ModelFamily::vacant_interlacement:
      t += "(u=" + format_double(u) + ",rho=" + std::to_string(escape_radius) + ")";
      break;
    case ModelFamily::torus_vacant:
      t += "(u=" + format_double(u) + ",N=" + std::to_string(torus_n) + ")";
      break;
  }
  return t;
}

Config sample_bernoulli(double p, const Window& window, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli p must lie in [0,1]");
  OccupancyBuffer buf(window.num_sites());
  for (SiteIndex s = 0; s < window.num_sites(); ++s) {
    CounterRng rng(seed, static_cast<std::uint64_t>(s));
    if (rng.next_unit() < p) buf.set(s, true);
  }
  return std::move(buf).freeze(window, "bernoulli(p=" + format_double(p) + ")", seed);
}

Coord default_gff_pad(const Window& window) {
  Coord m = *std::max_element(window.sides().begin(), window.sides().end());
  return std::max<Coord>(1, m);  // 2x the window radius
}

GreenMatrix build_green_matrix(const Window& window, Coord pad, std::int64_t dense_cap) {
  if (window.geometry() != Geometry::box) throw std::invalid_argument("green matrix requires a box window");
  if (window.dim() < 3) throw std::invalid_argument("green matrix requires d >= 3");
  if (pad < 1) throw std::invalid_argument("pad must be >= 1");
  if (window.num_sites() > dense_cap) {
    throw std::invalid_argument(
        "window has " + std::to_string(window.num_sites()) + " sites; the dense Green matrix is capped at " +
        std::to_string(dense_cap) + " (shrink the window or raise the cap)");
  }
  int d = window.dim();
  Point plo = window.anchor();
  std::vector<Coord> psides = window.sides();
  for (int i = 0; i < d; ++i) {
    plo[i] -= pad;
    psides[i] += 2 * pad;
  }
  Window padded = Window::box(plo, psides);
  if (padded.num_sites() > 4'000'000) {
    throw std::invalid_argument("padded Dirichlet domain exceeds 4e6 sites");
  }
  std::int64_t n = padded.num_sites();

  // I - P with P the killed walk: SPD.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (2 * d + 1));
  double step = -1.0 / (2.0 * d);
  for (SiteIndex s = 0; s < n; ++s) {
    trip.emplace_back(s, s, 1.0);
    for (int axis = 0; axis < d; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        SiteIndex t = padded.neighbor(s, axis, dir);
        if (t != kNoSite) trip.emplace_back(s, t, step);
      }
    }
  }
  Eigen::SparseMatrix<double> laplacian(n, n);
  laplacian.setFromTriplets(trip.begin(), trip.end());

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver(laplacian);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("Dirichlet Laplacian factorization failed");
  }

  std::int64_t m = window.num_sites();
  std::vector<SiteIndex> padded_index(m);
  for (SiteIndex s = 0; s < m; ++s) padded_index[s] = padded.index_of(window.point_at(s));

  GreenMatrix out{window, Eigen::MatrixXd(m, m)};
  constexpr std::int64_t kChunk = 64;
  Eigen::MatrixXd rhs(n, std::min(kChunk, m));
  for (std::int64_t c0 = 0; c0 < m; c0 += kChunk) {
    std::int64_t cols = std::min(kChunk, m - c0);
    rhs.setZero(n, cols);
    for (std::int64_t j = 0; j < cols; ++j) rhs(padded_index[c0 + j], j) = 1.0;
    Eigen::MatrixXd sol = solver.solve(rhs);
    for (std::int64_t j = 0; j < cols; ++j) {
      for (std::int64_t i = 0; i < m; ++i) out.values(i, c0 + j) = sol(padded_index[i], j);
    }
  }
  out.values = ((out.values + out.values.transpose()) * 0.5).eval();
  return out;
}

GffSampler::GffSampler(const Window& window, Coord pad, std::int64_t dense_cap)
    : green_(build_green_matrix(window, pad, dense_cap)) {
  Eigen::LLT<Eigen::MatrixXd> llt(green_.values);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("Green matrix is numerically non-PSD; Cholesky failed");
  }
  chol_lower_ = llt.matrixL();
}

RealField GffSampler::sample(std::uint64_t seed, std::uint64_t draw_index) const {
  std::int64_t m = green_.window.num_sites();
  CounterRng rng(seed, draw_index);
  Eigen::VectorXd z(m);
  for (std::int64_t i = 0; i < m; ++i) z(i) = rng.next_normal();
  Eigen::VectorXd phi = chol_lower_ * z;
  RealField f{green_.window, std::vector<double>(m), seed};
  for (std::int64_t i = 0; i < m; ++i) f.values[i] = phi(i);
  return f;
}

Eigen::MatrixXd GffSampler::sample_columns(std::uint64_t seed, std::uint64_t draw_first, int count) const {
  std::int64_t m = green_.window.num_sites();
  Eigen::MatrixXd z(m, count);
  for (int j = 0; j < count; ++j) {
    CounterRng rng(seed, draw_first + static_cast<std::uint64_t>(j));
    for (std::int64_t i = 0; i < m; ++i) z(i, j) = rng.next_normal();
  }
  return chol_lower_ * z;
}

Config level_set(const RealField& field, double h) {
  const Window& w = field.window;
  if (static_cast<std::int64_t>(field.values.size()) != w.num_sites()) {
    throw std::invalid_argument("field length does not match window");
  }
  OccupancyBuffer buf(w.num_sites());
  for (SiteIndex s = 0; s < w.num_sites(); ++s) {
    if (field.values[s] >= h) buf.set(s, true);
  }
  return std::move(buf).freeze(w, "gff_level(h=" + format_double(h) + ")", field.seed);
}

CapacityEstimate estimate_capacity(const std::vector<Point>& k_sites, Coord escape_radius,
                                   std::int64_t trials, std::uint64_t seed) {
  CapacityEstimate out;
  out.trials = trials;
  if (k_sites.empty()) return out;  // cap(empty) = 0
  if (trials < 1) throw std::invalid_argument("capacity estimation needs trials >= 1");
  int d = static_cast<int>(k_sites.front().size());
  if (d < 3) throw std::invalid_argument("capacity estimation requires d >= 3");

  SetBitmap member(k_sites);
  Point center = bounding_center(member.bounds);
  Coord radius_k = 0;
  for (const Point& p : k_sites) radius_k = std::max(radius_k, linf_norm(point_sub(p, center)));
  if (escape_radius < std::max<Coord>(2, 4 * radius_k)) {
    throw std::invalid_argument("escape_radius must be at least max(2, 4x the linf radius of K)");
  }

  out.sites = k_sites;
  std::sort(out.sites.begin(), out.sites.end());
  out.escape_counts.assign(out.sites.size(), 0);

  double var_sum = 0.0;
  for (std::size_t i = 0; i < out.sites.size(); ++i) {
    const Point& x = out.sites[i];
    // interior sites (every neighbor in K) can never escape without return
    bool interior = true;
    Point probe = x;
    for (int axis = 0; axis < d && interior; ++axis) {
      for (int dir = -1; dir <= 1; dir += 2) {
        probe[axis] = x[axis] + dir;
        if (!member.contains(probe)) {
          interior = false;
          break;
        }
      }
      probe[axis] = x[axis];
    }
    if (interior) continue;

    std::int64_t successes = 0;
    std::uint64_t base = point_stream(x);
    Point pos(d);
    for (std::int64_t t = 0; t < trials; ++t) {
      CounterRng rng(seed, base + static_cast<std::uint64_t>(t));
      pos = x;
      while (true) {
        std::uint64_t mv = rng.next_below(static_cast<std::uint64_t>(2 * d));
        int axis = static_cast<int>(mv >> 1);
        pos[axis] += (mv & 1) ? 1 : -1;
        if (member.contains(pos)) break;  // returned to K
        Coord dist = 0;
        for (int i = 0; i < d; ++i) dist = std::max(dist, std::abs(pos[i] - center[i]));
        if (dist > escape_radius) {
          ++successes;
          break;
        }
      }
    }
    out.escape_counts[i] = successes;
    double pe = static_cast<double>(successes) / static_cast<double>(trials);
    var_sum += pe * (1.0 - pe) / static_cast<double>(trials);
  }
  std::int64_t total = 0;
  for (auto c : out.escape_counts) total += c;
  out.cap = static_cast<double>(total) / static_cast<double>(trials);
  out.stderr_ = std::sqrt(var_sum);
  return out;
}

Coord default_escape_radius(const Window& window) {
  Coord m = *std::max_element(window.sides().begin(), window.sides().end());
  return 2 * m;  // 4x the window radius
}

InterlacementSampler::InterlacementSampler(const Window& window, Coord escape_radius,
                                           std::int64_t capacity_trials, std::uint64_t capacity_seed)
    : window_(window), escape_radius_(escape_radius) {
  if (window.geometry() != Geometry::box) throw std::invalid_argument("interlacement requires a box window");
  if (window.dim() < 3) throw std::invalid_argument("interlacement requires d >= 3");
  std::vector<Point> sites;
  sites.reserve(window.num_sites());
  for (SiteIndex s = 0; s < window.num_sites(); ++s) sites.push_back(window.point_at(s));
  capacity_ = estimate_capacity(sites, escape_radius, capacity_trials, capacity_seed);
  IBox bounds{window.anchor(), window.anchor()};
  for (int i = 0; i < window.dim(); ++i) bounds.hi[i] += window.side(i);
  center_ = bounding_center(bounds);

  cum_weights_.assign(capacity_.sites.size(), 0);
  total_weight_ = 0;
  for (std::size_t i = 0; i < capacity_.sites.size(); ++i) {
    total_weight_ += capacity_.escape_counts[i];
    cum_weights_[i] = total_weight_;
  }
  if (total_weight_ == 0) {
    throw std::runtime_error("window equilibrium measure is empty; raise capacity_trials");
  }
}

Config InterlacementSampler::sample(double u, std::uint64_t seed) const {
  if (u < 0.0) throw std::invalid_argument("u must be nonnegative");
  int d = window_.dim();
  OccupancyBuffer buf(window_.num_sites());
  // Poisson arrivals on the intensity axis; trajectory j is a pure function
  // of (seed, j), so traces at different u are thinning-coupled.
  CounterRng arrivals(seed, 0);
  double t_arrival = arrivals.next_exponential();
  Point pos(d);
  for (std::uint64_t j = 0; t_arrival <= u * capacity_.cap; ++j, t_arrival += arrivals.next_exponential()) {
    CounterRng rng(seed, 0x100 + j);
    std::int64_t r = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(total_weight_))) + 1;
    std::size_t idx = std::lower_bound(cum_weights_.begin(), cum_weights_.end(), r) - cum_weights_.begin();
    pos = capacity_.sites[idx];
    while (true) {
      bool inside = true;
      Coord dist = 0;
      SiteIndex site = 0;
      for (int i = 0; i < d; ++i) {
        Coord off = pos[i] - window_.anchor()[i];
        if (off < 0 || off >= window_.side(i)) inside = false;
        dist = std::max(dist, std::abs(pos[i] - center_[i]));
      }
      if (inside) {
        site = window_.index_of(pos);
        buf.set(site, true);
      }
      if (dist > escape_radius_) break;
      std::uint64_t mv = rng.next_below(static_cast<std::uint64_t>(2 * d));
      pos[static_cast<int>(mv >> 1)] += (mv & 1) ? 1 : -1;
    }
  }
  std::string tag = "interlacement(u=" + format_double(u) + ",rho=" + std::to_string(escape_radius_) + ")";
  return std::move(buf).freeze(window_, tag, seed);
}

Config InterlacementSampler::sample_vacant(double u, std::uint64_t seed) const {
  Config trace = sample(u, seed);
  std::vector<std::uint64_t> words = trace.words();
  for (auto& w : words) w = ~w;
  std::string tag = "vacant_interlacement(u=" + format_double(u) + ",rho=" + std::to_string(escape_radius_) + ")";
  return Config(window_, std::move(words), tag, seed);
}

namespace {
constexpr std::uint64_t kCapacitySeedSalt = 0x63617061636974ull;  // fixed so samples are pure in (spec, window, seed)
}

Config sample_interlacement(double u, const Window& window, Coord escape_radius, std::int64_t trials_cap,
                            std::uint64_t seed) {
  InterlacementSampler s(window, escape_radius, trials_cap, kCapacitySeedSalt);
  return s.sample(u, seed);
}

Config sample_vacant_interlacement(double u, const Window& window, Coord escape_radius,
                                   std::int64_t trials_cap, std::uint64_t seed) {
  InterlacementSampler s(window, escape_radius, trials_cap, kCapacitySeedSalt);
  return s.sample_vacant(u, seed);
}

Config sample_torus_vacant(double u, Coord n, int dim, std::uint64_t seed) {
  if (dim < 3) throw std::invalid_argument("torus_vacant requires d >= 3");
  if (n < 4) throw std::invalid_argument("torus_vacant requires N >= 4");
  if (u < 0.0) throw std::invalid_argument("u must be nonnegative");
  Window torus = Window::torus(dim, n);
  double vol = std::pow(static_cast<double>(n), dim);
  double steps_real = u * vol;
  if (steps_real > 4.6e18) throw std::overflow_error("u * N^d overflows the step counter");
  auto steps = static_cast<std::uint64_t>(steps_real);

  OccupancyBuffer visited(torus.num_sites());
  CounterRng rng(seed, 0);
  SiteIndex pos = static_cast<SiteIndex>(rng.next_below(static_cast<std::uint64_t>(torus.num_sites())));
  if (steps > 0) visited.set(pos, true);  // zero steps leave the torus untouched
  for (std::uint64_t step = 0; step < steps; ++step) {
    std::uint64_t mv = rng.next_below(static_cast<std::uint64_t>(2 * dim));
    pos = torus.neighbor(pos, static_cast<int>(mv >> 1), (mv & 1) ? 1 : -1);
    visited.set(pos, true);
  }
  OccupancyBuffer vacant(torus.num_sites());
  for (SiteIndex s = 0; s < torus.num_sites(); ++s) vacant.set(s, !visited.get(s));
  std::string tag = "torus_vacant(u=" + format_double(u) + ",N=" + std::to_string(n) + ")";
  return std::move(vacant).freeze(torus, tag, seed);
}

ModelSampler::ModelSampler(ModelSpec spec, Window window) : spec_(spec), window_(std::move(window)) {
  spec_.validate();
  if (spec_.family == ModelFamily::torus_vacant) {
    if (window_.geometry() != Geometry::torus || window_.side(0) != spec_.torus_n) {
      throw std::invalid_argument("torus_vacant needs a torus window with side N");
    }
  }
  if (spec_.family == ModelFamily::gff_level) {
    Coord pad = spec_.pad > 0 ? spec_.pad : default_gff_pad(window_);
    gff_ = std::make_shared<const GffSampler>(window_, pad);
  }
  if (spec_.family == ModelFamily::interlacement || spec_.family == ModelFamily::vacant_interlacement) {
    Coord rho = spec_.escape_radius > 0 ? spec_.escape_radius : default_escape_radius(window_);
    interlacement_ =
        std::make_shared<const InterlacementSampler>(window_, rho, spec_.capacity_trials, kCapacitySeedSalt);
  }
}

Config ModelSampler::sample(std::uint64_t seed) const {
  switch (spec_.family) {
    case ModelFamily::bernoulli: return sample_bernoulli(spec_.p, window_, seed);
    case ModelFamily::gff_level: return level_set(gff_->sample(seed), spec_.h);
    case ModelFamily::interlacement: return interlacement_->sample(spec_.u, seed);
    case ModelFamily::vacant_interlacement: return interlacement_->sample_vacant(spec_.u, seed);
    case ModelFamily::torus_vacant: return sample_torus_vacant(spec_.u, spec_.torus_n, spec_.dim, seed);
  }
  throw std::logic_error("unknown model family");
}

Config ModelSampler::sample_at(double parameter, std::uint64_t seed) const {
  switch (spec_.family) {
    case ModelFamily::bernoulli: return sample_bernoulli(parameter, window_, seed);
    case ModelFamily::gff_level: return level_set(gff_->sample(seed), parameter);
    case ModelFamily::interlacement: return interlacement_->sample(parameter, seed);
    case ModelFamily::vacant_interlacement: return interlacement_->sample_vacant(parameter, seed);
    case ModelFamily::torus_vacant: return sample_torus_vacant(parameter, spec_.torus_n, spec_.dim, seed);
  }
  throw std::logic_error("unknown model family");
}

}  // namespace perco
