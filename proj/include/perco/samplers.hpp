#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "perco/config.hpp"
#include "perco/lattice.hpp"

namespace perco {

enum class ModelFamily { bernoulli, gff_level, interlacement, vacant_interlacement, torus_vacant };

std::string family_name(ModelFamily f);

struct ModelSpec {
  ModelFamily family = ModelFamily::bernoulli;
  int dim = 2;
  double p = 0.5;            // bernoulli
  double h = 0.0;            // gff level
  Coord pad = 0;             // gff Dirichlet padding; 0 means 2x window radius
  double u = 1.0;            // interlacement intensity / torus time multiplier
  Coord escape_radius = 0;   // interlacement truncation; 0 means 4x window radius
  std::int64_t capacity_trials = 400;
  Coord torus_n = 0;
  double sweep_lo = 0.0;     // optional (a,b) range for sweeps
  double sweep_hi = 0.0;

  void validate() const;
  std::string tag() const;
};

// i.i.d. occupancy; the uniform for a site depends only on (seed, site), so
// configs with the same seed are coupled monotonically across p.
Config sample_bernoulli(double p, const Window& window, std::uint64_t seed);

struct RealField {
  Window window;
  std::vector<double> values;
  std::uint64_t seed = 0;
};

// Covariance of the Dirichlet Gaussian free field on the window enlarged by
// pad on every side (zero boundary), restricted back to the window. The
// padded Dirichlet Laplacian (walk normalization (2d)^-1 per step) is solved
// by a sparse Cholesky factorization; the returned covariance block is dense
// and capped at dense_cap sites.
struct GreenMatrix {
  Window window;
  Eigen::MatrixXd values;  // indexed by window site order
};

GreenMatrix build_green_matrix(const Window& window, Coord pad, std::int64_t dense_cap = 20000);

Coord default_gff_pad(const Window& window);

class GffSampler {
 public:
  GffSampler(const Window& window, Coord pad, std::int64_t dense_cap = 20000);

  const GreenMatrix& green() const { return green_; }
  // One draw; pure function of (window, pad, seed, draw_index).
  RealField sample(std::uint64_t seed, std::uint64_t draw_index = 0) const;
  // Column j holds draw draw_first + j; used by bulk estimators.
  Eigen::MatrixXd sample_columns(std::uint64_t seed, std::uint64_t draw_first, int count) const;

 private:
  GreenMatrix green_;
  Eigen::MatrixXd chol_lower_;
};

// Occupancy 1 exactly where the field value is >= h.
Config level_set(const RealField& field, double h);

struct CapacityEstimate {
  double cap = 0.0;
  double stderr_ = 0.0;
  std::vector<Point> sites;
  std::vector<std::int64_t> escape_counts;  // per site, out of `trials` walks
  std::int64_t trials = 0;
};

// cap(K) = sum over x in K of P_x[no return to K before leaving the
// escape_radius linf-ball around K's bounding-box center], estimated by
// truncated simple-random-walk trials. Walk streams are keyed by the site
// coordinates so estimates for nested sets share randomness.
CapacityEstimate estimate_capacity(const std::vector<Point>& k_sites, Coord escape_radius,
                                   std::int64_t trials, std::uint64_t seed);

// Window-law interlacement sampler: Poisson many trajectories launched from
// the empirically normalized equilibrium measure of the window, each run
// until it crosses escape_radius; occupancy is the union of traces in the
// window. Sharing a seed across intensities couples the traces by thinning:
// trace(u) is contained in trace(u') whenever u <= u'.
class InterlacementSampler {
 public:
  InterlacementSampler(const Window& window, Coord escape_radius, std::int64_t capacity_trials,
                       std::uint64_t capacity_seed);

  const CapacityEstimate& window_capacity() const { return capacity_; }
  Config sample(double u, std::uint64_t seed) const;
  Config sample_vacant(double u, std::uint64_t seed) const;

 private:
  Window window_;
  Coord escape_radius_;
  Point center_;
  CapacityEstimate capacity_;
  std::vector<std::int64_t> cum_weights_;  // over capacity_.sites
  std::int64_t total_weight_ = 0;
};

Coord default_escape_radius(const Window& window);

Config sample_interlacement(double u, const Window& window, Coord escape_radius, std::int64_t trials_cap,
                            std::uint64_t seed);
Config sample_vacant_interlacement(double u, const Window& window, Coord escape_radius,
                                   std::int64_t trials_cap, std::uint64_t seed);

// Simple random walk on the torus (Z/NZ)^d from a uniform start for
// floor(u N^d) steps; occupancy 1 on unvisited sites.
Config sample_torus_vacant(double u, Coord n, int dim, std::uint64_t seed);

// Prepared sampler for repeated trials of one model on one window; sample()
// is a pure function of (spec, window, seed).
class ModelSampler {
 public:
  ModelSampler(ModelSpec spec, Window window);
  const ModelSpec& spec() const { return spec_; }
  const Window& window() const { return window_; }
  Config sample(std::uint64_t seed) const;
  // Same randomness, different primary parameter (p, h, or u); used for
  // coupled sweeps.
  Config sample_at(double parameter, std::uint64_t seed) const;

 private:
  ModelSpec spec_;
  Window window_;
  std::shared_ptr<const GffSampler> gff_;
  std::shared_ptr<const InterlacementSampler> interlacement_;
};

}  // namespace perco
