#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perco/clusters.hpp"
#include "perco/samplers.hpp"
#include "perco/scales.hpp"

namespace perco {

// Normal-approximation summary; refuses fewer than 30 effective trials.
struct SummaryStats {
  std::int64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double stderr_ = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;  // 95% normal CI
};

SummaryStats summarize(const std::vector<double>& values);
double pairwise_sum(const std::vector<double>& values);
// Nearest-rank empirical quantile of a copy-sorted sample.
double quantile(std::vector<double> values, double q);

struct TrialObservable {
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  std::string name;
  double value = 0.0;
  std::string aux;
};

// Long-format record of one estimator run; re-running with the same spec and
// master seed reproduces it bit-exactly.
struct TrialReport {
  ModelSpec spec;
  std::uint64_t master_seed = 0;
  std::int64_t trials = 0;
  std::vector<TrialObservable> observables;
  std::vector<std::string> notes;
};

// --- density / eta(u) ------------------------------------------------------

struct DensityEstimate {
  double eta_hat = 0.0;
  SummaryStats stats;
  TrialReport report;
};

// Fraction of central-half-window sites in the s_infty proxy, averaged over
// trials. The two-phase protocol estimates eta_hat here, on seeds disjoint
// from any later event evaluation.
DensityEstimate estimate_density(const ModelSpec& spec, const Window& window, std::int64_t trials,
                                 std::uint64_t master_seed, ProxyPolicy policy = ProxyPolicy::diameter_span,
                                 int workers = 1);

// --- chemical stretch ------------------------------------------------------

struct StretchEstimate {
  std::vector<double> max_ratios;  // per included trial
  std::int64_t excluded_empty = 0;
  std::int64_t excluded_disconnected = 0;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;
  TrialReport report;
};

// Max over a probe subset of S_R cap B(0,R) of rho(x,y)/R per trial. The
// probe holds the 2^d signed-direction extremal sites plus random fill up to
// ceil(ln(R)^2) sites; the exact max over all pairs is quadratic and the
// extremal pairs dominate it.
StretchEstimate estimate_chem_stretch(const ModelSpec& spec, const Window& window, Coord big_r,
                                      std::int64_t trials, std::uint64_t master_seed, int workers = 1);

// --- directional norm and shape -------------------------------------------

struct NormEstimate {
  Point direction;
  double p_hat = 0.0;       // mean of rho~(0, n_max x)/n_max
  double stderr_ = 0.0;
  std::vector<double> per_n_mean;  // aligned with n_grid
  std::int64_t subadditivity_violations = 0;
  std::int64_t excluded = 0;
  TrialReport report;
};

NormEstimate estimate_norm(const ModelSpec& spec, const Point& direction, const std::vector<std::int64_t>& n_grid,
                           std::int64_t trials, std::uint64_t master_seed, int workers = 1);

struct ShapeEstimate {
  double parameter = 0.0;  // p, u, or h of the spec
  std::vector<Point> directions;
  std::vector<double> p_hat;
  std::vector<double> stderr_;
  std::vector<std::array<double, 2>> hull;  // d=2 boundary polygon of {p_hat <= 1}
  double convexity_violation = 0.0;         // max distance of a point outside the others' hull
  double asymmetry_score = 0.0;             // max relative spread over symmetry orbits
  std::int64_t subadditivity_violations = 0;
  TrialReport report;
};

// Shared samples across directions; calling twice with the same master seed
// couples the estimates across parameters.
ShapeEstimate estimate_shape(const ModelSpec& spec, const std::vector<Point>& directions,
                             const std::vector<std::int64_t>& n_grid, std::int64_t trials,
                             std::uint64_t master_seed, int workers = 1);

// --- decorrelation ---------------------------------------------------------

enum class LocalEventKind {
  occupied_count_at_least,  // increasing
  crossing,                 // increasing: component of the box spans axis 0
  vacant_count_at_least,    // decreasing
};

struct LocalEvent {
  LocalEventKind kind = LocalEventKind::occupied_count_at_least;
  Coord radius = 2;  // support B(x, radius)
  std::int64_t threshold = 1;
};

bool eval_local_event(const Config& config, const LocalEvent& event, const Point& center);
bool local_event_increasing(const LocalEvent& event);

struct DecorrelationReport {
  double lhs = 0.0;  // joint probability at param_joint
  double lhs_se = 0.0;
  double product = 0.0;  // marginal product at param_marginal
  double product_se = 0.0;
  double fp_term = 0.0;  // exp(-f_P(L))
  double margin = 0.0;   // product + fp_term - lhs
  double margin_se = 0.0;
  double raw_diff = 0.0;  // lhs - product, for the independent case
  std::int64_t monotonicity_violations = 0;
  TrialReport report;
};

// Empirical check of the sprinkled decorrelation inequality for a pair of
// identical monotone local events anchored at x1 = -RL/2 e1, x2 = +RL/2 e1.
// The joint probability is sampled at param_joint, the product at
// param_marginal; for increasing events the inequality predicts
// lhs <= product + exp(-f_P(L)) when the parameters are sprinkled apart.
DecorrelationReport check_decorrelation(const ModelSpec& spec, double param_joint, double param_marginal,
                                        Coord big_l, Coord big_r, const LocalEvent& event, std::int64_t trials,
                                        std::uint64_t master_seed, const RegularityProfile& profile,
                                        int workers = 1);

// --- covariance decay ------------------------------------------------------

struct CovarianceDecay {
  std::vector<Coord> distances;
  std::vector<double> covariance;
  std::vector<double> cov_se;
  std::vector<std::uint8_t> used_in_fit;
  double slope = 0.0;
  double slope_se = 0.0;
  TrialReport report;
};

// Occupancy-indicator covariance along e1 over a log-spaced distance grid,
// with a least-squares slope on log-log axes.
CovarianceDecay covariance_decay(const ModelSpec& spec, const std::vector<Coord>& pair_distances,
                                 std::int64_t trials, std::uint64_t master_seed, int workers = 1);

// --- torus ------------------------------------------------------------------

struct TorusDiameterEstimate {
  Coord n = 0;
  std::vector<double> ratios;  // (double-sweep diameter of C_max)/N per trial
  double median = 0.0;
  double q25 = 0.0, q75 = 0.0;
  TrialReport report;
};

// Chemical diameter of the largest-volume vacant component by double-sweep
// BFS (a documented lower-bound heuristic, exact on full tori).
TorusDiameterEstimate torus_giant_diameter(double u, Coord n, int dim, std::int64_t trials,
                                           std::uint64_t master_seed, int workers = 1);

struct MesoscopicReport {
  Coord n = 0;           // torus side
  Coord meso = 0;        // n^(1/3) scale
  double frequency = 0;  // fraction of (trial, z) satisfying the event
  double all_z_frequency = 0;  // fraction of trials where every z works
  TrialReport report;
};

// Event F^{u,N}: around every coarse-grid z there is a candidate set
// C_z (largest component of the vacant set restricted to B(z, n^(1/3)))
// with pairwise chemical distance <= C n^(1/3) and n^(1/3d)-density.
MesoscopicReport check_torus_mesoscopic(double u, Coord n, int dim, double c_factor, std::int64_t trials,
                                        std::uint64_t master_seed, int workers = 1);

}  // namespace perco
