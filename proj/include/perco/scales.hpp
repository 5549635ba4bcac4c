#pragma once

#include <cstdint>
#include <vector>

#include "perco/lattice.hpp"

namespace perco {

// Super-geometric renormalization ladder: l_k = l0 4^(k^theta),
// r_k = r0 2^(k^theta), L_k = l_{k-1} L_{k-1}. Integer values are
// materialized up to kmax with overflow checks; the log2_* accessors stay
// valid for arbitrary levels.
struct ScaleLadder {
  Coord l0 = 0;
  Coord r0 = 0;
  Coord L0 = 0;
  int theta_sc = 1;
  int kmax = 0;
  std::vector<Coord> l;  // l[k], k = 0..kmax
  std::vector<Coord> r;
  std::vector<Coord> L;

  double log2_l(int k) const;
  double log2_r(int k) const;
  double log2_L(int k) const;
};

ScaleLadder build_ladder(Coord l0, Coord r0, Coord L0, int theta_sc, int kmax);

// Largest s <= kmax with L_s^d <= R. Requires R >= L0^d; the ladder must
// reach past R (either s < kmax or L_kmax^d > R), otherwise it is too short
// to determine s.
int select_top_scale(const ScaleLadder& ladder, std::int64_t big_r, int dim);

struct RegularityProfile {
  double eps_p = 1.0;     // f_P(L) = exp((log L)^eps_p)
  double chi_p = 0.25;    // sprinkling exponent in (1 + R^-chi)
  double delta_s = 0.5;   // f_S(u, R) = (log R)^(1 + delta_s)
  double cutoff_r_p = 1.0;
  double cutoff_l_p = 1.0;

  double log_f_p(double big_l) const;  // natural log of f_P
  double f_s(double big_r) const;
  int derived_theta_sc() const;        // ceil(1/eps_p)
};

// u_k ladder of the sprinkling recursion u_k = (1 + r_k^-chi) u_{k+1} with
// u_0 = (1+delta) u, plus the convergence check
// prod_k (1 + r_k^-chi) <= 1 + delta via a partial product and an explicit
// geometric tail bound. A failing check is reported, not fatal.
struct SprinkleReport {
  std::vector<double> u_k;  // 0..kmax
  double u_target = 0.0;    // u
  double product_partial = 1.0;
  double product_upper = 1.0;  // partial times the tail bound
  bool product_ok = false;
  double min_u = 0.0;
};

SprinkleReport sprinkle_ladder(double u, double delta, const ScaleLadder& ladder,
                               const RegularityProfile& profile);

// Deterministic check of the induction conditions behind the 2^-2^k bound:
//   (a) log2(l_k^2d) - kappa_k 2^(k+1) <= -kappa_{k+1} 2^(k+1) - 1
//   (b) log2(l_k^2d) - f_P(L_k) log2(e) <= -kappa_{k+1} 2^(k+1) - 1
// with kappa_k = 1 + l0 sum_{i>k} i^-2. The kappa tail is bracketed by an
// exact partial sum plus integral bounds, and a level passes only if both
// bracket ends pass.
struct LevelCheck {
  int k = 0;
  bool cond_a = false;
  bool cond_b = false;
  double slack_a = 0.0;  // rhs - lhs at the adverse bracket end
  double slack_b = 0.0;
};

struct RecursionReport {
  std::vector<LevelCheck> levels;
  bool all_pass = false;
  int first_fail = -1;
  double kappa0_lo = 0.0;  // required seed exponent bracket
  double kappa0_hi = 0.0;
  bool seed_ok = false;    // p0_exponent >= kappa0_hi
};

RecursionReport verify_recursion_bound(const ScaleLadder& ladder, const RegularityProfile& profile, int dim,
                                       double p0_exponent, int levels);

}  // namespace perco
