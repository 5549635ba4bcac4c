#include "perco/scales.hpp"

#include <cmath>
#include <stdexcept>

namespace perco {

namespace {

constexpr Coord kLadderCap = Coord{1} << 62;

std::int64_t int_pow_checked(std::int64_t base, int exp, std::int64_t cap) {
  std::int64_t v = 1;
  for (int i = 0; i < exp; ++i) {
    if (v > cap / base) return -1;
    v *= base;
  }
  return v;
}

double pow_int(double base, int exp) {
  double v = 1.0;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

// k^theta as double; exact for the ranges used here.
double k_pow_theta(int k, int theta) {
  return pow_int(static_cast<double>(k), theta);
}

}  // namespace

double ScaleLadder::log2_l(int k) const { return std::log2(static_cast<double>(l0)) + 2.0 * k_pow_theta(k, theta_sc); }
double ScaleLadder::log2_r(int k) const { return std::log2(static_cast<double>(r0)) + k_pow_theta(k, theta_sc); }

double ScaleLadder::log2_L(int k) const {
  double v = std::log2(static_cast<double>(L0));
  for (int j = 0; j < k; ++j) v += log2_l(j);
  return v;
}

ScaleLadder build_ladder(Coord l0, Coord r0, Coord L0, int theta_sc, int kmax) {
  if (l0 <= 4 * r0) throw std::invalid_argument("ladder requires l0 > 4 r0");
  if (r0 < 1) throw std::invalid_argument("ladder requires r0 >= 1");
  if (L0 < 2) throw std::invalid_argument("ladder requires L0 >= 2");
  if (theta_sc < 1) throw std::invalid_argument("ladder requires theta_sc >= 1");
  if (kmax < 0) throw std::invalid_argument("kmax must be >= 0");

  ScaleLadder out;
  out.l0 = l0;
  out.r0 = r0;
  out.L0 = L0;
  out.theta_sc = theta_sc;
  out.kmax = kmax;
  out.l.resize(kmax + 1);
  out.r.resize(kmax + 1);
  out.L.resize(kmax + 1);
  for (int k = 0; k <= kmax; ++k) {
    double kt = k_pow_theta(k, theta_sc);
    if (kt >= 31) throw std::overflow_error("ladder level overflows 64-bit integers");
    auto shift = static_cast<int>(kt);
    std::int64_t four = int_pow_checked(4, shift, kLadderCap);
    std::int64_t two = int_pow_checked(2, shift, kLadderCap);
    if (four < 0 || l0 > kLadderCap / four) throw std::overflow_error("l_k overflows 64-bit integers");
    if (two < 0 || r0 > kLadderCap / two) throw std::overflow_error("r_k overflows 64-bit integers");
    out.l[k] = l0 * four;
    out.r[k] = r0 * two;
    if (k == 0) {
      out.L[0] = L0;
    } else {
      if (out.L[k - 1] > kLadderCap / out.l[k - 1]) throw std::overflow_error("L_k overflows 64-bit integers");
      out.L[k] = out.l[k - 1] * out.L[k - 1];
    }
    if (out.l[k] <= out.r[k]) throw std::invalid_argument("ladder violates l_k > r_k");
  }
  return out;
}

int select_top_scale(const ScaleLadder& ladder, std::int64_t big_r, int dim) {
  auto pow_leq = [&](unsigned __int128 base, std::int64_t bound) {
    unsigned __int128 v = 1;
    for (int i = 0; i < dim; ++i) {
      v *= base;
      if (v > static_cast<unsigned __int128>(bound)) return false;
    }
    return true;
  };
  if (!pow_leq(ladder.L0, big_r)) {
    throw std::invalid_argument("select_top_scale requires R >= L0^d");
  }
  int s = 0;
  while (s + 1 <= ladder.kmax && pow_leq(ladder.L[s + 1], big_r)) ++s;
  if (s == ladder.kmax) {
    // certify maximality using L_{kmax+1} = l_kmax * L_kmax
    unsigned __int128 next = static_cast<unsigned __int128>(ladder.l[s]) * ladder.L[s];
    if (pow_leq(next, big_r)) {
      throw std::invalid_argument("ladder too short to select the top scale for this R");
    }
  }
  return s;
}

double RegularityProfile::log_f_p(double big_l) const { return std::pow(std::log(big_l), eps_p); }

double RegularityProfile::f_s(double big_r) const { return std::pow(std::log(big_r), 1.0 + delta_s); }

int RegularityProfile::derived_theta_sc() const { return static_cast<int>(std::ceil(1.0 / eps_p)); }

SprinkleReport sprinkle_ladder(double u, double delta, const ScaleLadder& ladder,
                               const RegularityProfile& profile) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (u <= 0.0) throw std::invalid_argument("u must be positive");
  const double chi = profile.chi_p;
  if (chi <= 0.0) throw std::invalid_argument("chi_P must be positive");

  SprinkleReport rep;
  rep.u_target = u;

  auto r_at = [&](int k) {
    return static_cast<double>(ladder.r0) * std::exp2(k_pow_theta(k, ladder.theta_sc));
  };

  const int horizon = std::max(ladder.kmax, 64);
  double partial = 1.0;
  for (int k = 0; k <= horizon; ++k) {
    partial *= 1.0 + std::pow(r_at(k), -chi);
  }
  // tail: k^theta >= K^theta + (k - K) for k > K >= 1 gives a geometric bound
  double k_theta = k_pow_theta(horizon, ladder.theta_sc);
  double tail_sum = std::pow(static_cast<double>(ladder.r0), -chi) * std::exp2(-chi * k_theta) *
                    (std::exp2(-chi) / (1.0 - std::exp2(-chi)));
  rep.product_partial = partial;
  rep.product_upper = partial * std::exp(tail_sum);
  rep.product_ok = rep.product_upper <= 1.0 + delta;

  rep.u_k.resize(ladder.kmax + 1);
  double uk = (1.0 + delta) * u;
  rep.u_k[0] = uk;
  for (int k = 0; k < ladder.kmax; ++k) {
    uk /= 1.0 + std::pow(r_at(k), -chi);
    rep.u_k[k + 1] = uk;
  }
  rep.min_u = uk / (rep.product_upper / partial);  // bound on the limit from below the horizon
  for (double v : rep.u_k) rep.min_u = std::min(rep.min_u, v);
  return rep;
}

RecursionReport verify_recursion_bound(const ScaleLadder& ladder, const RegularityProfile& profile, int dim,
                                       double p0_exponent, int levels) {
  if (levels < 0) throw std::invalid_argument("levels must be >= 0");
  RecursionReport rep;

  // kappa tail sums: exact partial sum to 1e6 plus the integral bracket
  // (1/(N+1), 1/N) for the remainder.
  constexpr int kPartialTo = 1'000'000;
  const int need = levels + 2;
  std::vector<long double> partial_tail(need, 0.0L);  // index k: sum_{i=k+1}^{1e6} i^-2
  {
    long double acc = 0.0L;  // summed smallest-first for accuracy
    for (int i = kPartialTo; i >= 1; --i) {
      acc += 1.0L / (static_cast<long double>(i) * i);
    }
    long double head = 0.0L;
    for (int k = 0; k < need; ++k) {
      partial_tail[k] = acc - head;
      head += 1.0L / (static_cast<long double>(k + 1) * (k + 1));
    }
  }
  const double tail_lo = 1.0 / (kPartialTo + 1.0);
  const double tail_hi = 1.0 / static_cast<double>(kPartialTo);
  auto kappa_lo = [&](int k) { return 1.0 + ladder.l0 * (static_cast<double>(partial_tail[k]) + tail_lo); };
  auto kappa_hi = [&](int k) { return 1.0 + ladder.l0 * (static_cast<double>(partial_tail[k]) + tail_hi); };

  rep.kappa0_lo = kappa_lo(0);
  rep.kappa0_hi = kappa_hi(0);
  rep.seed_ok = p0_exponent >= rep.kappa0_hi;

  const double log2e = 1.4426950408889634;
  rep.all_pass = true;
  for (int k = 0; k <= levels; ++k) {
    LevelCheck lc;
    lc.k = k;
    double lhs = 2.0 * dim * ladder.log2_l(k);
    double pow2k1 = std::ldexp(1.0, k + 1);  // 2^(k+1)

    // (a) at both bracket ends; the adverse end pairs kappa_k low with
    // kappa_{k+1} high.
    double rhs_a_adverse = (kappa_lo(k) - kappa_hi(k + 1)) * pow2k1 - 1.0;
    double rhs_a_kind = (kappa_hi(k) - kappa_lo(k + 1)) * pow2k1 - 1.0;
    lc.cond_a = lhs <= rhs_a_adverse && lhs <= rhs_a_kind;
    lc.slack_a = rhs_a_adverse - lhs;

    // (b): log2(l_k^2d) - f_P(L_k) log2(e) <= -kappa_{k+1} 2^(k+1) - 1.
    // f_P(L_k) can overflow a double; compare in a safe form. Need:
    //   f_P(L_k) * log2(e) >= lhs + kappa_{k+1} 2^(k+1) + 1   (for both ends)
    double ln_l = ladder.log2_L(k) * M_LN2;  // ln L_k
    double need_b = lhs + kappa_hi(k + 1) * pow2k1 + 1.0;
    double need_b_other = lhs + kappa_lo(k + 1) * pow2k1 + 1.0;
    double ln_fp = std::pow(ln_l, profile.eps_p);  // ln f_P(L_k) = (ln L_k)^eps
    bool ok_b;
    double fp_log2;
    if (ln_fp > 700.0) {
      ok_b = true;  // f_P astronomically large
      fp_log2 = ln_fp * log2e;
    } else {
      fp_log2 = std::exp(ln_fp) * log2e;
      ok_b = fp_log2 >= need_b && fp_log2 >= need_b_other;
    }
    lc.cond_b = ok_b;
    lc.slack_b = fp_log2 - need_b;

    if ((!lc.cond_a || !lc.cond_b) && rep.first_fail < 0) rep.first_fail = k;
    rep.all_pass = rep.all_pass && lc.cond_a && lc.cond_b;
    rep.levels.push_back(lc);
  }
  return rep;
}

}  // namespace perco
