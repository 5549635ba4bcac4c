#include <cstdlib>
#include <sstream>

#include "perco/renorm.hpp"

namespace perco {

// Postcondition verifier for descend_path. Written against the statement of
// the descent lemma only; it shares no construction code with descend_path.
DescentCheck check_descended_path(const LatticePath& pi, const LatticePath& pi_prime,
                                  const GoodnessField& goodness, const ScaleLadder& ladder) {
  DescentCheck out;
  auto fail = [&out](const std::string& why) {
    out.ok = false;
    if (!out.reason.empty()) out.reason += "; ";
    out.reason += why;
  };

  const int k = pi.level;
  if (pi_prime.level != k - 1) {
    fail("output level is not k-1");
    return out;
  }
  const Coord spacing = ladder.L[k - 1];
  if (pi_prime.spacing != spacing) fail("output spacing is not L_{k-1}");

  // nearest-neighbor steps of length L_{k-1}
  for (std::size_t i = 0; i + 1 < pi_prime.vertices.size(); ++i) {
    Coord dist = 0;
    int moved = 0;
    const Point& a = pi_prime.vertices[i];
    const Point& b = pi_prime.vertices[i + 1];
    for (std::size_t ax = 0; ax < a.size(); ++ax) {
      if (a[ax] != b[ax]) {
        ++moved;
        dist = std::llabs(a[ax] - b[ax]);
      }
    }
    if (moved != 1 || dist != spacing) {
      fail("output is not a nearest-neighbor path in G_{k-1}");
      break;
    }
  }

  // every vertex (k-1)-good
  for (const Point& v : pi_prime.vertices) {
    Point cell(v.size());
    bool aligned = true;
    for (std::size_t ax = 0; ax < v.size(); ++ax) {
      if (v[ax] % spacing != 0) aligned = false;
      cell[ax] = v[ax] / spacing;
    }
    if (!aligned) {
      fail("vertex not on G_{k-1}");
      break;
    }
    if (!goodness.in_domain(k - 1, cell) || !goodness.is_good(k - 1, cell)) {
      fail("vertex not (k-1)-good");
      break;
    }
  }

  // length bound n <= (1 + 8 r_{k-1}/l_{k-1}) l_{k-1} m = (l_{k-1} + 8 r_{k-1}) m
  const std::int64_t m = static_cast<std::int64_t>(pi.vertices.size()) - 1;
  const std::int64_t n = static_cast<std::int64_t>(pi_prime.vertices.size()) - 1;
  if (m == 0) {
    if (n != 0) fail("single-vertex input must yield a single vertex");
  } else if (n > (ladder.l[k - 1] + 8 * ladder.r[k - 1]) * m) {
    std::ostringstream os;
    os << "length bound violated: " << n << " > (l+8r) m = " << (ladder.l[k - 1] + 8 * ladder.r[k - 1]) * m;
    fail(os.str());
  }

  // endpoints inside the first/last blocks Lambda_{x,k}
  auto inside_block = [&](const Point& v, const Point& anchor) {
    for (std::size_t ax = 0; ax < v.size(); ++ax) {
      if (v[ax] < anchor[ax] || v[ax] >= anchor[ax] + ladder.L[k]) return false;
    }
    return true;
  };
  if (!inside_block(pi_prime.vertices.front(), pi.vertices.front())) fail("start outside the first block");
  if (!inside_block(pi_prime.vertices.back(), pi.vertices.back())) fail("end outside the last block");
  return out;
}

}  // namespace perco
