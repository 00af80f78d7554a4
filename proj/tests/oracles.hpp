#pragma once

// Brute-force references and random generators shared by the unit and
// acceptance tests. Everything here works on plain vectors indexed by cell
// position and recomputes each quantity from its definition, without going
// through the library's tables or flow solver.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sparselab/basis.hpp"
#include "sparselab/sparse.hpp"

namespace oracle {

using sparselab::Rational;
using Cells = std::vector<bool>;

// Canonical p/d; mpq_class(p, d) alone leaves common factors in place.
inline Rational rat(long p, long d = 1) {
  Rational out(p, d);
  out.canonicalize();
  return out;
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  // Modulo bias is irrelevant at these sizes.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  bool coin(unsigned num = 1, unsigned den = 2) { return below(den) < num; }
  Rational fraction(unsigned den) { return rat(static_cast<long>(between(1, den - 1)), static_cast<long>(den)); }
};

struct Micro {
  std::vector<Rational> cells;  // measures in leftmost order
  std::vector<Cells> balls;
};

inline Rational measure(const Micro& m, const Cells& s) {
  Rational total = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i]) total += m.cells[i];
  return total;
}

inline bool subset(const Cells& a, const Cells& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

inline bool meets(const Cells& a, const Cells& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && b[i]) return true;
  return false;
}

inline Rational power(const Rational& x, unsigned r) {
  Rational out = 1;
  for (unsigned i = 0; i < r; ++i) out *= x;
  return out;
}

// (1/mu(B)) * sum over cells of B of f^r mu(c)
inline Rational average_power(const Micro& m, const std::vector<Rational>& f, std::size_t ball, unsigned r) {
  Rational integral = 0;
  for (std::size_t i = 0; i < m.cells.size(); ++i)
    if (m.balls[ball][i]) integral += power(f[i], r) * m.cells[i];
  return integral / measure(m, m.balls[ball]);
}

inline Rational starred_power(const Micro& m, const std::vector<Rational>& f, std::size_t ball, unsigned r) {
  Rational best = 0;
  for (std::size_t a = 0; a < m.balls.size(); ++a)
    if (subset(m.balls[ball], m.balls[a])) best = std::max(best, average_power(m, f, a, r));
  return best;
}

// Per cell, the sorted r-th powers of the summands of A_{S,r} f or A*_{S,r} f.
inline std::vector<std::vector<Rational>> sparse_terms(const Micro& m, const std::vector<std::size_t>& s,
                                                       const std::vector<Rational>& f, unsigned r, bool starred) {
  std::vector<std::vector<Rational>> out(m.cells.size());
  for (std::size_t b : s) {
    const Rational p = starred ? starred_power(m, f, b, r) : average_power(m, f, b, r);
    for (std::size_t i = 0; i < m.cells.size(); ++i)
      if (m.balls[b][i]) out[i].push_back(p);
  }
  for (auto& t : out) std::sort(t.begin(), t.end());
  return out;
}

// (M_r f)^r per cell.
inline std::vector<Rational> maximal_power(const Micro& m, const std::vector<Rational>& f, unsigned r) {
  std::vector<Rational> out(m.cells.size(), Rational(0));
  for (std::size_t b = 0; b < m.balls.size(); ++b) {
    const Rational p = average_power(m, f, b, r);
    for (std::size_t i = 0; i < m.cells.size(); ++i)
      if (m.balls[b][i] && p > out[i]) out[i] = p;
  }
  return out;
}

inline std::vector<std::size_t> lambda_balls(const Micro& m, const std::vector<Rational>& f, const Rational& lambda,
                                             unsigned r) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < m.balls.size(); ++b)
    if (average_power(m, f, b, r) > power(lambda, r)) out.push_back(b);
  return out;
}

inline std::vector<std::size_t> maximal_lambda_balls(const Micro& m, const std::vector<Rational>& f,
                                                     const Rational& lambda, unsigned r) {
  const auto all = lambda_balls(m, f, lambda, r);
  std::vector<std::size_t> out;
  for (std::size_t b : all) {
    bool dominated = false;
    for (std::size_t a : all)
      if (subset(m.balls[b], m.balls[a]) && measure(m, m.balls[a]) >= 2 * measure(m, m.balls[b])) dominated = true;
    if (!dominated) out.push_back(b);
  }
  return out;
}

inline std::optional<std::size_t> hull(const Micro& m, std::size_t b) {
  Cells u(m.cells.size(), false);
  const Rational mb = measure(m, m.balls[b]);
  for (std::size_t a = 0; a < m.balls.size(); ++a) {
    if (measure(m, m.balls[a]) <= 2 * mb && meets(m.balls[a], m.balls[b]))
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] || m.balls[a][i];
  }
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < m.balls.size(); ++a) {
    if (!subset(u, m.balls[a])) continue;
    if (!best || measure(m, m.balls[a]) < measure(m, m.balls[*best])) best = a;
  }
  return best;
}

// Hall/Gale condition: gamma-sparse iff every sub-family T satisfies
// gamma * sum mu(B) <= mu(union T).
inline bool sparse_by_subsets(const Micro& m, const std::vector<std::size_t>& s, const Rational& gamma) {
  const std::size_t n = s.size();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    Cells u(m.cells.size(), false);
    Rational demand = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!(mask >> k & 1)) continue;
      demand += gamma * measure(m, m.balls[s[k]]);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] || m.balls[s[k]][i];
    }
    if (demand > measure(m, u)) return false;
  }
  return true;
}

// Positions of the cells of a library set, as a bit vector.
inline Cells to_cells(const sparselab::CellSpace& space, const sparselab::MeasurableSet& set) {
  Cells out(space.cell_count(), false);
  for (std::size_t p : space.positions_of(set)) out[p] = true;
  return out;
}

inline std::vector<std::size_t> positions(const Cells& c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i]) out.push_back(i);
  return out;
}

inline sparselab::BallBasis to_basis(const Micro& m) {
  sparselab::CellSpace space(m.cells);
  std::vector<sparselab::MeasurableSet> sets;
  for (const auto& b : m.balls) sets.push_back(space.set_from_positions(positions(b)));
  return sparselab::BallBasis::from_sets(std::move(space), std::move(sets));
}

// ---------------------------------------------------------------------------
// Generators

inline std::vector<Rational> random_measures(Rng& rng, std::size_t n) {
  std::vector<Rational> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(rat(static_cast<long>(rng.between(1, 4)), static_cast<long>(rng.between(1, 4))));
  return out;
}

// Up to `max_cells` cells and `max_balls` balls, the full space always first.
inline Micro random_micro(Rng& rng, std::size_t max_cells, std::size_t max_balls) {
  Micro m;
  const std::size_t n = rng.between(2, max_cells);
  m.cells = random_measures(rng, n);
  m.balls.push_back(Cells(n, true));
  const std::size_t extra = rng.between(1, max_balls - 1);
  for (std::size_t k = 0; k < extra; ++k) {
    Cells b(n, false);
    if (rng.coin()) {
      const std::size_t lo = rng.below(n);
      const std::size_t hi = rng.between(lo, n - 1);
      for (std::size_t i = lo; i <= hi; ++i) b[i] = true;
    } else {
      for (std::size_t i = 0; i < n; ++i) b[i] = rng.coin(1, 3);
      b[rng.below(n)] = true;
    }
    m.balls.push_back(b);
  }
  return m;
}

inline std::vector<Rational> random_values(Rng& rng, std::size_t n, unsigned max_value = 4) {
  std::vector<Rational> f;
  for (std::size_t i = 0; i < n; ++i)
    f.push_back(rng.coin(2, 3) ? rat(static_cast<long>(rng.below(4 * max_value + 1)), 4) : Rational(0));
  return f;
}

inline std::vector<std::size_t> random_subfamily(Rng& rng, std::size_t n, unsigned num = 1, unsigned den = 2) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < n; ++b)
    if (rng.coin(num, den)) out.push_back(b);
  return out;
}

// Random martingale tree with at most `max_leaves` leaves. `skew` picks child
// ratios (1 - eps, eps) with small eps, which breaks doubling.
inline sparselab::MartingaleNode random_tree(Rng& rng, std::size_t max_leaves, bool skew = false) {
  sparselab::MartingaleNode root{Rational(1), {}};
  std::vector<sparselab::MartingaleNode*> leaves{&root};
  std::size_t leaf_count = 1;
  const std::size_t target = rng.between(1, max_leaves);
  // Splitting may invalidate pointers into children vectors, so expand one
  // leaf fully before touching the next by rebuilding the leaf list.
  while (leaf_count < target) {
    sparselab::MartingaleNode* leaf = leaves[rng.below(leaves.size())];
    const std::size_t arity = std::min<std::size_t>(rng.between(2, 3), target - leaf_count + 1);
    std::vector<Rational> parts;
    Rational rest = leaf->weight;
    for (std::size_t k = 0; k + 1 < arity; ++k) {
      const Rational share = skew ? rat(1, static_cast<long>(rng.between(20, 200))) : rng.fraction(5);
      parts.push_back(rest * share);
      rest -= parts.back();
    }
    parts.push_back(rest);
    std::reverse(parts.begin(), parts.end());
    for (const auto& p : parts) leaf->children.push_back({p, {}});
    leaf_count += arity - 1;
    leaves.clear();
    std::vector<sparselab::MartingaleNode*> stack{&root};
    while (!stack.empty()) {
      auto* node = stack.back();
      stack.pop_back();
      if (node->children.empty()) {
        leaves.push_back(node);
      } else {
        for (auto& c : node->children) stack.push_back(&c);
      }
    }
  }
  return root;
}

// Full tree with child ratios (1 - eps, eps) down to `depth`.
inline sparselab::MartingaleNode skewed_tree(const Rational& eps, unsigned depth, const Rational& weight = 1) {
  sparselab::MartingaleNode node{weight, {}};
  if (depth == 0) return node;
  node.children.push_back(skewed_tree(eps, depth - 1, weight * (1 - eps)));
  node.children.push_back(skewed_tree(eps, depth - 1, weight * eps));
  return node;
}

}  // namespace oracle
