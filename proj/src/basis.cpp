#include "sparselab/basis.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <string>

#include "sparselab/error.hpp"

namespace sparselab {

namespace {

// Minimal-measure ball among `candidates` containing `target`; ties by id.
std::optional<BallId> smallest_container(std::span<const Ball> balls, std::span<const BallId> candidates,
                                         const MeasurableSet& target) {
  std::optional<BallId> best;
  for (BallId a : candidates) {
    if (!target.is_subset_of(balls[a].set)) continue;
    if (!best || balls[a].measure < balls[*best].measure) best = a;
  }
  return best;
}

// Union of all balls A with mu(A) <= 2 mu(B) and A ∩ B nonempty.
MeasurableSet qualifying_union(std::span<const Ball> balls, const Ball& b) {
  MeasurableSet u = b.set;
  const Rational limit = 2 * b.measure;
  for (const Ball& a : balls) {
    if (a.measure <= limit && a.set.intersects(b.set)) u |= a.set;
  }
  return u;
}

}  // namespace

BallBasis BallBasis::from_sets(CellSpace space, std::vector<MeasurableSet> sets) {
  std::vector<Ball> balls;
  balls.reserve(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    space.require_current(sets[i]);
    if (sets[i].empty()) fail(ErrorCode::invalid_argument, "ball " + std::to_string(i) + " is empty");
    Rational m = space.measure(sets[i]);
    balls.push_back(Ball{static_cast<BallId>(i), std::move(sets[i]), std::move(m)});
  }

  auto structure = std::make_shared<Structure>();
  const std::size_t n = balls.size();
  const MeasurableSet full = space.full_set();
  for (const Ball& b : balls) {
    if (b.set == full) {
      structure->full_space = b.id;
      break;
    }
  }

  structure->supersets.resize(n);
  structure->parent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!balls[i].set.is_subset_of(balls[j].set)) continue;
      structure->supersets[i].push_back(static_cast<BallId>(j));
      if (balls[j].measure == balls[i].measure) continue;  // equal sets
      auto& p = structure->parent[i];
      if (!p || balls[j].measure < balls[*p].measure) p = static_cast<BallId>(j);
    }
  }

  structure->hull.resize(n);
  std::optional<Rational> k = Rational(0);
  for (std::size_t i = 0; i < n; ++i) {
    const MeasurableSet u = qualifying_union(balls, balls[i]);
    structure->hull[i] = smallest_container(balls, structure->supersets[i], u);
    if (!structure->hull[i]) {
      k.reset();
    } else if (k) {
      Rational ratio = balls[*structure->hull[i]].measure / balls[i].measure;
      if (ratio > *k) k = ratio;
    }
  }
  if (n == 0) k.reset();
  structure->hull_constant = std::move(k);

  return BallBasis(std::move(space), std::move(balls), std::move(structure));
}

BallId BallBasis::require_hull(BallId id) const {
  const auto h = hull(id);
  if (!h) fail(ErrorCode::precondition, "ball " + std::to_string(id) + " has no hull in this family");
  return *h;
}

std::vector<BallId> BallBasis::balls_containing(CellId cell) const {
  std::vector<BallId> out;
  for (const Ball& b : balls_)
    if (b.set.contains(cell)) out.push_back(b.id);
  return out;
}

void BallBasis::rebase() {
  for (Ball& b : balls_) b.set = space_.migrate(b.set);
}

BallBasis dyadic_basis(unsigned depth) {
  if (depth > 20) fail(ErrorCode::invalid_argument, "dyadic depth " + std::to_string(depth) + " is too large");
  const std::size_t cells = std::size_t{1} << depth;
  std::vector<Rational> measures(cells, Rational(1, static_cast<unsigned long>(cells)));
  CellSpace space(measures);

  std::vector<MeasurableSet> sets;
  for (unsigned g = 0; g <= depth; ++g) {
    const std::size_t width = cells >> g;
    for (std::size_t k = 0; k < (std::size_t{1} << g); ++k) {
      std::vector<CellId> ids(width);
      for (std::size_t i = 0; i < width; ++i) ids[i] = static_cast<CellId>(k * width + i);
      sets.push_back(space.make_set(ids));
    }
  }
  return BallBasis::from_sets(std::move(space), std::move(sets));
}

BallBasis martingale_basis(const MartingaleNode& root) {
  // Leaves in depth-first order become the cells; each node covers a
  // contiguous range of them.
  struct Range {
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Rational> leaves;
  std::map<const MartingaleNode*, Range> ranges;

  auto visit = [&](auto&& self, const MartingaleNode& node) -> void {
    Rational weight = node.weight;
    weight.canonicalize();
    if (weight <= 0) fail(ErrorCode::invalid_argument, "tree weights must be positive, got " + to_string(weight));
    const std::size_t begin = leaves.size();
    if (node.children.empty()) {
      leaves.push_back(weight);
    } else {
      Rational sum = 0;
      for (const auto& child : node.children) {
        Rational w = child.weight;
        w.canonicalize();
        sum += w;
        self(self, child);
      }
      if (sum != weight)
        fail(ErrorCode::invalid_argument,
             "child weights sum to " + to_string(sum) + " but the parent weighs " + to_string(weight));
    }
    ranges[&node] = Range{begin, leaves.size()};
  };
  visit(visit, root);

  CellSpace space(leaves);
  std::vector<MeasurableSet> sets;
  std::deque<const MartingaleNode*> queue{&root};
  while (!queue.empty()) {
    const MartingaleNode* node = queue.front();
    queue.pop_front();
    const Range r = ranges.at(node);
    std::vector<CellId> ids;
    for (std::size_t i = r.begin; i < r.end; ++i) ids.push_back(static_cast<CellId>(i));
    sets.push_back(space.make_set(ids));
    for (const auto& child : node->children) queue.push_back(&child);
  }
  return BallBasis::from_sets(std::move(space), std::move(sets));
}

std::optional<BallId> compute_hull(const BallBasis& basis, BallId id) {
  const auto balls = basis.balls();
  const MeasurableSet u = qualifying_union(balls, balls[id]);
  std::vector<BallId> all(balls.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<BallId>(i);
  return smallest_container(balls, all, u);
}

AxiomReport verify_axioms(const BallBasis& basis) {
  AxiomReport report;
  const CellSpace& space = basis.space();
  const auto balls = basis.balls();

  for (const Ball& b : balls) {
    if (!(b.measure > 0)) report.b1_ok = false;
  }

  // B2: every pair of cells shares a ball.
  const MeasurableSet full = space.full_set();
  for (CellId c : space.order()) {
    MeasurableSet reach = space.empty_set();
    for (const Ball& b : balls)
      if (b.set.contains(c)) reach |= b.set;
    if (reach == full) continue;
    report.b2_ok = false;
    for (CellId d : space.order()) {
      if (!reach.contains(d)) {
        report.b2_witness = std::make_pair(c, d);
        break;
      }
    }
    break;
  }

  // B3: on a finite space the balls must generate every single cell, i.e. no
  // two cells have the same membership signature.
  std::map<boost::dynamic_bitset<>, CellId> signatures;
  for (CellId c : space.order()) {
    boost::dynamic_bitset<> sig(balls.size());
    for (const Ball& b : balls)
      if (b.set.contains(c)) sig.set(b.id);
    auto [it, inserted] = signatures.emplace(std::move(sig), c);
    if (!inserted) {
      report.b3_ok = false;
      report.b3_witness = std::make_pair(it->second, c);
      break;
    }
  }

  // B4: hulls exist and contain every qualifying ball.
  Rational k = 0;
  for (const Ball& b : balls) {
    const auto h = compute_hull(basis, b.id);
    if (!h || basis.hull(b.id) != h) {
      report.b4_failures.push_back(b.id);
      continue;
    }
    const Ball& hull = balls[*h];
    bool contains_all = true;
    for (const Ball& a : balls) {
      if (a.measure <= 2 * b.measure && a.set.intersects(b.set) && !a.set.is_subset_of(hull.set)) {
        contains_all = false;
        break;
      }
    }
    if (!contains_all) {
      report.b4_failures.push_back(b.id);
      continue;
    }
    Rational ratio = hull.measure / b.measure;
    if (ratio > k) k = ratio;
  }
  report.b4_ok = report.b4_failures.empty() && !balls.empty();
  if (report.b4_ok) report.hull_constant = k;
  return report;
}

std::optional<Rational> doubling_constant(const BallBasis& basis) {
  const MeasurableSet full = basis.space().full_set();
  Rational eta = 1;
  for (const Ball& a : basis.balls()) {
    const auto h = basis.hull(a.id);
    if (h && basis.ball(*h).set == full) continue;
    const auto p = basis.parent(a.id);
    if (!p) return std::nullopt;
    Rational ratio = basis.ball(*p).measure / a.measure;
    if (ratio > eta) eta = ratio;
  }
  return eta;
}

bool is_density_point(const BallBasis& basis, const MeasurableSet& set, CellId cell, const Rational& epsilon) {
  const CellSpace& space = basis.space();
  space.require_current(set);
  if (!set.contains(cell))
    fail(ErrorCode::precondition, "cell " + std::to_string(cell) + " does not belong to the set");
  const Rational keep = 1 - epsilon;
  for (const Ball& b : basis.balls()) {
    if (!b.set.contains(cell)) continue;
    if (space.measure(b.set & set) > keep * b.measure) return true;
  }
  return false;
}

std::vector<BallId> covering_select(const BallBasis& basis, const MeasurableSet& target,
                                    std::span<const BallId> family) {
  const CellSpace& space = basis.space();
  space.require_current(target);

  MeasurableSet covered = space.empty_set();
  std::vector<BallId> candidates;
  for (BallId id : family) {
    const Ball& b = basis.ball(id);
    covered |= b.set;
    if (b.set.intersects(target)) candidates.push_back(id);
  }
  if (!target.is_subset_of(covered))
    fail(ErrorCode::precondition, "the family does not cover the target set");

  std::sort(candidates.begin(), candidates.end(), [&](BallId a, BallId b) {
    const Rational& ma = basis.ball(a).measure;
    const Rational& mb = basis.ball(b).measure;
    return ma != mb ? ma > mb : a < b;
  });
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<BallId> selected;
  MeasurableSet taken = space.empty_set();
  for (BallId id : candidates) {
    const Ball& b = basis.ball(id);
    if (b.set.intersects(taken)) continue;
    selected.push_back(id);
    taken |= b.set;
  }
  return selected;
}

}  // namespace sparselab
