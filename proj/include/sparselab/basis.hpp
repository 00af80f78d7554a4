#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sparselab/measure.hpp"

namespace sparselab {

using BallId = std::uint32_t;

struct Ball {
  BallId id;
  MeasurableSet set;
  Rational measure;
};

/// Node of a weighted tree; children partition the weight of their parent.
struct MartingaleNode {
  Rational weight;
  std::vector<MartingaleNode> children;
};

/// Finite family of balls over an owned CellSpace.
///
/// The relations between balls (containment, hulls, parents) are computed once
/// and shared between copies. Refining the space keeps them valid; the member
/// sets are rebased after every refinement.
class BallBasis {
 public:
  /// Balls must be nonempty (B1). Duplicated sets are kept as distinct balls.
  static BallBasis from_sets(CellSpace space, std::vector<MeasurableSet> balls);

  const CellSpace& space() const { return space_; }
  std::size_t size() const { return balls_.size(); }
  const Ball& ball(BallId id) const { return balls_.at(id); }
  std::span<const Ball> balls() const { return balls_; }

  /// The full-space member with the smallest id, if any.
  std::optional<BallId> full_space_ball() const { return structure_->full_space; }
  bool contains_full_space() const { return structure_->full_space.has_value(); }

  /// Minimal-measure member containing every ball A with mu(A) <= 2 mu(B)
  /// that meets B; absent only when no member contains that union.
  std::optional<BallId> hull(BallId id) const { return structure_->hull.at(id); }
  /// hull(id), failing when it does not exist.
  BallId require_hull(BallId id) const;
  /// max over balls of mu(hull(B)) / mu(B); absent when a hull is missing.
  const std::optional<Rational>& hull_constant() const { return structure_->hull_constant; }

  /// Minimal-measure member strictly containing the ball.
  std::optional<BallId> parent(BallId id) const { return structure_->parent.at(id); }
  /// Members A with A ⊇ B, B included, in id order.
  std::span<const BallId> supersets(BallId id) const { return structure_->supersets.at(id); }
  /// Members containing the cell, in id order.
  std::vector<BallId> balls_containing(CellId cell) const;

  /// Applies `fn` to the owned space and rebases every ball afterwards.
  template <typename Fn>
  decltype(auto) update_space(Fn&& fn) {
    struct Rebase {
      BallBasis* self;
      ~Rebase() { self->rebase(); }
    } guard{this};
    return fn(space_);
  }

  Remap refine(CellId cell, const Rational& fraction) {
    return update_space([&](CellSpace& s) { return s.split_cell(cell, fraction); });
  }

 private:
  struct Structure {
    std::optional<BallId> full_space;
    std::vector<std::optional<BallId>> hull;
    std::optional<Rational> hull_constant;
    std::vector<std::optional<BallId>> parent;
    std::vector<std::vector<BallId>> supersets;
  };

  BallBasis(CellSpace space, std::vector<Ball> balls, std::shared_ptr<const Structure> structure)
      : space_(std::move(space)), balls_(std::move(balls)), structure_(std::move(structure)) {}

  void rebase();

  CellSpace space_;
  std::vector<Ball> balls_;
  std::shared_ptr<const Structure> structure_;
};

/// 2^depth uniform cells of [0,1); balls are all dyadic intervals of
/// generations 0..depth, generation by generation, left to right.
BallBasis dyadic_basis(unsigned depth);

/// Balls are the tree nodes in breadth-first order, cells the leaves in
/// depth-first order. The root weight is the total measure.
BallBasis martingale_basis(const MartingaleNode& root);

/// Recomputes the hull of `id` from the definition, ignoring the cache.
std::optional<BallId> compute_hull(const BallBasis& basis, BallId id);

struct AxiomReport {
  bool b1_ok = true;
  bool b2_ok = true;
  bool b3_ok = true;
  bool b4_ok = true;
  std::optional<Rational> hull_constant;
  /// Cells with no common ball.
  std::optional<std::pair<CellId, CellId>> b2_witness;
  /// Cells that no boolean combination of balls separates.
  std::optional<std::pair<CellId, CellId>> b3_witness;
  /// Balls whose hull is missing or does not contain a qualifying ball.
  std::vector<BallId> b4_failures;

  bool all_ok() const { return b1_ok && b2_ok && b3_ok && b4_ok; }
};

AxiomReport verify_axioms(const BallBasis& basis);

/// Least eta such that every ball A whose hull is not the full space has a
/// member B strictly containing A with mu(B) <= eta mu(A). A family with no
/// such A reports 1. Absent when some such A has no strict superset at all.
std::optional<Rational> doubling_constant(const BallBasis& basis);

bool is_density_point(const BallBasis& basis, const MeasurableSet& set, CellId cell, const Rational& epsilon);

/// Greedy disjoint selection from `family` (balls meeting `target` only), by
/// decreasing measure with ties broken by id. The hulls of the selection cover
/// `target` whenever `target` is covered by `family`.
std::vector<BallId> covering_select(const BallBasis& basis, const MeasurableSet& target,
                                    std::span<const BallId> family);

}  // namespace sparselab
