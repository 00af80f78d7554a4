#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sparselab/sparse.hpp"

namespace sparselab {

struct PackingCheck {
  bool ok = true;
  /// First k whose packing sum exceeds mu(G_k).
  std::optional<std::size_t> violating_index;
  /// sum of xi_j over j with mu(G_j) <= mu(G_k) and G_j ∩ G_k nonempty.
  Rational load;
  Rational capacity;
};

/// Packing condition: for every k, the xi_j of the sets G_j no larger than
/// G_k that meet it sum to at most mu(G_k).
PackingCheck check_packing(const CellSpace& space, std::span<const MeasurableSet> sets, std::span<const Rational> xi);

/// Pairwise disjoint subsets of the inputs with measures exactly xi, built by
/// leftmost selection from the smallest set upwards. Results are stamped to
/// the refined space and listed in input order.
std::vector<MeasurableSet> disjointify(CellSpace& space, std::span<const MeasurableSet> sets,
                                       std::span<const Rational> xi);

/// Audit record for one selected maximal lambda-ball.
struct FlatteningStep {
  BallId selected;                 // B_k
  BallId hull;                     // B_k*
  BallId double_hull;              // B_k**
  std::optional<BallId> cover;     // G_k: smallest ball meeting B_k* with mu > 2 mu(B_k*), if any
  std::optional<Rational> family_infimum;
  MeasurableSet fresh_part;        // D_k
  Rational xi;
  std::optional<MeasurableSet> spread;  // tilde G_k
};

struct FlatteningResult {
  MeasurableSet exceptional;  // E_lambda
  StepFunction flattened;     // g
  Rational lambda;
  unsigned r = 1;
  Rational delta;
  unsigned retries = 0;
  std::vector<FlatteningStep> steps;
};

/// Flattens f at level lambda. Refines the space of `basis`; every set in the
/// result is stamped to the refined space. delta defaults to 1/K and is halved
/// (up to 10 times) while the packing condition fails. `averages` may carry
/// the table of f for this basis; ball averages survive refinement, so one
/// table serves every lambda.
FlatteningResult flatten(BallBasis& basis, const StepFunction& f, const Rational& lambda, unsigned r,
                         std::optional<Rational> delta = std::nullopt, const AverageTable* averages = nullptr);

struct FlatteningReport {
  bool level_set_covered = true;  // {M_r f > lambda} ⊆ E_lambda
  bool bounded = true;            // g <= lambda
  bool flattened_matches = true;  // g = f off E_lambda, lambda on it
  Rational measure_constant;      // mu(E) lambda^r / ||f||_r^r
  Rational domination_constant;   // max over B ⊄ E of <f>_B^r / <g>_{B*}^r
  bool domination_finite = true;
  std::optional<BallId> worst_ball;

  Rational minimal_constant() const;
  bool holds_with(const Rational& c) const;
};

FlatteningReport verify_flattening(const BallBasis& basis, const StepFunction& f, const FlatteningResult& result);

}  // namespace sparselab
