#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sparselab/basis.hpp"
#include "sparselab/radical.hpp"

namespace sparselab {

/// An r-average kept as its r-th power: (1/mu(B)) * integral_B f^r.
struct PowerAverage {
  Rational value_pow_r;
  unsigned r = 1;

  /// average > lambda, decided as value_pow_r > lambda^r.
  bool exceeds(const Rational& lambda) const { return value_pow_r > pow(lambda, r); }
  double approx() const;
};

PowerAverage average(const CellSpace& space, const StepFunction& f, const MeasurableSet& ball, unsigned r);
PowerAverage starred_average(const BallBasis& basis, const StepFunction& f, BallId ball, unsigned r);

/// Power averages of one function over every ball of a basis, plus their
/// starred versions. Shared by the operators below so each integral is taken
/// once.
class AverageTable {
 public:
  AverageTable(const BallBasis& basis, const StepFunction& f, unsigned r);

  unsigned r() const { return r_; }
  const Rational& power(BallId id) const { return power_[id]; }
  const Rational& starred_power(BallId id) const { return starred_[id]; }
  std::span<const Rational> powers() const { return power_; }

 private:
  unsigned r_;
  std::vector<Rational> power_;
  std::vector<Rational> starred_;
};

struct SparseCollection {
  std::vector<BallId> balls;
  Rational gamma;
  /// E_B for each entry of `balls`, when known.
  std::optional<std::vector<MeasurableSet>> witnesses;
};

/// Per-cell values of a sparse operator. Each value is a sum of r-th roots of
/// power averages; for r = 1 every value is an exact rational.
class RadicalFunction {
 public:
  RadicalFunction(const Stamp& stamp, std::size_t id_capacity, unsigned r);

  const Stamp& stamp() const { return stamp_; }
  unsigned r() const { return r_; }
  const RootSum& operator[](CellId cell) const { return values_[cell]; }
  RootSum& at(CellId cell) { return values_[cell]; }

  /// Exact step function; fails unless every value is rational.
  StepFunction to_step_function(const CellSpace& space) const;

 private:
  Stamp stamp_;
  unsigned r_;
  std::vector<RootSum> values_;
};

RadicalFunction apply_sparse(const BallBasis& basis, const SparseCollection& s, const AverageTable& table);
RadicalFunction apply_sparse(const BallBasis& basis, const SparseCollection& s, const StepFunction& f, unsigned r);
RadicalFunction apply_strong_sparse(const BallBasis& basis, const SparseCollection& s, const AverageTable& table);
RadicalFunction apply_strong_sparse(const BallBasis& basis, const SparseCollection& s, const StepFunction& f,
                                    unsigned r);

/// (M_r f)^r cell by cell, exact.
StepFunction maximal_function_power(const BallBasis& basis, const AverageTable& table);
StepFunction maximal_function_power(const BallBasis& basis, const StepFunction& f, unsigned r);
/// M_r f as root sums (a single term per cell).
RadicalFunction maximal_function(const BallBasis& basis, const StepFunction& f, unsigned r);

/// {x : M_r f(x) > lambda}.
MeasurableSet maximal_level_set(const BallBasis& basis, const AverageTable& table, const Rational& lambda);

/// Balls with average strictly above lambda, in id order.
std::vector<BallId> lambda_balls(const BallBasis& basis, const AverageTable& table, const Rational& lambda);
std::vector<BallId> lambda_balls(const BallBasis& basis, const StepFunction& f, const Rational& lambda, unsigned r);
/// lambda-balls B with no lambda-ball A ⊇ B of measure at least 2 mu(B).
std::vector<BallId> maximal_lambda_balls(const BallBasis& basis, const AverageTable& table, const Rational& lambda);
std::vector<BallId> maximal_lambda_balls(const BallBasis& basis, const StepFunction& f, const Rational& lambda,
                                         unsigned r);

/// Pairwise disjoint maximal lambda-balls whose hulls cover {M_r f > lambda}.
std::vector<BallId> select_disjoint_maximal(const BallBasis& basis, const AverageTable& table, const Rational& lambda);
std::vector<BallId> select_disjoint_maximal(const BallBasis& basis, const StepFunction& f, const Rational& lambda,
                                            unsigned r);

struct SparsenessResult {
  bool feasible = false;
  /// E_B per collection entry, stamped to the refined space, when feasible.
  std::vector<MeasurableSet> witnesses;
  /// Inclusion-minimal sub-family T with gamma * sum mu(B) > mu(union T).
  std::vector<BallId> violating;
  Rational demand;
  Rational supply;
};

/// Decides gamma-sparseness exactly by max-flow; cells are split so the
/// witnesses are genuine sets. Refines the space of `basis`.
SparsenessResult verify_sparseness(BallBasis& basis, const SparseCollection& s);

/// Checks the three sparseness clauses for given witnesses.
bool witnesses_valid(const BallBasis& basis, const SparseCollection& s, std::span<const MeasurableSet> witnesses);

}  // namespace sparselab
