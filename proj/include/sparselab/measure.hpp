#pragma once

#include <boost/dynamic_bitset.hpp>

#include <cstdint>
#include <span>
#include <vector>

#include "sparselab/rational.hpp"

namespace sparselab {

using CellId = std::uint32_t;

/// Identifies one state of a CellSpace. Two spaces that went through the same
/// sequence of splits share stamps, so their sets are interchangeable.
struct Stamp {
  std::uint64_t generation = 0;
  std::uint64_t lineage = 0;

  bool operator==(const Stamp&) const = default;
};

struct CellSplit {
  CellId parent;
  CellId left;
  CellId right;
};

/// Returned by CellSpace::split_cell. Objects stamped `from` migrate to `to`
/// by replacing `split.parent` with both children.
struct Remap {
  Stamp from;
  Stamp to;
  CellSplit split;
};

class CellSpace;

/// A finite union of cells of one CellSpace state.
class MeasurableSet {
 public:
  MeasurableSet() = default;

  const Stamp& stamp() const { return stamp_; }
  bool contains(CellId cell) const { return cell < bits_.size() && bits_.test(cell); }
  bool empty() const { return bits_.none(); }
  std::size_t cell_count() const { return bits_.count(); }

  /// Member cell ids in ascending id order (not leftmost order).
  std::vector<CellId> cells() const;

  bool is_subset_of(const MeasurableSet& other) const;
  bool intersects(const MeasurableSet& other) const;

  MeasurableSet& operator|=(const MeasurableSet& other);
  MeasurableSet& operator&=(const MeasurableSet& other);
  MeasurableSet& operator-=(const MeasurableSet& other);
  MeasurableSet& operator^=(const MeasurableSet& other);

  friend MeasurableSet operator|(MeasurableSet a, const MeasurableSet& b) { return a |= b; }
  friend MeasurableSet operator&(MeasurableSet a, const MeasurableSet& b) { return a &= b; }
  friend MeasurableSet operator-(MeasurableSet a, const MeasurableSet& b) { return a -= b; }
  friend MeasurableSet operator^(MeasurableSet a, const MeasurableSet& b) { return a ^= b; }

  bool operator==(const MeasurableSet& other) const;

  template <typename Fn>
  void for_each_cell(Fn&& fn) const {
    for (auto i = bits_.find_first(); i != boost::dynamic_bitset<>::npos; i = bits_.find_next(i))
      fn(static_cast<CellId>(i));
  }

 private:
  friend class CellSpace;
  void require_same_state(const MeasurableSet& other) const;

  Stamp stamp_;
  boost::dynamic_bitset<> bits_;
};

/// Cell-constant nonnegative function with exact values.
class StepFunction {
 public:
  StepFunction() = default;

  const Stamp& stamp() const { return stamp_; }
  const Rational& operator[](CellId cell) const { return values_[cell]; }
  /// Values indexed by cell id; entries of retired cells are meaningless.
  std::span<const Rational> by_id() const { return values_; }

 private:
  friend class CellSpace;
  Stamp stamp_;
  std::vector<Rational> values_;
};

/// Where the cumulative measure of a set reaches a level, scanning cells in
/// leftmost order. `offset` is the measure used inside `cell`; `interior` is
/// true when the level falls strictly inside it.
struct LeftmostPosition {
  CellId cell;
  std::size_t order_index;
  Rational offset;
  bool interior;
};

/// Ordered finite partition with positive rational cell measures.
///
/// Splitting retires a cell and inserts two fresh children at its position in
/// the leftmost order. Sets and functions stamped to an earlier state are
/// rejected until brought forward with migrate().
class CellSpace {
 public:
  /// Cells in leftmost order; every measure must be positive.
  explicit CellSpace(std::span<const Rational> measures);

  std::size_t cell_count() const { return order_.size(); }
  /// Live cell ids in leftmost order.
  std::span<const CellId> order() const { return order_; }
  std::size_t position(CellId cell) const;
  const Rational& cell_measure(CellId cell) const;
  bool is_live(CellId cell) const { return cell < live_.size() && live_[cell]; }
  /// One past the largest cell id ever issued.
  std::size_t id_capacity() const { return measure_.size(); }

  const Stamp& stamp() const { return stamp_; }
  std::uint64_t generation() const { return stamp_.generation; }
  const Rational& total_measure() const { return total_; }

  MeasurableSet empty_set() const;
  MeasurableSet full_set() const;
  MeasurableSet make_set(std::span<const CellId> cells) const;
  /// Set from positions in the leftmost order.
  MeasurableSet set_from_positions(std::span<const std::size_t> positions) const;
  std::vector<std::size_t> positions_of(const MeasurableSet& set) const;

  StepFunction constant_function(const Rational& value) const;
  StepFunction indicator(const MeasurableSet& set) const;
  /// Values listed in leftmost order.
  StepFunction function_from_values(std::span<const Rational> values) const;
  /// Values listed in leftmost order.
  std::vector<Rational> values_in_order(const StepFunction& f) const;
  /// Copy of `f` with the value on `cell` replaced.
  StepFunction with_value(const StepFunction& f, CellId cell, const Rational& value) const;

  Rational measure(const MeasurableSet& set) const;
  /// Exact integral of f^r over `set`.
  Rational integrate_power(const StepFunction& f, const MeasurableSet& set, unsigned r) const;

  /// Replaces `cell` by two adjacent cells, the left one of measure
  /// fraction * measure(cell).
  Remap split_cell(CellId cell, const Rational& fraction);

  MeasurableSet migrate(const MeasurableSet& set) const;
  StepFunction migrate(const StepFunction& f) const;

  LeftmostPosition leftmost_position(const Rational& kappa, const MeasurableSet& set) const;
  /// Subset of `set` of measure exactly kappa made of its leftmost portion.
  /// Splits the boundary cell when kappa falls inside it; kappa == 0 yields
  /// the empty set.
  MeasurableSet leftmost_set(const Rational& kappa, const MeasurableSet& set);

  void require_current(const MeasurableSet& set) const;
  void require_current(const StepFunction& f) const;

 private:
  struct HistoryEntry {
    Stamp before;
    CellSplit split;
  };

  std::size_t first_history_index(const Stamp& stamp) const;

  std::vector<Rational> measure_;
  std::vector<bool> live_;
  std::vector<CellId> order_;
  std::vector<std::size_t> position_;
  std::vector<HistoryEntry> history_;
  Rational total_;
  Stamp stamp_;
};

}  // namespace sparselab
