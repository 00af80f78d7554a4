#include "sparselab/measure.hpp"

#include <string>

#include "sparselab/error.hpp"

namespace sparselab {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t mix(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  h ^= 0xff;
  h *= kFnvPrime;
  return h;
}

std::string describe(const Stamp& s) {
  return "generation " + std::to_string(s.generation) + " (lineage " + std::to_string(s.lineage) + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// MeasurableSet

std::vector<CellId> MeasurableSet::cells() const {
  std::vector<CellId> out;
  out.reserve(bits_.count());
  for_each_cell([&](CellId c) { out.push_back(c); });
  return out;
}

void MeasurableSet::require_same_state(const MeasurableSet& other) const {
  if (!(stamp_ == other.stamp_))
    fail(ErrorCode::stale_generation,
         "set operands belong to different space states: " + describe(stamp_) + " vs " + describe(other.stamp_));
}

bool MeasurableSet::is_subset_of(const MeasurableSet& other) const {
  require_same_state(other);
  return bits_.is_subset_of(other.bits_);
}

bool MeasurableSet::intersects(const MeasurableSet& other) const {
  require_same_state(other);
  return bits_.intersects(other.bits_);
}

MeasurableSet& MeasurableSet::operator|=(const MeasurableSet& other) {
  require_same_state(other);
  bits_ |= other.bits_;
  return *this;
}

MeasurableSet& MeasurableSet::operator&=(const MeasurableSet& other) {
  require_same_state(other);
  bits_ &= other.bits_;
  return *this;
}

MeasurableSet& MeasurableSet::operator-=(const MeasurableSet& other) {
  require_same_state(other);
  bits_ -= other.bits_;
  return *this;
}

MeasurableSet& MeasurableSet::operator^=(const MeasurableSet& other) {
  require_same_state(other);
  bits_ ^= other.bits_;
  return *this;
}

bool MeasurableSet::operator==(const MeasurableSet& other) const {
  require_same_state(other);
  return bits_ == other.bits_;
}

// ---------------------------------------------------------------------------
// CellSpace

CellSpace::CellSpace(std::span<const Rational> measures) {
  if (measures.empty()) fail(ErrorCode::invalid_argument, "a cell space needs at least one cell");
  std::uint64_t lineage = kFnvOffset;
  measure_.reserve(measures.size());
  for (const auto& m : measures) {
    if (m <= 0) fail(ErrorCode::invalid_argument, "cell measure must be positive, got " + to_string(m));
    Rational c = m;
    c.canonicalize();
    lineage = mix(lineage, to_string(c));
    total_ += c;
    measure_.push_back(std::move(c));
  }
  live_.assign(measure_.size(), true);
  order_.resize(measure_.size());
  position_.resize(measure_.size());
  for (std::size_t i = 0; i < measure_.size(); ++i) {
    order_[i] = static_cast<CellId>(i);
    position_[i] = i;
  }
  stamp_ = Stamp{0, lineage};
}

std::size_t CellSpace::position(CellId cell) const {
  if (!is_live(cell)) fail(ErrorCode::invalid_argument, "unknown or retired cell " + std::to_string(cell));
  return position_[cell];
}

const Rational& CellSpace::cell_measure(CellId cell) const {
  if (cell >= measure_.size()) fail(ErrorCode::invalid_argument, "unknown cell " + std::to_string(cell));
  return measure_[cell];
}

MeasurableSet CellSpace::empty_set() const {
  MeasurableSet s;
  s.stamp_ = stamp_;
  s.bits_.resize(measure_.size());
  return s;
}

MeasurableSet CellSpace::full_set() const {
  MeasurableSet s = empty_set();
  for (CellId c : order_) s.bits_.set(c);
  return s;
}

MeasurableSet CellSpace::make_set(std::span<const CellId> cells) const {
  MeasurableSet s = empty_set();
  for (CellId c : cells) {
    if (!is_live(c)) fail(ErrorCode::invalid_argument, "unknown or retired cell " + std::to_string(c));
    s.bits_.set(c);
  }
  return s;
}

MeasurableSet CellSpace::set_from_positions(std::span<const std::size_t> positions) const {
  MeasurableSet s = empty_set();
  for (std::size_t p : positions) {
    if (p >= order_.size()) fail(ErrorCode::invalid_argument, "cell position " + std::to_string(p) + " out of range");
    s.bits_.set(order_[p]);
  }
  return s;
}

std::vector<std::size_t> CellSpace::positions_of(const MeasurableSet& set) const {
  require_current(set);
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < order_.size(); ++p)
    if (set.bits_.test(order_[p])) out.push_back(p);
  return out;
}

StepFunction CellSpace::constant_function(const Rational& value) const {
  if (value < 0) fail(ErrorCode::invalid_argument, "step functions are nonnegative");
  StepFunction f;
  f.stamp_ = stamp_;
  Rational v = value;
  v.canonicalize();
  f.values_.assign(measure_.size(), v);
  return f;
}

StepFunction CellSpace::indicator(const MeasurableSet& set) const {
  require_current(set);
  StepFunction f = constant_function(0);
  set.for_each_cell([&](CellId c) { f.values_[c] = 1; });
  return f;
}

StepFunction CellSpace::function_from_values(std::span<const Rational> values) const {
  if (values.size() != order_.size())
    fail(ErrorCode::invalid_argument, "expected " + std::to_string(order_.size()) + " values, got " +
                                          std::to_string(values.size()));
  StepFunction f = constant_function(0);
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (values[p] < 0) fail(ErrorCode::invalid_argument, "step functions are nonnegative");
    f.values_[order_[p]] = values[p];
    f.values_[order_[p]].canonicalize();
  }
  return f;
}

std::vector<Rational> CellSpace::values_in_order(const StepFunction& f) const {
  require_current(f);
  std::vector<Rational> out;
  out.reserve(order_.size());
  for (CellId c : order_) out.push_back(f.values_[c]);
  return out;
}

StepFunction CellSpace::with_value(const StepFunction& f, CellId cell, const Rational& value) const {
  require_current(f);
  if (!is_live(cell)) fail(ErrorCode::invalid_argument, "unknown or retired cell " + std::to_string(cell));
  if (value < 0) fail(ErrorCode::invalid_argument, "step functions are nonnegative");
  StepFunction g = f;
  g.values_[cell] = value;
  g.values_[cell].canonicalize();
  return g;
}

Rational CellSpace::measure(const MeasurableSet& set) const {
  require_current(set);
  Rational sum = 0;
  set.for_each_cell([&](CellId c) { sum += measure_[c]; });
  return sum;
}

Rational CellSpace::integrate_power(const StepFunction& f, const MeasurableSet& set, unsigned r) const {
  if (r == 0) fail(ErrorCode::invalid_argument, "exponent r must be a positive integer");
  require_current(f);
  require_current(set);
  Rational sum = 0;
  set.for_each_cell([&](CellId c) {
    if (f.values_[c] != 0) sum += pow(f.values_[c], r) * measure_[c];
  });
  return sum;
}

Remap CellSpace::split_cell(CellId cell, const Rational& fraction) {
  if (!is_live(cell)) fail(ErrorCode::invalid_argument, "unknown or retired cell " + std::to_string(cell));
  if (fraction <= 0 || fraction >= 1)
    fail(ErrorCode::invalid_argument, "split fraction must lie in (0,1), got " + to_string(fraction));

  const Stamp before = stamp_;
  const auto left = static_cast<CellId>(measure_.size());
  const auto right = static_cast<CellId>(measure_.size() + 1);
  Rational left_measure = measure_[cell] * fraction;
  Rational right_measure = measure_[cell] - left_measure;
  measure_.push_back(std::move(left_measure));
  measure_.push_back(std::move(right_measure));
  live_[cell] = false;
  live_.push_back(true);
  live_.push_back(true);

  const std::size_t at = position_[cell];
  order_[at] = left;
  order_.insert(order_.begin() + static_cast<std::ptrdiff_t>(at) + 1, right);
  position_.resize(measure_.size());
  for (std::size_t p = at; p < order_.size(); ++p) position_[order_[p]] = p;

  const CellSplit split{cell, left, right};
  history_.push_back(HistoryEntry{before, split});
  std::uint64_t lineage = mix(before.lineage, std::to_string(cell) + ":" + to_string(fraction));
  stamp_ = Stamp{before.generation + 1, lineage};
  return Remap{before, stamp_, split};
}

std::size_t CellSpace::first_history_index(const Stamp& stamp) const {
  if (stamp.generation > stamp_.generation)
    fail(ErrorCode::stale_generation, "object from a foreign space state: " + describe(stamp));
  const auto index = static_cast<std::size_t>(stamp.generation);
  const Stamp& expected = index < history_.size() ? history_[index].before : stamp_;
  if (!(expected == stamp)) fail(ErrorCode::stale_generation, "object from a foreign space state: " + describe(stamp));
  return index;
}

MeasurableSet CellSpace::migrate(const MeasurableSet& set) const {
  if (set.stamp_ == stamp_) return set;
  MeasurableSet out = set;
  out.bits_.resize(measure_.size());
  for (std::size_t i = first_history_index(set.stamp_); i < history_.size(); ++i) {
    const CellSplit& s = history_[i].split;
    if (out.bits_.test(s.parent)) {
      out.bits_.reset(s.parent);
      out.bits_.set(s.left);
      out.bits_.set(s.right);
    }
  }
  out.stamp_ = stamp_;
  return out;
}

StepFunction CellSpace::migrate(const StepFunction& f) const {
  if (f.stamp_ == stamp_) return f;
  StepFunction out = f;
  out.values_.resize(measure_.size());
  for (std::size_t i = first_history_index(f.stamp_); i < history_.size(); ++i) {
    const CellSplit& s = history_[i].split;
    out.values_[s.left] = out.values_[s.parent];
    out.values_[s.right] = out.values_[s.parent];
  }
  out.stamp_ = stamp_;
  return out;
}

LeftmostPosition CellSpace::leftmost_position(const Rational& kappa, const MeasurableSet& set) const {
  require_current(set);
  if (kappa <= 0) fail(ErrorCode::invalid_argument, "leftmost level must be positive, got " + to_string(kappa));
  Rational cumulative = 0;
  for (std::size_t p = 0; p < order_.size(); ++p) {
    const CellId c = order_[p];
    if (!set.bits_.test(c)) continue;
    Rational next = cumulative + measure_[c];
    if (next >= kappa) {
      Rational offset = kappa - cumulative;
      const bool interior = next != kappa;
      return LeftmostPosition{c, p, std::move(offset), interior};
    }
    cumulative = std::move(next);
  }
  fail(ErrorCode::invalid_argument,
       "leftmost level " + to_string(kappa) + " exceeds the set measure " + to_string(cumulative));
}

MeasurableSet CellSpace::leftmost_set(const Rational& kappa, const MeasurableSet& set) {
  require_current(set);
  if (kappa == 0) return empty_set();
  const LeftmostPosition at = leftmost_position(kappa, set);

  MeasurableSet out = empty_set();
  for (std::size_t p = 0; p < at.order_index; ++p)
    if (set.bits_.test(order_[p])) out.bits_.set(order_[p]);
  if (!at.interior) {
    out.bits_.set(at.cell);
    return out;
  }
  const Remap remap = split_cell(at.cell, at.offset / measure_[at.cell]);
  out = migrate(out);
  out.bits_.set(remap.split.left);
  return out;
}

void CellSpace::require_current(const MeasurableSet& set) const {
  if (!(set.stamp_ == stamp_))
    fail(ErrorCode::stale_generation,
         "set stamped " + describe(set.stamp_) + " used with space at " + describe(stamp_));
}

void CellSpace::require_current(const StepFunction& f) const {
  if (!(f.stamp_ == stamp_))
    fail(ErrorCode::stale_generation,
         "function stamped " + describe(f.stamp_) + " used with space at " + describe(stamp_));
}

}  // namespace sparselab
