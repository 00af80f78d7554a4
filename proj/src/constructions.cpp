#include "sparselab/constructions.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>

#include "sparselab/error.hpp"

namespace sparselab {

PackingCheck check_packing(const CellSpace& space, std::span<const MeasurableSet> sets, std::span<const Rational> xi) {
  if (sets.size() != xi.size()) fail(ErrorCode::invalid_argument, "one xi per set is required");
  std::vector<Rational> measures;
  measures.reserve(sets.size());
  for (std::size_t k = 0; k < sets.size(); ++k) {
    if (xi[k] < 0) fail(ErrorCode::invalid_argument, "xi must be nonnegative");
    measures.push_back(space.measure(sets[k]));
  }

  PackingCheck out;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    Rational load = 0;
    for (std::size_t j = 0; j < sets.size(); ++j) {
      if (j == k || (measures[j] <= measures[k] && sets[j].intersects(sets[k]))) load += xi[j];
    }
    if (load > measures[k]) {
      out.ok = false;
      out.violating_index = k;
      out.load = std::move(load);
      out.capacity = measures[k];
      return out;
    }
  }
  return out;
}

std::vector<MeasurableSet> disjointify(CellSpace& space, std::span<const MeasurableSet> sets,
                                       std::span<const Rational> xi) {
  const PackingCheck packing = check_packing(space, sets, xi);
  if (!packing.ok)
    fail(ErrorCode::packing_violation, "packing condition fails at index " + std::to_string(*packing.violating_index) +
                                           ": load " + to_string(packing.load) + " exceeds " +
                                           to_string(packing.capacity));

  const std::size_t n = sets.size();
  std::vector<Rational> measures;
  for (const auto& s : sets) measures.push_back(space.measure(s));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return measures[a] > measures[b]; });

  std::vector<MeasurableSet> tilde(n);
  MeasurableSet used = space.empty_set();
  for (std::size_t pos = n; pos-- > 0;) {
    const std::size_t k = order[pos];
    used = space.migrate(used);
    const MeasurableSet available = space.migrate(sets[k]) - used;
    if (xi[k] == 0) {
      tilde[k] = space.empty_set();
      continue;
    }
    if (xi[k] > space.measure(available))
      fail(ErrorCode::packing_violation, "no room left in set " + std::to_string(k));
    MeasurableSet picked = space.leftmost_set(xi[k], available);
    used = space.migrate(used) | picked;
    tilde[k] = std::move(picked);
  }
  for (auto& t : tilde) t = space.migrate(t);
  return tilde;
}

// ---------------------------------------------------------------------------

FlatteningResult flatten(BallBasis& basis, const StepFunction& f_in, const Rational& lambda, unsigned r,
                         std::optional<Rational> delta, const AverageTable* averages) {
  if (lambda <= 0) fail(ErrorCode::invalid_argument, "lambda must be positive, got " + to_string(lambda));
  if (!basis.contains_full_space())
    fail(ErrorCode::precondition, "flattening needs a basis that contains the full space");
  const auto& k_const = basis.hull_constant();
  if (!k_const) fail(ErrorCode::precondition, "flattening needs every ball to have a hull");
  if (delta && *delta <= 0) fail(ErrorCode::invalid_argument, "delta must be positive");

  StepFunction f = basis.space().migrate(f_in);
  FlatteningResult result;
  result.lambda = lambda;
  result.r = r;
  result.delta = delta ? *delta : Rational(1 / *k_const);

  if (averages && (averages->r() != r || averages->powers().size() != basis.size()))
    fail(ErrorCode::invalid_argument, "average table does not match the basis");
  std::optional<AverageTable> own;
  if (!averages) averages = &own.emplace(basis, f, r);
  const std::vector<BallId> selected = select_disjoint_maximal(basis, *averages, lambda);

  MeasurableSet earlier_hulls = basis.space().empty_set();
  std::vector<Rational> integrals;
  for (BallId b : selected) {
    FlatteningStep step{b, basis.require_hull(b), 0, std::nullopt, std::nullopt, {}, Rational(0), std::nullopt};
    step.double_hull = basis.require_hull(step.hull);
    const Ball& hull = basis.ball(step.hull);

    const Rational floor = 2 * hull.measure;
    for (const Ball& candidate : basis.balls()) {
      if (candidate.measure <= floor || !candidate.set.intersects(hull.set)) continue;
      if (!step.cover || candidate.measure < basis.ball(*step.cover).measure) step.cover = candidate.id;
    }
    if (step.cover) step.family_infimum = basis.ball(*step.cover).measure;

    step.fresh_part = hull.set - earlier_hulls;
    earlier_hulls |= hull.set;
    integrals.push_back(basis.space().integrate_power(f, step.fresh_part, r));
    result.steps.push_back(std::move(step));
  }

  const Rational lambda_r = pow(lambda, r);
  std::vector<std::size_t> covered;
  for (std::size_t k = 0; k < result.steps.size(); ++k)
    if (result.steps[k].cover) covered.push_back(k);

  std::vector<MeasurableSet> covers;
  for (std::size_t k : covered) covers.push_back(basis.ball(*result.steps[k].cover).set);

  std::vector<Rational> xi;
  constexpr unsigned kMaxRetries = 10;
  while (true) {
    for (std::size_t k = 0; k < result.steps.size(); ++k) result.steps[k].xi = result.delta / lambda_r * integrals[k];
    xi.clear();
    for (std::size_t k : covered) xi.push_back(result.steps[k].xi);
    const PackingCheck packing = check_packing(basis.space(), covers, xi);
    if (packing.ok) break;
    if (result.retries == kMaxRetries)
      fail(ErrorCode::packing_violation,
           "packing condition still fails with delta = " + to_string(result.delta) + " at cover " +
               std::to_string(*packing.violating_index));
    result.delta /= 2;
    ++result.retries;
  }

  const std::vector<MeasurableSet> spread =
      basis.update_space([&](CellSpace& space) { return disjointify(space, covers, xi); });

  const CellSpace& space = basis.space();
  f = space.migrate(f);
  MeasurableSet exceptional = space.empty_set();
  for (std::size_t i = 0; i < covered.size(); ++i) {
    result.steps[covered[i]].spread = spread[i];
    exceptional |= spread[i];
  }
  for (auto& step : result.steps) {
    step.fresh_part = space.migrate(step.fresh_part);
    exceptional |= basis.ball(step.double_hull).set;
  }

  std::vector<Rational> values = space.values_in_order(f);
  const auto order = space.order();
  for (std::size_t p = 0; p < order.size(); ++p)
    if (exceptional.contains(order[p])) values[p] = lambda;
  result.flattened = space.function_from_values(values);
  result.exceptional = std::move(exceptional);
  return result;
}

Rational FlatteningReport::minimal_constant() const {
  return measure_constant > domination_constant ? measure_constant : domination_constant;
}

bool FlatteningReport::holds_with(const Rational& c) const {
  return level_set_covered && bounded && flattened_matches && domination_finite && measure_constant <= c &&
         domination_constant <= c;
}

FlatteningReport verify_flattening(const BallBasis& basis, const StepFunction& f_in, const FlatteningResult& result) {
  const CellSpace& space = basis.space();
  const StepFunction f = space.migrate(f_in);
  const StepFunction g = space.migrate(result.flattened);
  const MeasurableSet e = space.migrate(result.exceptional);
  const unsigned r = result.r;
  const Rational& lambda = result.lambda;

  FlatteningReport report;
  const AverageTable f_table(basis, f, r);
  report.level_set_covered = maximal_level_set(basis, f_table, lambda).is_subset_of(e);

  for (CellId c : space.order()) {
    if (g[c] > lambda) report.bounded = false;
    const Rational& expected = e.contains(c) ? lambda : f[c];
    if (g[c] != expected) report.flattened_matches = false;
  }

  const Rational norm = space.integrate_power(f, space.full_set(), r);
  const Rational lambda_r = pow(lambda, r);
  const Rational exceptional_measure = space.measure(e);
  if (norm == 0) {
    report.measure_constant = 0;
    if (exceptional_measure != 0) report.domination_finite = false;
  } else {
    report.measure_constant = exceptional_measure * lambda_r / norm;
  }

  const AverageTable g_table(basis, g, r);
  for (const Ball& b : basis.balls()) {
    if (b.set.is_subset_of(e)) continue;
    const Rational& fb = f_table.power(b.id);
    if (fb == 0) continue;
    const Rational& gh = g_table.power(basis.require_hull(b.id));
    if (gh == 0) {
      report.domination_finite = false;
      report.worst_ball = b.id;
      continue;
    }
    Rational ratio = fb / gh;
    if (ratio > report.domination_constant) {
      report.domination_constant = std::move(ratio);
      report.worst_ball = b.id;
    }
  }
  return report;
}

}  // namespace sparselab
