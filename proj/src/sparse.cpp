#include "sparselab/sparse.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <string>

#include "sparselab/error.hpp"

namespace sparselab {

namespace {

void require_r(unsigned r) {
  if (r == 0) fail(ErrorCode::invalid_argument, "exponent r must be a positive integer");
}

void require_lambda(const Rational& lambda) {
  if (lambda <= 0) fail(ErrorCode::invalid_argument, "lambda must be positive, got " + to_string(lambda));
}

}  // namespace

double PowerAverage::approx() const { return Interval::exact(value_pow_r).root(r).midpoint(); }

PowerAverage average(const CellSpace& space, const StepFunction& f, const MeasurableSet& ball, unsigned r) {
  require_r(r);
  const Rational m = space.measure(ball);
  if (m == 0) fail(ErrorCode::invalid_argument, "average over an empty ball");
  return PowerAverage{space.integrate_power(f, ball, r) / m, r};
}

PowerAverage starred_average(const BallBasis& basis, const StepFunction& f, BallId ball, unsigned r) {
  PowerAverage best{Rational(0), r};
  for (BallId a : basis.supersets(ball)) {
    PowerAverage avg = average(basis.space(), f, basis.ball(a).set, r);
    if (avg.value_pow_r > best.value_pow_r) best = std::move(avg);
  }
  return best;
}

AverageTable::AverageTable(const BallBasis& basis, const StepFunction& f, unsigned r) : r_(r) {
  require_r(r);
  const CellSpace& space = basis.space();
  space.require_current(f);

  std::vector<Rational> weight(space.id_capacity());
  for (CellId c : space.order()) {
    if (f[c] != 0) weight[c] = pow(f[c], r) * space.cell_measure(c);
  }
  power_.resize(basis.size());
  for (const Ball& b : basis.balls()) {
    Rational sum = 0;
    b.set.for_each_cell([&](CellId c) {
      if (weight[c] != 0) sum += weight[c];
    });
    power_[b.id] = sum / b.measure;
  }
  starred_.resize(basis.size());
  for (const Ball& b : basis.balls()) {
    Rational best = 0;
    for (BallId a : basis.supersets(b.id))
      if (power_[a] > best) best = power_[a];
    starred_[b.id] = std::move(best);
  }
}

// ---------------------------------------------------------------------------

RadicalFunction::RadicalFunction(const Stamp& stamp, std::size_t id_capacity, unsigned r)
    : stamp_(stamp), r_(r), values_(id_capacity, RootSum(r)) {}

StepFunction RadicalFunction::to_step_function(const CellSpace& space) const {
  if (!(space.stamp() == stamp_)) fail(ErrorCode::stale_generation, "operator output from another space state");
  std::vector<Rational> values;
  values.reserve(space.cell_count());
  for (CellId c : space.order()) {
    auto q = values_[c].exact();
    if (!q) fail(ErrorCode::precondition, "operator value is irrational; no exact step function");
    values.push_back(std::move(*q));
  }
  return space.function_from_values(values);
}

namespace {

template <typename Power>
RadicalFunction sum_over_collection(const BallBasis& basis, const SparseCollection& s, unsigned r, Power power) {
  const CellSpace& space = basis.space();
  RadicalFunction out(space.stamp(), space.id_capacity(), r);
  for (BallId a : s.balls) {
    const Rational& term = power(a);
    basis.ball(a).set.for_each_cell([&](CellId c) { out.at(c).add(term); });
  }
  return out;
}

}  // namespace

RadicalFunction apply_sparse(const BallBasis& basis, const SparseCollection& s, const AverageTable& table) {
  return sum_over_collection(basis, s, table.r(), [&](BallId a) -> const Rational& { return table.power(a); });
}

RadicalFunction apply_sparse(const BallBasis& basis, const SparseCollection& s, const StepFunction& f, unsigned r) {
  return apply_sparse(basis, s, AverageTable(basis, f, r));
}

RadicalFunction apply_strong_sparse(const BallBasis& basis, const SparseCollection& s, const AverageTable& table) {
  return sum_over_collection(basis, s, table.r(),
                             [&](BallId a) -> const Rational& { return table.starred_power(a); });
}

RadicalFunction apply_strong_sparse(const BallBasis& basis, const SparseCollection& s, const StepFunction& f,
                                    unsigned r) {
  return apply_strong_sparse(basis, s, AverageTable(basis, f, r));
}

StepFunction maximal_function_power(const BallBasis& basis, const AverageTable& table) {
  const CellSpace& space = basis.space();
  std::vector<Rational> best(space.id_capacity());
  for (const Ball& b : basis.balls()) {
    const Rational& p = table.power(b.id);
    b.set.for_each_cell([&](CellId c) {
      if (p > best[c]) best[c] = p;
    });
  }
  std::vector<Rational> values;
  values.reserve(space.cell_count());
  for (CellId c : space.order()) values.push_back(best[c]);
  return space.function_from_values(values);
}

StepFunction maximal_function_power(const BallBasis& basis, const StepFunction& f, unsigned r) {
  return maximal_function_power(basis, AverageTable(basis, f, r));
}

RadicalFunction maximal_function(const BallBasis& basis, const StepFunction& f, unsigned r) {
  const StepFunction powers = maximal_function_power(basis, f, r);
  const CellSpace& space = basis.space();
  RadicalFunction out(space.stamp(), space.id_capacity(), r);
  for (CellId c : space.order()) out.at(c).add(powers[c]);
  return out;
}

MeasurableSet maximal_level_set(const BallBasis& basis, const AverageTable& table, const Rational& lambda) {
  require_lambda(lambda);
  MeasurableSet level = basis.space().empty_set();
  const Rational threshold = pow(lambda, table.r());
  for (const Ball& b : basis.balls())
    if (table.power(b.id) > threshold) level |= b.set;
  return level;
}

std::vector<BallId> lambda_balls(const BallBasis& basis, const AverageTable& table, const Rational& lambda) {
  require_lambda(lambda);
  const Rational threshold = pow(lambda, table.r());
  std::vector<BallId> out;
  for (const Ball& b : basis.balls())
    if (table.power(b.id) > threshold) out.push_back(b.id);
  return out;
}

std::vector<BallId> lambda_balls(const BallBasis& basis, const StepFunction& f, const Rational& lambda, unsigned r) {
  return lambda_balls(basis, AverageTable(basis, f, r), lambda);
}

std::vector<BallId> maximal_lambda_balls(const BallBasis& basis, const AverageTable& table, const Rational& lambda) {
  require_lambda(lambda);
  const Rational threshold = pow(lambda, table.r());
  std::vector<BallId> out;
  for (BallId b : lambda_balls(basis, table, lambda)) {
    const Rational doubled = 2 * basis.ball(b).measure;
    bool dominated = false;
    for (BallId a : basis.supersets(b)) {
      if (table.power(a) > threshold && basis.ball(a).measure >= doubled) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(b);
  }
  return out;
}

std::vector<BallId> maximal_lambda_balls(const BallBasis& basis, const StepFunction& f, const Rational& lambda,
                                         unsigned r) {
  return maximal_lambda_balls(basis, AverageTable(basis, f, r), lambda);
}

std::vector<BallId> select_disjoint_maximal(const BallBasis& basis, const AverageTable& table,
                                            const Rational& lambda) {
  const MeasurableSet level = maximal_level_set(basis, table, lambda);
  const std::vector<BallId> maximal = maximal_lambda_balls(basis, table, lambda);
  return covering_select(basis, level, maximal);
}

std::vector<BallId> select_disjoint_maximal(const BallBasis& basis, const StepFunction& f, const Rational& lambda,
                                            unsigned r) {
  return select_disjoint_maximal(basis, AverageTable(basis, f, r), lambda);
}

// ---------------------------------------------------------------------------
// Sparseness by exact max-flow.

namespace {

struct FlowEdge {
  std::size_t to;
  std::size_t reverse;
  Rational capacity;
  Rational flow;
};

class FlowNetwork {
 public:
  explicit FlowNetwork(std::size_t nodes) : adjacency_(nodes) {}

  std::size_t add_edge(std::size_t from, std::size_t to, const Rational& capacity) {
    adjacency_[from].push_back(FlowEdge{to, adjacency_[to].size(), capacity, 0});
    adjacency_[to].push_back(FlowEdge{from, adjacency_[from].size() - 1, 0, 0});
    return adjacency_[from].size() - 1;
  }

  const FlowEdge& edge(std::size_t from, std::size_t index) const { return adjacency_[from][index]; }

  // Edmonds-Karp: shortest augmenting paths keep the number of rounds
  // polynomial even with rational capacities.
  Rational max_flow(std::size_t source, std::size_t sink) {
    Rational total = 0;
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    while (true) {
      std::vector<std::pair<std::size_t, std::size_t>> via(adjacency_.size(), {none, none});
      via[source] = {source, none};
      std::deque<std::size_t> queue{source};
      while (!queue.empty() && via[sink].first == none) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (std::size_t i = 0; i < adjacency_[u].size(); ++i) {
          const FlowEdge& e = adjacency_[u][i];
          if (via[e.to].first != none || e.capacity - e.flow <= 0) continue;
          via[e.to] = {u, i};
          queue.push_back(e.to);
        }
      }
      if (via[sink].first == none) return total;

      Rational push = -1;
      for (std::size_t v = sink; v != source; v = via[v].first) {
        const FlowEdge& e = adjacency_[via[v].first][via[v].second];
        Rational residual = e.capacity - e.flow;
        if (push < 0 || residual < push) push = std::move(residual);
      }
      for (std::size_t v = sink; v != source; v = via[v].first) {
        FlowEdge& e = adjacency_[via[v].first][via[v].second];
        e.flow += push;
        adjacency_[e.to][e.reverse].flow -= push;
      }
      total += push;
    }
  }

  std::vector<bool> reachable_from(std::size_t source) const {
    std::vector<bool> seen(adjacency_.size(), false);
    seen[source] = true;
    std::deque<std::size_t> queue{source};
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (const FlowEdge& e : adjacency_[u]) {
        if (seen[e.to] || e.capacity - e.flow <= 0) continue;
        seen[e.to] = true;
        queue.push_back(e.to);
      }
    }
    return seen;
  }

 private:
  std::vector<std::vector<FlowEdge>> adjacency_;
};

bool family_violates(const BallBasis& basis, const Rational& gamma, std::span<const BallId> family) {
  Rational demand = 0;
  MeasurableSet cover = basis.space().empty_set();
  for (BallId b : family) {
    demand += gamma * basis.ball(b).measure;
    cover |= basis.ball(b).set;
  }
  return demand > basis.space().measure(cover);
}

}  // namespace

SparsenessResult verify_sparseness(BallBasis& basis, const SparseCollection& s) {
  if (s.gamma <= 0 || s.gamma > 1)
    fail(ErrorCode::invalid_argument, "gamma must lie in (0,1], got " + to_string(s.gamma));
  for (BallId b : s.balls) {
    if (b >= basis.size()) fail(ErrorCode::invalid_argument, "unknown ball " + std::to_string(b));
  }

  const CellSpace& space = basis.space();
  const std::vector<CellId> cells(space.order().begin(), space.order().end());
  const std::size_t m = s.balls.size();
  const std::size_t source = 0;
  const std::size_t sink = m + cells.size() + 1;
  auto ball_node = [](std::size_t i) { return 1 + i; };
  auto cell_node = [m](std::size_t p) { return 1 + m + p; };

  FlowNetwork net(sink + 1);
  SparsenessResult result;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> ball_edges(m);  // (cell position, edge index)
  for (std::size_t i = 0; i < m; ++i) {
    const Ball& b = basis.ball(s.balls[i]);
    Rational demand = s.gamma * b.measure;
    result.demand += demand;
    net.add_edge(source, ball_node(i), demand);
    for (std::size_t p = 0; p < cells.size(); ++p) {
      if (!b.set.contains(cells[p])) continue;
      ball_edges[i].emplace_back(p, net.add_edge(ball_node(i), cell_node(p), space.cell_measure(cells[p])));
    }
  }
  for (std::size_t p = 0; p < cells.size(); ++p) net.add_edge(cell_node(p), sink, space.cell_measure(cells[p]));

  result.supply = net.max_flow(source, sink);
  result.feasible = result.supply == result.demand;

  if (!result.feasible) {
    const std::vector<bool> seen = net.reachable_from(source);
    std::vector<BallId> family;
    for (std::size_t i = 0; i < m; ++i)
      if (seen[ball_node(i)]) family.push_back(s.balls[i]);
    // Drop balls one at a time while the family still violates.
    bool shrunk = true;
    while (shrunk) {
      shrunk = false;
      for (std::size_t i = 0; i < family.size(); ++i) {
        std::vector<BallId> trial = family;
        trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
        if (!trial.empty() && family_violates(basis, s.gamma, trial)) {
          family = std::move(trial);
          shrunk = true;
          break;
        }
      }
    }
    result.violating = std::move(family);
    return result;
  }

  // Decompose the flow: each cell is cut into consecutive pieces, one per
  // ball that routes flow through it.
  std::vector<std::vector<std::pair<std::size_t, Rational>>> per_cell(cells.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& [p, index] : ball_edges[i]) {
      const Rational& flow = net.edge(ball_node(i), index).flow;
      if (flow > 0) per_cell[p].emplace_back(i, flow);
    }
  }
  std::vector<std::vector<CellId>> pieces(m);
  basis.update_space([&](CellSpace& sp) {
    for (std::size_t p = 0; p < cells.size(); ++p) {
      CellId rest = cells[p];
      for (const auto& [i, amount] : per_cell[p]) {
        const Rational& available = sp.cell_measure(rest);
        if (amount == available) {
          pieces[i].push_back(rest);
          break;
        }
        const Remap remap = sp.split_cell(rest, amount / available);
        pieces[i].push_back(remap.split.left);
        rest = remap.split.right;
      }
    }
  });
  for (std::size_t i = 0; i < m; ++i) result.witnesses.push_back(basis.space().make_set(pieces[i]));
  return result;
}

bool witnesses_valid(const BallBasis& basis, const SparseCollection& s, std::span<const MeasurableSet> witnesses) {
  if (witnesses.size() != s.balls.size()) return false;
  const CellSpace& space = basis.space();
  MeasurableSet used = space.empty_set();
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    const Ball& b = basis.ball(s.balls[i]);
    if (!witnesses[i].is_subset_of(b.set)) return false;
    if (space.measure(witnesses[i]) < s.gamma * b.measure) return false;
    if (witnesses[i].intersects(used)) return false;
    used |= witnesses[i];
  }
  return true;
}

}  // namespace sparselab
