#include "sparselab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <ostream>
#include <set>
#include <thread>

#include "sparselab/error.hpp"

namespace sparselab {

namespace {

const char* kind_name(EstimateKind kind) {
  switch (kind) {
    case EstimateKind::weak: return "weak";
    case EstimateKind::strong: return "strong";
    case EstimateKind::maximal: return "maximal";
  }
  return "weak";
}

EstimateKind kind_from_name(const std::string& name) {
  if (name == "weak") return EstimateKind::weak;
  if (name == "strong") return EstimateKind::strong;
  if (name == "maximal") return EstimateKind::maximal;
  fail(ErrorCode::parse, "unknown estimate kind '" + name + "'");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t to_u64(const mpz_class& z, const char* what) {
  if (z < 0 || !z.fits_ulong_p()) fail(ErrorCode::invalid_argument, std::string(what) + " is out of range");
  return z.get_ui();
}

// Rational exponent p = a/b split into its parts.
std::pair<unsigned long, unsigned long> exponent_parts(const Rational& p) {
  return {to_u64(p.get_num(), "p numerator"), to_u64(p.get_den(), "p denominator")};
}

// x^p for x >= 0 given as an interval, p = a/b.
Interval rational_power(const Interval& x, const Rational& p) {
  const auto [a, b] = exponent_parts(p);
  Interval y = x.pow(a);
  return b == 1 ? y : y.root(b);
}

void update_summary(std::optional<RatioSummary>& summary, const std::vector<RatioRow>& rows, bool all_exact) {
  RatioSummary s;
  s.rows = rows.size();
  bool exact = all_exact;
  for (const auto& row : rows) {
    s.max = std::max(s.max, row.upper);
    if (!row.exact) {
      exact = false;
    } else if (!s.exact_max || *row.exact > *s.exact_max) {
      s.exact_max = *row.exact;
    }
  }
  if (!exact) s.exact_max.reset();
  summary = s;
}

struct TrialOutcome {
  bool skipped = false;
  std::vector<RatioRow> weak_rows;
  std::vector<RatioRow> strong_rows;
  std::size_t chain_checks = 0;
  std::size_t chain_failures = 0;
};

RatioRow exact_row(std::size_t trial, std::uint64_t seed, std::string lambda, const Rational& ratio) {
  RatioRow row;
  row.trial = trial;
  row.seed = seed;
  row.lambda = std::move(lambda);
  const Interval iv = Interval::exact(ratio, 64);
  row.ratio = to_double(ratio);
  row.upper = iv.upper();
  row.exact = ratio;
  return row;
}

RatioRow interval_row(std::size_t trial, std::uint64_t seed, std::string lambda, const Interval& ratio) {
  RatioRow row;
  row.trial = trial;
  row.seed = seed;
  row.lambda = std::move(lambda);
  row.ratio = ratio.midpoint();
  row.upper = ratio.upper();
  return row;
}

Rational level_measure(const CellSpace& space, const RadicalFunction& values, const Rational& lambda) {
  Rational m = 0;
  for (CellId c : space.order())
    if (values[c].compare(lambda) > 0) m += space.cell_measure(c);
  return m;
}

// Rational lambdas at which the flattening chain is probed: up to `count`
// breakpoints spread evenly over the grid.
std::vector<Rational> chain_levels(const std::vector<Rational>& breakpoints, unsigned count) {
  std::vector<Rational> out;
  if (breakpoints.empty() || count == 0) return out;
  const std::size_t n = breakpoints.size();
  if (count >= n) return breakpoints;
  std::set<std::size_t> picks;
  for (unsigned i = 0; i < count; ++i) picks.insert(count == 1 ? n - 1 : (i * (n - 1)) / (count - 1));
  for (std::size_t i : picks) out.push_back(breakpoints[i]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (r == 0) fail(ErrorCode::invalid_argument, "r must be at least 1");
  if (p && *p <= r) fail(ErrorCode::invalid_argument, "p must exceed r");
  if (kind == EstimateKind::strong && !p) fail(ErrorCode::invalid_argument, "strong-type estimates need p");
  if (gamma <= 0 || gamma >= 1) fail(ErrorCode::invalid_argument, "gamma must lie in (0,1)");
  if (support < 0 || support > 1) fail(ErrorCode::invalid_argument, "support must lie in [0,1]");
  if (density < 0 || density > 1) fail(ErrorCode::invalid_argument, "density must lie in [0,1]");
  if (value_low < 0 || value_high < value_low) fail(ErrorCode::invalid_argument, "value range must satisfy 0 <= low <= high");
  for (const auto& l : lambda_values)
    if (l <= 0) fail(ErrorCode::invalid_argument, "lambda values must be positive");
}

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail(ErrorCode::parse, "config must be a JSON object");
  static const std::set<std::string> known = {"basis",  "estimate", "r",       "p",             "gamma",
                                              "trials", "seed",     "lambda_grid", "values",    "density",
                                              "chain_samples", "threads", "output"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) fail(ErrorCode::parse, "unknown config field '" + key + "'");

  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    if (j.contains("basis")) c.basis = j.at("basis");
    if (j.contains("estimate")) c.kind = kind_from_name(j.at("estimate").get<std::string>());
    if (j.contains("r")) c.r = j.at("r").get<unsigned>();
    if (j.contains("p") && !j.at("p").is_null()) c.p = rational_from_json(j.at("p"));
    if (j.contains("gamma")) c.gamma = rational_from_json(j.at("gamma"));
    if (j.contains("trials")) c.trials = j.at("trials").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("lambda_grid")) {
      const json& grid = j.at("lambda_grid");
      if (grid.is_string()) {
        if (grid.get<std::string>() != "breakpoints") fail(ErrorCode::parse, "lambda_grid is 'breakpoints' or a list");
      } else {
        for (const auto& l : grid) c.lambda_values.push_back(rational_from_json(l));
      }
    }
    if (j.contains("values")) {
      const json& v = j.at("values");
      if (v.contains("low")) c.value_low = rational_from_json(v.at("low"));
      if (v.contains("high")) c.value_high = rational_from_json(v.at("high"));
      if (v.contains("support")) c.support = rational_from_json(v.at("support"));
    }
    if (j.contains("density")) c.density = rational_from_json(j.at("density"));
    if (j.contains("chain_samples")) {
      const json& v = j.at("chain_samples");
      if (v.is_string() && v.get<std::string>() == "all") {
        c.chain_samples = std::numeric_limits<unsigned>::max();
      } else {
        c.chain_samples = v.get<unsigned>();
      }
    }
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
    if (j.contains("output")) {
      const json& o = j.at("output");
      auto resolve = [&](const std::string& s) {
        std::filesystem::path path = s;
        return path.is_relative() ? base_dir / path : path;
      };
      if (o.contains("csv")) c.csv_out = resolve(o.at("csv").get<std::string>());
      if (o.contains("json")) c.json_out = resolve(o.at("json").get<std::string>());
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json out{{"basis", c.basis},
           {"estimate", kind_name(c.kind)},
           {"r", c.r},
           {"p", c.p ? rational_to_json(*c.p) : json(nullptr)},
           {"gamma", rational_to_json(c.gamma)},
           {"trials", c.trials},
           {"seed", c.seed},
           {"values",
            {{"low", rational_to_json(c.value_low)},
             {"high", rational_to_json(c.value_high)},
             {"support", rational_to_json(c.support)}}},
           {"density", rational_to_json(c.density)},
           {"chain_samples", c.chain_samples == std::numeric_limits<unsigned>::max() ? json("all")
                                                                                     : json(c.chain_samples)},
           {"threads", c.threads}};
  if (c.lambda_values.empty()) {
    out["lambda_grid"] = "breakpoints";
  } else {
    json grid = json::array();
    for (const auto& l : c.lambda_values) grid.push_back(rational_to_json(l));
    out["lambda_grid"] = grid;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generators

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) fail(ErrorCode::invalid_argument, "empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

bool bernoulli(std::mt19937_64& rng, const Rational& probability) {
  if (probability <= 0) return false;
  if (probability >= 1) return true;
  const std::uint64_t den = to_u64(probability.get_den(), "probability denominator");
  const std::uint64_t num = to_u64(probability.get_num(), "probability numerator");
  return uniform_below(rng, den) < num;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(trial) + 1));
}

StepFunction random_step_function(const CellSpace& space, std::uint64_t seed, const ValueRange& range,
                                  const Rational& support) {
  if (range.low < 0 || range.high < range.low)
    fail(ErrorCode::invalid_argument, "value range must satisfy 0 <= low <= high");
  constexpr unsigned kSteps = 16;
  std::mt19937_64 rng(seed);
  const Rational step = (range.high - range.low) / kSteps;
  std::vector<Rational> values;
  values.reserve(space.cell_count());
  for (std::size_t i = 0; i < space.cell_count(); ++i) {
    const bool nonzero = bernoulli(rng, support);
    const auto k = uniform_below(rng, kSteps + 1);
    values.push_back(nonzero ? Rational(range.low + step * static_cast<unsigned long>(k)) : Rational(0));
  }
  return space.function_from_values(values);
}

SparseCollection random_sparse_collection(const BallBasis& basis, const Rational& gamma, const Rational& density,
                                          std::mt19937_64& rng) {
  const CellSpace& space = basis.space();
  std::vector<Rational> remaining(space.id_capacity());
  for (CellId c : space.order()) remaining[c] = space.cell_measure(c);

  std::vector<BallId> order(basis.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<BallId>(i);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);

  SparseCollection s;
  s.gamma = gamma;
  for (BallId b : order) {
    if (!bernoulli(rng, density)) continue;
    const Ball& ball = basis.ball(b);
    Rational need = gamma * ball.measure;
    Rational available = 0;
    ball.set.for_each_cell([&](CellId c) { available += remaining[c]; });
    if (available < need) continue;
    for (CellId c : space.order()) {
      if (need == 0) break;
      if (!ball.set.contains(c) || remaining[c] == 0) continue;
      Rational take = remaining[c] < need ? remaining[c] : need;
      remaining[c] -= take;
      need -= take;
    }
    s.balls.push_back(b);
  }
  std::sort(s.balls.begin(), s.balls.end());
  return s;
}

TrialInputs make_trial(const BallBasis& basis, const ExperimentConfig& config, std::size_t trial) {
  const std::uint64_t seed = trial_seed(config.seed, trial);
  std::mt19937_64 rng(seed);
  const CellSpace& space = basis.space();
  StepFunction f = random_step_function(space, rng(), ValueRange{config.value_low, config.value_high}, config.support);
  // Keep trials informative: an all-zero draw gets one nonzero cell.
  if (config.value_high > 0 && space.integrate_power(f, space.full_set(), 1) == 0) {
    const CellId c = space.order()[uniform_below(rng, space.cell_count())];
    f = space.with_value(f, c, config.value_high);
  }
  SparseCollection s = random_sparse_collection(basis, config.gamma, config.density, rng);
  return TrialInputs{seed, std::move(f), std::move(s)};
}

// ---------------------------------------------------------------------------
// Ratios

Rational weak_ratio(const BallBasis& basis, const SparseCollection& s, const StepFunction& f, unsigned r,
                    const Rational& lambda) {
  if (lambda <= 0) fail(ErrorCode::invalid_argument, "lambda must be positive");
  const CellSpace& space = basis.space();
  const Rational norm = space.integrate_power(f, space.full_set(), r);
  if (norm == 0) fail(ErrorCode::invalid_argument, "weak ratio of the zero function");
  const RadicalFunction values = apply_strong_sparse(basis, s, f, r);
  return pow(lambda, r) * level_measure(space, values, lambda) / norm;
}

std::vector<RatioRow> breakpoint_rows(const CellSpace& space, const RadicalFunction& values, const Rational& norm_r) {
  if (norm_r <= 0) fail(ErrorCode::invalid_argument, "breakpoints need a positive norm");
  struct Entry {
    CellId cell;
    Interval enclosure;
  };
  std::vector<Entry> entries;
  for (CellId c : space.order()) {
    if (values[c].is_zero()) continue;
    entries.push_back(Entry{c, values[c].enclose(64)});
  }
  // Descending by value; exact comparison only when enclosures overlap.
  auto cmp = [&](const Entry& a, const Entry& b) -> std::strong_ordering {
    if (mpfr_cmp(a.enclosure.lo.get(), b.enclosure.hi.get()) > 0) return std::strong_ordering::greater;
    if (mpfr_cmp(b.enclosure.lo.get(), a.enclosure.hi.get()) > 0) return std::strong_ordering::less;
    return values[a.cell].compare(values[b.cell]);
  };
  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) { return cmp(a, b) > 0; });

  const unsigned r = values.r();
  std::vector<RatioRow> rows;
  Rational cumulative = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    cumulative += space.cell_measure(entries[i].cell);
    if (i + 1 < entries.size() && cmp(entries[i], entries[i + 1]) == 0) continue;

    const RootSum& v = values[entries[i].cell];
    RatioRow row;
    std::optional<Rational> power;  // v^r when rational
    if (auto q = v.exact()) {
      row.lambda = to_string(*q);
      power = pow(*q, r);
    } else {
      row.lambda = format_decimal(v.approx(), 17);
      if (v.terms().size() == 1) power = v.terms().front();
    }
    if (power) {
      row = exact_row(0, 0, row.lambda, *power * cumulative / norm_r);
    } else {
      const Interval ratio =
          v.enclose(128).pow(r).times(Interval::exact(cumulative)).over(Interval::exact(norm_r));
      row = interval_row(0, 0, row.lambda, ratio);
    }
    rows.push_back(std::move(row));
  }
  std::reverse(rows.begin(), rows.end());
  return rows;
}

Interval power_norm(const CellSpace& space, const RadicalFunction& values, const Rational& p) {
  Interval sum = Interval::exact(Rational(0));
  for (CellId c : space.order()) {
    if (values[c].is_zero()) continue;
    const Interval term = rational_power(values[c].enclose(128), p).times(Interval::exact(space.cell_measure(c)));
    sum = sum.plus(term);
  }
  return sum;
}

namespace {

Interval function_power_norm(const CellSpace& space, const StepFunction& f, const Rational& p) {
  Interval sum = Interval::exact(Rational(0));
  for (CellId c : space.order()) {
    if (f[c] == 0) continue;
    sum = sum.plus(rational_power(Interval::exact(f[c]), p).times(Interval::exact(space.cell_measure(c))));
  }
  return sum;
}

// (num / den)^(1/p).
Interval norm_ratio(const Interval& num, const Interval& den, const Rational& p) {
  const auto [a, b] = exponent_parts(p);
  Interval x = num.over(den);
  if (b != 1) x = x.pow(b);
  return x.root(a);
}

RatioRow strong_row(std::size_t trial, std::uint64_t seed, const Interval& ratio) {
  return interval_row(trial, seed, "", ratio);
}

}  // namespace

Interval strong_ratio(const CellSpace& space, const RadicalFunction& values, const StepFunction& f, const Rational& p) {
  const Interval f_norm = function_power_norm(space, f, p);
  if (mpfr_sgn(f_norm.lo.get()) <= 0) fail(ErrorCode::invalid_argument, "strong ratio of the zero function");
  return norm_ratio(power_norm(space, values, p), f_norm, p);
}

namespace {

// mu{x not in skip : A* g(x) > lambda}. Cells are screened in double precision
// and only near-ties go through the exact root sums.
Rational starred_level_measure(const BallBasis& basis, const SparseCollection& s, const StepFunction& g, unsigned r,
                               const Rational& lambda, const MeasurableSet& skip) {
  const CellSpace& space = basis.space();
  const AverageTable table(basis, g, r);
  Rational m = 0;
  if (r == 1) {
    std::vector<Rational> sum(space.id_capacity());
    for (BallId a : s.balls) {
      const Rational& t = table.starred_power(a);
      if (t == 0) continue;
      basis.ball(a).set.for_each_cell([&](CellId c) { sum[c] += t; });
    }
    for (CellId c : space.order())
      if (!skip.contains(c) && sum[c] > lambda) m += space.cell_measure(c);
    return m;
  }
  std::vector<double> approx(space.id_capacity(), 0.0);
  std::vector<unsigned> count(space.id_capacity(), 0);
  const double inv = 1.0 / r;
  for (BallId a : s.balls) {
    const Rational& t = table.starred_power(a);
    if (t == 0) continue;
    const double root = r == 2 ? std::sqrt(t.get_d()) : std::pow(t.get_d(), inv);
    basis.ball(a).set.for_each_cell([&](CellId c) {
      approx[c] += root;
      ++count[c];
    });
  }
  const double l = lambda.get_d();
  for (CellId c : space.order()) {
    if (skip.contains(c)) continue;
    const double slack = 1e-9 * (approx[c] + l) * (1 + count[c]);
    if (approx[c] > l + slack) {
      m += space.cell_measure(c);
    } else if (approx[c] >= l - slack) {
      RootSum exact(r);
      for (BallId a : s.balls)
        if (basis.ball(a).set.contains(c)) exact.add(table.starred_power(a));
      if (exact.compare(lambda) > 0) m += space.cell_measure(c);
    }
  }
  return m;
}

}  // namespace

ChainCheck check_weak_chain(const BallBasis& basis, const SparseCollection& s, const StepFunction& f, unsigned r,
                            const Rational& lambda, const RadicalFunction* f_values, const AverageTable* f_table) {
  ChainCheck check;
  check.lambda = lambda;
  if (f_values) {
    check.level_measure = level_measure(basis.space(), *f_values, lambda);
  } else {
    check.level_measure = starred_level_measure(basis, s, f, r, lambda, basis.space().empty_set());
  }

  BallBasis refined = basis;
  const FlatteningResult flat = flatten(refined, f, lambda, r, std::nullopt, f_table);
  const CellSpace& space = refined.space();
  const MeasurableSet e = space.migrate(flat.exceptional);
  check.exceptional_measure = space.measure(e);
  check.remainder_measure = starred_level_measure(refined, s, space.migrate(flat.flattened), r, lambda, e);
  check.holds = check.level_measure <= check.exceptional_measure + check.remainder_measure;
  return check;
}

// ---------------------------------------------------------------------------
// Estimates

unsigned resolve_threads(unsigned requested) {
  unsigned n = requested;
  if (const char* env = std::getenv("SPARSE_LAB_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0') n = static_cast<unsigned>(v);
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> workers;
    const auto n = std::min<std::size_t>(threads, count);
    for (std::size_t w = 0; w < n; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  // Report the failure of the lowest index so errors do not depend on timing.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

using TrialFn = std::function<TrialOutcome(const BallBasis&, const ExperimentConfig&, std::size_t)>;

ConstantReport run_trials(const ExperimentConfig& config, EstimateKind kind, const TrialFn& trial_fn) {
  config.validate();
  const BallBasis basis = basis_from_spec(config.basis, config.base_dir);

  std::vector<TrialOutcome> outcomes(config.trials);
  parallel_for(config.trials, resolve_threads(config.threads),
               [&](std::size_t i) { outcomes[i] = trial_fn(basis, config, i); });

  ConstantReport report;
  report.kind = kind;
  report.r = config.r;
  report.p = config.p;
  report.gamma = config.gamma;
  report.trials = config.trials;
  report.hull_constant = basis.hull_constant();
  report.doubling = doubling_constant(basis);
  for (auto& o : outcomes) {
    if (o.skipped) ++report.skipped_trials;
    report.chain_checks += o.chain_checks;
    report.chain_failures += o.chain_failures;
    for (auto& row : o.weak_rows) report.weak_rows.push_back(std::move(row));
    for (auto& row : o.strong_rows) report.strong_rows.push_back(std::move(row));
  }
  if (kind != EstimateKind::strong) update_summary(report.weak, report.weak_rows, true);
  if (kind == EstimateKind::strong || (kind == EstimateKind::maximal && config.p))
    update_summary(report.strong, report.strong_rows, false);
  return report;
}

void stamp_rows(std::vector<RatioRow>& rows, std::size_t trial, std::uint64_t seed) {
  for (auto& row : rows) {
    row.trial = trial;
    row.seed = seed;
  }
}

std::vector<RatioRow> fixed_grid_rows(const CellSpace& space, const RadicalFunction& values, const Rational& norm_r,
                                      const std::vector<Rational>& lambdas, unsigned r) {
  std::vector<RatioRow> rows;
  for (const auto& lambda : lambdas)
    rows.push_back(exact_row(0, 0, to_string(lambda), pow(lambda, r) * level_measure(space, values, lambda) / norm_r));
  return rows;
}

TrialOutcome weak_trial(const BallBasis& basis, const ExperimentConfig& config, std::size_t trial) {
  TrialOutcome out;
  const TrialInputs in = make_trial(basis, config, trial);
  const CellSpace& space = basis.space();
  const Rational norm = space.integrate_power(in.f, space.full_set(), config.r);
  if (norm == 0) {
    out.skipped = true;
    return out;
  }
  const AverageTable table(basis, in.f, config.r);
  const RadicalFunction values = apply_strong_sparse(basis, in.collection, table);

  std::vector<Rational> breakpoints;
  if (config.lambda_values.empty()) {
    out.weak_rows = breakpoint_rows(space, values, norm);
  } else {
    out.weak_rows = fixed_grid_rows(space, values, norm, config.lambda_values, config.r);
  }
  for (const auto& row : out.weak_rows) {
    if (row.lambda.find('/') != std::string::npos || row.lambda.find('.') == std::string::npos) {
      breakpoints.push_back(parse_rational(row.lambda));
    } else {
      breakpoints.push_back(from_double(std::strtod(row.lambda.c_str(), nullptr)));
    }
  }
  stamp_rows(out.weak_rows, trial, in.seed);

  for (const auto& lambda : chain_levels(breakpoints, config.chain_samples)) {
    ++out.chain_checks;
    try {
      if (!check_weak_chain(basis, in.collection, in.f, config.r, lambda, &values, &table).holds) ++out.chain_failures;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::packing_violation) throw;
      ++out.chain_failures;
    }
  }
  return out;
}

TrialOutcome strong_trial(const BallBasis& basis, const ExperimentConfig& config, std::size_t trial) {
  TrialOutcome out;
  const TrialInputs in = make_trial(basis, config, trial);
  const CellSpace& space = basis.space();
  if (space.integrate_power(in.f, space.full_set(), 1) == 0) {
    out.skipped = true;
    return out;
  }
  const RadicalFunction values = apply_strong_sparse(basis, in.collection, in.f, config.r);
  out.strong_rows.push_back(strong_row(trial, in.seed, strong_ratio(space, values, in.f, *config.p)));
  return out;
}

TrialOutcome maximal_trial(const BallBasis& basis, const ExperimentConfig& config, std::size_t trial) {
  TrialOutcome out;
  const TrialInputs in = make_trial(basis, config, trial);
  const CellSpace& space = basis.space();
  const Rational norm = space.integrate_power(in.f, space.full_set(), config.r);
  if (norm == 0) {
    out.skipped = true;
    return out;
  }
  const RadicalFunction values = maximal_function(basis, in.f, config.r);
  out.weak_rows = config.lambda_values.empty()
                      ? breakpoint_rows(space, values, norm)
                      : fixed_grid_rows(space, values, norm, config.lambda_values, config.r);
  stamp_rows(out.weak_rows, trial, in.seed);
  if (config.p) out.strong_rows.push_back(strong_row(trial, in.seed, strong_ratio(space, values, in.f, *config.p)));
  return out;
}

}  // namespace

ConstantReport estimate_weak_constant(const ExperimentConfig& config) {
  return run_trials(config, EstimateKind::weak, weak_trial);
}

ConstantReport estimate_strong_constant(const ExperimentConfig& config) {
  if (!config.p) fail(ErrorCode::invalid_argument, "strong-type estimates need p");
  return run_trials(config, EstimateKind::strong, strong_trial);
}

ConstantReport estimate_maximal_constants(const ExperimentConfig& config) {
  return run_trials(config, EstimateKind::maximal, maximal_trial);
}

ConstantReport run_estimate(const ExperimentConfig& config) {
  switch (config.kind) {
    case EstimateKind::weak: return estimate_weak_constant(config);
    case EstimateKind::strong: return estimate_strong_constant(config);
    case EstimateKind::maximal: return estimate_maximal_constants(config);
  }
  return estimate_weak_constant(config);
}

// ---------------------------------------------------------------------------
// Output

std::string format_decimal(double value, int significant) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, value);
  return buf;
}

void write_csv(std::ostream& out, const ConstantReport& report) {
  out << "trial,seed,lambda,ratio,exact_ratio\n";
  auto emit = [&](const RatioRow& row) {
    out << row.trial << ',' << row.seed << ',' << row.lambda << ',' << format_decimal(row.ratio) << ','
        << (row.exact && report.r == 1 ? to_string(*row.exact) : std::string()) << '\n';
  };
  for (const auto& row : report.weak_rows) emit(row);
  for (const auto& row : report.strong_rows) emit(row);
}

json report_to_json(const ConstantReport& report) {
  auto rows_json = [](const std::vector<RatioRow>& rows) {
    json a = json::array();
    for (const auto& row : rows) {
      a.push_back(json{{"trial", row.trial},
                       {"seed", row.seed},
                       {"lambda", row.lambda},
                       {"ratio", row.ratio},
                       {"upper", row.upper},
                       {"exact", row.exact ? rational_to_json(*row.exact) : json(nullptr)}});
    }
    return a;
  };
  auto summary_json = [](const std::optional<RatioSummary>& s) -> json {
    if (!s) return nullptr;
    return json{{"max", s->max},
                {"exact_max", s->exact_max ? rational_to_json(*s->exact_max) : json(nullptr)},
                {"rows", s->rows}};
  };
  return json{{"estimate", kind_name(report.kind)},
              {"r", report.r},
              {"p", report.p ? rational_to_json(*report.p) : json(nullptr)},
              {"gamma", rational_to_json(report.gamma)},
              {"trials", report.trials},
              {"skipped_trials", report.skipped_trials},
              {"hull_constant", report.hull_constant ? rational_to_json(*report.hull_constant) : json(nullptr)},
              {"doubling", report.doubling ? rational_to_json(*report.doubling) : json(nullptr)},
              {"weak", summary_json(report.weak)},
              {"strong", summary_json(report.strong)},
              {"chain_checks", report.chain_checks},
              {"chain_failures", report.chain_failures},
              {"weak_rows", rows_json(report.weak_rows)},
              {"strong_rows", rows_json(report.strong_rows)}};
}

}  // namespace sparselab
