// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Snapshots of the empirical constants live in <snapshot_dir>.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "sparselab/basis.hpp"
#include "sparselab/constructions.hpp"
#include "sparselab/error.hpp"
#include "sparselab/harness.hpp"
#include "sparselab/serialize.hpp"
#include "sparselab/sparse.hpp"

using namespace sparselab;
using json = nlohmann::json;

namespace {

Rational q(long p, long d = 1) { return oracle::rat(p, d); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages and a count.
struct Failures {
  std::size_t count = 0;
  std::vector<std::string> first;
  void add(const std::string& what) {
    if (first.size() < 3) first.push_back(what);
    ++count;
  }
  std::string text() const {
    std::string out = std::to_string(count) + " failures";
    for (const auto& f : first) out += "; " + f;
    return out;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  return buf;
}

// Plain word bitsets over cell positions.
struct Bits {
  std::vector<std::uint64_t> w;
  explicit Bits(std::size_t n = 0) : w((n + 63) / 64, 0) {}
  void set(std::size_t i) { w[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (w[i / 64] >> (i % 64)) & 1; }
  bool meets(const Bits& o) const {
    for (std::size_t k = 0; k < w.size(); ++k)
      if (w[k] & o.w[k]) return true;
    return false;
  }
  bool within(const Bits& o) const {
    for (std::size_t k = 0; k < w.size(); ++k)
      if (w[k] & ~o.w[k]) return false;
    return true;
  }
  void merge(const Bits& o) {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] |= o.w[k];
  }
};

// Positional copy of a basis, built once and used by the reference checks.
struct Plain {
  std::vector<Rational> cells;
  std::vector<std::vector<std::size_t>> members;
  std::vector<Bits> bits;
  std::vector<Rational> measure;
};

Plain plain_copy(const BallBasis& b) {
  Plain p;
  const CellSpace& s = b.space();
  for (CellId c : s.order()) p.cells.push_back(s.cell_measure(c));
  for (const Ball& ball : b.balls()) {
    p.members.push_back(s.positions_of(ball.set));
    Bits bits(p.cells.size());
    Rational m = 0;
    for (auto i : p.members.back()) {
      bits.set(i);
      m += p.cells[i];
    }
    p.bits.push_back(std::move(bits));
    p.measure.push_back(m);
  }
  return p;
}

std::vector<Rational> average_powers(const Plain& p, const std::vector<Rational>& f, unsigned r) {
  std::vector<Rational> out;
  for (std::size_t b = 0; b < p.members.size(); ++b) {
    Rational sum = 0;
    for (auto i : p.members[b])
      if (f[i] != 0) sum += oracle::power(f[i], r) * p.cells[i];
    out.push_back(sum / p.measure[b]);
  }
  return out;
}

json tree_json(const MartingaleNode& n) { return tree_to_json(n); }

// ---------------------------------------------------------------------------
// 1. axioms and hulls

// Union of the balls that B4 asks the hull of `b` to contain.
Bits hull_demand(const Plain& p, std::size_t b) {
  Bits need(p.cells.size());
  for (std::size_t a = 0; a < p.bits.size(); ++a)
    if (p.measure[a] <= 2 * p.measure[b] && p.bits[a].meets(p.bits[b])) need.merge(p.bits[a]);
  return need;
}

// Smallest member containing the demand, ties by id: the definition of the hull.
std::optional<std::size_t> reference_hull(const Plain& p, const Bits& need) {
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < p.bits.size(); ++a)
    if (need.within(p.bits[a]) && (!best || p.measure[a] < p.measure[*best])) best = a;
  return best;
}

void check_basis_hulls(const BallBasis& b, Failures& fails, const std::string& label,
                          std::optional<Rational> want_k) {
  const AxiomReport report = verify_axioms(b);
  if (!report.all_ok()) fails.add(label + ": axioms fail");
  if (!report.hull_constant) {
    fails.add(label + ": no hull constant");
    return;
  }
  const Rational k = *report.hull_constant;
  if (want_k && k != *want_k) fails.add(label + ": K = " + to_string(k));
  const Plain p = plain_copy(b);
  Rational realized = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto h = b.hull(static_cast<BallId>(i));
    const Bits need = hull_demand(p, i);
    const auto ref = reference_hull(p, need);
    if (!h || !ref || *h != *ref) {
      fails.add(label + ": hull of ball " + std::to_string(i) + " differs from the definition");
      continue;
    }
    if (!need.within(p.bits[*h])) fails.add(label + ": hull of ball " + std::to_string(i) + " misses a qualifying ball");
    if (p.measure[*h] > k * p.measure[i])
      fails.add(label + ": hull of ball " + std::to_string(i) + " is more than K times larger");
    realized = std::max(realized, Rational(p.measure[*h] / p.measure[i]));
  }
  if (realized != k) fails.add(label + ": reported K " + to_string(k) + " but realized " + to_string(realized));
}

Outcome criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  Failures fails;
  for (unsigned d = 0; d <= 8; ++d)
    check_basis_hulls(dyadic_basis(d), fails, "dyadic " + std::to_string(d),
                      d == 0 ? std::optional<Rational>(1) : std::optional<Rational>(2));
  oracle::Rng rng(101);
  std::size_t trees = 0;
  for (int t = 0; t < 50; ++t) {
    const BallBasis b = martingale_basis(oracle::random_tree(rng, 256, t % 2 == 1));
    check_basis_hulls(b, fails, "tree " + std::to_string(t), std::nullopt);
    ++trees;
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 10) fails.add("took " + secs(elapsed));
  return {fails.count == 0,
          "dyadic depths 0..8 and " + std::to_string(trees) + " martingale trees, " + secs(elapsed) + ", " + fails.text()};
}

// ---------------------------------------------------------------------------
// 2. covering selection

Outcome criterion_2() {
  Failures fails;
  oracle::Rng rng(202);
  for (int t = 0; t < 1000; ++t) {
    const BallBasis b = dyadic_basis(static_cast<unsigned>(rng.between(1, 6)));
    const CellSpace& s = b.space();
    const Plain p = plain_copy(b);
    std::vector<BallId> family;
    for (std::size_t i = 0; i < b.size(); ++i)
      if (rng.coin(1, 4)) family.push_back(static_cast<BallId>(i));
    if (family.empty()) family.push_back(static_cast<BallId>(rng.below(b.size())));
    Bits covered(p.cells.size());
    for (BallId g : family) covered.merge(p.bits[g]);
    std::vector<std::size_t> target;
    for (std::size_t i = 0; i < p.cells.size(); ++i)
      if (covered.test(i) && rng.coin(1, 3)) target.push_back(i);

    const std::vector<BallId> picked = covering_select(b, s.set_from_positions(target), family);
    Bits hulls(p.cells.size());
    for (std::size_t i = 0; i < picked.size(); ++i) {
      if (std::find(family.begin(), family.end(), picked[i]) == family.end())
        fails.add("trial " + std::to_string(t) + ": selected a ball outside G");
      for (std::size_t j = 0; j < i; ++j)
        if (p.bits[picked[i]].meets(p.bits[picked[j]])) fails.add("trial " + std::to_string(t) + ": overlap");
      hulls.merge(p.bits[b.require_hull(picked[i])]);
    }
    for (auto i : target)
      if (!hulls.test(i)) {
        fails.add("trial " + std::to_string(t) + ": E not covered by the hulls");
        break;
      }
  }
  return {fails.count == 0, "1000 instances over dyadic depth <= 6, " + fails.text()};
}

// ---------------------------------------------------------------------------
// 3. leftmost sets

Outcome criterion_3() {
  Failures fails;
  oracle::Rng rng(303);
  int done = 0;
  while (done < 1000) {
    const std::size_t n = rng.between(1, 64);
    CellSpace s(oracle::random_measures(rng, n));
    std::vector<std::size_t> pb, pa;
    for (std::size_t i = 0; i < n; ++i) {
      if (!rng.coin(2, 3)) continue;
      pb.push_back(i);
      if (rng.coin(2, 3)) pa.push_back(i);
    }
    if (pa.empty()) continue;
    const MeasurableSet b = s.set_from_positions(pb);
    const MeasurableSet a = s.set_from_positions(pa);
    const Rational mu_a = s.measure(a);
    const Rational gap = s.measure(b - a);
    // kappa in (0, mu(A)], including the endpoint now and then.
    const Rational kappa = rng.coin(1, 10) ? mu_a : mu_a * rng.fraction(static_cast<unsigned>(rng.between(2, 40)));
    const MeasurableSet lb = s.leftmost_set(kappa, b);
    const MeasurableSet la = s.leftmost_set(kappa, s.migrate(a));
    const MeasurableSet diff = s.migrate(lb) ^ la;
    if (s.measure(diff) > 2 * gap)
      fails.add("trial " + std::to_string(done) + ": " + to_string(s.measure(diff)) + " > 2*" + to_string(gap));
    if (s.measure(la) != kappa || s.measure(s.migrate(lb)) != kappa)
      fails.add("trial " + std::to_string(done) + ": leftmost set has the wrong measure");
    ++done;
  }
  return {fails.count == 0, "1000 pairs on <= 64 cells, " + fails.text()};
}

// ---------------------------------------------------------------------------
// 4. disjointification

Outcome criterion_4() {
  Failures fails;
  oracle::Rng rng(404);
  int done = 0;
  int rejected = 0;
  while (done < 1000) {
    const std::size_t n = rng.between(2, 24);
    CellSpace s(oracle::random_measures(rng, n));
    const std::size_t count = rng.between(1, 6);
    std::vector<MeasurableSet> sets;
    std::vector<Rational> xi;
    for (std::size_t k = 0; k < count; ++k) {
      std::vector<std::size_t> pos;
      const std::size_t lo = rng.below(n);
      const std::size_t hi = rng.between(lo, n - 1);
      for (std::size_t i = lo; i <= hi; ++i)
        if (i == lo || rng.coin(3, 4)) pos.push_back(i);
      sets.push_back(s.set_from_positions(pos));
      xi.push_back(rng.coin(1, 8) ? Rational(0) : s.measure(sets.back()) * rng.fraction(static_cast<unsigned>(count + 2)));
    }
    if (!check_packing(s, sets, xi).ok) {
      ++rejected;
      continue;
    }
    const std::vector<MeasurableSet> tilde = disjointify(s, sets, xi);
    const std::string tag = "instance " + std::to_string(done) + ": ";
    if (tilde.size() != count) fails.add(tag + "wrong number of sets");
    for (std::size_t k = 0; k < tilde.size(); ++k) {
      if (s.measure(tilde[k]) != xi[k]) fails.add(tag + "measure differs from xi");
      if (!tilde[k].is_subset_of(s.migrate(sets[k]))) fails.add(tag + "not contained in G_k");
      for (std::size_t j = 0; j < k; ++j)
        if (tilde[k].intersects(tilde[j])) fails.add(tag + "sets overlap");
    }
    ++done;
  }
  return {fails.count == 0,
          "1000 packing instances (" + std::to_string(rejected) + " rejected draws), " + fails.text()};
}

// ---------------------------------------------------------------------------
// 5. flattening postconditions

struct Constants {
  Rational c1 = 0;
  Rational c2 = 0;
};

using Groups = std::map<std::string, Constants>;

// One flatten call checked from the definitions. Updates the group maxima.
void check_flatten(BallBasis b, const std::vector<Rational>& values, const Rational& lambda, unsigned r,
                   Groups& groups, Failures& fails, const std::string& tag) {
  const Rational k = *b.hull_constant();
  const StepFunction f = b.space().function_from_values(values);
  const FlatteningResult res = flatten(b, f, lambda, r);
  const FlatteningReport report = verify_flattening(b, f, res);
  const CellSpace& s = b.space();
  const Plain p = plain_copy(b);
  const std::vector<Rational> fv = s.values_in_order(s.migrate(f));
  const std::vector<Rational> gv = s.values_in_order(res.flattened);
  const Rational lambda_r = oracle::power(lambda, r);

  Bits e(p.cells.size());
  for (auto i : s.positions_of(res.exceptional)) e.set(i);

  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (gv[i] > lambda) {
      fails.add(tag + ": g exceeds lambda");
      break;
    }
  }
  // {M_r f > lambda} inside E.
  const std::vector<Rational> fa = average_powers(p, fv, r);
  for (std::size_t i = 0; i < p.cells.size(); ++i) {
    if (e.test(i)) continue;
    for (std::size_t a = 0; a < fa.size(); ++a) {
      if (p.bits[a].test(i) && fa[a] > lambda_r) {
        fails.add(tag + ": level set of M_r f leaves E");
        i = p.cells.size();
        break;
      }
    }
  }
  Rational norm = 0;
  for (std::size_t i = 0; i < fv.size(); ++i) norm += oracle::power(fv[i], r) * p.cells[i];
  Rational mu_e = 0;
  for (std::size_t i = 0; i < p.cells.size(); ++i)
    if (e.test(i)) mu_e += p.cells[i];

  const std::string key = "K=" + to_string(k) + " r=" + std::to_string(r);
  Constants& c = groups[key];
  if (norm > 0) {
    const Rational c1 = mu_e * lambda_r / norm;
    if (c1 > k * k + 1 / k) fails.add(tag + ": mu(E) lambda^r / ||f||^r = " + to_string(c1));
    if (c1 > c.c1) c.c1 = c1;
  } else if (mu_e != 0) {
    fails.add(tag + ": E is not null for f = 0");
  }
  // <f>_B^r <= C2 <g>_{hull B}^r for B not inside E.
  const std::vector<Rational> ga = average_powers(p, gv, r);
  Rational c2 = 0;
  for (std::size_t a = 0; a < fa.size(); ++a) {
    if (p.bits[a].within(e) || fa[a] == 0) continue;
    const Rational& gh = ga[b.require_hull(static_cast<BallId>(a))];
    if (gh == 0) {
      fails.add(tag + ": ball " + std::to_string(a) + " has no domination constant");
      continue;
    }
    c2 = std::max(c2, Rational(fa[a] / gh));
  }
  if (c2 > c.c2) c.c2 = c2;
  if (report.domination_constant != c2 || !report.domination_finite)
    fails.add(tag + ": audit reports C2 " + to_string(report.domination_constant) + ", recomputed " + to_string(c2));
}

json groups_to_json(const Groups& groups) {
  json out = json::object();
  for (const auto& [key, c] : groups) out[key] = {{"C1", to_string(c.c1)}, {"C2", to_string(c.c2)}};
  return out;
}

// Every group must be present in the snapshot and not exceed it.
void compare_groups(const Groups& groups, const json& snap, Failures& fails) {
  for (const auto& [key, c] : groups) {
    if (!snap.contains(key)) {
      fails.add("group " + key + " missing from the snapshot");
      continue;
    }
    const Rational c1 = parse_rational(snap[key].at("C1").get<std::string>());
    const Rational c2 = parse_rational(snap[key].at("C2").get<std::string>());
    if (c.c1 > c1) fails.add(key + ": C1 " + to_string(c.c1) + " exceeds snapshot " + to_string(c1));
    if (c.c2 > c2) fails.add(key + ": C2 " + to_string(c.c2) + " exceeds snapshot " + to_string(c2));
  }
}

std::string groups_summary(const Groups& groups) {
  Rational c1 = 0, c2 = 0;
  for (const auto& [_, c] : groups) {
    c1 = std::max(c1, c.c1);
    c2 = std::max(c2, c.c2);
  }
  return std::to_string(groups.size()) + " (K, r) groups, max C1 " + format_decimal(c1.get_d(), 6) + ", max C2 " +
         format_decimal(c2.get_d(), 6);
}

// Random (1 - eps, eps) trees whose doubling constant exceeds 2.
std::vector<MartingaleNode> non_doubling_trees(oracle::Rng& rng, std::size_t count) {
  std::vector<MartingaleNode> out;
  while (out.size() < count) {
    MartingaleNode t = oracle::random_tree(rng, 64, true);
    const auto eta = doubling_constant(martingale_basis(t));
    if (!eta || *eta > 2) out.push_back(std::move(t));
  }
  return out;
}

struct Snapshots {
  json data = json::object();
  bool write = false;
};

Outcome criterion_5(Snapshots& snaps) {
  Failures fails;
  Groups groups;
  oracle::Rng rng(505);
  const auto trees = non_doubling_trees(rng, 25);
  for (int t = 0; t < 1000; ++t) {
    const unsigned r = t % 2 == 0 ? 1 : 2;
    const bool on_tree = t % 5 == 4;
    BallBasis b = on_tree ? martingale_basis(trees[(t / 5) % trees.size()])
                          : dyadic_basis(static_cast<unsigned>(rng.between(1, 6)));
    const auto values = oracle::random_values(rng, b.space().cell_count());
    const Rational lambda = q(static_cast<long>(rng.between(1, 16)), 4);
    check_flatten(std::move(b), values, lambda, r, groups, fails, "trial " + std::to_string(t));
  }
  if (snaps.write) {
    snaps.data["C5"] = groups_to_json(groups);
  } else if (!snaps.data.contains("C5")) {
    fails.add("no C5 snapshot");
  } else {
    compare_groups(groups, snaps.data["C5"], fails);
  }
  return {fails.count == 0, "1000 (f, lambda) over dyadic depth <= 6 and " + std::to_string(trees.size()) +
                                " non-doubling trees, " + groups_summary(groups) + ", " + fails.text()};
}

// ---------------------------------------------------------------------------
// 6. weak type

std::string csv_of(const ConstantReport& report) {
  std::ostringstream out;
  write_csv(out, report);
  return out.str();
}

void set_threads(const char* n) { setenv("SPARSE_LAB_THREADS", n, 1); }

std::string summary_value(const RatioSummary& s) { return s.exact_max ? to_string(*s.exact_max) : format_decimal(s.max); }

// One weak-type sweep: a full run with the chain checked at every breakpoint,
// then reruns at 1 and 8 threads compared byte for byte.
void weak_sweep(const json& basis, unsigned r, std::size_t trials, const std::string& key, Snapshots& snaps,
                json& written, Failures& fails, std::string& notes) {
  ExperimentConfig config;
  config.basis = basis;
  config.kind = EstimateKind::weak;
  config.r = r;
  config.gamma = q(1, 2);
  config.trials = trials;
  config.seed = 2024;
  config.chain_samples = std::numeric_limits<unsigned>::max();

  set_threads("8");
  const ConstantReport full = estimate_weak_constant(config);
  config.chain_samples = 0;
  set_threads("1");
  const ConstantReport one = estimate_weak_constant(config);
  set_threads("8");
  const ConstantReport eight = estimate_weak_constant(config);
  unsetenv("SPARSE_LAB_THREADS");

  const std::string csv = csv_of(full);
  if (csv != csv_of(one) || csv != csv_of(eight)) fails.add(key + ": CSV differs across reruns or thread counts");
  if (!full.weak || !std::isfinite(full.weak->max)) {
    fails.add(key + ": no finite supremum");
    return;
  }
  if (full.chain_checks == 0) fails.add(key + ": chain never checked");
  if (full.chain_failures > 0)
    fails.add(key + ": chain inequality fails at " + std::to_string(full.chain_failures) + " of " +
              std::to_string(full.chain_checks) + " levels");
  const std::string sup = summary_value(*full.weak);
  written[key] = sup;
  if (!snaps.write) {
    if (!snaps.data.contains("weak") || !snaps.data["weak"].contains(key)) {
      fails.add(key + ": no snapshot");
    } else if (snaps.data["weak"][key] != sup) {
      fails.add(key + ": sup " + sup + " differs from snapshot " + snaps.data["weak"][key].get<std::string>());
    }
  }
  notes += " " + key + " sup " + format_decimal(full.weak->max, 6) + " (" + std::to_string(full.chain_checks) +
           " chain levels, " + std::to_string(full.chain_failures) + " failing);";
}

Outcome criterion_6(Snapshots& snaps) {
  const auto t0 = std::chrono::steady_clock::now();
  Failures fails;
  std::string notes;
  json written = snaps.data.value("weak", json::object());
  for (unsigned r : {1u, 2u})
    weak_sweep(json{{"kind", "dyadic"}, {"depth", 6}}, r, 1000, "dyadic6 r=" + std::to_string(r), snaps, written,
               fails, notes);
  if (snaps.write) snaps.data["weak"] = written;
  const double elapsed = seconds_since(t0);
  if (elapsed >= 120) fails.add("took " + secs(elapsed));
  return {fails.count == 0, "dyadic depth 6, 1000 trials per r;" + notes + " " + secs(elapsed) + ", " + fails.text()};
}

// ---------------------------------------------------------------------------
// 7. strong type

// ||A* 1||_p for the nested chain at the left edge of dyadic depth d: the
// cell at depth j (j < d) carries j + 1 over measure 2^-(j+1), the bottom
// cell d + 1 over 2^-d.
double nested_closed_form(unsigned d, long p) {
  Rational sum = 0;
  for (unsigned j = 0; j < d; ++j) sum += oracle::power(q(j + 1), static_cast<unsigned>(p)) / oracle::power(q(2), j + 1);
  sum += oracle::power(q(d + 1), static_cast<unsigned>(p)) / oracle::power(q(2), d);
  return std::pow(sum.get_d(), 1.0 / static_cast<double>(p));
}

bool same_digits(double a, double b, int digits) { return format_decimal(a, digits) == format_decimal(b, digits); }

Outcome criterion_7(Snapshots& snaps) {
  Failures fails;
  std::string notes;
  json written = snaps.data.value("strong", json::object());
  for (auto [r, p] : {std::pair{1u, 2L}, std::pair{2u, 4L}}) {
    const std::string key = "dyadic6 r=" + std::to_string(r) + " p=" + std::to_string(p);
    ExperimentConfig config;
    config.basis = json{{"kind", "dyadic"}, {"depth", 6}};
    config.kind = EstimateKind::strong;
    config.r = r;
    config.p = q(p);
    config.trials = 1000;
    config.seed = 2024;
    set_threads("1");
    const ConstantReport first = estimate_strong_constant(config);
    set_threads("8");
    const ConstantReport second = estimate_strong_constant(config);
    unsetenv("SPARSE_LAB_THREADS");
    if (csv_of(first) != csv_of(second)) fails.add(key + ": reruns differ");
    if (!first.strong || !std::isfinite(first.strong->max)) {
      fails.add(key + ": no finite maximum");
      continue;
    }
    const std::string sup = format_decimal(first.strong->max);
    written[key] = sup;
    if (!snaps.write) {
      if (!snaps.data.contains("strong") || !snaps.data["strong"].contains(key)) {
        fails.add(key + ": no snapshot");
      } else if (snaps.data["strong"][key] != sup) {
        fails.add(key + ": max " + sup + " differs from snapshot");
      }
    }
    notes += " " + key + " max " + format_decimal(first.strong->max, 6) + ";";

    // Nested chain, f = 1.
    for (unsigned d : {3u, 6u, 8u}) {
      const BallBasis b = dyadic_basis(d);
      const CellSpace& s = b.space();
      SparseCollection chain{{}, q(1, 2), std::nullopt};
      for (const Ball& ball : b.balls())
        if (s.positions_of(ball.set).front() == 0) chain.balls.push_back(ball.id);
      const StepFunction one = s.constant_function(1);
      const Interval iv = strong_ratio(s, apply_strong_sparse(b, chain, one, r), one, q(p));
      const double want = nested_closed_form(d, p);
      if (!same_digits(iv.midpoint(), want, 12) || iv.lower() > want || iv.upper() < want)
        fails.add(key + ": nested chain depth " + std::to_string(d) + " gives " + format_decimal(iv.midpoint()) +
                  ", closed form " + format_decimal(want));
    }
  }
  if (snaps.write) snaps.data["strong"] = written;
  return {fails.count == 0, "1000 trials per (r, p);" + notes + " nested chains match to 12 digits, " + fails.text()};
}

// ---------------------------------------------------------------------------
// 8. oracle equivalence

Outcome criterion_8() {
  Failures fails;
  oracle::Rng rng(808);
  for (int t = 0; t < 200; ++t) {
    const std::string tag = "instance " + std::to_string(t);
    const oracle::Micro micro = oracle::random_micro(rng, 12, 20);
    BallBasis b = oracle::to_basis(micro);
    const auto values = oracle::random_values(rng, micro.cells.size());
    const auto subfamily = oracle::random_subfamily(rng, micro.balls.size());
    const Rational gamma = rng.fraction(6);
    SparseCollection coll{{}, gamma, std::nullopt};
    for (auto i : subfamily) coll.balls.push_back(static_cast<BallId>(i));
    {
      const CellSpace& s = b.space();
      const StepFunction f = s.function_from_values(values);
      for (unsigned r : {1u, 2u}) {
        const auto plain = apply_sparse(b, coll, f, r);
        const auto starred = apply_strong_sparse(b, coll, f, r);
        const auto want_plain = oracle::sparse_terms(micro, subfamily, values, r, false);
        const auto want_starred = oracle::sparse_terms(micro, subfamily, values, r, true);
        for (std::size_t p = 0; p < s.cell_count(); ++p) {
          if (plain[s.order()[p]].terms() != want_plain[p]) fails.add(tag + ": A differs");
          if (starred[s.order()[p]].terms() != want_starred[p]) fails.add(tag + ": A* differs");
        }
        if (s.values_in_order(maximal_function_power(b, f, r)) != oracle::maximal_power(micro, values, r))
          fails.add(tag + ": M_r differs");
        for (long l = 1; l <= 16; l += 3) {
          const Rational lambda = q(l, 4);
          std::vector<BallId> want;
          for (auto i : oracle::maximal_lambda_balls(micro, values, lambda, r)) want.push_back(static_cast<BallId>(i));
          if (maximal_lambda_balls(b, f, lambda, r) != want) fails.add(tag + ": maximal lambda-balls differ");
        }
      }
    }
    const SparsenessResult res = verify_sparseness(b, coll);
    if (res.feasible != oracle::sparse_by_subsets(micro, subfamily, gamma)) fails.add(tag + ": sparseness differs");
    if (res.feasible) {
      const CellSpace& s = b.space();
      for (std::size_t k = 0; k < coll.balls.size(); ++k) {
        const MeasurableSet& w = res.witnesses[k];
        const Ball& ball = b.ball(coll.balls[k]);
        if (!w.is_subset_of(ball.set) || s.measure(w) < gamma * ball.measure) fails.add(tag + ": bad witness");
        for (std::size_t j = 0; j < k; ++j)
          if (w.intersects(res.witnesses[j])) fails.add(tag + ": witnesses overlap");
      }
    }
  }
  return {fails.count == 0, "200 micro-instances, r in {1, 2}, " + fails.text()};
}

// ---------------------------------------------------------------------------
// 9. non-doubling tree

Outcome criterion_9(Snapshots& snaps) {
  const auto t0 = std::chrono::steady_clock::now();
  Failures fails;
  const MartingaleNode tree = oracle::skewed_tree(q(1, 100), 8);
  const BallBasis basis = martingale_basis(tree);
  const auto eta = doubling_constant(basis);
  if (eta && *eta < 100) fails.add("doubling constant " + to_string(*eta));
  std::string notes = " doubling " + (eta ? to_string(*eta) : std::string("unbounded")) + ";";

  Groups groups;
  oracle::Rng rng(909);
  for (int t = 0; t < 1000; ++t) {
    const unsigned r = t % 2 == 0 ? 1 : 2;
    const auto values = oracle::random_values(rng, basis.space().cell_count());
    const Rational lambda = q(static_cast<long>(rng.between(1, 16)), 4);
    check_flatten(basis, values, lambda, r, groups, fails, "flatten trial " + std::to_string(t));
  }
  if (snaps.write) {
    snaps.data["C9"] = groups_to_json(groups);
  } else if (!snaps.data.contains("C9")) {
    fails.add("no C9 snapshot");
  } else {
    compare_groups(groups, snaps.data["C9"], fails);
  }
  notes += " flattening " + groups_summary(groups) + ";";

  json written = snaps.data.value("weak", json::object());
  const auto t1 = std::chrono::steady_clock::now();
  for (unsigned r : {1u, 2u})
    weak_sweep(json{{"kind", "martingale"}, {"tree", tree_json(tree)}}, r, 1000, "eps100 depth8 r=" + std::to_string(r),
               snaps, written, fails, notes);
  if (snaps.write) snaps.data["weak"] = written;
  const double weak_elapsed = seconds_since(t1);
  if (weak_elapsed >= 120) fails.add("weak-type sweep took " + secs(weak_elapsed));
  return {fails.count == 0, "(1 - 1/100, 1/100) tree of depth 8;" + notes + " " + secs(seconds_since(t0)) + ", " +
                                fails.text()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string snapshot_dir;
  bool write = false;
  std::vector<int> only;
  app.add_option("snapshot_dir", snapshot_dir, "directory holding constants.json")->required();
  app.add_flag("--write-snapshots", write, "record the realized constants instead of comparing");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::string path = snapshot_dir + "/constants.json";
  Snapshots snaps;
  snaps.write = write;
  if (std::ifstream in(path); in) snaps.data = json::parse(in);

  const std::vector<std::function<Outcome()>> criteria{
      criterion_1,
      criterion_2,
      criterion_3,
      criterion_4,
      [&] { return criterion_5(snaps); },
      [&] { return criterion_6(snaps); },
      [&] { return criterion_7(snaps); },
      criterion_8,
      [&] { return criterion_9(snaps); },
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s C%d: %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str());
    std::fflush(stdout);
  }
  if (write) {
    std::ofstream out(path);
    out << snaps.data.dump(2) << "\n";
  }
  return failed == 0 ? 0 : 1;
}
