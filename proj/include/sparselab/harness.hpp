#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sparselab/serialize.hpp"

namespace sparselab {

enum class EstimateKind { weak, strong, maximal };

/// Run description. Every field except the output paths feeds the trial
/// generator, so (config, seed) determines the report.
struct ExperimentConfig {
  json basis = json{{"kind", "dyadic"}, {"depth", 6}};
  std::filesystem::path base_dir;
  EstimateKind kind = EstimateKind::weak;
  unsigned r = 1;
  std::optional<Rational> p;
  Rational gamma = Rational(1, 2);
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  /// Empty: breakpoint grid of each trial. Otherwise these lambda values.
  std::vector<Rational> lambda_values;
  Rational value_low = 0;
  Rational value_high = 4;
  /// Probability that a cell carries a nonzero value.
  Rational support = Rational(1, 2);
  /// Probability that a ball is offered to the sparse collection.
  Rational density = Rational(1, 2);
  /// Lambda levels per trial at which the flattening chain is checked.
  unsigned chain_samples = 4;
  /// 0 selects the hardware concurrency; SPARSE_LAB_THREADS overrides.
  unsigned threads = 0;
  std::optional<std::filesystem::path> csv_out;
  std::optional<std::filesystem::path> json_out;

  void validate() const;
};

/// Parses the config JSON (schema in README). Relative paths resolve
/// against `base_dir`.
ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir = {});
json config_to_json(const ExperimentConfig& config);

/// Portable draws from mt19937_64; std distributions differ across
/// standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);
bool bernoulli(std::mt19937_64& rng, const Rational& probability);
std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial);

struct ValueRange {
  Rational low = 0;
  Rational high = 4;
};

/// Values low + (high - low) k / 16 with k uniform in 0..16; each cell is
/// nonzero with probability `support`.
StepFunction random_step_function(const CellSpace& space, std::uint64_t seed, const ValueRange& range,
                                  const Rational& support = Rational(1));

/// Visits balls in a random order and keeps each with probability `density`
/// when the disjoint portions still fit; the result is gamma-sparse.
SparseCollection random_sparse_collection(const BallBasis& basis, const Rational& gamma, const Rational& density,
                                          std::mt19937_64& rng);

/// lambda^r mu{A* f > lambda} / ||f||_r^r, exact.
Rational weak_ratio(const BallBasis& basis, const SparseCollection& s, const StepFunction& f, unsigned r,
                    const Rational& lambda);

struct RatioRow {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::string lambda;  // empty for strong-type rows
  double ratio = 0;
  double upper = 0;
  std::optional<Rational> exact;
};

struct RatioSummary {
  double max = 0;    // upper bound of the largest ratio
  std::optional<Rational> exact_max;
  std::size_t rows = 0;
};

struct ConstantReport {
  EstimateKind kind = EstimateKind::weak;
  unsigned r = 1;
  std::optional<Rational> p;
  Rational gamma;
  std::size_t trials = 0;
  std::size_t skipped_trials = 0;
  std::vector<RatioRow> weak_rows;
  std::vector<RatioRow> strong_rows;
  std::optional<RatioSummary> weak;
  std::optional<RatioSummary> strong;
  std::optional<Rational> hull_constant;
  std::optional<Rational> doubling;
  std::size_t chain_checks = 0;
  std::size_t chain_failures = 0;
};

/// sup over lambda of the weak ratio of A*_{S,r}, per trial, on the
/// breakpoint grid.
ConstantReport estimate_weak_constant(const ExperimentConfig& config);
/// ||A*_{S,r} f||_p / ||f||_p per trial.
ConstantReport estimate_strong_constant(const ExperimentConfig& config);
/// The same ratios for M_r; strong rows only when p is set.
ConstantReport estimate_maximal_constants(const ExperimentConfig& config);
ConstantReport run_estimate(const ExperimentConfig& config);

/// Per-trial inputs, reproducible from (config, trial).
struct TrialInputs {
  std::uint64_t seed;
  StepFunction f;
  SparseCollection collection;
};
TrialInputs make_trial(const BallBasis& basis, const ExperimentConfig& config, std::size_t trial);

/// Breakpoint evaluation: for each distinct positive value v of `values`,
/// the left limit v^r mu{values >= v} / norm_r, which is the supremum of the
/// weak ratio over lambda in the gap just below v.
std::vector<RatioRow> breakpoint_rows(const CellSpace& space, const RadicalFunction& values, const Rational& norm_r);

/// ||values||_p^p enclosure; `values` holds root sums of degree r.
Interval power_norm(const CellSpace& space, const RadicalFunction& values, const Rational& p);
/// ||values||_p / ||f||_p; fails when f is zero.
Interval strong_ratio(const CellSpace& space, const RadicalFunction& values, const StepFunction& f, const Rational& p);

struct ChainCheck {
  Rational lambda;
  Rational level_measure;       // mu{A* f > lambda}
  Rational exceptional_measure; // mu(E_lambda)
  Rational remainder_measure;   // mu{x not in E_lambda : A* g(x) > lambda}
  bool holds;
};
/// mu{A* f > lambda} <= mu(E_lambda) + mu{x not in E_lambda : A* g > lambda}
/// with (E_lambda, g) from flattening f on a private copy of the basis.
/// `f_values` and `f_table` may carry A* f and the averages of f when the
/// caller already has them.
ChainCheck check_weak_chain(const BallBasis& basis, const SparseCollection& s, const StepFunction& f, unsigned r,
                            const Rational& lambda, const RadicalFunction* f_values = nullptr,
                            const AverageTable* f_table = nullptr);

/// Worker count: SPARSE_LAB_THREADS when set (0 = auto), else `requested`.
unsigned resolve_threads(unsigned requested);
/// Runs fn(i) for i in [0, count) on `threads` workers.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

void write_csv(std::ostream& out, const ConstantReport& report);
json report_to_json(const ConstantReport& report);

std::string format_decimal(double value, int significant = 12);

}  // namespace sparselab
