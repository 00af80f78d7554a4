#pragma once

#include <mpfr.h>

#include <compare>
#include <optional>
#include <vector>

#include "sparselab/rational.hpp"

namespace sparselab {

/// RAII wrapper over an MPFR value.
class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t precision = 128);
  BigFloat(const BigFloat& other);
  BigFloat(BigFloat&& other) noexcept;
  BigFloat& operator=(BigFloat other) noexcept;
  ~BigFloat();

  mpfr_ptr get() { return value_; }
  mpfr_srcptr get() const { return value_; }
  mpfr_prec_t precision() const { return mpfr_get_prec(value_); }
  double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(value_, rnd); }

 private:
  mpfr_t value_;
};

/// Closed interval with outward-rounded MPFR endpoints.
struct Interval {
  BigFloat lo;
  BigFloat hi;

  explicit Interval(mpfr_prec_t precision = 128) : lo(precision), hi(precision) {}

  static Interval exact(const Rational& q, mpfr_prec_t precision = 128);

  double lower() const { return lo.to_double(MPFR_RNDD); }
  double upper() const { return hi.to_double(MPFR_RNDU); }
  double midpoint() const;

  /// x^k for x >= 0.
  Interval pow(unsigned long k) const;
  /// x^(1/k) for x >= 0.
  Interval root(unsigned long k) const;
  /// Product with a nonnegative interval.
  Interval times(const Interval& other) const;
  /// Quotient by an interval with positive lower bound.
  Interval over(const Interval& other) const;
  Interval plus(const Interval& other) const;
};

/// A finite sum of r-th roots of nonnegative rationals, kept exactly.
///
/// Terms whose ratio is the r-th power of a rational are merged into one
/// class coeff * radicand^(1/r); distinct classes are linearly independent
/// over the rationals, which makes equality decidable. Strict order is then
/// decided by refining interval enclosures.
class RootSum {
 public:
  explicit RootSum(unsigned degree = 1) : degree_(degree) {}
  static RootSum of_rational(const Rational& value, unsigned degree);

  /// Adds power^(1/degree).
  void add(const Rational& power);

  unsigned degree() const { return degree_; }
  /// The r-th powers of the summands, sorted.
  const std::vector<Rational>& terms() const { return terms_; }
  bool is_zero() const { return classes_.empty(); }
  std::optional<Rational> exact() const;

  Interval enclose(mpfr_prec_t precision = 128) const;
  double approx() const;

  std::strong_ordering compare(const Rational& value) const;
  std::strong_ordering compare(const RootSum& other) const;

 private:
  struct RadicalClass {
    Rational radicand;  // 1 for the rational class
    Rational coeff;
  };

  static std::strong_ordering sign_of(const std::vector<RadicalClass>& classes, unsigned degree);
  static void accumulate(std::vector<RadicalClass>& classes, const Rational& radicand, const Rational& coeff,
                         unsigned degree);

  unsigned degree_;
  std::vector<Rational> terms_;
  std::vector<RadicalClass> classes_;
};

}  // namespace sparselab
