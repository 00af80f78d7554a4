#include "sparselab/radical.hpp"

#include <algorithm>
#include <utility>

#include "sparselab/error.hpp"

namespace sparselab {

BigFloat::BigFloat(mpfr_prec_t precision) {
  mpfr_init2(value_, precision);
  mpfr_set_zero(value_, 1);
}

BigFloat::BigFloat(const BigFloat& other) {
  mpfr_init2(value_, other.precision());
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

BigFloat::BigFloat(BigFloat&& other) noexcept {
  mpfr_init2(value_, other.precision());
  mpfr_swap(value_, other.value_);
}

BigFloat& BigFloat::operator=(BigFloat other) noexcept {
  mpfr_swap(value_, other.value_);
  return *this;
}

BigFloat::~BigFloat() { mpfr_clear(value_); }

// ---------------------------------------------------------------------------

Interval Interval::exact(const Rational& q, mpfr_prec_t precision) {
  Interval out(precision);
  mpfr_set_q(out.lo.get(), q.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(out.hi.get(), q.get_mpq_t(), MPFR_RNDU);
  return out;
}

double Interval::midpoint() const {
  BigFloat m(lo.precision() + 1);
  mpfr_add(m.get(), lo.get(), hi.get(), MPFR_RNDN);
  mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
  return m.to_double();
}

Interval Interval::pow(unsigned long k) const {
  Interval out(lo.precision());
  mpfr_pow_ui(out.lo.get(), lo.get(), k, MPFR_RNDD);
  mpfr_pow_ui(out.hi.get(), hi.get(), k, MPFR_RNDU);
  return out;
}

Interval Interval::root(unsigned long k) const {
  Interval out(lo.precision());
  mpfr_rootn_ui(out.lo.get(), lo.get(), k, MPFR_RNDD);
  mpfr_rootn_ui(out.hi.get(), hi.get(), k, MPFR_RNDU);
  return out;
}

Interval Interval::times(const Interval& other) const {
  Interval out(lo.precision());
  mpfr_mul(out.lo.get(), lo.get(), other.lo.get(), MPFR_RNDD);
  mpfr_mul(out.hi.get(), hi.get(), other.hi.get(), MPFR_RNDU);
  return out;
}

Interval Interval::over(const Interval& other) const {
  if (mpfr_sgn(other.lo.get()) <= 0) fail(ErrorCode::invalid_argument, "interval division by a non-positive interval");
  Interval out(lo.precision());
  mpfr_div(out.lo.get(), lo.get(), other.hi.get(), MPFR_RNDD);
  mpfr_div(out.hi.get(), hi.get(), other.lo.get(), MPFR_RNDU);
  return out;
}

Interval Interval::plus(const Interval& other) const {
  Interval out(lo.precision());
  mpfr_add(out.lo.get(), lo.get(), other.lo.get(), MPFR_RNDD);
  mpfr_add(out.hi.get(), hi.get(), other.hi.get(), MPFR_RNDU);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Encloses sum coeff_i * radicand_i^(1/degree) with signed coefficients.
template <typename Classes>
Interval enclose_classes(const Classes& classes, unsigned degree, mpfr_prec_t precision) {
  Interval sum(precision);
  BigFloat term(precision);
  for (const auto& c : classes) {
    if (c.coeff == 0) continue;
    const Interval r = Interval::exact(c.radicand, precision).root(degree);
    const bool positive = c.coeff > 0;
    mpfr_mul_q(term.get(), positive ? r.lo.get() : r.hi.get(), c.coeff.get_mpq_t(), MPFR_RNDD);
    mpfr_add(sum.lo.get(), sum.lo.get(), term.get(), MPFR_RNDD);
    mpfr_mul_q(term.get(), positive ? r.hi.get() : r.lo.get(), c.coeff.get_mpq_t(), MPFR_RNDU);
    mpfr_add(sum.hi.get(), sum.hi.get(), term.get(), MPFR_RNDU);
  }
  return sum;
}

}  // namespace

RootSum RootSum::of_rational(const Rational& value, unsigned degree) {
  if (value < 0) fail(ErrorCode::invalid_argument, "root sums hold nonnegative values");
  RootSum s(degree);
  s.add(pow(value, degree));
  return s;
}

void RootSum::accumulate(std::vector<RadicalClass>& classes, const Rational& radicand, const Rational& coeff,
                         unsigned degree) {
  if (coeff == 0 || radicand == 0) return;
  Rational q;
  for (auto& c : classes) {
    if (exact_root(radicand / c.radicand, degree, &q)) {
      c.coeff += coeff * q;
      return;
    }
  }
  if (exact_root(radicand, degree, &q)) {
    classes.push_back(RadicalClass{Rational(1), coeff * q});
  } else {
    classes.push_back(RadicalClass{radicand, coeff});
  }
}

void RootSum::add(const Rational& power) {
  if (power < 0) fail(ErrorCode::invalid_argument, "root sums hold nonnegative values");
  terms_.insert(std::upper_bound(terms_.begin(), terms_.end(), power), power);
  accumulate(classes_, power, Rational(1), degree_);
}

std::optional<Rational> RootSum::exact() const {
  Rational sum = 0;
  for (const auto& c : classes_) {
    if (c.radicand != 1) return std::nullopt;
    sum += c.coeff;
  }
  return sum;
}

Interval RootSum::enclose(mpfr_prec_t precision) const { return enclose_classes(classes_, degree_, precision); }

double RootSum::approx() const { return enclose(96).midpoint(); }

std::strong_ordering RootSum::sign_of(const std::vector<RadicalClass>& classes, unsigned degree) {
  bool only_rational = true;
  Rational rational_part = 0;
  bool any = false;
  for (const auto& c : classes) {
    if (c.coeff == 0) continue;
    any = true;
    if (c.radicand != 1) only_rational = false;
    else rational_part += c.coeff;
  }
  if (!any) return std::strong_ordering::equal;
  if (only_rational) {
    if (rational_part == 0) return std::strong_ordering::equal;
    return rational_part > 0 ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  // A nonzero combination of independent radicals is nonzero, so refinement
  // terminates.
  for (mpfr_prec_t precision = 64; precision <= (mpfr_prec_t{1} << 20); precision *= 2) {
    const Interval iv = enclose_classes(classes, degree, precision);
    if (mpfr_sgn(iv.lo.get()) > 0) return std::strong_ordering::greater;
    if (mpfr_sgn(iv.hi.get()) < 0) return std::strong_ordering::less;
  }
  fail(ErrorCode::precondition, "radical comparison did not separate");
}

std::strong_ordering RootSum::compare(const Rational& value) const {
  if (value < 0) return std::strong_ordering::greater;
  std::vector<RadicalClass> diff = classes_;
  accumulate(diff, pow(value, degree_), Rational(-1), degree_);
  return sign_of(diff, degree_);
}

std::strong_ordering RootSum::compare(const RootSum& other) const {
  if (other.degree_ != degree_) fail(ErrorCode::invalid_argument, "comparing root sums of different degrees");
  std::vector<RadicalClass> diff = classes_;
  for (const auto& c : other.classes_) accumulate(diff, c.radicand, -c.coeff, degree_);
  return sign_of(diff, degree_);
}

}  // namespace sparselab
