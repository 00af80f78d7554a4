#include "sparselab/rational.hpp"

#include <cmath>

#include "sparselab/error.hpp"

namespace sparselab {

namespace {

bool is_integer_text(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return true;
}

mpz_class parse_integer(std::string_view s, std::string_view whole) {
  if (!is_integer_text(s)) fail(ErrorCode::parse, "not a rational: '" + std::string(whole) + "'");
  if (s[0] == '+') s.remove_prefix(1);
  return mpz_class(std::string(s), 10);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    mpz_class num = parse_integer(text.substr(0, slash), text);
    mpz_class den = parse_integer(text.substr(slash + 1), text);
    if (den == 0) fail(ErrorCode::parse, "zero denominator in '" + std::string(text) + "'");
    Rational q(num, den);
    q.canonicalize();
    return q;
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    bool negative = !int_part.empty() && int_part[0] == '-';
    mpz_class whole = int_part.empty() || int_part == "-" || int_part == "+" ? mpz_class(0)
                                                                            : parse_integer(int_part, text);
    mpz_class frac = frac_part.empty() ? mpz_class(0) : parse_integer(frac_part, text);
    if (!frac_part.empty() && (frac_part[0] == '-' || frac_part[0] == '+'))
      fail(ErrorCode::parse, "not a rational: '" + std::string(text) + "'");
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac_part.size());
    Rational q(frac, scale);
    q.canonicalize();
    Rational w(whole);
    return negative ? Rational(w - q) : Rational(w + q);
  }
  return Rational(parse_integer(text, text));
}

std::string to_string(const Rational& value) { return value.get_str(10); }

Rational pow(const Rational& base, unsigned exponent) {
  mpz_class num, den;
  mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), exponent);
  mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), exponent);
  // Powers of coprime integers stay coprime.
  Rational out;
  mpz_swap(out.get_num_mpz_t(), num.get_mpz_t());
  mpz_swap(out.get_den_mpz_t(), den.get_mpz_t());
  return out;
}

bool exact_root(const Rational& value, unsigned degree, Rational* root) {
  if (value < 0 || degree == 0) return false;
  if (degree == 1) {
    if (root) *root = value;
    return true;
  }
  mpz_class num, den;
  if (mpz_root(num.get_mpz_t(), value.get_num_mpz_t(), degree) == 0) return false;
  if (mpz_root(den.get_mpz_t(), value.get_den_mpz_t(), degree) == 0) return false;
  if (root) {
    *root = Rational(num, den);
    root->canonicalize();
  }
  return true;
}

double to_double(const Rational& value) { return value.get_d(); }

Rational from_double(double value) {
  if (!std::isfinite(value)) fail(ErrorCode::invalid_argument, "non-finite value");
  Rational q(value);
  q.canonicalize();
  return q;
}

}  // namespace sparselab
