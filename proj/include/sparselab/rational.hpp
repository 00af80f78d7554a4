#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace sparselab {

/// Exact rational number. All measures, function values and averages are kept
/// in this type; floating point only appears in reports.
using Rational = mpq_class;

/// Parses "p/q", "p" or a plain decimal such as "0.25". The result is canonical.
Rational parse_rational(std::string_view text);

/// Canonical "p/q" text ("p" when the denominator is 1).
std::string to_string(const Rational& value);

Rational pow(const Rational& base, unsigned exponent);

/// Exact r-th root when `value` is the r-th power of a rational.
bool exact_root(const Rational& value, unsigned degree, Rational* root);

double to_double(const Rational& value);

/// Exact rational equal to the given finite double.
Rational from_double(double value);

}  // namespace sparselab
