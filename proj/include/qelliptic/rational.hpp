#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qell {

/// Exact rational coefficient type. All series arithmetic is exact; no
/// floating point ever enters a verification verdict.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline Rational rat_from_string(const std::string& s) {
    Rational r;
    if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal: " + s);
    r.canonicalize();
    return r;
}

/// Canonical "num" or "num/den" form, denominator always positive.
inline std::string to_string(const Rational& r) {
    return const_cast<Rational&>(r).get_str();
}

/// r^e for integer e (e < 0 requires r != 0).
inline Rational pow_int(const Rational& r, long e) {
    if (e == 0) return Rational(1);
    if (r == 0) {
        if (e < 0) throw std::domain_error("0^negative");
        return Rational(0);
    }
    Rational base = e > 0 ? r : Rational(1) / r;
    unsigned long n = static_cast<unsigned long>(e > 0 ? e : -e);
    Rational acc(1);
    while (n) {
        if (n & 1) acc *= base;
        base *= base;
        n >>= 1;
    }
    return acc;
}

}  // namespace qell
