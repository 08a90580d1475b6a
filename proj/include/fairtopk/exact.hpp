/*
 * This Source Code Form is subject to the terms of the Mozilla Public
 * License, v. 2.0. If a copy of the MPL was not distributed with this
 * file, You can obtain one at https://mozilla.org/MPL/2.0/.
 */

#pragma once

#include <gmpxx.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>

#include "fairtopk/errors.hpp"

namespace fairtopk {

using Rational = mpq_class;
using BigInt = mpz_class;
using int128 = __int128;

/// Parses a plain decimal literal ("0.45", "-3", "1.5e-2") into an exact rational.
inline Rational parseDecimal(std::string_view text) {
    std::string s(text);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
    s = s.substr(start);
    if (s.empty()) throw ParameterError("empty numeric literal");

    bool negative = false;
    std::size_t pos = 0;
    if (s[pos] == '+' || s[pos] == '-') {
        negative = s[pos] == '-';
        ++pos;
    }
    std::string digits;
    int fractionDigits = 0;
    bool seenPoint = false;
    bool seenDigit = false;
    for (; pos < s.size(); ++pos) {
        char ch = s[pos];
        if (ch >= '0' && ch <= '9') {
            digits.push_back(ch);
            seenDigit = true;
            if (seenPoint) ++fractionDigits;
        } else if (ch == '.' && !seenPoint) {
            seenPoint = true;
        } else {
            break;
        }
    }
    if (!seenDigit) throw ParameterError("malformed numeric literal '" + s + "'");
    long exponent = 0;
    if (pos < s.size()) {
        if (s[pos] != 'e' && s[pos] != 'E') throw ParameterError("malformed numeric literal '" + s + "'");
        ++pos;
        const char* first = s.data() + pos;
        const char* last = s.data() + s.size();
        if (first != last && *first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, last, exponent);
        if (ec != std::errc() || ptr != last) throw ParameterError("malformed exponent in '" + s + "'");
    }
    exponent -= fractionDigits;
    if (exponent > 400 || exponent < -400) throw ParameterError("exponent out of range in '" + s + "'");

    BigInt numerator(digits, 10);
    BigInt power;
    mpz_ui_pow_ui(power.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
    Rational value = exponent < 0 ? Rational(numerator, power) : Rational(numerator * power);
    value.canonicalize();
    return negative ? Rational(-value) : value;
}

/// Shortest round-trip decimal of a double, read back exactly (0.6 -> 3/5).
inline Rational fromDouble(double value) {
    if (!std::isfinite(value)) throw ParameterError("non-finite value");
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) throw ParameterError("cannot format value");
    return parseDecimal(std::string_view(buffer, static_cast<std::size_t>(ptr - buffer)));
}

inline double toDouble(const Rational& value) { return value.get_d(); }

inline bool isTerminatingDecimal(const Rational& value) {
    BigInt den = value.get_den();
    while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) den /= 2;
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) den /= 5;
    return den == 1;
}

/// Decimal text of a rational: exact when the expansion terminates, otherwise
/// rounded to `digits` fractional digits.
inline std::string toDecimalString(const Rational& value, int digits = 20) {
    Rational magnitude = abs(value);
    BigInt whole = magnitude.get_num() / magnitude.get_den();
    Rational fraction = magnitude - Rational(whole);
    std::string out = (value < 0 ? "-" : "") + whole.get_str();
    if (fraction == 0) return out;
    std::string tail;
    bool terminating = isTerminatingDecimal(value);
    for (int i = 0; (terminating || i < digits) && fraction != 0; ++i) {
        fraction *= 10;
        BigInt digit = fraction.get_num() / fraction.get_den();
        tail += digit.get_str();
        fraction -= Rational(digit);
    }
    if (!terminating) {
        // round half up on the next digit
        fraction *= 10;
        if (fraction.get_num() / fraction.get_den() >= 5) {
            int i = static_cast<int>(tail.size()) - 1;
            while (i >= 0 && tail[i] == '9') tail[i--] = '0';
            if (i >= 0) {
                ++tail[i];
            } else {
                whole += 1;
                out = (value < 0 ? "-" : "") + whole.get_str();
            }
        }
        while (!tail.empty() && tail.back() == '0') tail.pop_back();
    }
    return tail.empty() ? out : out + "." + tail;
}

inline std::string toFractionString(const Rational& value) { return value.get_str(); }

inline std::int64_t toInt64(const BigInt& value) {
    if (!value.fits_slong_p()) throw ParameterError("integer does not fit 64 bits");
    return value.get_si();
}

/// Exact time coordinate of the 2-D sweep: num/den with den > 0, or +inf
/// when den == 0. Comparisons widen to 128 bits.
struct KineticTime {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static constexpr KineticTime infinity() { return KineticTime{1, 0}; }

    static KineticTime make(std::int64_t n, std::int64_t d) {
        if (d == 0) throw ParameterError("zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        std::int64_t g = std::gcd(n < 0 ? -n : n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        return KineticTime{n, d};
    }

    static KineticTime fromRational(const Rational& value) {
        return make(toInt64(value.get_num()), toInt64(value.get_den()));
    }

    constexpr bool isInfinite() const { return den == 0; }

    Rational toRational() const {
        if (isInfinite()) throw StateError("infinite time has no rational value");
        return Rational(BigInt(static_cast<long>(num)), BigInt(static_cast<long>(den)));
    }

    double toDouble() const {
        return isInfinite() ? std::numeric_limits<double>::infinity()
                            : static_cast<double>(num) / static_cast<double>(den);
    }

    friend std::strong_ordering operator<=>(const KineticTime& a, const KineticTime& b) {
        if (a.isInfinite() || b.isInfinite()) {
            return static_cast<int>(a.isInfinite()) <=> static_cast<int>(b.isInfinite());
        }
        int128 lhs = static_cast<int128>(a.num) * b.den;
        int128 rhs = static_cast<int128>(b.num) * a.den;
        return lhs < rhs ? std::strong_ordering::less
                         : (lhs > rhs ? std::strong_ordering::greater : std::strong_ordering::equal);
    }
    friend bool operator==(const KineticTime& a, const KineticTime& b) {
        return (a <=> b) == std::strong_ordering::equal;
    }

    friend std::ostream& operator<<(std::ostream& os, const KineticTime& t) {
        if (t.isInfinite()) return os << "inf";
        return os << t.num << '/' << t.den;
    }
};

inline int signOf(int128 v) { return (v > 0) - (v < 0); }

}  // namespace fairtopk
