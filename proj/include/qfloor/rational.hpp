// rational.hpp -- exact rational arithmetic for probabilities and distances
//
// All probability and distance computations in the exact evaluation paths use
// this type; floating point appears only in the Monte Carlo estimators.
// Values are kept normalized (gcd 1, positive denominator). Intermediate
// products run through 128-bit integers and narrowing back to 64 bits is
// checked, so overflow surfaces as an exception instead of silent wraparound.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace qfloor {

class Rational {
public:
    constexpr Rational() noexcept : num_(0), den_(1) {}
    constexpr Rational(std::int64_t value) noexcept : num_(value), den_(1) {}

    Rational(std::int64_t num, std::int64_t den) {
        if (den == 0)
            throw std::invalid_argument("Rational: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num, den);
        num_ = g ? num / g : num;
        den_ = g ? den / g : den;
    }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }

    double to_double() const noexcept {
        return static_cast<double>(num_) / static_cast<double>(den_);
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_,
                    i128(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_,
                    i128(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0)
            throw std::invalid_argument("Rational: division by zero");
        return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
    }
    friend Rational operator-(const Rational& a) {
        Rational r;
        r.num_ = -a.num_;
        r.den_ = a.den_;
        return r;
    }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    // Comparisons are exact: 128-bit cross multiplication, never doubles.
    friend bool operator==(const Rational& a, const Rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) noexcept {
        return !(a == b);
    }
    friend bool operator<(const Rational& a, const Rational& b) noexcept {
        return i128(a.num_) * b.den_ < i128(b.num_) * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) noexcept {
        return b < a;
    }
    friend bool operator<=(const Rational& a, const Rational& b) noexcept {
        return !(b < a);
    }
    friend bool operator>=(const Rational& a, const Rational& b) noexcept {
        return !(a < b);
    }

    /// Parses "a/b" or a bare integer "a".
    static Rational parse(const std::string& text) {
        const auto slash = text.find('/');
        try {
            if (slash == std::string::npos)
                return Rational(std::stoll(text));
            return Rational(std::stoll(text.substr(0, slash)),
                            std::stoll(text.substr(slash + 1)));
        } catch (const std::logic_error&) {
            throw std::invalid_argument("Rational: cannot parse '" + text + "'");
        }
    }

    std::string str() const {
        if (den_ == 1)
            return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
        return os << r.str();
    }

private:
    using i128 = __int128;

    static Rational make(i128 num, i128 den) {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const i128 g = gcd128(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        constexpr i128 lo = INT64_MIN, hi = INT64_MAX;
        if (num < lo || num > hi || den > hi)
            throw std::overflow_error("Rational: value exceeds 64-bit range");
        Rational r;
        r.num_ = static_cast<std::int64_t>(num);
        r.den_ = static_cast<std::int64_t>(den);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) noexcept {
        while (b != 0) {
            const i128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }

    std::int64_t num_;
    std::int64_t den_;
};

inline Rational abs(const Rational& r) {
    return r < Rational(0) ? -r : r;
}

/// Exact non-negative integer power.
inline Rational pow(Rational base, std::uint64_t exp) {
    Rational result(1);
    while (exp > 0) {
        if (exp & 1)
            result *= base;
        exp >>= 1;
        if (exp)
            base *= base;
    }
    return result;
}

/// Smallest integer >= r.
inline std::int64_t ceil_to_int(const Rational& r) {
    const std::int64_t q = r.num() / r.den();
    return (r.num() % r.den() != 0 && r.num() > 0) ? q + 1 : q;
}

} // namespace qfloor
