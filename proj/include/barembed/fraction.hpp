#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace barembed {

// Exact rational used for musical time in beats. Note onsets/durations come
// from tick arithmetic (tick / ticks_per_quarter) and must round-trip without
// floating drift.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Fraction() = default;
    constexpr Fraction(std::int64_t n) : num(n), den(1) {}
    Fraction(std::int64_t n, std::int64_t d) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw std::invalid_argument("Fraction: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend Fraction operator+(const Fraction& a, const Fraction& b) {
        return Fraction(a.num * b.den + b.num * a.den, a.den * b.den);
    }
    friend Fraction operator-(const Fraction& a, const Fraction& b) {
        return Fraction(a.num * b.den - b.num * a.den, a.den * b.den);
    }
    friend Fraction operator*(const Fraction& a, const Fraction& b) {
        return Fraction(a.num * b.num, a.den * b.den);
    }
    friend Fraction operator/(const Fraction& a, const Fraction& b) {
        return Fraction(a.num * b.den, a.den * b.num);
    }

    friend bool operator==(const Fraction& a, const Fraction& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Fraction& a, const Fraction& b) { return !(a == b); }
    friend bool operator<(const Fraction& a, const Fraction& b) {
        return a.num * b.den < b.num * a.den;
    }
    friend bool operator<=(const Fraction& a, const Fraction& b) {
        return a.num * b.den <= b.num * a.den;
    }
    friend bool operator>(const Fraction& a, const Fraction& b) { return b < a; }
    friend bool operator>=(const Fraction& a, const Fraction& b) { return b <= a; }

    // Largest integer <= value.
    std::int64_t floor() const {
        std::int64_t q = num / den;
        if (num % den != 0 && num < 0) --q;
        return q;
    }

    // Nearest integer, .5 rounds up.
    std::int64_t round() const {
        return Fraction(2 * num + den, 2 * den).floor();
    }
};

} // namespace barembed
