#pragma once

#include <gmpxx.h>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace bcf {

using BigInt = mpz_class;

/// gmpxx has no long long constructor; convert through 32-bit halves.
inline BigInt to_bigint(long long v) {
    bool neg = v < 0;
    unsigned long long a = neg ? 0ull - (unsigned long long)v : (unsigned long long)v;
    BigInt r((unsigned long)(a >> 32));
    r <<= 32;
    r += (unsigned long)(a & 0xffffffffull);
    return neg ? BigInt(-r) : r;
}

/// Exact rational number, always reduced to lowest terms with positive
/// denominator. Immutable value type; all arithmetic is exact.
class Rational {
public:
    Rational() : v_(0) {}
    Rational(long n) : v_(n) {}
    Rational(const BigInt& n) : v_(n) {}
    Rational(const BigInt& num, const BigInt& den) {
        if (den == 0) throw std::domain_error("Rational: zero denominator");
        v_ = mpq_class(num, den);
        v_.canonicalize();
    }
    Rational(long num, long den) : Rational(BigInt(num), BigInt(den)) {}

    static Rational parse(const std::string& s);

    BigInt num() const { return v_.get_num(); }
    BigInt den() const { return v_.get_den(); }

    bool is_integer() const { return v_.get_den() == 1; }
    int sign() const { return sgn(v_); }

    /// Largest integer <= value.
    BigInt floor() const {
        BigInt q;
        mpz_fdiv_q(q.get_mpz_t(), v_.get_num().get_mpz_t(), v_.get_den().get_mpz_t());
        return q;
    }

    double to_double() const { return v_.get_d(); }

    /// "p/q", or just "p" when the value is an integer.
    std::string str() const {
        if (is_integer()) return v_.get_num().get_str();
        return v_.get_str();
    }

    friend Rational operator+(const Rational& a, const Rational& b) { return Rational(a.v_ + b.v_); }
    friend Rational operator-(const Rational& a, const Rational& b) { return Rational(a.v_ - b.v_); }
    friend Rational operator*(const Rational& a, const Rational& b) { return Rational(a.v_ * b.v_); }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.v_ == 0) throw std::domain_error("Rational: division by zero");
        return Rational(a.v_ / b.v_);
    }
    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.v_ != b.v_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.v_ < b.v_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.v_ <= b.v_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.v_ > b.v_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.v_ >= b.v_; }

private:
    explicit Rational(const mpq_class& q) : v_(q) {}
    mpq_class v_;
};

/// Natural log of a positive rational, accurate to a few ulps even when the
/// value under- or overflows double.
double log_rational(const Rational& r);

/// (num, den) -> log(num/den), both > 0.
double log_bigint_ratio(const BigInt& num, const BigInt& den);

} // namespace bcf
