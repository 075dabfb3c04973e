#include "bcf/renyi.hpp"

#include <limits>
#include <stdexcept>

namespace bcf {

void check_unit_interval(const Rational& x) {
    if (x.sign() < 0 || x >= Rational(1))
        throw std::domain_error("renyi: x must lie in [0,1)");
}

void check_digit_word(const DigitWord& word) {
    if (word.empty()) throw std::invalid_argument("digit word must be non-empty");
    for (long long b : word)
        if (b < 2) throw std::invalid_argument("digit word entries must be >= 2");
}

Rational renyi_apply(const Rational& x) {
    check_unit_interval(x);
    // x = p/q reduced. 1/(1-x) = q/(q-p), so with r = q - p:
    //   T(x) = (q mod r)/r, already in lowest terms since gcd(q, r) = gcd(p, q) = 1.
    BigInt p = x.num(), q = x.den();
    BigInt r = q - p;
    BigInt rem;
    mpz_fdiv_r(rem.get_mpz_t(), q.get_mpz_t(), r.get_mpz_t());
    return Rational(rem, r);
}

static long long first_digit(const Rational& x) {
    BigInt p = x.num(), q = x.den();
    BigInt r = q - p;
    BigInt fl;
    mpz_fdiv_q(fl.get_mpz_t(), q.get_mpz_t(), r.get_mpz_t());
    if (!fl.fits_slong_p())
        throw std::overflow_error("digit does not fit in long long");
    return fl.get_si() + 1;
}

long long digit_at(const Rational& x, long n) {
    check_unit_interval(x);
    if (n < 1) throw std::invalid_argument("digit index must be >= 1");
    Rational y = x;
    for (long i = 1; i < n; ++i) y = renyi_apply(y);
    return first_digit(y);
}

DigitWord digits(const Rational& x, long n) {
    check_unit_interval(x);
    if (n < 1) throw std::invalid_argument("digit count must be >= 1");
    DigitWord out;
    out.reserve(size_t(n));
    Rational y = x;
    for (long i = 0; i < n; ++i) {
        out.push_back(first_digit(y));
        if (i + 1 < n) y = renyi_apply(y);
    }
    return out;
}

DigitWord digits_dyadic(unsigned long long m, long n) {
    if (n < 1) throw std::invalid_argument("digit count must be >= 1");
    DigitWord out;
    out.reserve(size_t(n));
    if (m == 0) {
        out.assign(size_t(n), 2);
        return out;
    }
    using u128 = unsigned __int128;
    u128 q0 = (u128)1 << 64;
    u128 r0 = q0 - m;
    u128 d0 = q0 / r0 + 1;
    if (d0 > (u128)std::numeric_limits<long long>::max())
        throw std::overflow_error("digit does not fit in long long");
    out.push_back((long long)d0);
    unsigned long long p = (unsigned long long)(q0 % r0);
    unsigned long long q = (unsigned long long)r0;
    for (long i = 1; i < n; ++i) {
        unsigned long long r = q - p;
        out.push_back((long long)(q / r) + 1);
        p = q % r;
        q = r;
    }
    return out;
}

MoebiusMap inverse_branch(long long k) {
    if (k < 2) throw std::invalid_argument("inverse_branch: digit must be >= 2");
    return MoebiusMap{1, to_bigint(k) - 2, 1, to_bigint(k) - 1};
}

MoebiusMap branch_composition(const DigitWord& word) {
    check_digit_word(word);
    MoebiusMap m = inverse_branch(word.front());
    for (size_t i = 1; i < word.size(); ++i)
        m = m.compose(inverse_branch(word[i]));
    return m.normalized();
}

CylinderInterval cylinder(const DigitWord& word) {
    MoebiusMap m = branch_composition(word);
    return CylinderInterval{word, m.apply(Rational(0)), m.apply(Rational(1))};
}

Rational thaler_c(long n) {
    if (n < 0) throw std::invalid_argument("thaler_c: n must be >= 0");
    Rational c(1, 2);
    for (long i = 0; i < n; ++i) {
        // g_2(c) = c/(c + 1)
        c = Rational(c.num(), c.num() + c.den());
    }
    return c;
}

Rational renyi_derivative(const Rational& x) {
    check_unit_interval(x);
    Rational one_minus = Rational(1) - x;
    return Rational(one_minus.den() * one_minus.den(), one_minus.num() * one_minus.num());
}

double distortion_budget(long n) {
    if (n <= 0) return 0.0;
    double s = 0.0;
    // c_i = 1/(i+2); the closed form is verified against the iteration in tests.
    for (long i = 0; i + 2 <= n; ++i) s += 1.0 / double(i + 2);
    return 2.0 * s + 2.0;
}

} // namespace bcf
