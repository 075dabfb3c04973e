#include "bcf/rational.hpp"

#include <cctype>
#include <cmath>

namespace bcf {

namespace {
// always base 10; the mpz_class string constructor auto-detects the base
// and would read a leading zero as octal
BigInt parse_bigint(const std::string& s) {
    BigInt v;
    if (mpz_set_str(v.get_mpz_t(), s.c_str(), 10) != 0)
        throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}
} // namespace

Rational Rational::parse(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("Rational::parse: empty string");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        return Rational(parse_bigint(s.substr(0, slash)), parse_bigint(s.substr(slash + 1)));
    }
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        // decimal literal, converted exactly: "0.35" -> 35/100
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        size_t frac_len = s.size() - dot - 1;
        if (frac_len == 0) return Rational(parse_bigint(s.substr(0, dot)));
        BigInt den;
        mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
        return Rational(parse_bigint(digits), den);
    }
    return Rational(parse_bigint(s));
}

double log_bigint_ratio(const BigInt& num, const BigInt& den) {
    if (num <= 0 || den <= 0) throw std::domain_error("log_bigint_ratio: nonpositive");
    long en = 0, ed = 0;
    double mn = mpz_get_d_2exp(&en, num.get_mpz_t());
    double md = mpz_get_d_2exp(&ed, den.get_mpz_t());
    static const double ln2 = 0.6931471805599453094;
    return std::log(mn) - std::log(md) + double(en - ed) * ln2;
}

double log_rational(const Rational& r) {
    return log_bigint_ratio(r.num(), r.den());
}

} // namespace bcf
