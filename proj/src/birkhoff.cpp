#include "bcf/birkhoff.hpp"

#include <cmath>

namespace bcf {

namespace {
// Kahan-compensated accumulation.
struct CompensatedSum {
    double s = 0.0, c = 0.0;
    void add(double v) {
        double y = v - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};
} // namespace

double birkhoff_mean(const ArithmeticFunction& psi, const Rational& x, long n) {
    return birkhoff_record(psi, x, n).mean;
}

BirkhoffRecord birkhoff_record(const ArithmeticFunction& psi, const Rational& x, long n) {
    DigitWord w = digits(x, n);
    CompensatedSum acc;
    for (long long b : w) acc.add(psi(b));
    return BirkhoffRecord{x, n, acc.s, acc.s / double(n)};
}

ThreeMeans three_means(const DigitWord& w) {
    check_digit_word(w);
    CompensatedSum inv, lg, sum;
    for (long long b : w) {
        inv.add(1.0 / double(b));
        lg.add(std::log(double(b)));
        sum.add(double(b));
    }
    double n = double(w.size());
    return ThreeMeans{n / inv.s, std::exp(lg.s / n), sum.s / n};
}

ThreeMeans three_means(const Rational& x, long n) {
    return three_means(digits(x, n));
}

Rational digit_frequency(const Rational& x, long n, long long d) {
    DigitWord w = digits(x, n);
    long count = 0;
    for (long long b : w)
        if (b == d) ++count;
    return Rational(BigInt(count), BigInt(n));
}

} // namespace bcf
