#pragma once

#include "bcf/arithmetic_function.hpp"
#include "bcf/renyi.hpp"

namespace bcf {

struct BirkhoffRecord {
    Rational x;
    long n;
    double sum;   // sum_{j<=n} psi(b_j(x))
    double mean;  // sum / n
};

struct ThreeMeans {
    double harmonic;
    double geometric;
    double arithmetic;
};

/// (1/n) sum psi(b_j(x)); digits exact, psi in double with compensated
/// summation.
double birkhoff_mean(const ArithmeticFunction& psi, const Rational& x, long n);

BirkhoffRecord birkhoff_record(const ArithmeticFunction& psi, const Rational& x, long n);

/// Harmonic, geometric and arithmetic means of the first n digits.
ThreeMeans three_means(const Rational& x, long n);
ThreeMeans three_means(const DigitWord& w);

/// Exact frequency of digit d among the first n digits.
Rational digit_frequency(const Rational& x, long n, long long d);

} // namespace bcf
