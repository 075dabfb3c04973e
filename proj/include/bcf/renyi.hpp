#pragma once

#include <vector>

#include "bcf/moebius.hpp"
#include "bcf/rational.hpp"

namespace bcf {

/// Finite digit string of a backward-continued-fraction expansion.
/// Every entry is an integer >= 2.
using DigitWord = std::vector<long long>;

/// Exact image of [0,1) under the branch composition of `word`;
/// half-open [lo, hi), so hi - lo is the Lebesgue measure.
struct CylinderInterval {
    DigitWord word;
    Rational lo;
    Rational hi;
    Rational length() const { return hi - lo; }
};

/// One step of the Renyi map T(x) = 1/(1-x) - floor(1/(1-x)), exact.
Rational renyi_apply(const Rational& x);

/// n-th digit b_n(x) = floor(1/(1 - T^{n-1} x)) + 1, n >= 1.
long long digit_at(const Rational& x, long n);

/// First n digits of x. Defined for every rational in [0,1); rational
/// orbits fall into the neutral fixed point, so tails are eventually 2.
DigitWord digits(const Rational& x, long n);

/// Digits of the dyadic point m/2^64. Orbit denominators only shrink, so
/// everything runs in machine words; throws if a digit exceeds long long.
DigitWord digits_dyadic(unsigned long long m, long n);

/// Inverse branch g_k(y) = (y + k - 2)/(y + k - 1), k >= 2.
/// Maps [0,1) onto the depth-1 cylinder of digit k; T(g_k(y)) = y.
MoebiusMap inverse_branch(long long k);

/// Branch composition g_{b_1} ∘ ... ∘ g_{b_n} for a digit word.
MoebiusMap branch_composition(const DigitWord& word);

/// Exact cylinder interval of a digit word.
CylinderInterval cylinder(const DigitWord& word);

/// c_n: backward orbit of 1/2 under the digit-2 branch (c_0 = 1/2,
/// T c_n = c_{n-1}), computed by iteration.
Rational thaler_c(long n);

/// T'(x) = (1-x)^{-2}, exact. Equals 1 only at the neutral point x = 0.
Rational renyi_derivative(const Rational& x);

/// Uniform bound on the oscillation of log (T^n)' over any depth-n
/// cylinder: D_n = 2 * sum_{i=0}^{n-2} c_i + 2 (and D_0 = 0).
double distortion_budget(long n);

void check_unit_interval(const Rational& x);
void check_digit_word(const DigitWord& word);

} // namespace bcf
