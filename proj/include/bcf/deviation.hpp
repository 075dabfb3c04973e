#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bcf/arithmetic_function.hpp"
#include "bcf/errors.hpp"
#include "bcf/renyi.hpp"

namespace bcf {

/// Endpoint of a mean window. `log_rational` means the endpoint equals
/// log(value); it keeps membership tests for psi = logarithm exact
/// (sum of log-digits >= n*log(p/q) iff product^1 * q^n >= p^n).
struct Endpoint {
    enum class Kind { finite, log_rational, minus_inf, plus_inf };
    Kind kind = Kind::finite;
    Rational value;
    bool closed = true;

    static Endpoint finite(const Rational& v, bool closed = true) { return {Kind::finite, v, closed}; }
    static Endpoint log_of(const Rational& v, bool closed = true);
    static Endpoint minus_infinity() { return {Kind::minus_inf, Rational(0), false}; }
    static Endpoint plus_infinity() { return {Kind::plus_inf, Rational(0), false}; }

    bool is_finite() const { return kind == Kind::finite || kind == Kind::log_rational; }
    double to_double() const;
    std::string str() const;
};

struct MeanWindow {
    Endpoint lo;
    Endpoint hi;
    std::string str() const;
};

enum class DeviationMethod { exact_enumeration, monte_carlo };

struct DeviationQuery {
    ArithmeticFunction psi = ArithmeticFunction::identity();
    long n = 1;
    MeanWindow J;
    DeviationMethod method = DeviationMethod::exact_enumeration;

    long long cap = 20;                        // exact mode: digit cap B
    unsigned long long max_nodes = 80'000'000; // exact mode: enumeration budget
    unsigned long long exact_term_limit = 20'000; // switch to dyadic accumulation beyond
    double fast_path_min_words = 2e6;          // word count above which one-sided
                                               // logarithm windows use the machine-word
                                               // engine with directed double brackets

    unsigned long long samples = 0;            // MC mode
    unsigned long long seed = 0;
    int threads = 1;
};

/// Nonnegative mass, exact while the number of accumulated terms is small,
/// afterwards a rigorous dyadic bracket of width <= terms * 2^-192.
struct MassValue {
    bool exact = true;
    Rational value;        // meaningful when exact
    double lo = 0.0;       // outer double bounds, always valid
    double hi = 0.0;
};

struct DeviationEstimate {
    DeviationMethod method = DeviationMethod::exact_enumeration;

    // exact mode: certified-in mass, unresolved mass, certified-out mass.
    // lower + tail_unresolved + outside = 1 (exactly, in exact accumulation).
    MassValue lower;
    MassValue tail_unresolved;
    MassValue outside;
    unsigned long long nodes = 0;
    unsigned long long in_classes = 0;
    unsigned long long tail_classes = 0;

    // monte carlo mode
    double estimate = 0.0;
    double std_error = 0.0;
    unsigned long long hits = 0;
    unsigned long long samples = 0;

    double lower_bound() const;
    double upper_bound() const;
};

/// Exact Lebesgue measure bracket for {x : (1/n) sum psi(b_j(x)) in J},
/// by branch-and-bound over digit prefixes capped at B. Classes whose
/// membership is decided contribute exact cylinder mass to `lower` or
/// `outside`; classes containing a digit > B whose membership cannot be
/// decided from psi range bounds contribute to `tail_unresolved`.
DeviationEstimate exact_measure(const DeviationQuery& q);

/// Monte Carlo estimate over exact dyadic samples x = m/2^64; digit
/// extraction and (for the preset psi kinds) window membership are exact.
DeviationEstimate mc_measure(const DeviationQuery& q);

/// Explicit lower-bound set for the arithmetic mean: the set of x whose
/// expansion starts with n digits 2 followed by the digit m, where
/// m = z - 2(n-1) and z is the smallest integer with z/n inside the lower
/// half of J. Every such x has mean (2n + m)/(n+1) over its first n+1
/// digits, certified to lie in J.
struct BnBound {
    long n = 0;
    BigInt z;
    BigInt m;
    Rational preimage_lo, preimage_hi; // digit-m cylinder upstairs
    Rational set_lo, set_hi;           // the set itself (one interval)
    Rational measure;                  // exact Lebesgue measure
    Rational mean;                     // (2n + m)/(n + 1)
    bool mean_certified = false;
};

BnBound bn_measure(long n, const MeanWindow& J);

struct RateFit {
    double exp_rate = 0.0;        // OLS slope of log(lambda) against n
    double poly_exponent = 0.0;   // OLS slope of log(lambda) against log(n)
    double exp_residual_rms = 0.0;
    double poly_residual_rms = 0.0;
    std::size_t points_used = 0;
    std::size_t points_dropped = 0; // nonpositive lambda entries
};

/// Least-squares decay-rate fit of a series (n, lambda_n).
RateFit rate_fit(const std::vector<std::pair<double, double>>& series);

} // namespace bcf
