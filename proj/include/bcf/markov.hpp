#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bcf/arithmetic_function.hpp"
#include "bcf/errors.hpp"
#include "bcf/renyi.hpp"

namespace bcf {

/// Closed interval of doubles; outward-rounded where it matters.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
    Interval operator+(const Interval& o) const { return {lo + o.lo, hi + o.hi}; }
    Interval scaled(double c) const { return c >= 0 ? Interval{c * lo, c * hi} : Interval{c * hi, c * lo}; }
};

/// Shift-invariant Markov measure on digit words over a finite alphabet.
/// Rows of P sum to 1 within 1e-12; the stationary vector solves pi P = pi
/// to residual 1e-10 (computed by power iteration).
struct DigitMarkovMeasure {
    std::vector<long long> alphabet;            // digits, strictly increasing, each >= 2
    std::vector<std::vector<double>> P;         // row-stochastic transition matrix
    std::vector<double> pi;                     // stationary row vector

    static DigitMarkovMeasure bernoulli(std::vector<long long> digits, std::vector<double> weights);
    static DigitMarkovMeasure full_alphabet_bernoulli(long long B, const std::vector<double>& weights);

    std::size_t index_of(long long digit) const;
    void validate_and_fix_stationary();
};

/// Unit point mass at the fixed point of the digit-k branch:
/// p_k = (2 - k + sqrt((k-2)(k+2)))/2, enclosed to ~2^-96.
/// Entropy 0; Lyapunov value -2 log(1 - p_k).
struct FixedPointAtom {
    long long digit = 2;
    Rational p_lo, p_hi;   // fixed-point enclosure
    Interval chi;          // -2 log(1 - p)

    static FixedPointAtom make(long long k);
};

using ComponentMeasure = std::variant<DigitMarkovMeasure, FixedPointAtom>;

/// Convex combination of finitely many invariant measures.
struct MixtureMeasure {
    std::vector<std::pair<double, ComponentMeasure>> components; // weights > 0, sum 1
    void validate() const;
};

using Measure = std::variant<DigitMarkovMeasure, FixedPointAtom, MixtureMeasure>;

struct MeasureStats {
    double h = 0.0;                  // entropy (nats)
    Interval chi;                    // Lyapunov exponent bracket
    Interval F;                      // h - chi
    std::optional<Interval> dim;     // h / chi, only when chi.lo > 0
    double psi_integral = 0.0;
};

/// Entropy rate -sum_i pi_i sum_j P_ij log P_ij.
double entropy(const DigitMarkovMeasure& m);

/// Bracket for chi(mu) = integral of log T' by summing depth-`depth` words:
/// each word contributes its probability times (-log lambda(A) +- D_depth)/depth,
/// where D is the distortion budget. Width <= 2 D_depth / depth.
Interval lyapunov_bracket(const DigitMarkovMeasure& m, int depth,
                          unsigned long long word_budget = 4'000'000);

Interval lyapunov_bracket(const Measure& m, int depth,
                          unsigned long long word_budget = 4'000'000);

MeasureStats stats(const Measure& m, const ArithmeticFunction& psi, int depth);

/// One row of the flat-rate-function witness family: the mixture
/// mu_k = (1 - 1/r_k) nu_k + (1/r_k) delta_{n_k} with n_k the smallest
/// n >= n_{k-1} such that psi(n)/log n >= k and r_k = max(1, sqrt(k) log n_k).
/// nu_k is a Bernoulli measure on {2,3} tuned so the lower end of its
/// Lyapunov bracket clears 1/sqrt(r_k / log n_k).
struct TheoremCDiag {
    int k = 0;
    long long n_k = 0;
    double r_k = 0.0;
    double chi_threshold = 0.0;
    double bernoulli_weight_on_3 = 0.0;
    MeasureStats mix_stats;
    double psi_nk_over_rk = 0.0;
    MixtureMeasure measure;
};

struct TheoremCResult {
    bool applicable = true;      // false: psi failed the growth test up to n_max
    std::string message;
    std::vector<TheoremCDiag> rows;
};

struct TheoremCConfig {
    long long n_max = 1'000'000;
    int chi_depth = 16;
};

TheoremCResult theorem_c_sequence(const ArithmeticFunction& psi, int K,
                                  const TheoremCConfig& cfg = {});

} // namespace bcf
