#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bcf/arithmetic_function.hpp"
#include "bcf/errors.hpp"
#include "bcf/markov.hpp"
#include "bcf/renyi.hpp"

namespace bcf {

struct PressureConfig {
    unsigned long long enum_budget = 2'000'000;  // exact path: max word count
    int cells = 4096;                            // enclosure path: partition size
    unsigned long long op_budget = 400'000'000;  // enclosure path: cells*B*n limit
};

/// Bracket for the depth-n tilted partition sum
///   (1/n) log sum_{w in {2..B}^n} exp(q S_n psi(w)) * lambda(A_w)^t
/// with distortion correction +-|t| D_n / n, which also covers the
/// infinite-depth pressure of q psi + t log|1/T'| on the cap-B subsystem.
struct PressureBracket {
    double q = 0.0;
    double t = 1.0;
    long long B = 2;
    long n = 1;
    double lower = 0.0;
    double upper = 0.0;
    bool exact_partition = false;  // true: word sum evaluated by full enumeration
};

PressureBracket pressure_bracket(const ArithmeticFunction& psi, double q, double t,
                                 long long B, long n, const PressureConfig& cfg = {});

/// Pressure sampled along a q grid at fixed t.
std::vector<PressureBracket> lambda_curve(const ArithmeticFunction& psi, long long B, long n,
                                          const std::vector<double>& q_grid, double t = 1.0,
                                          const PressureConfig& cfg = {});

/// {0} with points_per_side geometric points on each side, densest near 0.
std::vector<double> symmetric_geometric_grid(double max_abs, int points_per_side);
std::vector<double> linear_grid(double lo, double hi, int points);

struct RatePoint {
    double alpha = 0.0;
    double lower = 0.0;      // clipped below at 0
    double upper = 0.0;
    bool infinite = false;   // alpha outside the supported slope range
    bool contains_zero = false;
    double argmax_q = 0.0;
};

/// Legendre value I(alpha) = sup_q (q*alpha - Lambda(q)) over the sampled
/// grid, with one local refinement step around the grid maximum when an
/// evaluator is supplied. Tie-break: smallest q attaining the maximum.
RatePoint rate_from_legendre(const std::vector<PressureBracket>& curve, double alpha,
                             const std::function<PressureBracket(double)>& refine = nullptr);

struct RateFunctionTable {
    std::string psi_name;
    long long B = 2;
    long n = 1;
    std::vector<RatePoint> points;
};

RateFunctionTable rate_function_table(const ArithmeticFunction& psi, long long B, long n,
                                      const std::vector<double>& q_grid,
                                      const std::vector<double>& alpha_grid,
                                      const PressureConfig& cfg = {});

struct ScanPoint {
    double alpha = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool contains_zero = false;
    bool zero_within_tol = false;  // I upper endpoint <= tolerance
};

std::vector<ScanPoint> minimizer_scan(const ArithmeticFunction& psi, long long B, long n,
                                      const std::vector<double>& alpha_grid,
                                      const std::vector<double>& q_grid, double tol,
                                      const PressureConfig& cfg = {});

struct SpectrumPoint {
    double alpha = 0.0;
    double lower = 0.5;
    double upper = 0.5;
    bool out_of_range = false;  // alpha >= 2 log B, above the cap-B exponents
};

struct SpectrumTable {
    long long B = 2;
    long n = 1;
    std::vector<SpectrumPoint> points;
};

/// Cap-B Lyapunov spectrum values
///   L_B(alpha) = max( (1/alpha) inf_t (P_B(t) + t*alpha), 1/2 )
/// where P_B(t) is the geometric pressure (q = 0), clamped into [1/2, 1].
SpectrumTable lyapunov_spectrum(long long B, long n, const std::vector<double>& alpha_grid,
                                const std::vector<double>& t_grid, const PressureConfig& cfg = {});

} // namespace bcf
