#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "bcf/rational.hpp"

namespace bcf {

bool is_prime_u64(unsigned long long n);

/// Real-valued function on the digit alphabet {2, 3, 4, ...}.
///
/// The preset kinds carry enough structure for exact decision making in the
/// deviation module (rational values, or products for the logarithm); a
/// custom table falls back to double evaluation.
class ArithmeticFunction {
public:
    enum class Kind { identity, logarithm, reciprocal, prime_n, table };
    enum class Mono { increasing, decreasing, none };

    static ArithmeticFunction identity();
    static ArithmeticFunction logarithm();
    static ArithmeticFunction reciprocal();
    static ArithmeticFunction prime_n();
    /// Explicit table with a constant value for digits past the table.
    /// Must be non-constant overall.
    static ArithmeticFunction table(std::map<long long, double> values, double tail_value,
                                    std::string name = "table");
    static ArithmeticFunction by_name(const std::string& name);

    const std::string& name() const { return name_; }
    Kind kind() const { return kind_; }
    Mono monotonicity() const;

    /// psi(d) in double precision.
    double operator()(long long d) const;

    /// Exact rational value; available for identity, reciprocal and prime_n.
    bool has_exact_values() const;
    Rational exact_value(long long d) const;

    /// inf/sup of psi over {d : d > B} (closed hull; sup may be +infinity,
    /// reported as std::nullopt).
    double tail_inf(long long B) const;
    std::optional<double> tail_sup(long long B) const;
    Rational tail_inf_exact(long long B) const;          // exact kinds only
    std::optional<Rational> tail_sup_exact(long long B) const;

    /// Same hulls over all digits {2, 3, ...}.
    double global_inf() const { return tail_inf(1); }
    std::optional<double> global_sup() const { return tail_sup(1); }

private:
    ArithmeticFunction(Kind k, std::string name) : kind_(k), name_(std::move(name)) {}
    Kind kind_;
    std::string name_;
    std::map<long long, double> table_;
    double table_tail_ = 0.0;
};

} // namespace bcf
