#include "bcf/arithmetic_function.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bcf {

bool is_prime_u64(unsigned long long n) {
    if (n < 2) return false;
    for (unsigned long long p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    // deterministic Miller-Rabin for 64-bit with the standard base set
    auto mulmod = [](unsigned long long a, unsigned long long b, unsigned long long m) {
        return (unsigned long long)((unsigned __int128)a * b % m);
    };
    auto powmod = [&](unsigned long long a, unsigned long long e, unsigned long long m) {
        unsigned long long r = 1;
        a %= m;
        while (e) {
            if (e & 1) r = mulmod(r, a, m);
            a = mulmod(a, a, m);
            e >>= 1;
        }
        return r;
    };
    unsigned long long d = n - 1;
    int s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (unsigned long long a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        unsigned long long x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool witness = true;
        for (int i = 1; i < s; ++i) {
            x = mulmod(x, x, n);
            if (x == n - 1) { witness = false; break; }
        }
        if (witness) return false;
    }
    return true;
}

ArithmeticFunction ArithmeticFunction::identity() { return {Kind::identity, "identity"}; }
ArithmeticFunction ArithmeticFunction::logarithm() { return {Kind::logarithm, "logarithm"}; }
ArithmeticFunction ArithmeticFunction::reciprocal() { return {Kind::reciprocal, "reciprocal"}; }
ArithmeticFunction ArithmeticFunction::prime_n() { return {Kind::prime_n, "prime_n"}; }

ArithmeticFunction ArithmeticFunction::table(std::map<long long, double> values, double tail_value,
                                             std::string name) {
    ArithmeticFunction f(Kind::table, std::move(name));
    f.table_ = std::move(values);
    f.table_tail_ = tail_value;
    for (auto& [d, v] : f.table_)
        if (d < 2) throw std::invalid_argument("table digits must be >= 2");
    bool constant = true;
    double first = f.table_.empty() ? tail_value : f.table_.begin()->second;
    for (auto& [d, v] : f.table_) constant = constant && v == first;
    constant = constant && tail_value == first;
    if (constant) throw std::invalid_argument("arithmetic function must be non-constant");
    return f;
}

ArithmeticFunction ArithmeticFunction::by_name(const std::string& name) {
    if (name == "identity") return identity();
    if (name == "logarithm" || name == "log") return logarithm();
    if (name == "reciprocal") return reciprocal();
    if (name == "prime_n" || name == "prime") return prime_n();
    throw std::invalid_argument("unknown arithmetic function: " + name);
}

ArithmeticFunction::Mono ArithmeticFunction::monotonicity() const {
    switch (kind_) {
        case Kind::identity:
        case Kind::logarithm: return Mono::increasing;
        case Kind::reciprocal: return Mono::decreasing;
        default: return Mono::none;
    }
}

double ArithmeticFunction::operator()(long long d) const {
    if (d < 2) throw std::domain_error("arithmetic function: digit must be >= 2");
    switch (kind_) {
        case Kind::identity: return double(d);
        case Kind::logarithm: return std::log(double(d));
        case Kind::reciprocal: return 1.0 / double(d);
        case Kind::prime_n: return is_prime_u64((unsigned long long)d) ? double(d) : 0.0;
        case Kind::table: {
            auto it = table_.find(d);
            return it == table_.end() ? table_tail_ : it->second;
        }
    }
    return 0.0;
}

bool ArithmeticFunction::has_exact_values() const {
    return kind_ == Kind::identity || kind_ == Kind::reciprocal || kind_ == Kind::prime_n;
}

Rational ArithmeticFunction::exact_value(long long d) const {
    if (d < 2) throw std::domain_error("arithmetic function: digit must be >= 2");
    switch (kind_) {
        case Kind::identity: return Rational(to_bigint(d));
        case Kind::reciprocal: return Rational(BigInt(1), to_bigint(d));
        case Kind::prime_n:
            return is_prime_u64((unsigned long long)d) ? Rational(to_bigint(d)) : Rational(0);
        default: throw std::logic_error("arithmetic function has no exact values");
    }
}

Rational ArithmeticFunction::tail_inf_exact(long long B) const {
    switch (kind_) {
        case Kind::identity: return Rational(to_bigint(B + 1));
        case Kind::reciprocal: return Rational(0);  // closed hull; 0 is not attained
        case Kind::prime_n: return Rational(0);     // composites occur beyond every B
        default: throw std::logic_error("no exact tail bound");
    }
}

std::optional<Rational> ArithmeticFunction::tail_sup_exact(long long B) const {
    switch (kind_) {
        case Kind::identity: return std::nullopt;
        case Kind::reciprocal: return Rational(BigInt(1), to_bigint(std::max(2ll, B + 1)));
        case Kind::prime_n: return std::nullopt;    // primes are unbounded
        default: throw std::logic_error("no exact tail bound");
    }
}

double ArithmeticFunction::tail_inf(long long B) const {
    switch (kind_) {
        case Kind::identity: return double(B + 1);
        case Kind::logarithm: return std::log(double(std::max(2ll, B + 1)));
        case Kind::reciprocal: return 0.0;
        case Kind::prime_n: return 0.0;
        case Kind::table: {
            double m = table_tail_;
            for (auto& [d, v] : table_)
                if (d > B) m = std::min(m, v);
            return m;
        }
    }
    return 0.0;
}

std::optional<double> ArithmeticFunction::tail_sup(long long B) const {
    switch (kind_) {
        case Kind::identity:
        case Kind::logarithm:
        case Kind::prime_n: return std::nullopt;
        case Kind::reciprocal: return 1.0 / double(std::max(2ll, B + 1));
        case Kind::table: {
            double m = table_tail_;
            for (auto& [d, v] : table_)
                if (d > B) m = std::max(m, v);
            return m;
        }
    }
    return std::nullopt;
}

} // namespace bcf
