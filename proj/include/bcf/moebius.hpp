#pragma once

#include "bcf/rational.hpp"

namespace bcf {

/// Integer-matrix fractional-linear map y -> (a*y + b)/(c*y + d).
/// Compositions of inverse branches of the Renyi map stay unimodular
/// (determinant exactly 1), which keeps every cylinder length exact.
struct MoebiusMap {
    BigInt a, b, c, d;

    static MoebiusMap identity() { return {1, 0, 0, 1}; }

    BigInt det() const { return a * d - b * c; }

    /// this ∘ rhs, i.e. apply rhs first.
    MoebiusMap compose(const MoebiusMap& rhs) const {
        return {a * rhs.a + b * rhs.c, a * rhs.b + b * rhs.d,
                c * rhs.a + d * rhs.c, c * rhs.b + d * rhs.d};
    }

    Rational apply(const Rational& y) const {
        BigInt p = y.num(), q = y.den();
        return Rational(a * p + b * q, c * p + d * q);
    }

    /// Divide out the sign so that the bottom-right entry is positive.
    /// Entries of branch compositions share no common factor (det = 1),
    /// so sign is the only normalization ever needed.
    MoebiusMap normalized() const {
        if (d < 0 || (d == 0 && c < 0)) return {-a, -b, -c, -d};
        return *this;
    }

    bool operator==(const MoebiusMap& o) const = default;
};

} // namespace bcf
