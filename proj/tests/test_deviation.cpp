#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "bcf/birkhoff.hpp"
#include "bcf/deviation.hpp"
#include "bcf/renyi.hpp"

using namespace bcf;

namespace {

MeanWindow closed(const Rational& lo, const Rational& hi) {
    return {Endpoint::finite(lo, true), Endpoint::finite(hi, true)};
}

// independent oracle: enumerate all capped words with cylinder() and sum the
// lengths of those whose psi-mean lies in the (closed, finite) window
Rational brute_force_measure(const ArithmeticFunction& psi, long n, const Rational& lo,
                             const Rational& hi, long long B) {
    Rational total(0);
    DigitWord w(n, 2);
    for (;;) {
        Rational s(0);
        for (long long b : w) s += psi.exact_value(b);
        Rational mean = s / Rational(n);
        if (mean >= lo && mean <= hi) total += cylinder(w).length();
        long i = n - 1;
        while (i >= 0 && w[i] == B) { w[i] = 2; --i; }
        if (i < 0) break;
        w[i]++;
    }
    return total;
}

} // namespace

TEST_CASE("depth-1 windows have the textbook masses") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 1;
    q.J = closed(Rational(3), Rational(4));
    q.cap = 10;
    auto e = exact_measure(q);
    CHECK(e.lower.exact);
    CHECK(e.lower.value == Rational(1, 4));  // digits 3 and 4
    CHECK(e.tail_unresolved.value == Rational(0));
    CHECK(e.outside.value == Rational(3, 4));

    q.J = closed(Rational(2), Rational(2));
    auto e2 = exact_measure(q);
    CHECK(e2.lower.value == Rational(1, 2));  // the digit-2 branch

    // below the digit alphabet nothing qualifies
    q.J = closed(Rational(0), Rational(3, 2));
    CHECK(exact_measure(q).lower.value == Rational(0));
}

TEST_CASE("tail becomes zero exactly when uncapped digits are provably out") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 1;
    q.J = closed(Rational(3), Rational(4));
    q.cap = 3;  // digit 4 is beyond the cap and cannot be ruled out
    auto e = exact_measure(q);
    CHECK(e.lower.value == Rational(1, 6));            // digit 3 only
    CHECK(e.tail_unresolved.value == Rational(1, 3));  // all of [2/3, 1)
    q.cap = 4;
    auto e2 = exact_measure(q);
    CHECK(e2.lower.value == Rational(1, 4));
    CHECK(e2.tail_unresolved.value == Rational(0));
}

TEST_CASE("depth-2 enumeration agrees with the independent brute force") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 2;
    q.J = closed(Rational(5, 2), Rational(3));
    q.cap = 8;
    auto e = exact_measure(q);
    // words with digit sum in [5, 6]: (2,3),(2,4),(3,2),(3,3),(4,2)
    Rational expect = cylinder({2, 3}).length() + cylinder({2, 4}).length() +
                      cylinder({3, 2}).length() + cylinder({3, 3}).length() +
                      cylinder({4, 2}).length();
    CHECK(e.lower.value == expect);
    CHECK(e.lower.value == brute_force_measure(q.psi, 2, Rational(5, 2), Rational(3), 8));
    CHECK(e.tail_unresolved.value == Rational(0));
}

TEST_CASE("accounting: lower + tail + outside = 1 exactly") {
    std::mt19937_64 eng(5);
    for (int it = 0; it < 12; ++it) {
        DeviationQuery q;
        int which = it % 3;
        q.psi = which == 0 ? ArithmeticFunction::identity()
                           : which == 1 ? ArithmeticFunction::reciprocal()
                                        : ArithmeticFunction::prime_n();
        q.n = 1 + int(eng() % 4);
        long a = 2 + long(eng() % 4), b = a + long(eng() % 3);
        if (which == 1)
            q.J = closed(Rational(1, a + 2), Rational(1, std::max(2l, a - 1)));
        else
            q.J = closed(Rational(a), Rational(b));
        q.cap = 5 + long(eng() % 8);
        auto e = exact_measure(q);
        REQUIRE(e.lower.exact);
        REQUIRE(e.tail_unresolved.exact);
        REQUIRE(e.outside.exact);
        CHECK(e.lower.value + e.tail_unresolved.value + e.outside.value == Rational(1));
    }
}

TEST_CASE("random small instances agree with brute force across psi kinds") {
    std::mt19937_64 eng(77);
    for (int it = 0; it < 10; ++it) {
        DeviationQuery q;
        q.psi = it % 2 ? ArithmeticFunction::identity() : ArithmeticFunction::prime_n();
        q.n = 2 + int(eng() % 2);
        long a = 2 + long(eng() % 3);
        Rational lo(a), hi = Rational(a) + Rational(1 + long(eng() % 2), 1 + long(eng() % 2));
        q.J = closed(lo, hi);
        q.cap = 6 + long(eng() % 5);
        auto e = exact_measure(q);
        Rational brute = brute_force_measure(q.psi, q.n, lo, hi, q.cap);
        // bounded windows with unbounded psi can only certify fully-placed
        // capped words, exactly what the brute force sums
        CHECK(e.lower.value == brute);
    }
}

TEST_CASE("reciprocal windows: decreasing leaf runs against brute force") {
    std::mt19937_64 eng(78);
    for (int it = 0; it < 8; ++it) {
        DeviationQuery q;
        q.psi = ArithmeticFunction::reciprocal();
        q.n = 2 + int(eng() % 2);
        long d1 = 3 + long(eng() % 5), d2 = 2 + long(eng() % 2);
        Rational lo(1, d1 + 2), hi(1, d2);
        q.J = closed(lo, hi);
        q.cap = 7 + long(eng() % 6);
        auto e = exact_measure(q);
        // reciprocal is bounded, so whole subtrees can be certified; compare
        // against brute force plus the undecided big-digit classes
        Rational brute = brute_force_measure(q.psi, q.n, lo, hi, q.cap);
        CHECK(e.lower.value >= brute);
        CHECK(e.lower.value + e.tail_unresolved.value + e.outside.value == Rational(1));
        // upper estimate stays above the true capped mass
        CHECK(e.lower.value + e.tail_unresolved.value >= brute);
    }
}

TEST_CASE("logarithm windows decide membership through integer powers") {
    // mean of log-digits >= log 3 iff the digit product >= 3^n = 9; words with
    // a digit beyond the cap all have product >= 2*13 >= 9, so the window is
    // fully resolved and the certified-in mass is the true measure
    DeviationQuery q;
    q.psi = ArithmeticFunction::logarithm();
    q.n = 2;
    q.J = {Endpoint::log_of(Rational(3), true), Endpoint::plus_infinity()};
    q.cap = 12;
    auto e = exact_measure(q);
    Rational below(0);
    for (long long b1 = 2; b1 <= 12; ++b1)
        for (long long b2 = 2; b2 <= 12; ++b2)
            if (b1 * b2 < 9) below += cylinder({b1, b2}).length();
    CHECK(e.lower.value == Rational(1) - below);
    CHECK(e.tail_unresolved.value == Rational(0));
    CHECK(e.outside.value == below);

    // a bounded window with a small cap leaves straddling big-digit classes
    q.J = {Endpoint::log_of(Rational(3), true), Endpoint::log_of(Rational(4), true)};
    q.cap = 6;
    auto e2 = exact_measure(q);
    CHECK(e2.tail_unresolved.value > Rational(0));
    CHECK(e2.lower.value + e2.tail_unresolved.value + e2.outside.value == Rational(1));
    // independent brute force on the capped words that are decidable
    Rational in_capped(0);
    for (long long b1 = 2; b1 <= 6; ++b1)
        for (long long b2 = 2; b2 <= 6; ++b2)
            if (b1 * b2 >= 9 && b1 * b2 <= 16) in_capped += cylinder({b1, b2}).length();
    CHECK(e2.lower.value == in_capped);
}

TEST_CASE("machine-word engine brackets the exact-rational walker") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::logarithm();
    q.n = 5;
    q.cap = 40;
    q.J = {Endpoint::log_of(Rational(3), true), Endpoint::plus_infinity()};
    q.max_nodes = 400'000'000ull;
    q.exact_term_limit = 1'000'000'000ull;

    q.fast_path_min_words = 1e300;  // force the generic exact walker
    auto slow = exact_measure(q);
    REQUIRE(slow.lower.exact);
    q.fast_path_min_words = 1.0;    // force the fast engine
    auto fast = exact_measure(q);
    REQUIRE(!fast.lower.exact);

    CHECK(fast.lower.lo <= slow.lower.value.to_double());
    CHECK(slow.lower.value.to_double() <= fast.lower.hi);
    CHECK(fast.lower.hi - fast.lower.lo < 1e-9);
    CHECK(fast.tail_unresolved.lo <= slow.tail_unresolved.value.to_double() + 1e-12);
    CHECK(slow.tail_unresolved.value.to_double() <= fast.tail_unresolved.hi + 1e-12);
    CHECK(fast.nodes == slow.nodes);  // identical tree shape
}

TEST_CASE("open log endpoints exclude the boundary word") {
    // (3,3) has product exactly 3^2; open lower endpoint drops it
    DeviationQuery q;
    q.psi = ArithmeticFunction::logarithm();
    q.n = 2;
    q.cap = 12;
    q.J = {Endpoint::log_of(Rational(3), true), Endpoint::plus_infinity()};
    auto closed_e = exact_measure(q);
    q.J = {Endpoint::log_of(Rational(3), false), Endpoint::plus_infinity()};
    auto open_e = exact_measure(q);
    CHECK(closed_e.lower.value - open_e.lower.value == cylinder({3, 3}).length());
}

TEST_CASE("accumulators demote to rigorous dyadic brackets past the term limit") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 4;
    q.J = closed(Rational(5, 2), Rational(3));
    q.cap = 12;
    auto exact = exact_measure(q);
    REQUIRE(exact.lower.exact);
    q.exact_term_limit = 2;
    auto demoted = exact_measure(q);
    CHECK(!demoted.lower.exact);
    double v = exact.lower.value.to_double();
    CHECK(demoted.lower.lo <= v);
    CHECK(v <= demoted.lower.hi);
    CHECK(demoted.lower.hi - demoted.lower.lo < 1e-12);
}

TEST_CASE("unbounded windows certify everything at the root") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 6;
    q.J = {Endpoint::finite(Rational(2), true), Endpoint::plus_infinity()};
    q.cap = 9;
    auto e = exact_measure(q);
    CHECK(e.lower.value == Rational(1));
    CHECK(e.nodes == 1);
}

TEST_CASE("enumeration budget raises a resource error") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 10;
    q.J = closed(Rational(3), Rational(4));
    q.cap = 40;
    q.max_nodes = 50;
    CHECK_THROWS_AS(exact_measure(q), ResourceError);
}

TEST_CASE("monte carlo hits trivial windows exactly") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 5;
    q.samples = 20000;
    q.seed = 42;
    q.method = DeviationMethod::monte_carlo;
    q.J = {Endpoint::finite(Rational(2), true), Endpoint::plus_infinity()};
    CHECK(mc_measure(q).estimate == 1.0);
    q.J = closed(Rational(0), Rational(3, 2));
    CHECK(mc_measure(q).estimate == 0.0);
}

TEST_CASE("monte carlo is reproducible and matches the exact value at depth 1") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 1;
    q.J = closed(Rational(3), Rational(4));
    q.cap = 10;
    Rational exact = exact_measure(q).lower.value;  // 1/4
    q.method = DeviationMethod::monte_carlo;
    q.samples = 1'000'000;
    q.seed = 7;
    auto a = mc_measure(q);
    auto b = mc_measure(q);
    CHECK(a.hits == b.hits);
    CHECK(std::abs(a.estimate - exact.to_double()) <= 4.0 * a.std_error);
    // threads shard by block and merge exact counters, so counts are stable
    q.threads = 3;
    CHECK(mc_measure(q).hits == a.hits);
}

TEST_CASE("exact and monte carlo agree on a mid-size window") {
    DeviationQuery q;
    q.psi = ArithmeticFunction::identity();
    q.n = 4;
    q.J = closed(Rational(5, 2), Rational(3));
    q.cap = 12;
    auto ex = exact_measure(q);
    double p = ex.lower.value.to_double();
    q.method = DeviationMethod::monte_carlo;
    q.samples = 200'000;
    int agub = 0;
    for (unsigned long long seed = 1; seed <= 6; ++seed) {
        q.seed = seed;
        auto mc = mc_measure(q);
        double se = std::max(mc.std_error, 1e-9);
        if (std::abs(mc.estimate - p) <= 4 * se + ex.tail_unresolved.hi) ++agub;
    }
    CHECK(agub >= 5);
}

TEST_CASE("explicit mean-window sets: the worked example") {
    auto b = bn_measure(3, closed(Rational(3), Rational(4)));
    CHECK(b.z == 10);
    CHECK(b.m == 6);
    CHECK(b.preimage_lo == Rational(4, 5));
    CHECK(b.preimage_hi == Rational(5, 6));
    CHECK(b.set_lo == Rational(4, 17));
    CHECK(b.set_hi == Rational(5, 21));
    CHECK(b.measure == Rational(1, 357));
    CHECK(b.mean == Rational(12, 4));
    CHECK(b.mean_certified);
}

TEST_CASE("points inside the set have the advertised digit pattern") {
    std::mt19937_64 eng(31);
    for (long n : {3L, 5L, 9L}) {
        auto b = bn_measure(n, closed(Rational(3), Rational(4)));
        long long m = (long long)b.m.get_si();
        for (int it = 0; it < 100; ++it) {
            // random rational strictly inside [set_lo, set_hi)
            unsigned long long t = eng() % 1000;
            Rational x = b.set_lo + (b.set_hi - b.set_lo) * Rational(long(t), 1001);
            DigitWord w = digits(x, n + 1);
            for (long j = 0; j < n; ++j) REQUIRE(w[j] == 2);
            REQUIRE(w[n] == m);
            // mean over the first n+1 digits lands in the window
            Rational mean(to_bigint(2 * n + m), long(n + 1));
            CHECK(mean >= Rational(3));
            CHECK(mean <= Rational(4));
        }
    }
}

TEST_CASE("two-block orbits realize arbitrarily large arithmetic means") {
    // the neutral orbit pins mean 2; a run of 2s followed by one large digit
    // pushes the mean to any target, so the identity observable has
    // effective range [2, oo)
    CHECK(three_means(Rational(0), 50).arithmetic == doctest::Approx(2.0));
    for (long long big : {100ll, 10'000ll, 1'000'000ll}) {
        DigitWord w{2, 2, 2, 2, 2, big};
        CylinderInterval cyl = cylinder(w);
        Rational x = (cyl.lo + cyl.hi) * Rational(1, 2);
        CHECK(digits(x, 6) == w);
        ThreeMeans t = three_means(x, 6);
        CHECK(t.arithmetic >= double(big) / 6.0);
    }
}

TEST_CASE("window validation for the explicit sets") {
    CHECK_THROWS_AS(bn_measure(1, closed(Rational(3), Rational(4))), std::invalid_argument);
    CHECK_THROWS_AS(bn_measure(5, {Endpoint::finite(Rational(3), true), Endpoint::plus_infinity()}),
                    std::invalid_argument);
    CHECK_THROWS_AS(bn_measure(9, closed(Rational(3, 2), Rational(4))), std::invalid_argument);
    // a window hugging 2 still admits m = 3, the smallest legal landing digit
    auto b = bn_measure(40, closed(Rational(201, 100), Rational(3)));
    CHECK(b.m == 3);
    CHECK(b.mean_certified);
}

TEST_CASE("rate fitting separates exponential from polynomial decay") {
    std::vector<std::pair<double, double>> exp_series, poly_series;
    for (int n = 3; n <= 60; ++n) {
        exp_series.push_back({double(n), std::exp(-0.3 * n)});
        poly_series.push_back({double(n), std::pow(double(n), -5.0)});
    }
    auto fe = rate_fit(exp_series);
    CHECK(fe.exp_rate == doctest::Approx(-0.3).epsilon(1e-9));
    CHECK(fe.exp_residual_rms < 1e-10);
    CHECK(fe.poly_residual_rms > 0.1);

    auto fp = rate_fit(poly_series);
    CHECK(fp.poly_exponent == doctest::Approx(-5.0).epsilon(1e-9));
    CHECK(fp.poly_residual_rms < 1e-10);
    CHECK(fp.exp_residual_rms > 0.1);

    // zero entries are dropped with a count
    poly_series.push_back({61.0, 0.0});
    auto fz = rate_fit(poly_series);
    CHECK(fz.points_dropped == 1);
    CHECK_THROWS_AS(rate_fit({{1.0, 0.5}, {2.0, 0.2}}), std::invalid_argument);
}
