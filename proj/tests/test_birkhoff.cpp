#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bcf/birkhoff.hpp"

using namespace bcf;

TEST_CASE("birkhoff means at reference points") {
    auto id = ArithmeticFunction::identity();
    auto lg = ArithmeticFunction::logarithm();
    CHECK(birkhoff_mean(id, Rational(0), 5) == doctest::Approx(2.0));
    CHECK(birkhoff_mean(id, Rational(1, 2), 4) == doctest::Approx(9.0 / 4.0));
    CHECK(birkhoff_mean(lg, Rational(0), 9) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("three means of reference orbits") {
    ThreeMeans m0 = three_means(Rational(0), 6);
    CHECK(m0.harmonic == doctest::Approx(2.0));
    CHECK(m0.geometric == doctest::Approx(2.0));
    CHECK(m0.arithmetic == doctest::Approx(2.0));

    // digits of 1/2 at n = 2 are (3, 2)
    ThreeMeans mh = three_means(Rational(1, 2), 2);
    CHECK(mh.harmonic == doctest::Approx(12.0 / 5.0));
    CHECK(mh.geometric == doctest::Approx(std::sqrt(6.0)));
    CHECK(mh.arithmetic == doctest::Approx(5.0 / 2.0));
}

TEST_CASE("mean inequality chain on sampled dyadics") {
    std::mt19937_64 eng(101);
    for (int it = 0; it < 2000; ++it) {
        unsigned long long m = eng();
        Rational x(to_bigint((long long)(m >> 1)), BigInt(1) << 63);
        ThreeMeans t = three_means(x, 40);
        CHECK(t.harmonic <= t.geometric + 1e-12);
        CHECK(t.geometric <= t.arithmetic + 1e-12);
    }
}

TEST_CASE("eventually-all-2 rationals: means approach 2 like C/n") {
    // digits of 1/2 are 3,2,2,...; the finite prefix forces |mean - 2| <= C/n
    for (long n : {8L, 32L, 128L, 512L}) {
        ThreeMeans t = three_means(Rational(1, 2), n);
        CHECK(std::abs(t.arithmetic - 2.0) <= 1.0 / double(n) + 1e-12);
        CHECK(std::abs(t.geometric - 2.0) <= 1.0 / double(n) + 1e-12);
        CHECK(std::abs(t.harmonic - 2.0) <= 1.0 / double(n) + 1e-12);
    }
}

TEST_CASE("birkhoff records keep the mean between the extreme psi values") {
    std::mt19937_64 eng(55);
    auto lg = ArithmeticFunction::logarithm();
    for (int it = 0; it < 200; ++it) {
        Rational x(to_bigint((long long)(eng() >> 1)), BigInt(1) << 63);
        BirkhoffRecord r = birkhoff_record(lg, x, 25);
        DigitWord w = digits(x, 25);
        double mn = 1e300, mx = -1e300;
        for (long long b : w) {
            mn = std::min(mn, lg(b));
            mx = std::max(mx, lg(b));
        }
        CHECK(r.mean >= mn - 1e-12);
        CHECK(r.mean <= mx + 1e-12);
    }
}

TEST_CASE("digit frequencies are exact") {
    CHECK(digit_frequency(Rational(0), 7, 2) == Rational(1));
    CHECK(digit_frequency(Rational(1, 2), 4, 3) == Rational(1, 4));
    CHECK(digit_frequency(Rational(1, 3), 3, 2) == Rational(2, 3));
}

TEST_CASE("arithmetic function presets and table validation") {
    auto pr = ArithmeticFunction::prime_n();
    CHECK(pr(2) == 2.0);
    CHECK(pr(4) == 0.0);
    CHECK(pr(97) == 97.0);
    CHECK(pr(91) == 0.0);  // 7 * 13
    CHECK(ArithmeticFunction::reciprocal()(4) == doctest::Approx(0.25));
    CHECK_THROWS_AS(ArithmeticFunction::table({{2, 1.0}, {3, 1.0}}, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(ArithmeticFunction::by_name("nope"), std::invalid_argument);
}

TEST_CASE("64-bit primality helper against a sieve") {
    std::vector<bool> sieve(10000, true);
    sieve[0] = sieve[1] = false;
    for (int i = 2; i < 10000; ++i)
        if (sieve[i])
            for (int j = 2 * i; j < 10000; j += i) sieve[j] = false;
    for (int i = 0; i < 10000; ++i) CHECK(is_prime_u64(i) == sieve[i]);
    CHECK(is_prime_u64(2305843009213693951ull));   // 2^61 - 1
    CHECK(!is_prime_u64(2305843009213693953ull));
}
