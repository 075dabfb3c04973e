#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bcf/markov.hpp"

using namespace bcf;

TEST_CASE("entropy of simple measures") {
    auto fair = DigitMarkovMeasure::bernoulli({2, 3}, {0.5, 0.5});
    CHECK(entropy(fair) == doctest::Approx(std::log(2.0)));

    auto det = DigitMarkovMeasure::bernoulli({5}, {1.0});
    CHECK(entropy(det) == doctest::Approx(0.0));

    double p = 0.3;
    auto bern = DigitMarkovMeasure::bernoulli({2, 3}, {1 - p, p});
    CHECK(entropy(bern) == doctest::Approx(-p * std::log(p) - (1 - p) * std::log(1 - p)));
}

TEST_CASE("markov validation and stationary vectors") {
    DigitMarkovMeasure m;
    m.alphabet = {2, 3};
    m.P = {{0.9, 0.1}, {0.5, 0.5}};
    m.validate_and_fix_stationary();
    // pi = (5/6, 1/6)
    CHECK(m.pi[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
    CHECK(m.pi[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-9));

    DigitMarkovMeasure bad;
    bad.alphabet = {2, 3};
    bad.P = {{0.9, 0.2}, {0.5, 0.5}};
    CHECK_THROWS_AS(bad.validate_and_fix_stationary(), std::invalid_argument);
}

TEST_CASE("fixed point atoms enclose the quadratic fixed points") {
    auto a2 = FixedPointAtom::make(2);
    CHECK(a2.chi.lo == 0.0);
    CHECK(a2.chi.hi == 0.0);

    auto a3 = FixedPointAtom::make(3);
    // p_3 = (sqrt(5) - 1)/2, chi = -2 log(1 - p_3)
    double p3 = (std::sqrt(5.0) - 1.0) / 2.0;
    CHECK(a3.p_lo.to_double() == doctest::Approx(p3).epsilon(1e-15));
    CHECK(a3.chi.contains(-2.0 * std::log(1.0 - p3)));
    CHECK(a3.chi.contains(1.9248473002384139));
    CHECK(a3.chi.width() < 1e-12);

    // the enclosure midpoint is mapped almost onto itself
    for (long long k : {3ll, 5ll, 17ll, 1000ll}) {
        auto a = FixedPointAtom::make(k);
        Rational mid = (a.p_lo + a.p_hi) * Rational(1, 2);
        double drift = (renyi_apply(mid) - mid).to_double();
        CHECK(std::abs(drift) < 1e-12);
        // the fixed point sits inside the digit-k cylinder
        CHECK(a.p_lo >= Rational(1) - Rational(1, k - 1));
        CHECK(a.p_hi < Rational(1) - Rational(1, k));
    }
}

TEST_CASE("atom expansion never exceeds 2 log k") {
    for (long long k = 2; k <= 10'000; k = k < 60 ? k + 1 : k * 7 / 4) {
        auto a = FixedPointAtom::make(k);
        CHECK(a.chi.hi <= 2.0 * std::log(double(k)) + 1e-12);
    }
}

TEST_CASE("lyapunov brackets") {
    // digit-2 atom as a degenerate chain: bracket must contain 0
    auto d2 = DigitMarkovMeasure::bernoulli({2}, {1.0});
    Interval i2 = lyapunov_bracket(d2, 10);
    CHECK(i2.contains(0.0));

    // digit-3 atom as a degenerate chain contains the quadratic oracle value
    auto d3 = DigitMarkovMeasure::bernoulli({3}, {1.0});
    Interval i3 = lyapunov_bracket(d3, 10);
    CHECK(i3.contains(1.9248473002384139));

    // width <= 2 D_depth / depth and shrinking in depth
    auto bern = DigitMarkovMeasure::bernoulli({2, 3}, {0.6, 0.4});
    Interval a = lyapunov_bracket(bern, 6);
    Interval b = lyapunov_bracket(bern, 12);
    CHECK(a.width() <= 2.0 * distortion_budget(6) / 6.0 + 1e-9);
    CHECK(b.width() <= 2.0 * distortion_budget(12) / 12.0 + 1e-9);
    CHECK(b.width() < a.width());
    // nested up to the stated tolerance: deeper bracket stays inside
    CHECK(b.lo >= a.lo - 1e-9);
    CHECK(b.hi <= a.hi + 1e-9);

    CHECK_THROWS_AS(lyapunov_bracket(bern, 40), ResourceError);
}

TEST_CASE("stats of the neutral atom and a fixed-point atom") {
    auto id = ArithmeticFunction::identity();
    MeasureStats s0 = stats(Measure{FixedPointAtom::make(2)}, id, 8);
    CHECK(s0.h == 0.0);
    CHECK(s0.chi.contains(0.0));
    CHECK(s0.F.contains(0.0));
    CHECK(s0.psi_integral == doctest::Approx(2.0));
    CHECK(!s0.dim.has_value());

    MeasureStats s3 = stats(Measure{FixedPointAtom::make(3)}, id, 8);
    CHECK(s3.h == 0.0);
    CHECK(s3.psi_integral == doctest::Approx(3.0));
    CHECK(s3.F.contains(-1.9248473002384139));
    CHECK(s3.dim.has_value());
    CHECK(s3.dim->contains(0.0));
}

TEST_CASE("mixture statistics combine affinely") {
    auto id = ArithmeticFunction::identity();
    auto bern = DigitMarkovMeasure::bernoulli({2, 3}, {0.6, 0.4});
    auto atom = FixedPointAtom::make(7);
    MixtureMeasure mix;
    mix.components.push_back({0.75, bern});
    mix.components.push_back({0.25, atom});

    MeasureStats sm = stats(Measure{mix}, id, 10);
    MeasureStats sb = stats(Measure{bern}, id, 10);
    MeasureStats sa = stats(Measure{atom}, id, 10);
    CHECK(sm.h == doctest::Approx(0.75 * sb.h + 0.25 * sa.h).epsilon(1e-12));
    CHECK(sm.psi_integral ==
          doctest::Approx(0.75 * sb.psi_integral + 0.25 * sa.psi_integral).epsilon(1e-12));
    CHECK(sm.chi.lo == doctest::Approx(0.75 * sb.chi.lo + 0.25 * sa.chi.lo).epsilon(1e-9));
    CHECK(sm.chi.hi == doctest::Approx(0.75 * sb.chi.hi + 0.25 * sa.chi.hi).epsilon(1e-9));

    MixtureMeasure bad;
    bad.components.push_back({0.5, bern});
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("entropy never exceeds the expansion bracket for invariant measures") {
    // h(mu) <= chi(mu): F upper endpoint stays below the bracket width slack
    for (double p : {0.1, 0.25, 0.4, 0.6, 0.8}) {
        auto bern = DigitMarkovMeasure::bernoulli({2, 3}, {1 - p, p});
        MeasureStats s = stats(Measure{bern}, ArithmeticFunction::identity(), 14);
        CHECK(s.F.lo <= 1e-12);  // the true F is <= 0; the bracket may round
    }
}

TEST_CASE("flat-rate witness family for the arithmetic mean") {
    auto res = theorem_c_sequence(ArithmeticFunction::identity(), 5, {100000, 12});
    REQUIRE(res.applicable);
    REQUIRE(res.rows.size() == 5);
    CHECK(res.rows[0].n_k == 2);  // 2/log 2 = 2.885 >= 1
    CHECK(res.rows[1].n_k == 2);  // and >= 2
    CHECK(res.rows[2].n_k == 5);  // 5/log 5 = 3.107 >= 3
    for (auto& d : res.rows) {
        CHECK(d.r_k >= 1.0);
        // the paper-style chain: integral >= psi(n_k)/r_k
        CHECK(d.mix_stats.psi_integral >= d.psi_nk_over_rk - 1e-9);
        // mixtures of invariant measures keep F <= 0 up to bracket slack
        CHECK(d.mix_stats.F.lo <= 1e-9);
    }
    // n_k grows with k
    for (size_t i = 1; i < res.rows.size(); ++i)
        CHECK(res.rows[i].n_k >= res.rows[i - 1].n_k);
}

TEST_CASE("slowly growing psi is reported as failing the growth test") {
    auto res = theorem_c_sequence(ArithmeticFunction::logarithm(), 3, {5000, 10});
    CHECK(!res.applicable);
    CHECK(res.message.find("fails") != std::string::npos);
}
