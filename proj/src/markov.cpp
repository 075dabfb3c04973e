#include "bcf/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bcf {

namespace {

double up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
double dn(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }

} // namespace

DigitMarkovMeasure DigitMarkovMeasure::bernoulli(std::vector<long long> digits,
                                                 std::vector<double> weights) {
    if (digits.size() != weights.size() || digits.empty())
        throw std::invalid_argument("bernoulli: digit/weight size mismatch");
    DigitMarkovMeasure m;
    m.alphabet = std::move(digits);
    m.P.assign(m.alphabet.size(), weights);
    m.pi = weights;
    m.validate_and_fix_stationary();
    return m;
}

DigitMarkovMeasure DigitMarkovMeasure::full_alphabet_bernoulli(long long B,
                                                               const std::vector<double>& weights) {
    std::vector<long long> digits;
    for (long long b = 2; b <= B; ++b) digits.push_back(b);
    return bernoulli(std::move(digits), weights);
}

std::size_t DigitMarkovMeasure::index_of(long long digit) const {
    auto it = std::lower_bound(alphabet.begin(), alphabet.end(), digit);
    if (it == alphabet.end() || *it != digit)
        throw std::invalid_argument("digit not in alphabet");
    return std::size_t(it - alphabet.begin());
}

void DigitMarkovMeasure::validate_and_fix_stationary() {
    const std::size_t k = alphabet.size();
    if (k == 0) throw std::invalid_argument("empty alphabet");
    for (std::size_t i = 0; i + 1 < k; ++i)
        if (alphabet[i] >= alphabet[i + 1])
            throw std::invalid_argument("alphabet must be strictly increasing");
    if (alphabet.front() < 2) throw std::invalid_argument("digits must be >= 2");
    if (P.size() != k) throw std::invalid_argument("transition matrix shape mismatch");
    for (auto& row : P) {
        if (row.size() != k) throw std::invalid_argument("transition matrix shape mismatch");
        double s = 0;
        for (double v : row) {
            if (v < 0) throw std::invalid_argument("negative transition probability");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("transition rows must sum to 1 within 1e-12");
    }
    // stationary vector by power iteration
    std::vector<double> v(k, 1.0 / double(k)), nv(k);
    for (int it = 0; it < 200000; ++it) {
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0;
            for (std::size_t i = 0; i < k; ++i) s += v[i] * P[i][j];
            nv[j] = s;
        }
        double norm = 0;
        for (double x : nv) norm += x;
        for (double& x : nv) x /= norm;
        double diff = 0;
        for (std::size_t j = 0; j < k; ++j) diff = std::max(diff, std::abs(nv[j] - v[j]));
        v = nv;
        if (diff < 1e-13) break;
    }
    pi = v;
    // residual check: pi P = pi within 1e-10
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < k; ++i) s += pi[i] * P[i][j];
        if (std::abs(s - pi[j]) > 1e-10)
            throw std::runtime_error("stationary vector failed to converge to 1e-10");
    }
}

double entropy(const DigitMarkovMeasure& m) {
    double h = 0;
    for (std::size_t i = 0; i < m.alphabet.size(); ++i)
        for (double p : m.P[i])
            if (p > 0) h -= m.pi[i] * p * std::log(p);
    return h;
}

FixedPointAtom FixedPointAtom::make(long long k) {
    if (k < 2) throw std::invalid_argument("fixed point atom: digit must be >= 2");
    FixedPointAtom a;
    a.digit = k;
    if (k == 2) {
        a.p_lo = Rational(0);
        a.p_hi = Rational(0);
        a.chi = {0.0, 0.0};
        return a;
    }
    // p = (2 - k + sqrt(k^2 - 4)) / 2, enclosed via a scaled integer sqrt
    const unsigned shift = 96;
    BigInt disc = (to_bigint(k) * to_bigint(k) - 4) << (2 * shift);
    BigInt s;
    mpz_sqrt(s.get_mpz_t(), disc.get_mpz_t());  // floor sqrt
    BigInt two_shift = BigInt(1) << shift;
    a.p_lo = Rational(to_bigint(2 - k) * two_shift + s, two_shift * 2);
    a.p_hi = Rational(to_bigint(2 - k) * two_shift + s + 1, two_shift * 2);
    // chi = -2 log(1 - p), increasing in p
    double lo = -2.0 * log_rational(Rational(1) - a.p_lo);
    double hi = -2.0 * log_rational(Rational(1) - a.p_hi);
    a.chi = {dn(dn(lo)), up(up(hi))};
    return a;
}

void MixtureMeasure::validate() const {
    if (components.empty()) throw std::invalid_argument("empty mixture");
    double s = 0;
    for (auto& [w, c] : components) {
        if (w <= 0) throw std::invalid_argument("mixture weights must be positive");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-12)
        throw std::invalid_argument("mixture weights must sum to 1");
}

namespace {

struct WordEnum {
    const DigitMarkovMeasure& m;
    int depth;
    double D;  // distortion budget at this depth
    double lo_sum = 0, hi_sum = 0;
    unsigned long long words = 0, budget;

    void rec(std::size_t i, int placed, double prob, const MoebiusMap& mat) {
        if (prob == 0.0) return;
        if (placed == depth) {
            if (++words > budget)
                throw ResourceError("lyapunov_bracket: word budget exceeded; lower depth");
            // -log lambda(A_w) = log(d (c+d))
            double nll = log_bigint_ratio(mat.d * (mat.c + mat.d), BigInt(1));
            lo_sum += prob * (nll - D);
            hi_sum += prob * (nll + D);
            return;
        }
        for (std::size_t j = 0; j < m.alphabet.size(); ++j) {
            double p = placed == 0 ? m.pi[j] : m.P[i][j];
            rec(j, placed + 1, prob * p, mat.compose(inverse_branch(m.alphabet[j])).normalized());
        }
    }
};

} // namespace

Interval lyapunov_bracket(const DigitMarkovMeasure& m, int depth, unsigned long long word_budget) {
    if (depth < 1) throw std::invalid_argument("lyapunov_bracket: depth must be >= 1");
    double words = std::pow(double(m.alphabet.size()), depth);
    if (words > double(word_budget))
        throw ResourceError("lyapunov_bracket: |alphabet|^depth exceeds budget; suggested depth <= " +
                            std::to_string(long(std::log(double(word_budget)) /
                                                std::log(double(m.alphabet.size())))));
    WordEnum e{m, depth, distortion_budget(depth), 0, 0, 0, word_budget};
    e.rec(0, 0, 1.0, MoebiusMap::identity());
    double d = double(depth);
    return Interval{std::max(0.0, dn(e.lo_sum / d)), up(e.hi_sum / d)};
}

Interval lyapunov_bracket(const Measure& m, int depth, unsigned long long word_budget) {
    if (std::holds_alternative<DigitMarkovMeasure>(m))
        return lyapunov_bracket(std::get<DigitMarkovMeasure>(m), depth, word_budget);
    if (std::holds_alternative<FixedPointAtom>(m))
        return std::get<FixedPointAtom>(m).chi;
    const auto& mix = std::get<MixtureMeasure>(m);
    mix.validate();
    Interval acc{0, 0};
    for (auto& [w, comp] : mix.components) {
        Interval ci = std::holds_alternative<FixedPointAtom>(comp)
                          ? std::get<FixedPointAtom>(comp).chi
                          : lyapunov_bracket(std::get<DigitMarkovMeasure>(comp), depth, word_budget);
        acc = acc + ci.scaled(w);
    }
    return acc;
}

namespace {

double psi_integral_of(const ComponentMeasure& c, const ArithmeticFunction& psi) {
    if (std::holds_alternative<FixedPointAtom>(c))
        return psi(std::get<FixedPointAtom>(c).digit);
    const auto& m = std::get<DigitMarkovMeasure>(c);
    double s = 0;
    for (std::size_t i = 0; i < m.alphabet.size(); ++i) s += m.pi[i] * psi(m.alphabet[i]);
    return s;
}

double entropy_of(const ComponentMeasure& c) {
    if (std::holds_alternative<FixedPointAtom>(c)) return 0.0;
    return entropy(std::get<DigitMarkovMeasure>(c));
}

} // namespace

MeasureStats stats(const Measure& m, const ArithmeticFunction& psi, int depth) {
    MeasureStats st;
    if (std::holds_alternative<MixtureMeasure>(m)) {
        const auto& mix = std::get<MixtureMeasure>(m);
        mix.validate();
        // entropy and psi-integral are affine across mutually singular components
        for (auto& [w, c] : mix.components) {
            st.h += w * entropy_of(c);
            st.psi_integral += w * psi_integral_of(c, psi);
        }
    } else if (std::holds_alternative<FixedPointAtom>(m)) {
        const auto& a = std::get<FixedPointAtom>(m);
        st.h = 0.0;
        st.psi_integral = psi(a.digit);
    } else {
        const auto& mm = std::get<DigitMarkovMeasure>(m);
        st.h = entropy(mm);
        st.psi_integral = psi_integral_of(mm, psi);
    }
    st.chi = lyapunov_bracket(m, depth);
    st.F = Interval{st.h - st.chi.hi, st.h - st.chi.lo};
    if (st.chi.lo > 0)
        st.dim = Interval{st.h / st.chi.hi, st.h / st.chi.lo};
    return st;
}

TheoremCResult theorem_c_sequence(const ArithmeticFunction& psi, int K, const TheoremCConfig& cfg) {
    if (K < 1) throw std::invalid_argument("theorem_c_sequence: K must be >= 1");
    TheoremCResult res;
    long long n_prev = 2;
    for (int k = 1; k <= K; ++k) {
        // n_k: smallest n >= n_{k-1} with psi(n)/log(n) >= k
        long long nk = -1;
        for (long long n = n_prev; n <= cfg.n_max; ++n) {
            if (psi(n) / std::log(double(n)) >= double(k)) { nk = n; break; }
        }
        if (nk < 0) {
            res.applicable = false;
            res.message = "psi(n)/log n did not reach " + std::to_string(k) +
                          " for any n <= " + std::to_string(cfg.n_max) +
                          "; psi fails the unbounded-growth criterion at this scale";
            return res;
        }
        n_prev = nk;

        TheoremCDiag d;
        d.k = k;
        d.n_k = nk;
        d.r_k = std::max(1.0, std::sqrt(double(k)) * std::log(double(nk)));
        d.chi_threshold = 1.0 / std::sqrt(d.r_k / std::log(double(nk)));

        // tune the Bernoulli weight on digit 3 so the chi bracket clears the threshold
        double chosen_p = -1;
        DigitMarkovMeasure nu;
        for (double p = 0.02; p < 0.999; p += 0.02) {
            DigitMarkovMeasure cand = DigitMarkovMeasure::bernoulli({2, 3}, {1.0 - p, p});
            Interval chi = lyapunov_bracket(cand, cfg.chi_depth);
            if (chi.lo >= d.chi_threshold) { chosen_p = p; nu = cand; break; }
        }
        if (chosen_p < 0)
            throw std::runtime_error("theorem_c_sequence: no Bernoulli weight reaches the "
                                     "required expansion at this depth");
        d.bernoulli_weight_on_3 = chosen_p;

        MixtureMeasure mu;
        double wk = 1.0 / d.r_k;
        if (wk >= 1.0) {
            mu.components.push_back({1.0, FixedPointAtom::make(nk)});
        } else {
            mu.components.push_back({1.0 - wk, nu});
            mu.components.push_back({wk, FixedPointAtom::make(nk)});
        }
        d.measure = mu;
        d.mix_stats = stats(Measure{mu}, psi, cfg.chi_depth);
        d.psi_nk_over_rk = psi(nk) / d.r_k;
        res.rows.push_back(std::move(d));
    }
    return res;
}

} // namespace bcf
