#include "bcf/deviation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <thread>

namespace bcf {

// ---------------------------------------------------------------------------
// endpoints and windows

Endpoint Endpoint::log_of(const Rational& v, bool closed) {
    if (v.sign() <= 0) throw std::invalid_argument("log endpoint needs a positive rational");
    return {Kind::log_rational, v, closed};
}

double Endpoint::to_double() const {
    switch (kind) {
        case Kind::finite: return value.to_double();
        case Kind::log_rational: return log_rational(value);
        case Kind::minus_inf: return -std::numeric_limits<double>::infinity();
        case Kind::plus_inf: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

std::string Endpoint::str() const {
    switch (kind) {
        case Kind::finite: return value.str();
        case Kind::log_rational: return "log:" + value.str();
        case Kind::minus_inf: return "-inf";
        case Kind::plus_inf: return "inf";
    }
    return "";
}

std::string MeanWindow::str() const {
    std::string l = lo.closed ? "[" : "(";
    std::string r = hi.closed ? "]" : ")";
    return l + lo.str() + "," + hi.str() + r;
}

static void validate_window(const MeanWindow& J) {
    if (J.lo.kind == Endpoint::Kind::plus_inf || J.hi.kind == Endpoint::Kind::minus_inf)
        throw std::invalid_argument("degenerate mean window");
    if (J.lo.is_finite() && J.hi.is_finite() && J.lo.kind == J.hi.kind) {
        if (J.lo.value > J.hi.value ||
            (J.lo.value == J.hi.value && !(J.lo.closed && J.hi.closed)))
            throw std::invalid_argument("empty mean window");
    }
}

// ---------------------------------------------------------------------------
// mass accumulation: exact rational first, 2^-192 dyadic bracket beyond

namespace {

constexpr int kDyadicShift = 192;

double dir_up(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
double dir_dn(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }

class MassAccumulator {
public:
    explicit MassAccumulator(unsigned long long exact_limit) : limit_(exact_limit) {}

    void add(const Rational& r) {
        ++terms_;
        if (exact_) {
            sum_ += r;
            if (terms_ > limit_) demote();
        } else {
            add_dyadic(r);
        }
    }

    MassValue finish() const {
        MassValue m;
        m.exact = exact_;
        if (exact_) {
            m.value = sum_;
            m.lo = sum_.to_double();                 // mpq_get_d truncates toward zero
            m.hi = sum_.sign() == 0 ? 0.0 : dir_up(m.lo);
        } else {
            m.lo = std::max(0.0, std::ldexp(mpz_get_d(dlo_.get_mpz_t()), -kDyadicShift));
            double h = std::ldexp(mpz_get_d(dhi_.get_mpz_t()), -kDyadicShift);
            m.hi = dir_up(dir_up(h));
        }
        return m;
    }

private:
    void demote() {
        exact_ = false;
        dlo_ = 0; dhi_ = 0;
        BigInt scaled = sum_.num() << kDyadicShift;
        mpz_fdiv_q(dlo_.get_mpz_t(), scaled.get_mpz_t(), sum_.den().get_mpz_t());
        mpz_cdiv_q(dhi_.get_mpz_t(), scaled.get_mpz_t(), sum_.den().get_mpz_t());
    }
    void add_dyadic(const Rational& r) {
        BigInt scaled = r.num() << kDyadicShift;
        BigInt t;
        mpz_fdiv_q(t.get_mpz_t(), scaled.get_mpz_t(), r.den().get_mpz_t());
        dlo_ += t;
        mpz_cdiv_q(t.get_mpz_t(), scaled.get_mpz_t(), r.den().get_mpz_t());
        dhi_ += t;
    }

    bool exact_ = true;
    Rational sum_;
    BigInt dlo_, dhi_;
    unsigned long long terms_ = 0;
    unsigned long long limit_;
};

// ---------------------------------------------------------------------------
// window membership in the sum space
//
// Totals are compared against n-scaled endpoints. Each psi kind owns a sum
// space: integer sums (identity, prime_n), rational sums (reciprocal),
// digit products (logarithm), or plain doubles (tables). Bounds over
// unplaced positions use closed hulls, so "inside"/"outside" verdicts are
// conservative and never wrong.

enum class Cls { inside, outside, straddle };

struct ScaledWindow {
    // finite rational endpoints scaled by n (for sum-space comparisons)
    bool lo_finite = false, hi_finite = false;
    bool lo_closed = true, hi_closed = true;
    Rational lo, hi;
    // product-space endpoints p^n/q^n (for psi = logarithm with log endpoints)
    bool lo_log = false, hi_log = false;
    BigInt lo_pn, lo_qn, hi_pn, hi_qn;
    // double endpoints (fallback comparisons)
    double dlo = -std::numeric_limits<double>::infinity();
    double dhi = std::numeric_limits<double>::infinity();

    static ScaledWindow make(const MeanWindow& J, long n) {
        ScaledWindow w;
        auto side = [&](const Endpoint& e, bool is_lo) {
            if (e.kind == Endpoint::Kind::finite) {
                (is_lo ? w.lo_finite : w.hi_finite) = true;
                (is_lo ? w.lo : w.hi) = e.value * Rational(n);
            } else if (e.kind == Endpoint::Kind::log_rational) {
                (is_lo ? w.lo_log : w.hi_log) = true;
                BigInt pn, qn;
                mpz_pow_ui(pn.get_mpz_t(), e.value.num().get_mpz_t(), (unsigned long)n);
                mpz_pow_ui(qn.get_mpz_t(), e.value.den().get_mpz_t(), (unsigned long)n);
                (is_lo ? w.lo_pn : w.hi_pn) = pn;
                (is_lo ? w.lo_qn : w.hi_qn) = qn;
            }
            (is_lo ? w.lo_closed : w.hi_closed) = e.closed;
        };
        side(J.lo, true);
        side(J.hi, false);
        w.dlo = J.lo.kind == Endpoint::Kind::minus_inf
                    ? -std::numeric_limits<double>::infinity()
                    : double(n) * J.lo.to_double();
        w.dhi = J.hi.kind == Endpoint::Kind::plus_inf
                    ? std::numeric_limits<double>::infinity()
                    : double(n) * J.hi.to_double();
        return w;
    }

    bool has_lo() const { return lo_finite || lo_log || std::isfinite(dlo); }
    bool has_hi() const { return hi_finite || hi_log || std::isfinite(dhi); }
};

// Extended bound on a total: finite rational / finite product / +infinity.
struct RatBound {
    bool inf = false;
    Rational v;
    bool attained = true;
};

// three-way compare of a guaranteed range [mn, mx] against the window
Cls classify_rational(const RatBound& mn, const RatBound& mx, const ScaledWindow& w) {
    // all totals >= mn.v (attained or not); all totals <= mx (or unbounded)
    bool lo_ok, hi_ok;  // every total satisfies the lo / hi constraint
    if (!w.lo_finite) {
        lo_ok = true;
    } else if (w.lo_closed) {
        lo_ok = mn.v >= w.lo;
    } else {
        lo_ok = mn.v > w.lo || (mn.v == w.lo && !mn.attained);
    }
    if (!w.hi_finite) {
        hi_ok = true;
    } else if (mx.inf) {
        hi_ok = false;
    } else {
        hi_ok = w.hi_closed ? mx.v <= w.hi : (mx.v < w.hi || (mx.v == w.hi && !mx.attained));
    }
    if (lo_ok && hi_ok) return Cls::inside;

    // all below lo?
    if (w.lo_finite && !mx.inf) {
        if (mx.v < w.lo) return Cls::outside;
        if (mx.v == w.lo && !w.lo_closed) return Cls::outside;
    }
    // all above hi?
    if (w.hi_finite) {
        if (mn.v > w.hi) return Cls::outside;
        if (mn.v == w.hi && (!w.hi_closed || !mn.attained)) return Cls::outside;
    }
    return Cls::straddle;
}

// product-space analogue (psi = logarithm, log-rational endpoints);
// totals are log(prod), endpoints log(p^n/q^n)
Cls classify_product(const BigInt& pmin, bool pmax_inf, const BigInt& pmax, const ScaledWindow& w) {
    bool lo_ok, hi_ok;
    if (!w.lo_log) {
        lo_ok = !w.has_lo();
    } else {
        BigInt l = pmin * w.lo_qn;
        lo_ok = w.lo_closed ? l >= w.lo_pn : l > w.lo_pn;
    }
    if (!w.hi_log) {
        hi_ok = !w.has_hi();
    } else if (pmax_inf) {
        hi_ok = false;
    } else {
        BigInt h = pmax * w.hi_qn;
        hi_ok = w.hi_closed ? h <= w.hi_pn : h < w.hi_pn;
    }
    if (lo_ok && hi_ok) return Cls::inside;
    if (w.lo_log && !pmax_inf) {
        BigInt h = pmax * w.lo_qn;
        if (h < w.lo_pn || (h == w.lo_pn && !w.lo_closed)) return Cls::outside;
    }
    if (w.hi_log) {
        BigInt l = pmin * w.hi_qn;
        if (l > w.hi_pn || (l == w.hi_pn && !w.hi_closed)) return Cls::outside;
    }
    return Cls::straddle;
}

// double-space fallback with a conservative margin: undecidable -> straddle
Cls classify_double(double mn, double mx, const ScaledWindow& w, double margin) {
    bool lo_ok = !std::isfinite(w.dlo) || mn > w.dlo + margin;
    bool hi_ok = !std::isfinite(w.dhi) || mx < w.dhi - margin;
    if (lo_ok && hi_ok) return Cls::inside;
    if (std::isfinite(w.dlo) && mx < w.dlo - margin) return Cls::outside;
    if (std::isfinite(w.dhi) && mn > w.dhi + margin) return Cls::outside;
    return Cls::straddle;
}

// ---------------------------------------------------------------------------
// per-kind sum policies for the prefix walk

struct IntSumPolicy {
    // identity and prime_n: integer digit values
    const ArithmeticFunction& psi;
    long n;
    long long B;
    ScaledWindow w;

    using State = BigInt;  // partial integer sum
    State init() const { return BigInt(0); }
    State push(const State& s, long long b) const {
        if (psi.kind() == ArithmeticFunction::Kind::identity) return s + to_bigint(b);
        return is_prime_u64((unsigned long long)b) ? BigInt(s + to_bigint(b)) : s;
    }
    // tail slot: one digit > B; free slots: any digit >= 2
    Cls classify(const State& s, int tail, long r) const {
        RatBound mn, mx;
        if (psi.kind() == ArithmeticFunction::Kind::identity) {
            mn.v = Rational(BigInt(s + to_bigint(B + 1) * tail + BigInt(2) * r));
            mx.inf = tail + r > 0;
            if (!mx.inf) mx.v = mn.v;
        } else {
            mn.v = Rational(s);  // composites beyond any bound make 0 attainable
            mx.inf = tail + r > 0;
            if (!mx.inf) mx.v = mn.v;
        }
        return classify_rational(mn, mx, w);
    }
};

struct RatSumPolicy {
    // reciprocal (and the generic exact-rational fallback)
    const ArithmeticFunction& psi;
    long n;
    long long B;
    ScaledWindow w;

    using State = Rational;
    State init() const { return Rational(0); }
    State push(const State& s, long long b) const { return s + psi.exact_value(b); }
    Cls classify(const State& s, int tail, long r) const {
        RatBound mn, mx;
        Rational tl = tail ? psi.tail_inf_exact(B) : Rational(0);
        auto ts = psi.tail_sup_exact(B);
        // free-slot hulls over all digits >= 2
        Rational fl = psi.tail_inf_exact(1);
        auto fs = psi.tail_sup_exact(1);
        mn.v = s + tl + fl * Rational(r);
        // reciprocal: the infimum 0 of the hull is approached, not attained
        mn.attained = (tail + r == 0) || psi.kind() != ArithmeticFunction::Kind::reciprocal;
        if ((tail && !ts) || (r > 0 && !fs)) {
            mx.inf = true;
        } else {
            mx.v = s + (tail ? *ts : Rational(0)) + (r > 0 ? *fs * Rational(r) : Rational(0));
        }
        return classify_rational(mn, mx, w);
    }
};

struct LogProdPolicy {
    // logarithm: totals live in product space
    const ArithmeticFunction& psi;
    long n;
    long long B;
    ScaledWindow w;
    double dbl_margin = 1e-9;

    using State = BigInt;  // product of digits so far
    State init() const { return BigInt(1); }
    State push(const State& s, long long b) const { return BigInt(s * to_bigint(b)); }
    Cls classify(const State& s, int tail, long r) const {
        BigInt pmin = s;
        if (tail) pmin *= to_bigint(B + 1);
        if (r > 0) pmin <<= r;  // times 2^r
        bool pmax_inf = tail + r > 0;
        if (w.lo_log || w.hi_log || (!w.has_lo() && !w.has_hi()))
            return classify_product(pmin, pmax_inf, s, w);
        // finite real endpoints: compare in log space with a margin
        double mn = log_bigint_ratio(pmin, BigInt(1));
        double mx = pmax_inf ? std::numeric_limits<double>::infinity()
                             : log_bigint_ratio(s, BigInt(1));
        return classify_double(mn, mx, w, dbl_margin * double(n));
    }
};

struct DblSumPolicy {
    const ArithmeticFunction& psi;
    long n;
    long long B;
    ScaledWindow w;
    double margin = 1e-9;

    using State = double;
    State init() const { return 0.0; }
    State push(const State& s, long long b) const { return s + psi(b); }
    Cls classify(const State& s, int tail, long r) const {
        double mn = s + (tail ? psi.tail_inf(B) : 0.0) + double(r) * psi.global_inf();
        auto ts = psi.tail_sup(B);
        auto fs = psi.global_sup();
        double mx;
        if ((tail && !ts) || (r > 0 && !fs))
            mx = std::numeric_limits<double>::infinity();
        else
            mx = s + (tail ? *ts : 0.0) + (r > 0 ? double(r) * *fs : 0.0);
        return classify_double(mn, mx, w, margin * double(n));
    }
};

// ---------------------------------------------------------------------------
// the prefix walk

Rational cylinder_mass(const MoebiusMap& m) {
    return Rational(BigInt(1), m.d * (m.c + m.d));
}

// mass of { prefix w, next digit > B, rest free } = g_w([1 - 1/B, 1))
Rational tail_mass(const MoebiusMap& m, long long B) {
    return Rational(BigInt(1), BigInt((m.c + m.d) * (m.c * to_bigint(B - 1) + m.d * to_bigint(B))));
}

// mass of the union of A_{w.b} over b in [b1, b2]
Rational run_mass(const MoebiusMap& m, long long b1, long long b2) {
    Rational left = b1 == 2 ? m.apply(Rational(0))
                            : m.apply(Rational(to_bigint(b1) - 2, to_bigint(b1) - 1));
    Rational right = m.apply(Rational(to_bigint(b2) - 1, to_bigint(b2)));
    return right - left;
}

template <class Policy>
struct PrefixWalker {
    const DeviationQuery& q;
    Policy pol;
    MassAccumulator in_mass, tail_mass_acc, out_mass;
    unsigned long long nodes = 0, in_classes = 0, tail_classes = 0;

    PrefixWalker(const DeviationQuery& query, Policy policy)
        : q(query), pol(std::move(policy)),
          in_mass(query.exact_term_limit),
          tail_mass_acc(query.exact_term_limit),
          out_mass(query.exact_term_limit) {}

    void bump() {
        if (++nodes > q.max_nodes)
            throw ResourceError("deviation enumeration exceeded " + std::to_string(q.max_nodes) +
                                " nodes; lower the cap or the window length n");
    }

    bool run_telescoping_ok() const {
        auto mono = q.psi.monotonicity();
        if (mono == ArithmeticFunction::Mono::none) return false;
        // needs exact leaf decisions in a single comparison space
        switch (q.psi.kind()) {
            case ArithmeticFunction::Kind::identity:
            case ArithmeticFunction::Kind::reciprocal:
                return !pol.w.lo_log && !pol.w.hi_log;
            case ArithmeticFunction::Kind::logarithm:
                return (pol.w.lo_log || !pol.w.has_lo()) && (pol.w.hi_log || !pol.w.has_hi());
            default:
                return false;
        }
    }

    Cls leaf_cls(const typename Policy::State& s, long long b) const {
        return pol.classify(pol.push(s, b), 0, 0);
    }

    // smallest digit in [lo, hi] with pred(b) true; pred monotone in b
    template <class Pred>
    long long first_true(long long lo, long long hi, Pred pred) const {
        long long r = hi + 1;
        while (lo <= hi) {
            long long mid = lo + (hi - lo) / 2;
            if (pred(mid)) { r = mid; hi = mid - 1; }
            else lo = mid + 1;
        }
        return r;
    }

    void handle_leaf_row(const MoebiusMap& m, const typename Policy::State& s) {
        // children of a depth-(n-1) prefix are leaves; for monotone psi the
        // in-window digits form one contiguous run, so its mass telescopes
        long long B = q.cap;
        Rational all = run_mass(m, 2, B);
        if (run_telescoping_ok()) {
            bool increasing = q.psi.monotonicity() == ArithmeticFunction::Mono::increasing;
            // find the run [b1, b2] of in-window leaves
            long long b1, b2;
            if (increasing) {
                b1 = first_true(2, B, [&](long long b) { return !below_window(s, b); });
                b2 = first_true(b1, B, [&](long long b) { return above_window(s, b); }) - 1;
            } else {
                b1 = first_true(2, B, [&](long long b) { return !above_window(s, b); });
                b2 = first_true(b1, B, [&](long long b) { return below_window(s, b); }) - 1;
            }
            if (b1 <= b2 && b1 <= B) {
                Rational inside = run_mass(m, b1, std::min(b2, B));
                in_mass.add(inside);
                in_classes++;
                out_mass.add(all - inside);
            } else {
                out_mass.add(all);
            }
            return;
        }
        for (long long b = 2; b <= B; ++b) {
            MoebiusMap leaf = m.compose(inverse_branch(b)).normalized();
            Rational mass = cylinder_mass(leaf);
            switch (leaf_cls(s, b)) {
                case Cls::inside: in_mass.add(mass); in_classes++; break;
                case Cls::outside: out_mass.add(mass); break;
                case Cls::straddle: tail_mass_acc.add(mass); tail_classes++; break;
            }
        }
    }

    // leaf total strictly below the window / strictly above the window
    bool below_window(const typename Policy::State& s, long long b) const {
        Cls c = leaf_cls(s, b);
        if (c != Cls::outside) return false;
        return outside_is_below(pol.push(s, b));
    }
    bool above_window(const typename Policy::State& s, long long b) const {
        Cls c = leaf_cls(s, b);
        if (c != Cls::outside) return false;
        return !outside_is_below(pol.push(s, b));
    }
    bool outside_is_below(const typename Policy::State& s) const {
        // decide which side of the window an out-of-window leaf total is on;
        // a boundary total excluded by an open endpoint counts as below
        if constexpr (std::is_same_v<typename Policy::State, BigInt>) {
            if (pol.w.lo_log) {
                BigInt l = s * pol.w.lo_qn;
                return l < pol.w.lo_pn || (l == pol.w.lo_pn && !pol.w.lo_closed);
            }
            if (pol.w.lo_finite) {
                Rational r(s);
                return r < pol.w.lo || (r == pol.w.lo && !pol.w.lo_closed);
            }
            return false;
        } else if constexpr (std::is_same_v<typename Policy::State, Rational>) {
            return pol.w.lo_finite &&
                   (s < pol.w.lo || (s == pol.w.lo && !pol.w.lo_closed));
        } else {
            return std::isfinite(pol.w.dlo) && double(s) < pol.w.dlo;
        }
    }

    void walk(const MoebiusMap& m, const typename Policy::State& s, long depth) {
        bump();
        Cls c = pol.classify(s, 0, q.n - depth);
        if (c == Cls::inside) { in_mass.add(depth == 0 ? Rational(1) : cylinder_mass(m)); in_classes++; return; }
        if (c == Cls::outside) { out_mass.add(depth == 0 ? Rational(1) : cylinder_mass(m)); return; }
        if (depth == long(q.n)) {
            // exact kinds never reach here (leaf classify is two-valued);
            // double kinds may stay undecidable, which is unresolved mass
            tail_mass_acc.add(cylinder_mass(m));
            tail_classes++;
            return;
        }
        // the "some digit > B here" branch
        {
            Cls ct = pol.classify(s, 1, q.n - depth - 1);
            Rational mass = tail_mass(m, q.cap);
            switch (ct) {
                case Cls::inside: in_mass.add(mass); in_classes++; break;
                case Cls::outside: out_mass.add(mass); break;
                case Cls::straddle: tail_mass_acc.add(mass); tail_classes++; break;
            }
        }
        if (depth + 1 == long(q.n)) {
            handle_leaf_row(m, s);
            return;
        }
        for (long long b = 2; b <= q.cap; ++b)
            walk(m.compose(inverse_branch(b)).normalized(), pol.push(s, b), depth + 1);
    }

    DeviationEstimate finish() {
        DeviationEstimate e;
        e.method = DeviationMethod::exact_enumeration;
        e.lower = in_mass.finish();
        e.tail_unresolved = tail_mass_acc.finish();
        e.outside = out_mass.finish();
        e.nodes = nodes;
        e.in_classes = in_classes;
        e.tail_classes = tail_classes;
        return e;
    }
};

template <class Policy>
DeviationEstimate run_walk(const DeviationQuery& q, Policy pol) {
    PrefixWalker<Policy> w(q, std::move(pol));
    w.walk(MoebiusMap::identity(), w.pol.init(), 0);
    return w.finish();
}

// ---------------------------------------------------------------------------
// fast engine for one-sided logarithm windows [log(p/q), oo) at scales where
// the generic walker would drown in bignum traffic. Only the bottom matrix
// row (c, d) is needed for masses, and along every prefix that survives the
// certified-in cut the digit product P stays below 60 * p^n, so c + d <= P
// keeps all mass denominators inside 63 bits. Masses accumulate as directed
// double brackets; the reported estimate is a rigorous bracket, not exact.

struct FastLogEngine {
    long n;
    long long B;
    bool lo_closed;
    unsigned long long max_nodes;
    unsigned long long nodes = 0;

    // thr_in[r]: smallest product P certifying every completion with r free
    // slots in the window; thr_tail[r]: same with one digit > B then r-1 free
    std::vector<unsigned long long> thr_in, thr_tail;
    unsigned __int128 pn = 0, qn = 1;

    double lower_lo = 0, lower_hi = 0, tail_lo = 0, tail_hi = 0, out_lo = 0, out_hi = 0;

    static double dnn(double x) { return std::nextafter(x, -HUGE_VAL); }
    static double upp(double x) { return std::nextafter(x, HUGE_VAL); }

    static unsigned long long ceil_div_u128(unsigned __int128 a, unsigned __int128 b) {
        return (unsigned long long)((a + b - 1) / b);
    }

    void init_thresholds() {
        thr_in.assign(n + 1, 1);
        thr_tail.assign(n + 1, 1);
        for (long r = 0; r <= n; ++r) {
            unsigned __int128 den = qn << r;
            thr_in[r] = lo_closed ? ceil_div_u128(pn, den)
                                  : (unsigned long long)(pn / den) + 1;
            if (r >= 1) {
                unsigned __int128 dent = (qn * (unsigned long long)(B + 1)) << (r - 1);
                thr_tail[r] = lo_closed ? ceil_div_u128(pn, dent)
                                        : (unsigned long long)(pn / dent) + 1;
            }
        }
    }

    void add(double& lo, double& hi, double num, unsigned long long d1, unsigned long long d2) {
        double den = double(d1) * double(d2);
        lo = dnn(lo + dnn(num / upp(upp(den))));
        hi = upp(hi + upp(num / dnn(dnn(den))));
    }

    // masses from the bottom row (c, d):
    //   cylinder: 1/(d (c+d));   tail: 1/((c+d)(c(B-1)+dB));
    //   digit run [b1,b2]: (b2-b1+1) / ((c(b1-2)+d(b1-1)) (c(b2-1)+d b2))
    void walk(unsigned long long c, unsigned long long d, unsigned long long P, long depth) {
        if (++nodes > max_nodes)
            throw ResourceError("deviation enumeration exceeded " + std::to_string(max_nodes) +
                                " nodes; lower the cap or the window length n");
        long r = n - depth;
        if (P >= thr_in[r]) {
            add(lower_lo, lower_hi, 1.0, d, c + d);
            return;
        }
        // the digit > B branch at the next position
        if (P >= thr_tail[r])
            add(lower_lo, lower_hi, 1.0, c + d, c * (unsigned long long)(B - 1) + d * (unsigned long long)B);
        else
            add(tail_lo, tail_hi, 1.0, c + d, c * (unsigned long long)(B - 1) + d * (unsigned long long)B);
        if (depth + 1 == n) {
            // closing digit: in-window digits form the run [bstar, B]
            unsigned __int128 need = pn;  // P * b * qn >= pn (closed)
            unsigned long long bstar;
            unsigned __int128 pq = (unsigned __int128)P * qn;
            bstar = lo_closed ? ceil_div_u128(need, pq) : (unsigned long long)(need / pq) + 1;
            if (bstar < 2) bstar = 2;
            if (bstar <= (unsigned long long)B)
                add(lower_lo, lower_hi, double((unsigned long long)B - bstar + 1),
                    c * (bstar - 2) + d * (bstar - 1),
                    c * (unsigned long long)(B - 1) + d * (unsigned long long)B);
            if (bstar > 2) {
                unsigned long long b2 = std::min<unsigned long long>(bstar - 1, (unsigned long long)B);
                add(out_lo, out_hi, double(b2 - 2 + 1), d,
                    c * (b2 - 1) + d * b2);
            }
            return;
        }
        for (unsigned long long b = 2; b <= (unsigned long long)B; ++b)
            walk(c + d, c * (b - 2) + d * (b - 1), P * b, depth + 1);
    }

    DeviationEstimate finish() const {
        DeviationEstimate e;
        e.method = DeviationMethod::exact_enumeration;
        e.lower = MassValue{false, Rational(0), std::max(0.0, lower_lo), lower_hi};
        e.tail_unresolved = MassValue{false, Rational(0), std::max(0.0, tail_lo), tail_hi};
        e.outside = MassValue{false, Rational(0), std::max(0.0, out_lo), out_hi};
        e.nodes = nodes;
        return e;
    }
};

bool fast_log_applicable(const DeviationQuery& q, const ScaledWindow& w) {
    if (q.psi.kind() != ArithmeticFunction::Kind::logarithm) return false;
    if (!w.lo_log || w.hi_log || w.has_hi()) return false;
    if (q.cap > 1024 || q.n > 40) return false;
    // u64 safety envelope: products along surviving prefixes stay below
    // 2 B pn/qn, and mass denominators below (B * that)^2
    if (mpz_sizeinbase(w.lo_pn.get_mpz_t(), 2) > 40) return false;
    if (mpz_sizeinbase(w.lo_qn.get_mpz_t(), 2) > 16) return false;
    double words = std::pow(double(q.cap - 1), double(q.n));
    return words > q.fast_path_min_words;  // small runs keep the exact-rational walker
}

DeviationEstimate run_fast_log(const DeviationQuery& q, const ScaledWindow& w) {
    FastLogEngine e;
    e.n = q.n;
    e.B = q.cap;
    e.lo_closed = w.lo_closed;
    e.max_nodes = q.max_nodes;
    e.pn = (unsigned __int128)w.lo_pn.get_ui() |
           ((unsigned __int128)BigInt(w.lo_pn >> 64).get_ui() << 64);
    e.qn = (unsigned __int128)w.lo_qn.get_ui() |
           ((unsigned __int128)BigInt(w.lo_qn >> 64).get_ui() << 64);
    e.init_thresholds();
    e.walk(0, 1, 1, 0);
    return e.finish();
}

} // namespace

double DeviationEstimate::lower_bound() const {
    if (method == DeviationMethod::monte_carlo) return std::max(0.0, estimate - std_error);
    return lower.lo;
}

double DeviationEstimate::upper_bound() const {
    if (method == DeviationMethod::monte_carlo) return std::min(1.0, estimate + std_error);
    return std::min(1.0, lower.hi + tail_unresolved.hi);
}

DeviationEstimate exact_measure(const DeviationQuery& q) {
    validate_window(q.J);
    if (q.n < 1) throw std::invalid_argument("deviation: n must be >= 1");
    if (q.cap < 2) throw std::invalid_argument("deviation: digit cap must be >= 2");
    ScaledWindow w = ScaledWindow::make(q.J, q.n);
    switch (q.psi.kind()) {
        case ArithmeticFunction::Kind::identity:
        case ArithmeticFunction::Kind::prime_n:
            if (w.lo_log || w.hi_log)
                throw std::invalid_argument("log endpoints require psi = logarithm");
            return run_walk(q, IntSumPolicy{q.psi, q.n, q.cap, w});
        case ArithmeticFunction::Kind::reciprocal:
            if (w.lo_log || w.hi_log)
                throw std::invalid_argument("log endpoints require psi = logarithm");
            return run_walk(q, RatSumPolicy{q.psi, q.n, q.cap, w});
        case ArithmeticFunction::Kind::logarithm:
            if (fast_log_applicable(q, w)) return run_fast_log(q, w);
            return run_walk(q, LogProdPolicy{q.psi, q.n, q.cap, w});
        case ArithmeticFunction::Kind::table:
            if (w.lo_log || w.hi_log)
                throw std::invalid_argument("log endpoints require psi = logarithm");
            return run_walk(q, DblSumPolicy{q.psi, q.n, q.cap, w});
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Monte Carlo over the dyadic grid m/2^64

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

using u128 = unsigned __int128;

double u128_to_double(u128 v) {
    return std::ldexp(double((unsigned long long)(v >> 64)), 64) + double((unsigned long long)v);
}

BigInt u128_to_bigint(u128 v) {
    BigInt hi((unsigned long)(v >> 64));
    return (hi << 64) + BigInt((unsigned long)(v & ~0ul));
}

struct McKernel {
    ArithmeticFunction::Kind kind;
    const ArithmeticFunction* psi;
    long n;
    ScaledWindow w;
    // saturation bound for integer/product sums; anything beyond is "huge"
    static constexpr u128 kSat = (u128)1 << 100;

    // precomputed cross-multiplication data; falls back to BigInt when the
    // scaled endpoints do not fit 64 bits
    bool fast_rational = false;
    unsigned long long lo_num = 0, lo_den = 1, hi_num = 0, hi_den = 1;
    bool fast_product = false;
    u128 lo_pn128 = 0, lo_qn128 = 1, hi_pn128 = 0, hi_qn128 = 1;

    void prepare() {
        auto fits = [](const BigInt& v) { return mpz_sizeinbase(v.get_mpz_t(), 2) <= 26; };
        if (kind == ArithmeticFunction::Kind::identity || kind == ArithmeticFunction::Kind::prime_n) {
            fast_rational = true;
            if (w.lo_finite) {
                if (!fits(w.lo.num()) || !fits(w.lo.den())) fast_rational = false;
                else { lo_num = w.lo.num().get_ui(); lo_den = w.lo.den().get_ui(); }
            }
            if (w.hi_finite) {
                if (!fits(w.hi.num()) || !fits(w.hi.den())) fast_rational = false;
                else { hi_num = w.hi.num().get_ui(); hi_den = w.hi.den().get_ui(); }
            }
        }
        if (kind == ArithmeticFunction::Kind::logarithm && (w.lo_log || w.hi_log)) {
            auto fits128 = [](const BigInt& v) { return mpz_sizeinbase(v.get_mpz_t(), 2) <= 120; };
            fast_product = true;
            auto to128 = [](const BigInt& v) {
                BigInt hi = v >> 64, lo = v - ((v >> 64) << 64);
                return ((u128)hi.get_ui() << 64) | (u128)lo.get_ui();
            };
            if (w.lo_log) {
                if (!fits128(w.lo_pn) || !fits128(w.lo_qn) || mpz_sizeinbase(w.lo_qn.get_mpz_t(), 2) > 20)
                    fast_product = false;
                else { lo_pn128 = to128(w.lo_pn); lo_qn128 = to128(w.lo_qn); }
            }
            if (fast_product && w.hi_log) {
                if (!fits128(w.hi_pn) || !fits128(w.hi_qn) || mpz_sizeinbase(w.hi_qn.get_mpz_t(), 2) > 20)
                    fast_product = false;
                else { hi_pn128 = to128(w.hi_pn); hi_qn128 = to128(w.hi_qn); }
            }
        }
    }

    // digits of m/2^64; after the first step the denominator fits 64 bits
    template <class F>
    void for_digits(uint64_t m, F&& fn) const {
        if (m == 0) {
            for (long i = 0; i < n; ++i) fn((u128)2);
            return;
        }
        u128 q0 = (u128)1 << 64;
        u128 r0 = q0 - m;
        fn(q0 / r0 + 1);
        unsigned long long p = (unsigned long long)(q0 % r0);
        unsigned long long q = (unsigned long long)r0;
        for (long i = 1; i < n; ++i) {
            unsigned long long r = q - p;
            fn((u128)(q / r) + 1);
            p = q % r;
            q = r;
        }
    }

    bool rational_in_slow(const BigInt& total) const {
        Rational t(total);
        if (w.lo_finite && (w.lo_closed ? t < w.lo : t <= w.lo)) return false;
        if (w.hi_finite && (w.hi_closed ? t > w.hi : t >= w.hi)) return false;
        return true;
    }

    bool int_sum_in(u128 sum) const {
        if (sum >= kSat) return !w.has_hi();  // astronomically large total
        if (fast_rational) {
            // w.lo / w.hi are already the n-scaled endpoints
            if (w.lo_finite) {
                u128 l = sum * lo_den;
                if (w.lo_closed ? l < (u128)lo_num : l <= (u128)lo_num) return false;
            }
            if (w.hi_finite) {
                u128 h = sum * hi_den;
                if (w.hi_closed ? h > (u128)hi_num : h >= (u128)hi_num) return false;
            }
            return true;
        }
        return rational_in_slow(u128_to_bigint(sum));
    }

    bool hit(uint64_t m) const {
        switch (kind) {
            case ArithmeticFunction::Kind::identity:
            case ArithmeticFunction::Kind::prime_n: {
                u128 sum = 0;
                for_digits(m, [&](u128 d) {
                    u128 v = d;
                    if (kind == ArithmeticFunction::Kind::prime_n)
                        v = (d < ((u128)1 << 63) && is_prime_u64((unsigned long long)d)) ? d : 0;
                    if (sum < kSat) sum += v;
                });
                return int_sum_in(sum);
            }
            case ArithmeticFunction::Kind::logarithm: {
                u128 prod = 1;
                bool sat = false;
                for_digits(m, [&](u128 d) {
                    if (sat) return;
                    if (d >= kSat / prod) { sat = true; return; }
                    prod *= d;
                });
                if (w.lo_log || w.hi_log) {
                    if (sat) return !w.has_hi();
                    if (fast_product) {
                        if (w.lo_log) {
                            bool of = prod > ~(u128)0 / lo_qn128;
                            u128 l = of ? ~(u128)0 : prod * lo_qn128;
                            if (w.lo_closed ? l < lo_pn128 : l <= lo_pn128) return false;
                        }
                        if (w.hi_log) {
                            bool of = prod > ~(u128)0 / hi_qn128;
                            u128 h = of ? ~(u128)0 : prod * hi_qn128;
                            if (w.hi_closed ? h > hi_pn128 : h >= hi_pn128) return false;
                        }
                        return true;
                    }
                    BigInt P = u128_to_bigint(prod);
                    if (w.lo_log) {
                        BigInt l = P * w.lo_qn;
                        if (w.lo_closed ? l < w.lo_pn : l <= w.lo_pn) return false;
                    }
                    if (w.hi_log) {
                        BigInt h = P * w.hi_qn;
                        if (w.hi_closed ? h > w.hi_pn : h >= w.hi_pn) return false;
                    }
                    return true;
                }
                double total = sat ? std::numeric_limits<double>::infinity()
                                   : std::log(u128_to_double(prod));
                return total >= w.dlo && total <= w.dhi;
            }
            default: {
                double sum = 0;
                for_digits(m, [&](u128 d) {
                    long long dd = d > (u128)(1ll << 62) ? (1ll << 62) : (long long)d;
                    sum += (*psi)(dd);
                });
                return sum >= w.dlo && sum <= w.dhi;
            }
        }
    }
};

} // namespace

DeviationEstimate mc_measure(const DeviationQuery& q) {
    validate_window(q.J);
    if (q.n < 1) throw std::invalid_argument("deviation: n must be >= 1");
    if (q.samples < 1) throw std::invalid_argument("monte carlo needs samples >= 1");
    ScaledWindow w = ScaledWindow::make(q.J, q.n);
    McKernel k{q.psi.kind(), &q.psi, q.n, std::move(w)};
    k.prepare();

    const unsigned long long block = 1 << 16;
    unsigned long long nblocks = (q.samples + block - 1) / block;
    std::vector<unsigned long long> hits(nblocks, 0);

    auto run_block = [&](unsigned long long bi) {
        unsigned long long lo = bi * block;
        unsigned long long hi = std::min<unsigned long long>(q.samples, lo + block);
        std::mt19937_64 eng(splitmix64(q.seed + 0x1234567ull * (bi + 1)));
        unsigned long long h = 0;
        for (unsigned long long s = lo; s < hi; ++s)
            h += k.hit(eng()) ? 1 : 0;
        hits[bi] = h;
    };

    int nt = std::max(1, q.threads);
    if (nt == 1) {
        for (unsigned long long bi = 0; bi < nblocks; ++bi) run_block(bi);
    } else {
        std::vector<std::thread> pool;
        std::atomic<unsigned long long> next{0};
        for (int t = 0; t < nt; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    unsigned long long bi = next.fetch_add(1);
                    if (bi >= nblocks) return;
                    run_block(bi);
                }
            });
        for (auto& th : pool) th.join();
    }

    unsigned long long total = 0;
    for (auto h : hits) total += h;

    DeviationEstimate e;
    e.method = DeviationMethod::monte_carlo;
    e.hits = total;
    e.samples = q.samples;
    e.estimate = double(total) / double(q.samples);
    e.std_error = std::sqrt(std::max(0.0, e.estimate * (1.0 - e.estimate) / double(q.samples)));
    return e;
}

// ---------------------------------------------------------------------------
// explicit lower-bound sets for the arithmetic mean

BnBound bn_measure(long n, const MeanWindow& J) {
    validate_window(J);
    if (n < 1) throw std::invalid_argument("bn_measure: n must be >= 1");
    if (J.lo.kind != Endpoint::Kind::finite || J.hi.kind != Endpoint::Kind::finite)
        throw std::invalid_argument("bn_measure: J must be a bounded interval");
    if (J.lo.value < Rational(2)) throw std::invalid_argument("bn_measure: J must lie in [2, oo)");

    Rational lo = J.lo.value, hi = J.hi.value;
    Rational len = hi - lo;
    // smallest integer z with z/n strictly inside (inf J, inf J + len/2)
    Rational nlo = lo * Rational(n);
    BigInt z;
    mpz_fdiv_q(z.get_mpz_t(), nlo.num().get_mpz_t(), nlo.den().get_mpz_t());
    z += 1;
    if (!(Rational(z, BigInt(n)) < lo + len / Rational(2)))
        throw std::invalid_argument("bn_measure: no admissible integer; need n >= 2/len(J)");
    BigInt m = z - 2 * (BigInt(n) - 1);
    if (m <= 2)
        throw std::invalid_argument("bn_measure: window too close to 2 for this n (m <= 2)");

    BnBound out;
    out.n = n;
    out.z = z;
    out.m = m;
    out.preimage_lo = Rational(m - 2, m - 1);
    out.preimage_hi = Rational(m - 1, m);
    // n-fold digit-2 branch: y -> y/(n*y + 1)
    auto g2n = [&](const Rational& y) {
        return Rational(y.num(), BigInt(n) * y.num() + y.den());
    };
    out.set_lo = g2n(out.preimage_lo);
    out.set_hi = g2n(out.preimage_hi);
    out.measure = out.set_hi - out.set_lo;
    out.mean = Rational(BigInt(2) * n + m, BigInt(n) + 1);
    bool lo_ok = J.lo.closed ? out.mean >= lo : out.mean > lo;
    bool hi_ok = J.hi.closed ? out.mean <= hi : out.mean < hi;
    out.mean_certified = lo_ok && hi_ok;
    return out;
}

// ---------------------------------------------------------------------------
// decay-rate fitting

RateFit rate_fit(const std::vector<std::pair<double, double>>& series) {
    std::vector<std::pair<double, double>> pts;
    RateFit fit;
    for (auto& [n, lam] : series) {
        if (lam > 0 && n > 0) pts.push_back({n, std::log(lam)});
        else fit.points_dropped++;
    }
    if (pts.size() < 4)
        throw std::invalid_argument("rate_fit needs at least 4 positive points");
    fit.points_used = pts.size();

    auto ols = [&](auto xf) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        double N = double(pts.size());
        for (auto& [x, y] : pts) {
            double xv = xf(x);
            sx += xv; sy += y; sxx += xv * xv; sxy += xv * y;
        }
        double slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
        double icept = (sy - slope * sx) / N;
        double rss = 0;
        for (auto& [x, y] : pts) {
            double r = y - (icept + slope * xf(x));
            rss += r * r;
        }
        return std::pair<double, double>(slope, std::sqrt(rss / N));
    };
    auto [es, er] = ols([](double x) { return x; });
    auto [ps, pr] = ols([](double x) { return std::log(x); });
    fit.exp_rate = es;
    fit.exp_residual_rms = er;
    fit.poly_exponent = ps;
    fit.poly_residual_rms = pr;
    return fit;
}

} // namespace bcf
