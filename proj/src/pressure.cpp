#include "bcf/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bcf {

namespace {

double up1(double x) { return std::nextafter(x, std::numeric_limits<double>::infinity()); }
double dn1(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }
double up4(double x) { return up1(up1(up1(up1(x)))); }
double dn4(double x) { return dn1(dn1(dn1(dn1(x)))); }

// ---------------------------------------------------------------------------
// exact path: full word enumeration with streaming log-sum-exp

struct LogSumExp {
    long double amax = -std::numeric_limits<long double>::infinity();
    long double acc = 0.0L;
    void add(long double a) {
        if (a <= amax) {
            acc += expl(a - amax);
        } else {
            acc = acc * expl(amax - a) + 1.0L;
            amax = a;
        }
    }
    double value() const { return double(amax + logl(acc)); }
};

struct ExactEnum {
    const ArithmeticFunction& psi;
    double q, t;
    long long B;
    long n;
    LogSumExp lse;

    void rec(long depth, double s, const MoebiusMap& m) {
        if (depth == n) {
            double loglen = -log_bigint_ratio(m.d * (m.c + m.d), BigInt(1));
            lse.add((long double)(q * s + t * loglen));
            return;
        }
        for (long long b = 2; b <= B; ++b)
            rec(depth + 1, s + psi(b), m.compose(inverse_branch(b)).normalized());
    }
};

// ---------------------------------------------------------------------------
// enclosure path: rigorous cell bounds for Z_n = integral of L^n 1, where
// (L f)(y) = sum_b exp(q psi(b)) (g_b'(y))^t f(g_b(y)).
// For t = 1 this integral IS the exact-length partition sum; in general the
// per-word discrepancy between integral and length^t is within the same
// distortion budget that the reported bracket already carries.

struct Enclosure {
    const ArithmeticFunction& psi;
    double q, t;
    long long B;
    long n;
    int M;

    double logscale_lo = 0, logscale_hi = 0;
    std::vector<double> flo, fhi;

    // cell index of g_b(i/M) = (i + (b-2)M) / (i + (b-1)M), exact integer math;
    // `upper_end` drops a boundary hit so half-open images cover correctly
    int image_cell(long long b, long long i, bool upper_end) const {
        __int128 num = (__int128)i + (__int128)(b - 2) * M;
        __int128 den = (__int128)i + (__int128)(b - 1) * M;
        __int128 j = ((__int128)M * num) / den;
        if (upper_end && ((__int128)M * num) % den == 0) j -= 1;
        if (j < 0) j = 0;
        if (j >= M) j = M - 1;
        return int(j);
    }

    void run() {
        flo.assign(M, 1.0);
        fhi.assign(M, 1.0);
        // weights and image cells do not depend on the iteration step
        const std::size_t nb = std::size_t(B - 1);
        std::vector<double> w_lo(nb * M), w_hi(nb * M);
        std::vector<int> j0s(nb * M), j1s(nb * M);
        for (long long b = 2; b <= B; ++b) {
            double eq_lo = dn4(std::exp(q * psi(b)));
            double eq_hi = up4(std::exp(q * psi(b)));
            std::size_t base = std::size_t(b - 2) * M;
            for (int i = 0; i < M; ++i) {
                // (g_b')^t over the cell [i/M, (i+1)/M]; g_b' is decreasing
                double y0 = dn1(double(i) / M), y1 = up1(double(i + 1) / M);
                double gp_hi = up4(1.0 / dn4((y0 + double(b - 1)) * (y0 + double(b - 1))));
                double gp_lo = dn4(1.0 / up4((y1 + double(b - 1)) * (y1 + double(b - 1))));
                double wl, wh;
                if (t >= 0) {
                    wl = dn4(std::pow(gp_lo, t));
                    wh = up4(std::pow(gp_hi, t));
                } else {
                    wl = dn4(std::pow(gp_hi, t));
                    wh = up4(std::pow(gp_lo, t));
                }
                w_lo[base + i] = dn1(eq_lo * wl);
                w_hi[base + i] = up1(eq_hi * wh);
                j0s[base + i] = image_cell(b, i, false);
                j1s[base + i] = image_cell(b, i + 1, true);
            }
        }

        std::vector<double> nlo(M), nhi(M);
        for (long step = 0; step < n; ++step) {
            std::fill(nlo.begin(), nlo.end(), 0.0);
            std::fill(nhi.begin(), nhi.end(), 0.0);
            for (std::size_t bi = 0; bi < nb; ++bi) {
                std::size_t base = bi * M;
                for (int i = 0; i < M; ++i) {
                    int j0 = j0s[base + i], j1 = j1s[base + i];
                    double vlo = flo[j0], vhi = fhi[j0];
                    for (int j = j0 + 1; j <= j1; ++j) {
                        vlo = std::min(vlo, flo[j]);
                        vhi = std::max(vhi, fhi[j]);
                    }
                    nlo[i] = dn1(nlo[i] + dn1(w_lo[base + i] * vlo));
                    nhi[i] = up1(nhi[i] + up1(w_hi[base + i] * vhi));
                }
            }
            double s = *std::max_element(nhi.begin(), nhi.end());
            for (int i = 0; i < M; ++i) {
                flo[i] = dn1(nlo[i] / s);
                fhi[i] = up1(nhi[i] / s);
            }
            logscale_lo += dn4(std::log(s));
            logscale_hi += up4(std::log(s));
        }
    }

    double log_z_lo() const {
        double acc = 0;
        for (double v : flo) acc = dn1(acc + v);
        return dn4(std::log(dn1(acc / M))) + logscale_lo;
    }
    double log_z_hi() const {
        double acc = 0;
        for (double v : fhi) acc = up1(acc + v);
        return up4(std::log(up1(acc / M))) + logscale_hi;
    }
};

} // namespace

PressureBracket pressure_bracket(const ArithmeticFunction& psi, double q, double t,
                                 long long B, long n, const PressureConfig& cfg) {
    if (B < 2) throw std::invalid_argument("pressure: alphabet cap must be >= 2");
    if (n < 1) throw std::invalid_argument("pressure: depth must be >= 1");
    PressureBracket out;
    out.q = q;
    out.t = t;
    out.B = B;
    out.n = n;
    const double corr = std::abs(t) * distortion_budget(n) / double(n);
    const double words = std::pow(double(B - 1), double(n));

    if (words <= double(cfg.enum_budget)) {
        ExactEnum e{psi, q, t, B, n, {}};
        e.rec(0, 0.0, MoebiusMap::identity());
        double z = e.lse.value();
        // float slack for the streaming sum
        double slack = 1e-11 * double(n) + 1e-12 * std::abs(z);
        out.lower = (z - slack) / double(n) - corr;
        out.upper = (z + slack) / double(n) + corr;
        out.exact_partition = true;
        return out;
    }

    double ops = double(cfg.cells) * double(B) * double(n);
    if (ops > double(cfg.op_budget))
        throw ResourceError("pressure: cells*B*n = " + std::to_string((long long)ops) +
                            " exceeds budget; lower B, the depth, or the cell count");
    Enclosure enc{psi, q, t, B, n, cfg.cells};
    enc.run();
    out.lower = enc.log_z_lo() / double(n) - corr;
    out.upper = enc.log_z_hi() / double(n) + corr;
    out.exact_partition = false;
    return out;
}

std::vector<PressureBracket> lambda_curve(const ArithmeticFunction& psi, long long B, long n,
                                          const std::vector<double>& q_grid, double t,
                                          const PressureConfig& cfg) {
    if (q_grid.empty()) throw std::invalid_argument("lambda_curve: empty q grid");
    std::vector<PressureBracket> out;
    out.reserve(q_grid.size());
    for (double q : q_grid) out.push_back(pressure_bracket(psi, q, t, B, n, cfg));
    return out;
}

std::vector<double> symmetric_geometric_grid(double max_abs, int points_per_side) {
    std::vector<double> g;
    double ratio = std::pow(max_abs / 0.015625, 1.0 / double(points_per_side - 1));
    for (int i = points_per_side - 1; i >= 0; --i) g.push_back(-0.015625 * std::pow(ratio, i));
    g.push_back(0.0);
    for (int i = 0; i < points_per_side; ++i) g.push_back(0.015625 * std::pow(ratio, i));
    return g;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
    if (points < 2) throw std::invalid_argument("grid needs >= 2 points");
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * double(i) / double(points - 1);
    return g;
}

RatePoint rate_from_legendre(const std::vector<PressureBracket>& curve, double alpha,
                             const std::function<PressureBracket(double)>& refine) {
    if (curve.empty()) throw std::invalid_argument("rate_from_legendre: empty curve");
    RatePoint r;
    r.alpha = alpha;
    double best_lo = -std::numeric_limits<double>::infinity();
    double best_hi = -std::numeric_limits<double>::infinity();
    std::size_t arg_hi = 0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        double vlo = curve[i].q * alpha - curve[i].upper;
        double vhi = curve[i].q * alpha - curve[i].lower;
        best_lo = std::max(best_lo, vlo);
        if (vhi > best_hi) { best_hi = vhi; arg_hi = i; }
    }
    r.argmax_q = curve[arg_hi].q;
    r.infinite = arg_hi == 0 || arg_hi + 1 == curve.size();
    if (refine && !r.infinite) {
        double gap_l = curve[arg_hi].q - curve[arg_hi - 1].q;
        double gap_r = curve[arg_hi + 1].q - curve[arg_hi].q;
        for (double qq : {curve[arg_hi].q - 0.5 * gap_l, curve[arg_hi].q + 0.5 * gap_r}) {
            PressureBracket p = refine(qq);
            best_lo = std::max(best_lo, qq * alpha - p.upper);
            best_hi = std::max(best_hi, qq * alpha - p.lower);
        }
    }
    r.contains_zero = best_lo <= 0.0;
    r.lower = std::max(0.0, best_lo);
    r.upper = std::max(0.0, best_hi);
    return r;
}

RateFunctionTable rate_function_table(const ArithmeticFunction& psi, long long B, long n,
                                      const std::vector<double>& q_grid,
                                      const std::vector<double>& alpha_grid,
                                      const PressureConfig& cfg) {
    RateFunctionTable t;
    t.psi_name = psi.name();
    t.B = B;
    t.n = n;
    auto curve = lambda_curve(psi, B, n, q_grid, 1.0, cfg);
    auto refine = [&](double q) { return pressure_bracket(psi, q, 1.0, B, n, cfg); };
    for (double a : alpha_grid) t.points.push_back(rate_from_legendre(curve, a, refine));
    return t;
}

std::vector<ScanPoint> minimizer_scan(const ArithmeticFunction& psi, long long B, long n,
                                      const std::vector<double>& alpha_grid,
                                      const std::vector<double>& q_grid, double tol,
                                      const PressureConfig& cfg) {
    auto table = rate_function_table(psi, B, n, q_grid, alpha_grid, cfg);
    std::vector<ScanPoint> out;
    for (auto& p : table.points)
        out.push_back(ScanPoint{p.alpha, p.lower, p.upper, p.contains_zero, p.upper <= tol});
    return out;
}

SpectrumTable lyapunov_spectrum(long long B, long n, const std::vector<double>& alpha_grid,
                                const std::vector<double>& t_grid, const PressureConfig& cfg) {
    if (alpha_grid.empty() || t_grid.empty())
        throw std::invalid_argument("lyapunov_spectrum: empty grid");
    SpectrumTable tab;
    tab.B = B;
    tab.n = n;
    // geometric pressure only: q = 0, psi irrelevant
    ArithmeticFunction psi = ArithmeticFunction::identity();
    std::vector<PressureBracket> P;
    P.reserve(t_grid.size());
    for (double t : t_grid) P.push_back(pressure_bracket(psi, 0.0, t, B, n, cfg));

    const double alpha_cap = 2.0 * std::log(double(B));
    for (double a : alpha_grid) {
        SpectrumPoint sp;
        sp.alpha = a;
        if (a <= 0) throw std::invalid_argument("spectrum: alpha grid must be positive");
        if (a >= alpha_cap) {
            sp.out_of_range = true;
            tab.points.push_back(sp);
            continue;
        }
        double inf_lo = std::numeric_limits<double>::infinity();
        double inf_hi = std::numeric_limits<double>::infinity();
        for (auto& p : P) {
            inf_lo = std::min(inf_lo, p.lower + p.t * a);
            inf_hi = std::min(inf_hi, p.upper + p.t * a);
        }
        sp.lower = std::clamp(inf_lo / a, 0.5, 1.0);
        sp.upper = std::clamp(inf_hi / a, 0.5, 1.0);
        tab.points.push_back(sp);
    }
    return tab;
}

} // namespace bcf
