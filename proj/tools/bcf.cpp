// bcf: exact digit statistics of the backward-continued-fraction expansion,
// deviation-set measures, pressure brackets, rate functions and spectra.
// Every subcommand emits CSV or JSON plus a manifest that reproduces the run.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bcf/birkhoff.hpp"
#include "bcf/deviation.hpp"
#include "bcf/markov.hpp"
#include "bcf/pressure.hpp"
#include "bcf/version.hpp"

using namespace bcf;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    json extra;  // summary values that are not per-row

    void add_row(std::initializer_list<std::string> vals) { rows.emplace_back(vals); }
};

struct Output {
    std::string format = "csv";
    std::string path;  // empty: stdout
    int threads = 1;
};

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    return out + "\"";
}

json make_manifest(const std::vector<std::string>& argv_tail) {
    json m;
    m["tool"] = "bcf";
    m["version"] = kVersion;
    m["argv"] = argv_tail;
    return m;
}

void emit(const Table& t, const Output& out, const json& manifest) {
    std::string payload;
    if (out.format == "json") {
        json doc;
        doc["manifest"] = manifest;
        if (!t.extra.is_null()) doc["summary"] = t.extra;
        json rows = json::array();
        for (auto& r : t.rows) {
            json row;
            for (std::size_t i = 0; i < t.columns.size(); ++i) row[t.columns[i]] = r[i];
            rows.push_back(row);
        }
        doc["rows"] = rows;
        payload = doc.dump(2);
        payload += "\n";
    } else {
        std::ostringstream os;
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            os << (i ? "," : "") << csv_escape(t.columns[i]);
        os << "\n";
        for (auto& r : t.rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_escape(r[i]);
            os << "\n";
        }
        payload = os.str();
    }

    if (out.path.empty()) {
        if (out.format == "csv") std::cout << "# manifest " << manifest.dump() << "\n";
        std::cout << payload;
        return;
    }
    std::filesystem::path p(out.path);
    if (p.is_relative()) {
        if (const char* dir = std::getenv("BCF_OUTPUT_DIR")) p = std::filesystem::path(dir) / p;
    }
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::invalid_argument("cannot open output file: " + p.string());
        f << payload;
    }
    if (out.format == "csv") {
        json side;
        side["manifest"] = manifest;
        if (!t.extra.is_null()) side["summary"] = t.extra;
        std::ofstream f(p.string() + ".manifest.json", std::ios::binary);
        f << side.dump(2) << "\n";
    }
}

Endpoint parse_endpoint(std::string tok, bool closed) {
    if (tok == "inf" || tok == "+inf" || tok == "oo") return Endpoint::plus_infinity();
    if (tok == "-inf" || tok == "-oo") return Endpoint::minus_infinity();
    if (tok.rfind("log:", 0) == 0) return Endpoint::log_of(Rational::parse(tok.substr(4)), closed);
    return Endpoint::finite(Rational::parse(tok), closed);
}

MeanWindow parse_window(const std::string& spec, bool open_lo, bool open_hi) {
    auto comma = spec.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("window must look like lo,hi");
    MeanWindow J;
    J.lo = parse_endpoint(spec.substr(0, comma), !open_lo);
    J.hi = parse_endpoint(spec.substr(comma + 1), !open_hi);
    return J;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    if (spec.rfind("lin:", 0) == 0) {
        double lo, hi;
        int n;
        if (std::sscanf(spec.c_str(), "lin:%lf:%lf:%d", &lo, &hi, &n) != 3)
            throw std::invalid_argument("linear grid must look like lin:lo:hi:points");
        return linear_grid(lo, hi, n);
    }
    if (spec.rfind("geo:", 0) == 0) {
        double mx;
        int pps;
        if (std::sscanf(spec.c_str(), "geo:%lf:%d", &mx, &pps) != 2)
            throw std::invalid_argument("geometric grid must look like geo:max:points_per_side");
        return symmetric_geometric_grid(mx, pps);
    }
    std::vector<double> g;
    while (std::getline(ss, item, ',')) g.push_back(std::stod(item));
    if (g.empty()) throw std::invalid_argument("empty grid");
    return g;
}

DigitWord parse_word(const std::string& spec) {
    DigitWord w;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) w.push_back(std::stoll(item));
    return w;
}

std::string mass_str(const MassValue& m) {
    return m.exact ? m.value.str() : "";
}

int run_cli(const std::vector<std::string>& args);

// ---------------------------------------------------------------------------

void cmd_expand(const std::string& xs, long n, const Output& out, const json& manifest) {
    Rational x = Rational::parse(xs);
    DigitWord w = digits(x, n);
    Table t;
    t.columns = {"j", "digit", "harmonic", "geometric", "arithmetic"};
    for (long j = 1; j <= n; ++j) {
        DigitWord prefix(w.begin(), w.begin() + j);
        ThreeMeans m = three_means(prefix);
        t.add_row({std::to_string(j), std::to_string(w[j - 1]), fmt_double(m.harmonic),
                   fmt_double(m.geometric), fmt_double(m.arithmetic)});
    }
    emit(t, out, manifest);
}

void cmd_cylinder(const std::string& word_spec, const Output& out, const json& manifest) {
    DigitWord w = parse_word(word_spec);
    CylinderInterval c = cylinder(w);
    Table t;
    t.columns = {"word", "lo", "hi", "length"};
    std::string ws;
    for (std::size_t i = 0; i < w.size(); ++i) ws += (i ? " " : "") + std::to_string(w[i]);
    t.add_row({ws, c.lo.str(), c.hi.str(), c.length().str()});
    emit(t, out, manifest);
}

void cmd_thaler(long n, long stride, const Output& out, const json& manifest) {
    Table t;
    t.columns = {"n", "c_n"};
    Rational c(1, 2);
    t.add_row({"0", c.str()});
    for (long i = 1; i <= n; ++i) {
        c = Rational(c.num(), c.num() + c.den());
        if (i % stride == 0 || i == n) t.add_row({std::to_string(i), c.str()});
    }
    emit(t, out, manifest);
}

void cmd_deviation(const std::string& psi_name, const std::string& window, bool open_lo,
                   bool open_hi, long n_from, long n_to, const std::string& method,
                   long long cap, unsigned long long samples, unsigned long long seed,
                   unsigned long long max_nodes, unsigned long long exact_limit,
                   const Output& out, const json& manifest) {
    Table t;
    t.columns = {"n", "method", "lower", "upper", "tail", "lower_exact", "tail_exact",
                 "nodes", "estimate", "std_error", "hits", "samples"};
    for (long n = n_from; n <= n_to; ++n) {
        DeviationQuery q;
        q.psi = ArithmeticFunction::by_name(psi_name);
        q.n = n;
        q.J = parse_window(window, open_lo, open_hi);
        q.cap = cap;
        q.samples = samples;
        q.seed = seed;
        q.max_nodes = max_nodes;
        q.exact_term_limit = exact_limit;
        q.threads = out.threads;
        if (method == "exact") {
            q.method = DeviationMethod::exact_enumeration;
            auto e = exact_measure(q);
            t.add_row({std::to_string(n), "exact", fmt_double(e.lower.lo),
                       fmt_double(e.lower.hi + e.tail_unresolved.hi), fmt_double(e.tail_unresolved.hi),
                       mass_str(e.lower), mass_str(e.tail_unresolved), std::to_string(e.nodes),
                       "", "", "", ""});
        } else if (method == "mc") {
            q.method = DeviationMethod::monte_carlo;
            auto e = mc_measure(q);
            t.add_row({std::to_string(n), "mc", "", "", "", "", "", "",
                       fmt_double(e.estimate), fmt_double(e.std_error), std::to_string(e.hits),
                       std::to_string(e.samples)});
        } else {
            throw std::invalid_argument("method must be exact or mc");
        }
    }
    emit(t, out, manifest);
}

void cmd_bn(const std::string& window, long n_from, long n_to, long stride, const Output& out,
            const json& manifest) {
    MeanWindow J = parse_window(window, false, false);
    Table t;
    t.columns = {"n", "z_n", "m", "lambda", "mean", "certified"};
    std::vector<std::pair<double, double>> series;
    for (long n = n_from; n <= n_to; n += stride) {
        BnBound b = bn_measure(n, J);
        series.push_back({double(n), b.measure.to_double()});
        t.add_row({std::to_string(n), b.z.get_str(), b.m.get_str(), b.measure.str(),
                   b.mean.str(), b.mean_certified ? "1" : "0"});
    }
    if (series.size() >= 4) {
        RateFit f = rate_fit(series);
        t.extra = json{{"exp_rate", fmt_double(f.exp_rate)},
                       {"poly_exponent", fmt_double(f.poly_exponent)},
                       {"exp_residual_rms", fmt_double(f.exp_residual_rms)},
                       {"poly_residual_rms", fmt_double(f.poly_residual_rms)}};
    }
    emit(t, out, manifest);
}

void cmd_pressure(const std::string& psi_name, const std::string& qgrid, double tt, long long B,
                  long depth, const Output& out, const json& manifest) {
    auto psi = ArithmeticFunction::by_name(psi_name);
    auto grid = parse_grid(qgrid);
    Table t;
    t.columns = {"q", "t", "lower", "upper", "exact_partition"};
    for (auto& p : lambda_curve(psi, B, depth, grid, tt))
        t.add_row({fmt_double(p.q), fmt_double(p.t), fmt_double(p.lower), fmt_double(p.upper),
                   p.exact_partition ? "1" : "0"});
    emit(t, out, manifest);
}

void cmd_rate(const std::string& psi_name, const std::string& qgrid, const std::string& agrid,
              long long B, long depth, const Output& out, const json& manifest) {
    auto psi = ArithmeticFunction::by_name(psi_name);
    auto table = rate_function_table(psi, B, depth, parse_grid(qgrid), parse_grid(agrid));
    Table t;
    t.columns = {"alpha", "I_lower", "I_upper", "infinite", "contains_zero", "argmax_q"};
    for (auto& p : table.points)
        t.add_row({fmt_double(p.alpha), fmt_double(p.lower), fmt_double(p.upper),
                   p.infinite ? "1" : "0", p.contains_zero ? "1" : "0", fmt_double(p.argmax_q)});
    emit(t, out, manifest);
}

void cmd_spectrum(const std::string& agrid, const std::string& tgrid, long long B, long depth,
                  const Output& out, const json& manifest) {
    auto tab = lyapunov_spectrum(B, depth, parse_grid(agrid), parse_grid(tgrid));
    Table t;
    t.columns = {"alpha", "L_lower", "L_upper", "out_of_range"};
    for (auto& p : tab.points)
        t.add_row({fmt_double(p.alpha), fmt_double(p.lower), fmt_double(p.upper),
                   p.out_of_range ? "1" : "0"});
    emit(t, out, manifest);
}

void cmd_theoremc(const std::string& psi_name, int K, long long n_max, int chi_depth,
                  const Output& out, const json& manifest) {
    auto psi = ArithmeticFunction::by_name(psi_name);
    auto res = theorem_c_sequence(psi, K, {n_max, chi_depth});
    Table t;
    t.columns = {"k", "n_k", "r_k", "chi_threshold", "weight_on_3", "h", "chi_lo", "chi_hi",
                 "F_lo", "F_hi", "psi_integral", "psi_nk_over_rk"};
    for (auto& d : res.rows)
        t.add_row({std::to_string(d.k), std::to_string(d.n_k), fmt_double(d.r_k),
                   fmt_double(d.chi_threshold), fmt_double(d.bernoulli_weight_on_3),
                   fmt_double(d.mix_stats.h), fmt_double(d.mix_stats.chi.lo),
                   fmt_double(d.mix_stats.chi.hi), fmt_double(d.mix_stats.F.lo),
                   fmt_double(d.mix_stats.F.hi), fmt_double(d.mix_stats.psi_integral),
                   fmt_double(d.psi_nk_over_rk)});
    t.extra = json{{"applicable", res.applicable}};
    if (!res.applicable) t.extra["message"] = res.message;
    emit(t, out, manifest);
}

int cmd_rerun(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw std::invalid_argument("cannot open manifest: " + manifest_path);
    json doc = json::parse(f);
    json m = doc.contains("manifest") ? doc["manifest"] : doc;
    if (!m.contains("argv")) throw std::invalid_argument("manifest has no argv");
    std::vector<std::string> args;
    for (auto& a : m["argv"]) args.push_back(a.get<std::string>());
    return run_cli(args);
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"backward-continued-fraction digit statistics"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    Output out;
    app.add_option("--format", out.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", out.path, "output file (default stdout)");
    app.add_option("--threads", out.threads, "worker cap for sampling")->check(CLI::Range(1, 256));

    // expand
    auto* exp_cmd = app.add_subcommand("expand", "digits and running means of one point");
    std::string xs = "1/2";
    long n = 10;
    exp_cmd->add_option("--x", xs, "point in [0,1) as p/q or decimal")->required();
    exp_cmd->add_option("--n", n, "number of digits")->required();

    // cylinder
    auto* cyl_cmd = app.add_subcommand("cylinder", "exact endpoints of a digit word");
    std::string word;
    cyl_cmd->add_option("--word", word, "comma-separated digits, each >= 2")->required();

    // thaler
    auto* tha_cmd = app.add_subcommand("thaler", "backward orbit of 1/2 under the digit-2 branch");
    long tn = 10, tstride = 1;
    tha_cmd->add_option("--n", tn)->required();
    tha_cmd->add_option("--stride", tstride);

    // deviation
    auto* dev_cmd = app.add_subcommand("deviation", "measure of a Birkhoff-mean window");
    std::string psi = "identity", window, method = "exact";
    bool open_lo = false, open_hi = false;
    long n_from = 1, n_to = 0;
    long long cap = 20;
    unsigned long long samples = 100000, seed = 1, max_nodes = 80'000'000, exact_limit = 20'000;
    dev_cmd->add_option("--psi", psi);
    dev_cmd->add_option("--J", window, "window lo,hi; endpoints rational, log:rational or inf")->required();
    dev_cmd->add_flag("--open-lo", open_lo);
    dev_cmd->add_flag("--open-hi", open_hi);
    dev_cmd->add_option("--n", n_from, "window length (or start of range)")->required();
    dev_cmd->add_option("--n-to", n_to, "optional range end");
    dev_cmd->add_option("--method", method)->check(CLI::IsMember({"exact", "mc"}));
    dev_cmd->add_option("--cap", cap, "digit cap B for exact enumeration");
    dev_cmd->add_option("--samples", samples);
    dev_cmd->add_option("--seed", seed);
    dev_cmd->add_option("--max-nodes", max_nodes);
    dev_cmd->add_option("--exact-limit", exact_limit, "term bound for exact accumulation");

    // bn-bound
    auto* bn_cmd = app.add_subcommand("bn-bound", "explicit lower-bound sets for the arithmetic mean");
    std::string bn_window;
    long bn_from = 3, bn_to = 3, bn_stride = 1;
    bn_cmd->add_option("--J", bn_window)->required();
    bn_cmd->add_option("--n-from", bn_from)->required();
    bn_cmd->add_option("--n-to", bn_to)->required();
    bn_cmd->add_option("--stride", bn_stride);

    // pressure
    auto* pr_cmd = app.add_subcommand("pressure", "tilted partition-sum brackets over a q grid");
    std::string pr_psi = "identity", pr_qgrid = "geo:16:12";
    double pr_t = 1.0;
    long long pr_B = 20;
    long pr_depth = 6;
    pr_cmd->add_option("--psi", pr_psi);
    pr_cmd->add_option("--q-grid", pr_qgrid);
    pr_cmd->add_option("--t", pr_t);
    pr_cmd->add_option("--B", pr_B)->required();
    pr_cmd->add_option("--depth", pr_depth)->required();

    // rate
    auto* rt_cmd = app.add_subcommand("rate", "Legendre rate-function table");
    std::string rt_psi = "identity", rt_qgrid = "geo:16:12", rt_agrid;
    long long rt_B = 20;
    long rt_depth = 6;
    rt_cmd->add_option("--psi", rt_psi);
    rt_cmd->add_option("--q-grid", rt_qgrid);
    rt_cmd->add_option("--alpha-grid", rt_agrid)->required();
    rt_cmd->add_option("--B", rt_B)->required();
    rt_cmd->add_option("--depth", rt_depth)->required();

    // spectrum
    auto* sp_cmd = app.add_subcommand("spectrum", "cap-B Lyapunov spectrum table");
    std::string sp_agrid, sp_tgrid = "lin:0:2.2:23";
    long long sp_B = 20;
    long sp_depth = 24;
    sp_cmd->add_option("--alpha-grid", sp_agrid)->required();
    sp_cmd->add_option("--t-grid", sp_tgrid);
    sp_cmd->add_option("--B", sp_B)->required();
    sp_cmd->add_option("--depth", sp_depth)->required();

    // theoremc
    auto* tc_cmd = app.add_subcommand("theoremc", "flat-rate witness mixtures and diagnostics");
    std::string tc_psi = "identity";
    int tc_K = 8;
    long long tc_nmax = 1'000'000;
    int tc_depth = 16;
    tc_cmd->add_option("--psi", tc_psi);
    tc_cmd->add_option("--K", tc_K)->required();
    tc_cmd->add_option("--n-max", tc_nmax);
    tc_cmd->add_option("--chi-depth", tc_depth);

    // rerun
    auto* rr_cmd = app.add_subcommand("rerun", "regenerate an output from its manifest");
    std::string rr_path;
    rr_cmd->add_option("--manifest", rr_path)->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    json manifest = make_manifest(args);

    if (rr_cmd->parsed()) return cmd_rerun(rr_path);
    if (exp_cmd->parsed()) cmd_expand(xs, n, out, manifest);
    if (cyl_cmd->parsed()) cmd_cylinder(word, out, manifest);
    if (tha_cmd->parsed()) cmd_thaler(tn, tstride, out, manifest);
    if (dev_cmd->parsed())
        cmd_deviation(psi, window, open_lo, open_hi, n_from, n_to == 0 ? n_from : n_to, method,
                      cap, samples, seed, max_nodes, exact_limit, out, manifest);
    if (bn_cmd->parsed()) cmd_bn(bn_window, bn_from, bn_to, bn_stride, out, manifest);
    if (pr_cmd->parsed()) cmd_pressure(pr_psi, pr_qgrid, pr_t, pr_B, pr_depth, out, manifest);
    if (rt_cmd->parsed()) cmd_rate(rt_psi, rt_qgrid, rt_agrid, rt_B, rt_depth, out, manifest);
    if (sp_cmd->parsed()) cmd_spectrum(sp_agrid, sp_tgrid, sp_B, sp_depth, out, manifest);
    if (tc_cmd->parsed()) cmd_theoremc(tc_psi, tc_K, tc_nmax, tc_depth, out, manifest);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run_cli(args);
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
