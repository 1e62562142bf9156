// Acceptance checks on the bundled SPECT/CAD data and on simulated data.
// Prints one PASS/FAIL line per criterion; exits non-zero if any fails.

#include "oracle.hpp"
#include "support.hpp"

#include "pvb/cli.hpp"
#include "pvb/closed_form.hpp"
#include "pvb/em.hpp"
#include "pvb/mi.hpp"
#include "pvb/simgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

using namespace pvb;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

class Check {
public:
    void near(const std::string& what, double got, double want, double tol)
    {
        if (!(std::abs(got - want) <= tol)) fail(what, got, want, tol);
    }
    void relative(const std::string& what, double got, double want, double tol)
    {
        if (!(std::abs(got - want) <= tol * std::abs(want))) fail(what, got, want, tol);
    }
    void expect(const std::string& what, bool ok)
    {
        if (!ok) problems_.push_back(what);
    }
    void note(const std::string& s) { notes_.push_back(s); }

    bool ok() const { return problems_.empty(); }
    std::string summary() const
    {
        std::string s;
        for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
        for (const auto& p : problems_) s += (s.empty() ? "" : "; ") + p;
        return s;
    }

private:
    void fail(const std::string& what, double got, double want, double tol)
    {
        std::ostringstream o;
        o.precision(10);
        o << what << ": got " << got << ", want " << want << " +/- " << tol;
        problems_.push_back(o.str());
    }
    std::vector<std::string> problems_;
    std::vector<std::string> notes_;
};

std::string ms(double seconds)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g ms", seconds * 1e3);
    return buf;
}

const char* kNames[] = {"Se", "Sp", "PPV", "NPV"};

void estimates_near(Check& c, const std::string& label, const AccuracyResult& r, const double (&want)[4], double tol)
{
    for (std::size_t k = 0; k < 4; ++k) c.near(label + " " + kNames[k], r.measures[k].estimate, want[k], tol);
}

// Best of several timed runs, after one warm-up run.
double best_time(const std::function<void()>& f, int runs)
{
    f();
    double best = 1e300;
    for (int i = 0; i < runs; ++i) {
        const auto t0 = Clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

void criterion1(Check& c)
{
    const auto d = test::spect();
    const auto r = cca(cross_table(d));
    const double est[] = {0.9750000, 0.1439114, 0.4566745, 0.8863636};
    const double se[] = {0.01103970, 0.02132173, 0.02410569, 0.04784519};
    const double lo[] = {0.9533626, 0.1021216, 0.4094282, 0.7925888};
    const double hi[] = {0.9966374, 0.1857013, 0.5039207, 0.9801385};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& m = r.measures[k];
        c.near(std::string("estimate ") + kNames[k], m.estimate, est[k], 1e-6);
        c.expect(std::string("SE present for ") + kNames[k], m.se.has_value() && m.ci.has_value());
        if (!m.se || !m.ci) continue;
        c.near(std::string("SE ") + kNames[k], *m.se, se[k], 1e-6);
        c.near(std::string("LowCI ") + kNames[k], m.ci->low, lo[k], 1e-6);
        c.near(std::string("UppCI ") + kNames[k], m.ci->high, hi[k], 1e-6);
    }
    const double t = best_time([&] { (void)cca(cross_table(d)); }, 20);
    c.note("runtime " + ms(t));
    c.expect("runtime under 1 ms", t < 1e-3);
}

void criterion2(Check& c)
{
    const auto d = test::spect();
    const double want[] = {0.8188629, 0.5918754, 0.4566745, 0.8863636};
    const auto b = bg(cross_table(d));
    const auto e = ebg(d);
    estimates_near(c, "BG", b, want, 1e-6);
    estimates_near(c, "EBG", e, want, 1e-6);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& m = b.measures[k];
        c.expect(std::string("BG interval finite for ") + kNames[k],
                 m.ci && std::isfinite(m.ci->low) && std::isfinite(m.ci->high) && m.se && std::isfinite(*m.se));
    }
    const double t = best_time(
        [&] {
            (void)bg(cross_table(d));
            (void)ebg(d);
        },
        5);
    c.note("runtime " + ms(t));
    c.expect("runtime under 0.1 s", t < 0.1);
}

void criterion3(Check& c)
{
    const auto d = test::spect({"X3"});
    EbgOptions o;
    o.covariates = {"X3"};
    o.saturated = true;
    const double want[] = {0.8400495, 0.5912022, 0.4437285, 0.9049587};
    estimates_near(c, "EBG-X3", ebg(d, o), want, 1e-4);

    BootConfig b;
    b.replicates = 999;
    b.seed = 12345;
    o.bootstrap = b;
    const auto r = ebg(d, o);
    const double ref_se[] = {0.0606, 0.0157, 0.0234, 0.0431};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& m = r.measures[k];
        c.expect(std::string("bootstrap SE present for ") + kNames[k], m.se.has_value());
        if (m.se) c.relative(std::string("bootstrap SE ") + kNames[k], *m.se, ref_se[k], 0.25);
    }
    std::ostringstream o2;
    o2.precision(4);
    o2 << "SE " << *r.measures[0].se << "/" << *r.measures[1].se << "/" << *r.measures[2].se << "/"
       << *r.measures[3].se;
    c.note(o2.str());
}

void criterion4(Check& c)
{
    const auto t0 = Clock::now();
    for (bool with_x : {false, true}) {
        MiConfig cfg;
        cfg.m = 85;
        cfg.seed = 12345;
        if (with_x) cfg.covariates = {"X3"};
        const auto out = acc_mi(test::spect(cfg.covariates), cfg);
        const double plain[] = {0.8026, 0.5867, 0.4574, 0.8685};
        const double x3[] = {0.8176, 0.5864, 0.4456, 0.8853};
        estimates_near(c, with_x ? "MI-X3" : "MI", out.result, with_x ? x3 : plain, 0.02);
        for (std::size_t k = 0; k < 4; ++k) {
            const auto& p = out.pooled.measures[k];
            c.expect(std::string("pooling identity ") + kNames[k], p.t_total == p.ubar + (1.0 + 1.0 / 85.0) * p.b);
            c.expect(std::string("positive df ") + kNames[k], p.df > 0.0);
        }
    }
    const double t = seconds_since(t0);
    c.note("runtime " + ms(t / 2.0) + " per run");
    c.expect("runtime under 30 s", t / 2.0 < 30.0);
}

void criterion5(Check& c)
{
    for (bool with_x : {false, true}) {
        EmConfig cfg;
        if (with_x) cfg.covariates = {"X3"};
        const auto d = test::spect(cfg.covariates);
        const auto t0 = Clock::now();
        const auto out = acc_em(d, cfg);
        const double t = seconds_since(t0);
        const double plain[] = {0.7123, 0.6441, 0.6550, 0.7024};
        const double x3[] = {0.7131, 0.6458, 0.6575, 0.7025};
        const std::string label = with_x ? "EM-X3" : "EM";
        estimates_near(c, label, out.result, with_x ? x3 : plain, with_x ? 5e-3 : 1e-3);
        c.expect(label + " converged", out.state.converged);
        c.expect(label + " t_max", cfg.resolved_t_max() == (with_x ? 50000 : 5000));
        const auto& ll = out.state.loglik_trace;
        bool monotone = true;
        for (std::size_t i = 1; i < ll.size(); ++i) monotone = monotone && ll[i] >= ll[i - 1] - 1e-10;
        c.expect(label + " log-likelihood monotone", monotone);
        c.expect(label + " runtime under 5 min", t < 300.0);
        c.note(label + " " + std::to_string(out.state.iterations) + " iterations in " + ms(t));
    }
    EmConfig cfg;
    BootConfig b;
    b.replicates = 49;
    b.seed = 12345;
    cfg.bootstrap = b;
    const auto r = acc_em(test::spect(), cfg).result;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& m = r.measures[k];
        c.expect(std::string("R=49 BCa bounds finite for ") + kNames[k],
                 r.ci_kind == CiKind::Bca && m.ci && std::isfinite(m.ci->low) && std::isfinite(m.ci->high));
    }
}

void criterion6(Check& c)
{
    const auto d = test::spect();
    EmConfig cfg;
    cfg.mnar = false;
    const auto em = acc_em(d, cfg).result;
    const auto e = ebg(d);
    for (std::size_t k = 0; k < 4; ++k)
        c.near(std::string("EM(MAR) vs EBG ") + kNames[k], em.measures[k].estimate, e.measures[k].estimate, 0.01);
}

void criterion7(Check& c)
{
    std::vector<test::Row> plain{{1, 1}, {1, 1}, {1, 1}, {1, 0}, {1, 0}, {0, 1}, {0, 0}, {0, 0}, {1, -1}, {0, -1}};
    std::vector<test::Row> with_x;
    for (double x : {0.0, 1.0})
        for (auto [t, dd] : {std::pair{1, 1}, {1, 0}, {0, 1}, {0, 0}, {1, -1}, {0, -1}}) with_x.push_back({t, dd, {x}});

    for (bool use_x : {false, true}) {
        const auto d = use_x ? test::make(with_x, {"X"}) : test::make(plain);
        EmConfig cfg;
        if (use_x) cfg.covariates = {"X"};
        const auto s = run_em(d, cfg);
        const double em = observed_log_likelihood(build_pseudo_data(d), s, cfg);
        const auto f = [&](const std::vector<double>& th) { return test::direct_loglik(d, th, use_x); };
        const std::size_t dim = use_x ? 9 : 6;
        std::vector<std::vector<double>> starts{std::vector<double>(dim, 0.0), test::pack(s)};
        for (int j = 0; j < 3; ++j) {
            std::vector<double> p(dim);
            for (std::size_t i = 0; i < dim; ++i) p[i] = 0.4 * std::sin(7.0 * (j + 1) + 3.0 * i);
            starts.push_back(p);
        }
        const double best = test::direct_search_max(f, starts);
        c.near(std::string("EM vs direct search, ") + (use_x ? "12 records with X" : "10 records"), em, best, 1e-4);
    }

    VerificationTable t;
    t.s1 = 2;
    t.r1 = 1;
    t.u1 = 3;
    t.s0 = 1;
    t.r0 = 2;
    t.u0 = 3;
    const auto e = ebg(test::from_table(t));
    for (std::size_t k = 0; k < 4; ++k) c.near(std::string("EBG hand value ") + kNames[k], e.measures[k].estimate, 2.0 / 3.0, 1e-10);
    t.s1 = 3;
    t.r1 = 1;
    t.u1 = 2;
    t.s0 = 1;
    t.r0 = 3;
    t.u0 = 2;
    const auto e2 = ebg(test::from_table(t));
    c.near("EBG hand value Se (second fixture)", e2.measures[0].estimate, 0.75, 1e-10);
    c.near("EBG hand value Sp (second fixture)", e2.measures[1].estimate, 0.75, 1e-10);
}

void criterion8(Check& c)
{
    using namespace pvb::sim;
    auto bias = [](const AccuracyResult& r, const SimTruth& t, std::size_t k) {
        const double truth[] = {t.se, t.sp, t.ppv, t.npv};
        return r.measures[k].estimate - truth[k];
    };

    SimSpec mcar;
    mcar.n = 100000;
    mcar.seed = 101;
    mcar.se = 0.85;
    mcar.sp = 0.75;
    mcar.verification.intercept = -0.5;
    {
        const auto r = generate(mcar);
        const auto est = cca(cross_table(r.data));
        for (std::size_t k = 0; k < 4; ++k) c.near(std::string("MCAR cca bias ") + kNames[k], bias(est, r.truth, k), 0.0, 0.01);
    }

    auto mar = mcar;
    mar.seed = 102;
    mar.verification = {Mechanism::MAR, -2.0, 2.0, 0.0};
    {
        const auto r = generate(mar);
        const auto est = bg(cross_table(r.data));
        for (std::size_t k = 0; k < 4; ++k) c.near(std::string("MAR(T) bg bias ") + kNames[k], bias(est, r.truth, k), 0.0, 0.01);
    }

    auto mnar = mcar;
    mnar.seed = 103;
    mnar.verification = {Mechanism::MNAR, -1.5, 1.5, 1.0};
    CovariateSpec a;
    a.name = "A";
    a.p = 0.4;
    a.disease_effect = 1.0;
    a.test_effect = -0.7;
    a.verify_effect = 0.5;
    CovariateSpec b;
    b.name = "B";
    b.p = 0.5;
    b.disease_effect = -1.2;
    b.test_effect = 0.5;
    b.verify_effect = -0.4;
    mnar.covariates = {a, b};
    {
        const auto r = generate(mnar);
        const auto naive = cca(cross_table(r.data));
        double worst = 0.0;
        for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(bias(naive, r.truth, k)));
        c.expect("MNAR cca bias exceeds 0.05", worst > 0.05);
        EmConfig cfg;
        cfg.covariates = {"A", "B"};
        const auto em = acc_em(r.data, cfg);
        c.expect("MNAR EM converged", em.state.converged);
        for (std::size_t k = 0; k < 4; ++k) c.near(std::string("MNAR EM bias ") + kNames[k], bias(em.result, r.truth, k), 0.0, 0.02);
        char buf[64];
        std::snprintf(buf, sizeof buf, "MNAR max cca bias %.3f", worst);
        c.note(buf);
    }
}

void criterion9(Check& c)
{
    const std::vector<std::vector<std::string>> runs{
        {"ebg", "-x", "X3", "--saturated", "--R", "199", "--seed", "12345"},
        {"mi", "--m", "20", "--seed", "12345"},
        {"mi", "-x", "X3", "--m", "10", "--seed", "7"},
        {"em", "--R", "20", "--seed", "12345"},
        {"compare", "--R", "30", "--m", "5", "--seed", "9"},
    };
    for (const auto& base : runs) {
        std::vector<std::string> outputs;
        for (const char* threads : {"1", "2", "4"}) {
            auto args = base;
            args.insert(args.end(), {"--format", "json", "--threads", threads});
            std::ostringstream out, err;
            const int code = cli::main_entry(args, out, err);
            c.expect(base[0] + " exit code 0 with " + threads + " threads", code == 0);
            outputs.push_back(out.str());
        }
        c.expect(base[0] + " JSON identical across 1/2/4 threads", outputs[0] == outputs[1] && outputs[1] == outputs[2]);
    }
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, void (*)(Check&)>> criteria{
        {"CCA exact reproduction", criterion1},
        {"BG/EBG exact reproduction", criterion2},
        {"EBG with X3 and bootstrap SEs", criterion3},
        {"MI pooled estimates", criterion4},
        {"EM MNAR estimates and R=49 smoke run", criterion5},
        {"EM under MAR agrees with EBG", criterion6},
        {"tiny-instance oracles", criterion7},
        {"simulation bias properties", criterion8},
        {"determinism across thread counts", criterion9},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        const auto t0 = Clock::now();
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.expect(std::string("unexpected exception: ") + e.what(), false);
        }
        const double t = seconds_since(t0);
        char elapsed[32];
        std::snprintf(elapsed, sizeof elapsed, "%.2fs", t);
        std::cout << (c.ok() ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ["
                  << elapsed << "] " << c.summary() << std::endl;
        if (!c.ok()) ++failed;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
