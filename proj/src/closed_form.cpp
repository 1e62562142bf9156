#include "pvb/closed_form.hpp"

#include "pvb/error.hpp"

#include <cmath>

namespace pvb {

namespace {

void require_margins(const VerificationTable& t)
{
    if (t.s1 + t.s0 == 0) throw Error(ErrorKind::DegenerateMargin, "no verified diseased records (s1 + s0 = 0)");
    if (t.r1 + t.r0 == 0) throw Error(ErrorKind::DegenerateMargin, "no verified non-diseased records (r1 + r0 = 0)");
    if (t.s1 + t.r1 == 0) throw Error(ErrorKind::DegenerateMargin, "no verified test-positive records (s1 + r1 = 0)");
    if (t.s0 + t.r0 == 0) throw Error(ErrorKind::DegenerateMargin, "no verified test-negative records (s0 + r0 = 0)");
}

double ratio_variance(double a, double b)
{
    const double s = a + b;
    return a * b / (s * s * s);
}

logit::Frame verified_frame(const Dataset& data, const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& cov_idx, const std::vector<std::string>& covariates,
                            bool with_disease)
{
    logit::Frame frame(rows.size());
    logit::Vector t(rows.size());
    logit::Vector d(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        t[static_cast<Eigen::Index>(i)] = data[rows[i]].t;
        d[static_cast<Eigen::Index>(i)] = data[rows[i]].d ? *data[rows[i]].d : std::nan("");
    }
    frame.add("T", std::move(t));
    if (with_disease) frame.add("D", std::move(d));
    for (std::size_t k = 0; k < cov_idx.size(); ++k) {
        logit::Vector x(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) x[static_cast<Eigen::Index>(i)] = data[rows[i]].x[cov_idx[k]];
        frame.add(covariates[k], std::move(x));
    }
    return frame;
}

}  // namespace

Estimates cca_variances(const VerificationTable& t)
{
    require_margins(t);
    Estimates v{};
    at(v, Measure::Se) = ratio_variance(static_cast<double>(t.s1), static_cast<double>(t.s0));
    at(v, Measure::Sp) = ratio_variance(static_cast<double>(t.r0), static_cast<double>(t.r1));
    at(v, Measure::PPV) = ratio_variance(static_cast<double>(t.s1), static_cast<double>(t.r1));
    at(v, Measure::NPV) = ratio_variance(static_cast<double>(t.r0), static_cast<double>(t.s0));
    return v;
}

AccuracyResult cca(const VerificationTable& t, double alpha)
{
    require_margins(t);
    const double s1 = static_cast<double>(t.s1);
    const double s0 = static_cast<double>(t.s0);
    const double r1 = static_cast<double>(t.r1);
    const double r0 = static_cast<double>(t.r0);

    AccuracyResult out;
    out.method = Method::CCA;
    out.ci_kind = CiKind::Wald;
    out.meta.alpha = alpha;
    out[Measure::Se].estimate = s1 / (s1 + s0);
    out[Measure::Sp].estimate = r0 / (r1 + r0);
    out[Measure::PPV].estimate = s1 / (s1 + r1);
    out[Measure::NPV].estimate = r0 / (s0 + r0);
    const auto var = cca_variances(t);
    for (auto m : kMeasures) {
        auto& e = out[m];
        e.se = std::sqrt(at(var, m));
        e.ci = wald_interval(e.estimate, *e.se, alpha);
    }
    return out;
}

double bg_prevalence(const VerificationTable& t)
{
    require_margins(t);
    const double diseased = static_cast<double>(t.n1()) * t.s1 / static_cast<double>(t.s1 + t.r1) +
                            static_cast<double>(t.n0()) * t.s0 / static_cast<double>(t.s0 + t.r0);
    return diseased / static_cast<double>(t.n());
}

AccuracyResult bg(const VerificationTable& t, double alpha)
{
    require_margins(t);
    if (t.n1() == 0 || t.n0() == 0)
        throw Error(ErrorKind::DegenerateMargin, "BG needs both test-positive and test-negative records");
    const double s1 = static_cast<double>(t.s1);
    const double s0 = static_cast<double>(t.s0);
    const double r1 = static_cast<double>(t.r1);
    const double r0 = static_cast<double>(t.r0);
    const double n1 = static_cast<double>(t.n1());
    const double n0 = static_cast<double>(t.n0());
    const double n = static_cast<double>(t.n());

    // Complete-case PPV/NPV carry over unchanged.
    AccuracyResult out = cca(t, alpha);
    out.method = Method::BG;

    const double pos_diseased = n1 * s1 / (s1 + r1);
    const double neg_diseased = n0 * s0 / (s0 + r0);
    const double pos_healthy = n1 * r1 / (s1 + r1);
    const double neg_healthy = n0 * r0 / (s0 + r0);
    auto& se = out[Measure::Se];
    auto& sp = out[Measure::Sp];
    se.estimate = pos_diseased / (pos_diseased + neg_diseased);
    sp.estimate = neg_healthy / (pos_healthy + neg_healthy);
    se.se.reset();
    se.ci.reset();
    sp.se.reset();
    sp.ci.reset();

    if (t.s1 == 0 || t.s0 == 0 || t.r1 == 0 || t.r0 == 0) {
        out.meta.warnings.emplace_back("zero cell in verified table: Se/Sp intervals are undefined");
        return out;
    }
    const double base = n / (n0 * n1);
    const double se_factor = base + r1 / (s1 * (s1 + r1)) + r0 / (s0 * (s0 + r0));
    const double sp_factor = base + s1 / (r1 * (s1 + r1)) + s0 / (r0 * (s0 + r0));
    se.se = se.estimate * (1.0 - se.estimate) * std::sqrt(se_factor);
    sp.se = sp.estimate * (1.0 - sp.estimate) * std::sqrt(sp_factor);
    se.ci = wald_interval(se.estimate, *se.se, alpha);
    sp.ci = wald_interval(sp.estimate, *sp.se, alpha);
    return out;
}

EbgDetail ebg_fit(const Dataset& data, const std::vector<std::string>& covariates, bool saturated,
                  logit::SeparationPolicy separation)
{
    std::vector<std::size_t> cov_idx;
    for (const auto& c : covariates) cov_idx.push_back(data.covariate_index(c));

    const auto verified = data.verified_indices();
    if (verified.empty()) throw Error(ErrorKind::DegenerateMargin, "EBG: no verified records");
    const auto tab = cross_table(data);
    if (tab.s1 + tab.s0 == 0 || tab.r1 + tab.r0 == 0)
        throw Error(ErrorKind::DegenerateMargin, "EBG: verified records must include both disease classes");

    EbgDetail out;
    out.design = logit::DesignSpec::disease_given_test(covariates, saturated);
    const auto train = verified_frame(data, verified, cov_idx, covariates, true);
    const auto x_train = logit::build_design(train, out.design);
    logit::FitOptions options;
    options.separation = separation;
    out.disease_fit = logit::fit(x_train, train.column("D"), options);

    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto everyone = verified_frame(data, all, cov_idx, covariates, false);
    const auto x_all = logit::build_design(everyone, out.design);
    const auto p = logit::predict_prob(out.disease_fit, x_all);

    double mass = 0.0;       // sum p_i
    double pos_mass = 0.0;   // sum T_i p_i
    double neg_free = 0.0;   // sum (1 - T_i)(1 - p_i)
    double free_mass = 0.0;  // sum (1 - p_i)
    out.p_disease.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double pi = logit::clamp_prob(p[static_cast<Eigen::Index>(i)]);
        out.p_disease[i] = pi;
        mass += pi;
        free_mass += 1.0 - pi;
        if (data[i].t == 1) pos_mass += pi; else neg_free += 1.0 - pi;
    }
    const double se = pos_mass / mass;
    const double sp = neg_free / free_mass;
    double ppv_den = 0.0;
    double npv_den = 0.0;
    for (double pi : out.p_disease) {
        ppv_den += pi * se + (1.0 - pi) * (1.0 - sp);
        npv_den += (1.0 - pi) * sp + pi * (1.0 - se);
    }
    at(out.estimates, Measure::Se) = se;
    at(out.estimates, Measure::Sp) = sp;
    at(out.estimates, Measure::PPV) = mass * se / ppv_den;
    at(out.estimates, Measure::NPV) = free_mass * sp / npv_den;
    return out;
}

AccuracyResult ebg(const Dataset& data, const EbgOptions& options)
{
    const auto detail = ebg_fit(data, options.covariates, options.saturated);
    AccuracyResult out;
    out.method = Method::EBG;
    out.meta.alpha = options.alpha;
    out.meta.covariates = options.covariates;
    out.meta.saturated = options.saturated;
    for (auto m : kMeasures) out[m].estimate = at(detail.estimates, m);
    if (!detail.disease_fit.converged) out.meta.warnings.emplace_back("disease model did not converge");

    if (options.bootstrap) {
        auto config = *options.bootstrap;
        config.alpha = options.alpha;
        const auto policy =
            config.accept_boundary_fits ? logit::SeparationPolicy::Boundary : logit::SeparationPolicy::Throw;
        Estimator estimator = [&](const Dataset& d) {
            return ebg_fit(d, options.covariates, options.saturated, policy).estimates;
        };
        const auto boot = bootstrap_accuracy(data, estimator, config);
        apply_bootstrap(out, boot, config);
    }
    return out;
}

}  // namespace pvb
