#include "pvb/mi.hpp"

#include "pvb/closed_form.hpp"
#include "pvb/error.hpp"
#include "pvb/logit.hpp"
#include "pvb/parallel.hpp"
#include "pvb/quantile.hpp"

#include <cmath>
#include <limits>

namespace pvb {

namespace {

constexpr std::uint64_t kImputationStream = 0x4D49ULL;

logit::Frame frame_for(const Dataset& data, const std::vector<std::size_t>& rows,
                       const std::vector<std::string>& covariates, const std::vector<std::size_t>& cov_idx)
{
    logit::Frame frame(rows.size());
    logit::Vector t(rows.size());
    logit::Vector d(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = data[rows[i]];
        t[static_cast<Eigen::Index>(i)] = r.t;
        d[static_cast<Eigen::Index>(i)] = r.d ? *r.d : std::nan("");
    }
    frame.add("T", std::move(t));
    frame.add("D", std::move(d));
    for (std::size_t k = 0; k < cov_idx.size(); ++k) {
        logit::Vector x(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) x[static_cast<Eigen::Index>(i)] = data[rows[i]].x[cov_idx[k]];
        frame.add(covariates[k], std::move(x));
    }
    return frame;
}

bool has_zero_margin(const VerificationTable& t)
{
    return t.s1 + t.s0 == 0 || t.r1 + t.r0 == 0 || t.s1 + t.r1 == 0 || t.s0 + t.r0 == 0;
}

}  // namespace

void MiConfig::validate() const
{
    if (m && *m < 2) throw Error(ErrorKind::InvalidConfig, "multiple imputation needs m >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
    if (max_redraws < 1) throw Error(ErrorKind::InvalidConfig, "max_redraws must be positive");
}

int default_m(const Dataset& data)
{
    const int m = static_cast<int>(std::ceil(missing_percentage(data)));
    return m < 2 ? 2 : m;
}

Dataset impute_once(const Dataset& data, const std::vector<std::string>& covariates, rng::Stream& stream)
{
    if (data.unverified_count() == 0) return data;

    std::vector<std::size_t> cov_idx;
    for (const auto& c : covariates) cov_idx.push_back(data.covariate_index(c));
    const auto design = logit::DesignSpec::disease_given_test(covariates, false);

    const auto verified = data.verified_indices();
    if (verified.empty()) throw Error(ErrorKind::DegenerateMargin, "MI: no verified records to fit the imputation model");
    const auto train = frame_for(data, verified, covariates, cov_idx);
    const auto fit = logit::fit(logit::build_design(train, design), train.column("D"));

    // beta* = beta_hat + L^{-T} z with L L' = Fisher information.
    Eigen::LLT<logit::Matrix> llt(fit.fisher_information);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::RankDeficientDesign, "MI: Fisher information is not positive definite");
    logit::Vector z(fit.coefficients.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = stream.normal();
    const logit::Vector draw = fit.coefficients + llt.matrixU().solve(z);

    const auto missing = data.unverified_indices();
    const auto target = frame_for(data, missing, covariates, cov_idx);
    const auto prob = logit::predict_prob(draw, logit::build_design(target, design));

    std::vector<Record> out = data.records();
    for (std::size_t i = 0; i < missing.size(); ++i)
        out[missing[i]].d = stream.bernoulli(prob[static_cast<Eigen::Index>(i)]) ? 1 : 0;
    return Dataset(std::move(out), data.covariate_names());
}

PooledMeasure pool_rubin(std::span<const double> q, std::span<const double> u, double alpha)
{
    if (q.size() != u.size() || q.size() < 2)
        throw Error(ErrorKind::InvalidConfig, "pool_rubin: need matching estimates and variances for m >= 2");
    const double m = static_cast<double>(q.size());
    PooledMeasure out;
    for (std::size_t j = 0; j < q.size(); ++j) {
        out.qbar += q[j] - q[0];
        out.ubar += u[j];
    }
    out.qbar = q[0] + out.qbar / m;
    out.ubar /= m;
    for (double v : q) out.b += (v - out.qbar) * (v - out.qbar);
    out.b /= (m - 1.0);
    out.t_total = out.ubar + (1.0 + 1.0 / m) * out.b;
    if (out.b > 0.0) {
        const double r = 1.0 + out.ubar / ((1.0 + 1.0 / m) * out.b);
        out.df = (m - 1.0) * r * r;
    } else {
        out.df = std::numeric_limits<double>::infinity();
    }
    const double half = t_quantile(1.0 - alpha / 2.0, out.df) * std::sqrt(out.t_total);
    out.ci = {out.qbar - half, out.qbar + half};
    return out;
}

MiOutput acc_mi(const Dataset& data, const MiConfig& config)
{
    config.validate();
    const int m = config.m.value_or(default_m(data));
    const auto slots = static_cast<std::size_t>(m);

    std::vector<Estimates> est(slots);
    std::vector<Estimates> var(slots);
    parallel_for(slots, config.threads, [&](std::size_t j) {
        for (int attempt = 0; attempt < config.max_redraws; ++attempt) {
            rng::Stream stream(config.seed, {kImputationStream, j, static_cast<std::uint64_t>(attempt)});
            const auto completed = impute_once(data, config.covariates, stream);
            const auto tab = cross_table(completed);
            if (has_zero_margin(tab)) continue;
            est[j] = cca(tab).estimates();
            var[j] = cca_variances(tab);
            return;
        }
        throw Error(ErrorKind::DegenerateImputation,
                    "imputation " + std::to_string(j) + " produced a zero margin in " +
                        std::to_string(config.max_redraws) + " consecutive draws");
    });

    MiOutput out;
    out.pooled.m = m;
    out.pooled.estimates = est;
    out.pooled.variances = var;
    auto& res = out.result;
    res.method = Method::MI;
    res.ci_kind = CiKind::Rubin;
    res.meta.alpha = config.alpha;
    res.meta.covariates = config.covariates;
    res.meta.seed = config.seed;
    res.meta.imputations = m;
    for (auto meas : kMeasures) {
        std::vector<double> q(slots);
        std::vector<double> u(slots);
        for (std::size_t j = 0; j < slots; ++j) {
            q[j] = at(est[j], meas);
            u[j] = at(var[j], meas);
        }
        const auto pooled = pool_rubin(q, u, config.alpha);
        out.pooled.measures[static_cast<std::size_t>(meas)] = pooled;
        res[meas].estimate = pooled.qbar;
        res[meas].se = std::sqrt(pooled.t_total);
        res[meas].ci = pooled.ci;
    }
    return out;
}

}  // namespace pvb
