#include "pvb/em.hpp"

#include "pvb/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace pvb {

namespace {

double log_sigmoid(double eta) noexcept
{
    return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

// log P(y | eta) for a Bernoulli outcome.
double log_bernoulli(int y, double eta) noexcept
{
    return y == 1 ? log_sigmoid(eta) : log_sigmoid(-eta);
}

double log_sum_exp(double a, double b) noexcept
{
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

logit::Frame frame_of(const PseudoData& pd)
{
    const auto n = pd.size();
    logit::Frame frame(n);
    logit::Vector t(n), d(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        t[k] = pd.rows[i].t;
        d[k] = pd.rows[i].d;
        v[k] = pd.rows[i].v;
    }
    frame.add("T", std::move(t));
    frame.add("D", std::move(d));
    frame.add("V", std::move(v));
    for (std::size_t c = 0; c < pd.covariate_names.size(); ++c) {
        logit::Vector x(n);
        for (std::size_t i = 0; i < n; ++i) x[static_cast<Eigen::Index>(i)] = pd.rows[i].x[c];
        frame.add(pd.covariate_names[c], std::move(x));
    }
    return frame;
}

// Design matrices for one pseudo-data layout, built once per EM run.
class EmProblem {
public:
    EmProblem(const PseudoData& pd, const EmConfig& config)
        : pd_(pd), designs_(em_designs(config)), frame_(frame_of(pd))
    {
        for (const auto& c : config.covariates)
            if (std::find(pd.covariate_names.begin(), pd.covariate_names.end(), c) == pd.covariate_names.end())
                throw Error(ErrorKind::MalformedInput, "unknown covariate '" + c + "'");
        x_disease_ = logit::build_design(frame_, designs_.disease);
        x_test_ = logit::build_design(frame_, designs_.test);
        x_verify_ = logit::build_design(frame_, designs_.verification);
    }

    // Complete-data log-likelihood contribution of every row at `state`.
    logit::Vector row_loglik(const EmState& s) const
    {
        const logit::Vector e0 = x_disease_ * s.alpha;
        const logit::Vector e1 = x_test_ * s.beta;
        const logit::Vector e2 = x_verify_ * s.gamma;
        logit::Vector out(e0.size());
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            const auto& r = pd_.rows[static_cast<std::size_t>(i)];
            out[i] = log_bernoulli(r.d, e0[i]) + log_bernoulli(r.t, e1[i]) + log_bernoulli(r.v, e2[i]);
        }
        return out;
    }

    std::vector<double> e_step(const EmState& s) const
    {
        const auto ll = row_loglik(s);
        std::vector<double> w(pd_.size(), 1.0);
        for (std::size_t k = 0; k < pd_.pairs; ++k) {
            const auto i0 = pd_.verified + k;
            const auto i1 = pd_.verified + pd_.pairs + k;
            const double w0 = 1.0 / (1.0 + std::exp(ll[static_cast<Eigen::Index>(i1)] - ll[static_cast<Eigen::Index>(i0)]));
            w[i0] = w0;
            w[i1] = 1.0 - w0;
        }
        return w;
    }

    EmState m_step(const std::vector<double>& weights, const EmState* previous,
                   logit::SeparationPolicy separation) const
    {
        logit::Vector w(static_cast<Eigen::Index>(weights.size()));
        for (std::size_t i = 0; i < weights.size(); ++i)
            w[static_cast<Eigen::Index>(i)] = weights[i] * pd_.multiplicity[i];
        auto options = [&](const logit::Vector* start) {
            logit::FitOptions o;
            o.separation = separation;
            if (start) o.start = *start;
            return o;
        };
        EmState out;
        out.alpha = logit::fit(x_disease_, frame_.column("D"), w, options(previous ? &previous->alpha : nullptr)).coefficients;
        out.beta = logit::fit(x_test_, frame_.column("T"), w, options(previous ? &previous->beta : nullptr)).coefficients;
        // Without unverified records V is constant and gamma does not enter the estimates.
        if (pd_.pairs == 0)
            out.gamma = logit::Vector::Zero(x_verify_.cols());
        else
            out.gamma =
                logit::fit(x_verify_, frame_.column("V"), w, options(previous ? &previous->gamma : nullptr)).coefficients;
        out.alpha_terms = designs_.disease.column_names();
        out.beta_terms = designs_.test.column_names();
        out.gamma_terms = designs_.verification.column_names();
        return out;
    }

    double observed_loglik(const EmState& s) const
    {
        const auto ll = row_loglik(s);
        double total = 0.0;
        for (std::size_t i = 0; i < pd_.verified; ++i) total += pd_.multiplicity[i] * ll[static_cast<Eigen::Index>(i)];
        for (std::size_t k = 0; k < pd_.pairs; ++k) {
            const auto i0 = pd_.verified + k;
            const auto i1 = pd_.verified + pd_.pairs + k;
            total += pd_.multiplicity[i0] *
                     log_sum_exp(ll[static_cast<Eigen::Index>(i0)], ll[static_cast<Eigen::Index>(i1)]);
        }
        return total;
    }

private:
    const PseudoData& pd_;
    EmDesigns designs_;
    logit::Frame frame_;
    logit::Matrix x_disease_;
    logit::Matrix x_test_;
    logit::Matrix x_verify_;
};

double max_change(const EmState& a, const EmState& b)
{
    return std::max({(a.alpha - b.alpha).cwiseAbs().maxCoeff(), (a.beta - b.beta).cwiseAbs().maxCoeff(),
                     (a.gamma - b.gamma).cwiseAbs().maxCoeff()});
}

logit::Vector covariate_row(const logit::DesignSpec& spec, int t, int d, const std::vector<std::string>& names,
                            const std::vector<double>& x)
{
    logit::Frame frame(1);
    frame.add("T", logit::Vector::Constant(1, t));
    frame.add("D", logit::Vector::Constant(1, d));
    for (std::size_t c = 0; c < names.size(); ++c) frame.add(names[c], logit::Vector::Constant(1, x[c]));
    return logit::build_design(frame, spec).row(0).transpose();
}

}  // namespace

int EmConfig::resolved_t_max() const
{
    return t_max.value_or(covariates.empty() ? 5000 : 50000);
}

void EmConfig::validate() const
{
    if (resolved_t_max() < 1) throw Error(ErrorKind::InvalidConfig, "t_max must be at least 1");
    if (!(cutoff > 0.0)) throw Error(ErrorKind::InvalidConfig, "cutoff must be positive");
    if (verification_interaction && !mnar)
        throw Error(ErrorKind::InvalidConfig, "the T:D verification term requires the MNAR model");
}

EmDesigns em_designs(const EmConfig& config)
{
    EmDesigns d;
    d.disease.terms = config.covariates;
    d.test.terms = {"D"};
    d.test.terms.insert(d.test.terms.end(), config.covariates.begin(), config.covariates.end());
    d.verification.terms = {"T"};
    if (config.mnar) {
        d.verification.terms.emplace_back("D");
        if (config.verification_interaction) d.verification.terms.emplace_back("T:D");
    }
    d.verification.terms.insert(d.verification.terms.end(), config.covariates.begin(), config.covariates.end());
    return d;
}

EmState initial_state(const EmConfig& config)
{
    const auto d = em_designs(config);
    EmState s;
    s.alpha_terms = d.disease.column_names();
    s.beta_terms = d.test.column_names();
    s.gamma_terms = d.verification.column_names();
    s.alpha = logit::Vector::Zero(static_cast<Eigen::Index>(s.alpha_terms.size()));
    s.beta = logit::Vector::Zero(static_cast<Eigen::Index>(s.beta_terms.size()));
    s.gamma = logit::Vector::Zero(static_cast<Eigen::Index>(s.gamma_terms.size()));
    return s;
}

PseudoData build_pseudo_data(const Dataset& data)
{
    PseudoData pd;
    pd.covariate_names = data.covariate_names();
    const auto verified = data.verified_indices();
    const auto missing = data.unverified_indices();
    pd.verified = verified.size();
    pd.pairs = missing.size();
    const auto total = pd.verified + 2 * pd.pairs;
    pd.rows.reserve(total);
    pd.origin.reserve(total);
    for (auto i : verified) {
        pd.rows.push_back({data[i].t, *data[i].d, 1, data[i].x});
        pd.origin.push_back(i);
    }
    for (int d : {0, 1}) {
        for (auto i : missing) {
            pd.rows.push_back({data[i].t, d, 0, data[i].x});
            pd.origin.push_back(i);
        }
    }
    pd.weights.assign(total, 1.0);
    std::fill(pd.weights.begin() + static_cast<std::ptrdiff_t>(pd.verified), pd.weights.end(), 0.5);
    pd.multiplicity.assign(total, 1.0);
    return pd;
}

PseudoData compress(const PseudoData& pd)
{
    using Key = std::tuple<int, int, std::vector<double>>;
    PseudoData out;
    out.covariate_names = pd.covariate_names;

    std::map<Key, std::size_t> verified_slot;
    for (std::size_t i = 0; i < pd.verified; ++i) {
        const auto& r = pd.rows[i];
        auto [it, inserted] = verified_slot.try_emplace(Key{r.t, r.d, r.x}, out.rows.size());
        if (inserted) {
            out.rows.push_back(r);
            out.weights.push_back(pd.weights[i]);
            out.multiplicity.push_back(0.0);
            out.origin.push_back(pd.origin[i]);
        }
        out.multiplicity[it->second] += pd.multiplicity[i];
    }
    out.verified = out.rows.size();

    // Pairs merge on (T, X); the stacked weights of identical pairs coincide
    // at every EM iteration, so keeping the first pair's weight is exact.
    std::map<Key, std::size_t> pair_slot;
    std::vector<std::size_t> firsts;
    std::vector<double> counts;
    for (std::size_t k = 0; k < pd.pairs; ++k) {
        const auto& r = pd.rows[pd.verified + k];
        auto [it, inserted] = pair_slot.try_emplace(Key{r.t, 0, r.x}, firsts.size());
        if (inserted) {
            firsts.push_back(k);
            counts.push_back(0.0);
        }
        counts[it->second] += pd.multiplicity[pd.verified + k];
    }
    out.pairs = firsts.size();
    for (std::size_t half = 0; half < 2; ++half) {
        for (std::size_t j = 0; j < firsts.size(); ++j) {
            const auto src = pd.verified + half * pd.pairs + firsts[j];
            out.rows.push_back(pd.rows[src]);
            out.weights.push_back(pd.weights[src]);
            out.multiplicity.push_back(counts[j]);
            out.origin.push_back(pd.origin[src]);
        }
    }
    return out;
}

std::vector<double> e_step(const PseudoData& pd, const EmState& state, const EmConfig& config)
{
    return EmProblem(pd, config).e_step(state);
}

EmState m_step(const PseudoData& pd, const EmConfig& config, const EmState* previous,
               logit::SeparationPolicy separation)
{
    return EmProblem(pd, config).m_step(pd.weights, previous, separation);
}

double observed_log_likelihood(const PseudoData& pd, const EmState& state, const EmConfig& config)
{
    return EmProblem(pd, config).observed_loglik(state);
}

EmState run_em(const Dataset& data, const EmConfig& config, logit::SeparationPolicy separation)
{
    config.validate();
    const auto tab = cross_table(data);
    if (tab.s1 + tab.s0 == 0 || tab.r1 + tab.r0 == 0)
        throw Error(ErrorKind::DegenerateMargin, "EM: verified records must include both disease classes");

    const auto pd = compress(build_pseudo_data(data));
    const EmProblem problem(pd, config);

    // theta = 0 makes every factor 1/2, so the first E-step gives weights 1/2.
    EmState state = initial_state(config);
    auto weights = problem.e_step(state);
    std::vector<double> deltas;
    std::vector<double> logliks;
    const int t_max = config.resolved_t_max();
    bool converged = false;
    int it = 0;
    while (it < t_max) {
        ++it;
        EmState next = problem.m_step(weights, &state, separation);
        const double delta = max_change(next, state);
        state = std::move(next);
        weights = problem.e_step(state);
        deltas.push_back(delta);
        logliks.push_back(problem.observed_loglik(state));
        if (delta < config.cutoff) {
            converged = true;
            break;
        }
    }
    state.iterations = it;
    state.converged = converged;
    state.delta_trace = std::move(deltas);
    state.loglik_trace = std::move(logliks);
    return state;
}

Estimates em_estimates(const Dataset& data, const EmState& state, const EmConfig& config)
{
    const auto designs = em_designs(config);
    std::vector<std::size_t> cov_idx;
    for (const auto& c : config.covariates) cov_idx.push_back(data.covariate_index(c));

    double p1_sum = 0.0;
    double q1_sum = 0.0;  // sum (1 - p1)
    double tp = 0.0;      // sum p2(D=1) p1
    double tn = 0.0;      // sum (1 - p2(D=0)) (1 - p1)
    std::vector<double> x(cov_idx.size());
    for (const auto& r : data.records()) {
        for (std::size_t c = 0; c < cov_idx.size(); ++c) x[c] = r.x[cov_idx[c]];
        const double p1 = logit::inv_logit(covariate_row(designs.disease, 0, 0, config.covariates, x).dot(state.alpha));
        const double se_i = logit::inv_logit(covariate_row(designs.test, 0, 1, config.covariates, x).dot(state.beta));
        const double fp_i = logit::inv_logit(covariate_row(designs.test, 0, 0, config.covariates, x).dot(state.beta));
        p1_sum += p1;
        q1_sum += 1.0 - p1;
        tp += se_i * p1;
        tn += (1.0 - fp_i) * (1.0 - p1);
    }
    const double se = tp / p1_sum;
    const double sp = tn / q1_sum;
    const double prevalence = p1_sum / static_cast<double>(data.size());
    Estimates e{};
    at(e, Measure::Se) = se;
    at(e, Measure::Sp) = sp;
    at(e, Measure::PPV) = ppv_from(se, sp, prevalence);
    at(e, Measure::NPV) = npv_from(se, sp, prevalence);
    return e;
}

Estimates em_estimates_by_pattern(const Dataset& data, const EmState& state, const EmConfig& config)
{
    const auto designs = em_designs(config);
    std::vector<std::size_t> cov_idx;
    for (const auto& c : config.covariates) cov_idx.push_back(data.covariate_index(c));

    std::map<std::vector<double>, double> pattern_weight;
    for (const auto& r : data.records()) {
        std::vector<double> x;
        for (auto c : cov_idx) x.push_back(r.x[c]);
        pattern_weight[x] += 1.0 / static_cast<double>(data.size());
    }
    double num_se = 0.0, den_se = 0.0, num_sp = 0.0, den_sp = 0.0;
    for (const auto& [x, w] : pattern_weight) {
        const double p_d = logit::inv_logit(covariate_row(designs.disease, 0, 0, config.covariates, x).dot(state.alpha));
        const double p_t1 = logit::inv_logit(covariate_row(designs.test, 0, 1, config.covariates, x).dot(state.beta));
        const double p_t0 = logit::inv_logit(covariate_row(designs.test, 0, 0, config.covariates, x).dot(state.beta));
        num_se += p_t1 * p_d * w;
        den_se += p_d * w;
        num_sp += (1.0 - p_t0) * (1.0 - p_d) * w;
        den_sp += (1.0 - p_d) * w;
    }
    Estimates e{};
    at(e, Measure::Se) = num_se / den_se;
    at(e, Measure::Sp) = num_sp / den_sp;
    at(e, Measure::PPV) = ppv_from(num_se / den_se, num_sp / den_sp, den_se);
    at(e, Measure::NPV) = npv_from(num_se / den_se, num_sp / den_sp, den_se);
    return e;
}

EmOutput acc_em(const Dataset& data, const EmConfig& config)
{
    EmOutput out;
    out.state = run_em(data, config);
    auto& res = out.result;
    res.method = Method::EM;
    res.meta.covariates = config.covariates;
    res.meta.mnar = config.mnar;
    res.meta.iterations = out.state.iterations;
    res.meta.converged = out.state.converged;
    if (!out.state.converged) {
        res.meta.warnings.push_back("EM did not converge within " + std::to_string(config.resolved_t_max()) +
                                    " iterations");
    }
    const auto est = em_estimates(data, out.state, config);
    for (auto m : kMeasures) res[m].estimate = at(est, m);

    if (config.bootstrap) {
        const auto& boot_config = *config.bootstrap;
        res.meta.alpha = boot_config.alpha;
        EmConfig inner = config;
        inner.bootstrap.reset();
        const auto policy =
            boot_config.accept_boundary_fits ? logit::SeparationPolicy::Boundary : logit::SeparationPolicy::Throw;
        Estimator estimator = [&](const Dataset& d) { return em_estimates(d, run_em(d, inner, policy), inner); };
        const auto boot = bootstrap_accuracy(data, estimator, boot_config);
        apply_bootstrap(res, boot, boot_config);
    }
    return out;
}

}  // namespace pvb
