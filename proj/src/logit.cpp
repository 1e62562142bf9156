#include "pvb/logit.hpp"

#include "pvb/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pvb::logit {

namespace {

// log(sigmoid(eta)) and log(1 - sigmoid(eta)) without overflow.
double log_sigmoid(double eta) noexcept
{
    return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

void check_shapes(const Matrix& x, const Vector& y, const Vector& w)
{
    if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorKind::DimensionMismatch, "logit::fit: empty design");
    if (y.size() != x.rows() || w.size() != x.rows()) {
        std::ostringstream msg;
        msg << "logit::fit: design has " << x.rows() << " rows but y has " << y.size() << " and weights "
            << w.size();
        throw Error(ErrorKind::DimensionMismatch, msg.str());
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!(w[i] >= 0.0) || !std::isfinite(w[i]))
            throw Error(ErrorKind::InvalidConfig, "logit::fit: weights must be finite and non-negative");
        total += w[i];
    }
    if (!(total > 0.0)) throw Error(ErrorKind::InvalidConfig, "logit::fit: all weights are zero");
}

// Pivoted QR of the equilibrated weighted normal equations.
void check_rank(const Matrix& x, const Vector& w)
{
    const Matrix gram = x.transpose() * w.asDiagonal() * x;
    const auto p = gram.rows();
    Vector scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(gram(j, j) > 0.0)) {
            throw Error(ErrorKind::RankDeficientDesign,
                        "logit::fit: design column " + std::to_string(j) + " is zero on all weighted rows");
        }
        scale[j] = 1.0 / std::sqrt(gram(j, j));
    }
    const Matrix corr = scale.asDiagonal() * gram * scale.asDiagonal();
    Eigen::ColPivHouseholderQR<Matrix> qr(corr);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        throw Error(ErrorKind::RankDeficientDesign, "logit::fit: design has rank " + std::to_string(qr.rank()) +
                                                        " < " + std::to_string(p) + " columns");
    }
}

}  // namespace

double inv_logit(double eta) noexcept
{
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double clamp_prob(double p) noexcept
{
    return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

double log_likelihood(const Vector& coefficients, const Matrix& x, const Vector& y, const Vector& weights)
{
    const Vector eta = x * coefficients;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (weights[i] == 0.0) continue;
        ll += weights[i] * (y[i] * log_sigmoid(eta[i]) + (1.0 - y[i]) * log_sigmoid(-eta[i]));
    }
    return ll;
}

LogitFit fit(const Matrix& x, const Vector& y, const Vector& weights, const FitOptions& options)
{
    check_shapes(x, y, weights);
    check_rank(x, weights);

    const auto p = x.cols();
    Vector beta = Vector::Zero(p);
    if (options.start) {
        if (options.start->size() != p)
            throw Error(ErrorKind::DimensionMismatch, "logit::fit: warm start has the wrong length");
        beta = *options.start;
    }

    LogitFit out;
    double ll = log_likelihood(beta, x, y, weights);
    Vector prob(x.rows());
    Vector work(x.rows());
    for (int it = 1; it <= options.max_iterations; ++it) {
        const Vector eta = x * beta;
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            prob[i] = inv_logit(eta[i]);
            work[i] = weights[i] * prob[i] * (1.0 - prob[i]);
        }
        const Matrix hessian = x.transpose() * work.asDiagonal() * x;
        const Vector score = x.transpose() * (weights.array() * (y - prob).array()).matrix();

        Vector step;
        Eigen::LDLT<Matrix> ldlt(hessian);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(score);
        if (step.size() != p || !step.allFinite()) {
            step = Eigen::CompleteOrthogonalDecomposition<Matrix>(hessian).solve(score);
        }
        if (!step.allFinite()) break;

        // Newton with step halving keeps the likelihood non-decreasing.
        double factor = 1.0;
        Vector candidate = beta + step;
        double ll_new = log_likelihood(candidate, x, y, weights);
        for (int h = 0; h < 40 && ll_new < ll - 1e-12 * (1.0 + std::fabs(ll)); ++h) {
            factor *= 0.5;
            candidate = beta + factor * step;
            ll_new = log_likelihood(candidate, x, y, weights);
        }
        beta = candidate;
        ll = ll_new;
        out.iterations = it;
        if (step.cwiseAbs().maxCoeff() < options.tolerance) {
            out.converged = true;
            break;
        }
    }

    out.coefficients = beta;
    out.log_likelihood = ll;
    const Vector eta = x * beta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double pi = inv_logit(eta[i]);
        work[i] = weights[i] * pi * (1.0 - pi);
    }
    out.fisher_information = x.transpose() * work.asDiagonal() * x;
    out.separated = beta.cwiseAbs().maxCoeff() > options.divergence_bound || !beta.allFinite();

    if (out.separated) {
        bool varies = false;
        bool seen = false;
        double first = 0.0;
        for (Eigen::Index i = 0; i < y.size() && !varies; ++i) {
            if (weights[i] == 0.0) continue;
            if (!seen) {
                first = y[i];
                seen = true;
            } else if (y[i] != first) {
                varies = true;
            }
        }
        if (options.separation == SeparationPolicy::Throw || !varies || !beta.allFinite()) {
            std::ostringstream msg;
            msg << "logit::fit: separation detected (max |coefficient| = " << beta.cwiseAbs().maxCoeff()
                << " after " << out.iterations << " iterations)";
            throw Error(ErrorKind::SeparationDetected, msg.str());
        }
    }
    return out;
}

LogitFit fit(const Matrix& x, const Vector& y, const FitOptions& options)
{
    return fit(x, y, Vector::Ones(x.rows()), options);
}

Vector predict_prob(const Vector& coefficients, const Matrix& x)
{
    if (x.cols() != coefficients.size()) {
        throw Error(ErrorKind::DimensionMismatch, "predict_prob: rows have width " + std::to_string(x.cols()) +
                                                      " but the fit has " + std::to_string(coefficients.size()) +
                                                      " coefficients");
    }
    const Vector eta = x * coefficients;
    return eta.unaryExpr([](double e) { return inv_logit(e); });
}

Vector predict_prob(const LogitFit& fit, const Matrix& x)
{
    return predict_prob(fit.coefficients, x);
}

// ---------------------------------------------------------------------------

void Frame::add(std::string name, Vector column)
{
    if (static_cast<std::size_t>(column.size()) != rows_)
        throw Error(ErrorKind::DimensionMismatch, "Frame::add: column '" + name + "' has the wrong length");
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it != names_.end()) {
        columns_[static_cast<std::size_t>(it - names_.begin())] = std::move(column);
        return;
    }
    names_.push_back(std::move(name));
    columns_.push_back(std::move(column));
}

bool Frame::has(const std::string& name) const
{
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const Vector& Frame::column(const std::string& name) const
{
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw Error(ErrorKind::MalformedInput, "design references unknown column '" + name + "'");
    return columns_[static_cast<std::size_t>(it - names_.begin())];
}

std::vector<std::string> DesignSpec::column_names() const
{
    std::vector<std::string> out;
    if (intercept) out.emplace_back("(Intercept)");
    out.insert(out.end(), terms.begin(), terms.end());
    return out;
}

bool DesignSpec::has_term(const std::string& term) const
{
    return std::find(terms.begin(), terms.end(), term) != terms.end();
}

DesignSpec DesignSpec::disease_given_test(const std::vector<std::string>& covariates, bool saturated)
{
    DesignSpec spec;
    spec.terms.emplace_back("T");
    spec.terms.insert(spec.terms.end(), covariates.begin(), covariates.end());
    if (saturated)
        for (const auto& c : covariates) spec.terms.push_back("T:" + c);
    return spec;
}

Matrix build_design(const Frame& frame, const DesignSpec& spec)
{
    const auto names = spec.column_names();
    Matrix x(static_cast<Eigen::Index>(frame.rows()), static_cast<Eigen::Index>(names.size()));
    Eigen::Index col = 0;
    if (spec.intercept) x.col(col++).setOnes();
    for (const auto& term : spec.terms) {
        Vector values = Vector::Ones(x.rows());
        std::size_t start = 0;
        for (;;) {
            auto pos = term.find(':', start);
            const auto factor = term.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
            values.array() *= frame.column(factor).array();
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (!values.allFinite())
            throw Error(ErrorKind::MalformedInput, "design term '" + term + "' has missing values");
        x.col(col++) = values;
    }
    return x;
}

}  // namespace pvb::logit
