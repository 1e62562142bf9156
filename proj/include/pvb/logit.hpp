#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace pvb::logit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Lower and upper clamp applied to predicted probabilities before they are
/// used in ratios or logarithms.
inline constexpr double kProbFloor = 1e-12;

double inv_logit(double eta) noexcept;
double clamp_prob(double p) noexcept;

enum class SeparationPolicy {
    Throw,     // SeparationDetected
    Boundary,  // accept quasi-separated fits; fitted cells sit at 0/1
};

struct FitOptions {
    int max_iterations = 100;
    double tolerance = 1e-8;         // max |coefficient change|
    double divergence_bound = 30.0;  // |coefficient| beyond this => separation
    SeparationPolicy separation = SeparationPolicy::Throw;
    std::optional<Vector> start;     // warm start; zeros otherwise
};

struct LogitFit {
    Vector coefficients;
    bool converged = false;
    int iterations = 0;
    bool separated = false;
    double log_likelihood = 0.0;  // weighted
    Matrix fisher_information;    // X' diag(w p (1-p)) X at the estimate
};

/// Weighted Bernoulli maximum likelihood by IRLS (Newton with step halving).
///
/// Errors: DimensionMismatch for inconsistent shapes, InvalidConfig for
/// negative or all-zero weights, RankDeficientDesign when the positive-weight
/// rows do not span the design columns, SeparationDetected when a coefficient
/// exceeds the divergence bound (under SeparationPolicy::Throw, or under
/// Boundary when the response has no variation at all).
LogitFit fit(const Matrix& x, const Vector& y, const Vector& weights, const FitOptions& options = {});

/// Unit-weight convenience overload.
LogitFit fit(const Matrix& x, const Vector& y, const FitOptions& options = {});

/// Elementwise inverse logit of x * coefficients (unclamped).
Vector predict_prob(const Vector& coefficients, const Matrix& x);
Vector predict_prob(const LogitFit& fit, const Matrix& x);

/// Weighted log-likelihood sum w_i [y_i log p_i + (1 - y_i) log(1 - p_i)].
double log_likelihood(const Vector& coefficients, const Matrix& x, const Vector& y, const Vector& weights);

// ---------------------------------------------------------------------------
// Design construction

/// Named numeric columns of equal length.
class Frame {
public:
    explicit Frame(std::size_t rows) : rows_(rows) {}

    void add(std::string name, Vector column);
    bool has(const std::string& name) const;
    const Vector& column(const std::string& name) const;
    std::size_t rows() const noexcept { return rows_; }

private:
    std::size_t rows_;
    std::vector<std::string> names_;
    std::vector<Vector> columns_;
};

/// Model terms after an implicit intercept. A term is a column name or a
/// product of names joined by ':' (e.g. "T:X3").
struct DesignSpec {
    std::vector<std::string> terms;
    bool intercept = true;

    std::vector<std::string> column_names() const;
    bool has_term(const std::string& term) const;

    /// intercept + T + covariates, plus T:covariate for each when saturated.
    static DesignSpec disease_given_test(const std::vector<std::string>& covariates, bool saturated);
};

/// MalformedInput if a term references an unknown column or a NaN cell.
Matrix build_design(const Frame& frame, const DesignSpec& spec);

}  // namespace pvb::logit
