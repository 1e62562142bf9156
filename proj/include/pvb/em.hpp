#pragma once

#include "pvb/accuracy.hpp"
#include "pvb/bootstrap.hpp"
#include "pvb/data.hpp"
#include "pvb/logit.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace pvb {

struct EmConfig {
    std::vector<std::string> covariates;
    bool mnar = true;
    /// Adds a T:D term to the verification model (MNAR only).
    bool verification_interaction = false;
    std::optional<int> t_max;  // 5000 without covariates, 50000 with
    double cutoff = 0.0002;
    std::optional<BootConfig> bootstrap;

    int resolved_t_max() const;
    void validate() const;
};

struct PseudoRow {
    int t = 0;
    int d = 0;
    int v = 0;
    std::vector<double> x;
};

/// Verified rows, then one D=0 copy and one D=1 copy per unverified record.
/// Row `verified + k` pairs with row `verified + pairs + k`.
struct PseudoData {
    std::vector<PseudoRow> rows;
    std::vector<double> weights;
    std::vector<double> multiplicity;  // frequency of each row's pattern
    std::vector<std::size_t> origin;   // source record index (first one, when compressed)
    std::size_t verified = 0;
    std::size_t pairs = 0;
    std::vector<std::string> covariate_names;

    std::size_t size() const noexcept { return rows.size(); }
};

PseudoData build_pseudo_data(const Dataset& data);

/// Merges rows with identical (T, D, V, X) into single rows carrying a
/// multiplicity; stacked pairs stay aligned. The likelihood is unchanged.
PseudoData compress(const PseudoData& pd);

/// Coefficients of the disease (alpha), test (beta) and verification (gamma)
/// models plus the iteration history.
struct EmState {
    logit::Vector alpha;
    logit::Vector beta;
    logit::Vector gamma;
    std::vector<std::string> alpha_terms;
    std::vector<std::string> beta_terms;
    std::vector<std::string> gamma_terms;
    int iterations = 0;
    bool converged = false;
    std::vector<double> delta_trace;   // max |theta_new - theta_old| per iteration
    std::vector<double> loglik_trace;  // observed-data log-likelihood after each iteration
};

struct EmDesigns {
    logit::DesignSpec disease;
    logit::DesignSpec test;
    logit::DesignSpec verification;
};

EmDesigns em_designs(const EmConfig& config);

/// All-zero coefficients for the configured designs.
EmState initial_state(const EmConfig& config);

/// New weights: verified rows 1; for each stacked pair the D=0 copy gets
/// p0 / (p0 + p1), computed in log space, and the D=1 copy the complement.
std::vector<double> e_step(const PseudoData& pd, const EmState& state, const EmConfig& config);

/// Fits the three weighted logistic models on pd.weights, warm-started from
/// `previous` when given.
EmState m_step(const PseudoData& pd, const EmConfig& config, const EmState* previous = nullptr,
               logit::SeparationPolicy separation = logit::SeparationPolicy::Throw);

double observed_log_likelihood(const PseudoData& pd, const EmState& state, const EmConfig& config);

/// Se, Sp, PPV, NPV from fitted disease and test models, marginalized over
/// the records of `data`.
Estimates em_estimates(const Dataset& data, const EmState& state, const EmConfig& config);

/// Same quantities through covariate-pattern weights (categorical covariates).
Estimates em_estimates_by_pattern(const Dataset& data, const EmState& state, const EmConfig& config);

/// Runs EM to convergence or t_max.
EmState run_em(const Dataset& data, const EmConfig& config,
               logit::SeparationPolicy separation = logit::SeparationPolicy::Throw);

struct EmOutput {
    AccuracyResult result;
    EmState state;
};

EmOutput acc_em(const Dataset& data, const EmConfig& config);

}  // namespace pvb
