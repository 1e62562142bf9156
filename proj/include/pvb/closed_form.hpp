#pragma once

#include "pvb/accuracy.hpp"
#include "pvb/bootstrap.hpp"
#include "pvb/data.hpp"
#include "pvb/logit.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pvb {

/// Complete-case estimates with Wald intervals. DegenerateMargin when any of
/// s1+s0, r1+r0, s1+r1, s0+r0 is zero.
AccuracyResult cca(const VerificationTable& table, double alpha = 0.05);

/// Per-measure complete-case variances s1 s0/(s1+s0)^3, r1 r0/(r1+r0)^3,
/// s1 r1/(s1+r1)^3, s0 r0/(s0+r0)^3.
Estimates cca_variances(const VerificationTable& table);

/// Begg-Greenes correction. Se/Sp intervals use the delta-method variance
/// factor; they are omitted (with a warning) when s1, s0, r1 or r0 is zero.
/// PPV/NPV and their intervals equal the complete-case ones.
AccuracyResult bg(const VerificationTable& table, double alpha = 0.05);

/// Disease prevalence implied by the Begg-Greenes reweighting.
double bg_prevalence(const VerificationTable& table);

struct EbgOptions {
    std::vector<std::string> covariates;
    bool saturated = false;
    double alpha = 0.05;
    std::optional<BootConfig> bootstrap;
};

struct EbgDetail {
    Estimates estimates{};
    logit::LogitFit disease_fit;
    logit::DesignSpec design;
    std::vector<double> p_disease;  // P(D=1 | T, X) for every record, dataset order
};

/// Fits D ~ T (+ X, + T:X when saturated) on verified records and reweights
/// all records by the predicted disease probability.
EbgDetail ebg_fit(const Dataset& data, const std::vector<std::string>& covariates, bool saturated,
                  logit::SeparationPolicy separation = logit::SeparationPolicy::Throw);

AccuracyResult ebg(const Dataset& data, const EbgOptions& options = {});

}  // namespace pvb
