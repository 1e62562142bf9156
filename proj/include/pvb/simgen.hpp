#pragma once

#include "pvb/data.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pvb::sim {

enum class Mechanism { MCAR, MAR, MNAR };

enum class CovariateKind { Binary, Continuous };

/// A covariate and its additive effects on the disease, test and verification
/// logits.
struct CovariateSpec {
    std::string name;
    CovariateKind kind = CovariateKind::Binary;
    double p = 0.5;     // binary: P(X = 1)
    double mean = 0.0;  // continuous
    double sd = 1.0;    // continuous
    double disease_effect = 0.0;
    double test_effect = 0.0;
    double verify_effect = 0.0;
};

/// Verification logit: intercept + t * T + d * D + sum(verify_effect * X).
/// MAR requires d = 0; MCAR requires t = d = 0 and no covariate verify
/// effects. validate() rejects specs that break this.
struct VerificationModel {
    Mechanism mechanism = Mechanism::MCAR;
    double intercept = 0.0;
    double t = 0.0;
    double d = 0.0;
};

struct SimSpec {
    std::size_t n = 1000;
    double prevalence = 0.3;  // at X = 0 (baseline) when covariates shift disease
    double se = 0.8;          // baseline P(T=1|D=1)
    double sp = 0.8;          // baseline P(T=0|D=0)
    std::vector<CovariateSpec> covariates;
    VerificationModel verification;
    std::uint64_t seed = 0;

    void validate() const;  // InvalidSpec
};

/// Population values implied by the spec (marginal over covariates).
struct SimTruth {
    double prevalence = 0.0;
    double se = 0.0;
    double sp = 0.0;
    double ppv = 0.0;
    double npv = 0.0;
    double verified_fraction = 0.0;
};

/// Generated data plus the truth. `disease` holds the complete D column,
/// including the entries blanked in `data`; estimators never see it.
struct SimResult {
    Dataset data;
    SimTruth truth;
    std::vector<int> disease;
};

/// Draws record i from its own substream, so the output does not depend on
/// `threads`.
SimResult generate(const SimSpec& spec, unsigned threads = 1);

SimTruth population_truth(const SimSpec& spec);

/// P(V = 1) under the spec: binary covariates enumerated, continuous ones
/// integrated by Gauss-Hermite quadrature.
double expected_verified_fraction(const SimSpec& spec);

/// Reads a key = value file. Keys:
///   n, prevalence, se, sp, seed, mechanism (mcar|mar|mnar),
///   verify.intercept, verify.t, verify.d,
///   covariate.NAME.type (binary|continuous), covariate.NAME.p,
///   covariate.NAME.mean, covariate.NAME.sd, covariate.NAME.disease,
///   covariate.NAME.test, covariate.NAME.verify
/// '#' starts a comment. Unknown keys and bad values raise InvalidSpec.
SimSpec parse_spec(std::istream& in);
SimSpec load_spec(const std::filesystem::path& path);

}  // namespace pvb::sim
