#pragma once

#include "pvb/accuracy.hpp"
#include "pvb/data.hpp"
#include "pvb/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pvb {

struct MiConfig {
    std::optional<int> m;  // default_m(data) when absent
    std::uint64_t seed = 0;
    std::vector<std::string> covariates;
    double alpha = 0.05;
    unsigned threads = 1;
    int max_redraws = 100;  // per imputation slot

    void validate() const;
};

/// Rubin's-rules summary for one measure.
struct PooledMeasure {
    double qbar = 0.0;     // mean of per-imputation estimates
    double ubar = 0.0;     // mean within-imputation variance
    double b = 0.0;        // between-imputation variance
    double t_total = 0.0;  // ubar + (1 + 1/m) b
    double df = 0.0;       // +inf when b == 0
    Interval ci;
};

struct MiPooled {
    int m = 0;
    std::array<PooledMeasure, 4> measures{};
    std::vector<Estimates> estimates;  // per imputation
    std::vector<Estimates> variances;  // per imputation
};

struct MiOutput {
    AccuracyResult result;
    MiPooled pooled;
};

/// ceil(missing percentage), at least 2.
int default_m(const Dataset& data);

/// One completed copy of `data`: fits D ~ T + covariates on verified records,
/// draws coefficients from N(MLE, inverse Fisher information), then draws each
/// missing D as Bernoulli. Verified records are returned unchanged.
Dataset impute_once(const Dataset& data, const std::vector<std::string>& covariates, rng::Stream& stream);

/// Pools per-imputation estimates q and variances u.
PooledMeasure pool_rubin(std::span<const double> q, std::span<const double> u, double alpha);

MiOutput acc_mi(const Dataset& data, const MiConfig& config);

}  // namespace pvb
