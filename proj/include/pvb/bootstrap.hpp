#pragma once

#include "pvb/accuracy.hpp"
#include "pvb/data.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace pvb {

enum class BootCiType { Bca, Percentile };

/// Which records a replicate resamples. Verified: resample verified records
/// with replacement and keep the unverified block fixed. All: resample every
/// record (sensitivity check only).
enum class ResampleUnit { Verified, All };

struct BootConfig {
    int replicates = 999;
    std::uint64_t seed = 0;
    BootCiType ci_type = BootCiType::Bca;
    double alpha = 0.05;
    double max_failed_fraction = 0.05;
    ResampleUnit unit = ResampleUnit::Verified;
    unsigned threads = 1;
    /// Replicates may use quasi-separated logistic fits (fitted cell
    /// probabilities at 0 or 1) instead of counting them as failures.
    bool accept_boundary_fits = true;

    void validate() const;
};

/// Re-runnable estimation procedure: Dataset -> (Se, Sp, PPV, NPV).
using Estimator = std::function<Estimates(const Dataset&)>;

struct BootResult {
    Estimates point{};
    std::array<std::vector<double>, 4> replicates;  // successful replicates, index order
    Estimates se{};
    std::array<Interval, 4> ci{};
    std::array<bool, 4> ci_fallback{};
    int failed = 0;
    std::vector<int> failed_indices;
};

/// Runs `estimator` on the original data and on config.replicates resamples.
/// Replicates that throw SeparationDetected, RankDeficientDesign,
/// DegenerateMargin or DegenerateImputation are excluded and counted;
/// TooManyFailedReplicates when the failed fraction exceeds the ceiling.
BootResult bootstrap_accuracy(const Dataset& data, const Estimator& estimator, const BootConfig& config);

/// Resampled dataset for replicate `index` (exposed for tests).
Dataset bootstrap_sample(const Dataset& data, ResampleUnit unit, std::uint64_t seed, std::uint64_t index);

struct BcaResult {
    Interval interval;
    double z0 = 0.0;
    double acceleration = 0.0;
    bool fallback = false;  // percentile interval returned instead
};

/// Bias-corrected and accelerated interval. z0 is the inverse-normal of the
/// fraction of replicates below `point`; the acceleration comes from the
/// jackknife estimates. Degenerate inputs fall back to percentile endpoints.
BcaResult bca_interval(std::span<const double> replicates, double point, std::span<const double> jackknife,
                       double alpha);

/// Equal-tailed percentile interval.
Interval percentile_interval(std::span<const double> replicates, double alpha);

/// a = sum(L^3) / (6 sum(L^2)^1.5) with L_i = mean - jack_i.
double jackknife_acceleration(std::span<const double> jackknife);

/// Order-statistic quantile at probability `prob` using the (R+1)p position
/// with interpolation on the normal scale.
double boot_quantile(std::span<const double> sorted, double prob);

/// Leave-one-out estimates over the resampling unit. Records with identical
/// content share one estimator call.
std::vector<Estimates> jackknife_estimates(const Dataset& data, const Estimator& estimator, ResampleUnit unit,
                                           unsigned threads);

/// Fills the AccuracyResult SE/CI fields from a bootstrap run.
void apply_bootstrap(AccuracyResult& result, const BootResult& boot, const BootConfig& config);

}  // namespace pvb
