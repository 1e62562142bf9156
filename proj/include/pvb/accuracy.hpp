#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pvb {

enum class Method { CCA, BG, EBG, MI, EM };
enum class CiKind { None, Wald, Rubin, Bca, Percentile };
enum class Measure : std::size_t { Se = 0, Sp = 1, PPV = 2, NPV = 3 };

inline constexpr std::array<Measure, 4> kMeasures{Measure::Se, Measure::Sp, Measure::PPV, Measure::NPV};

std::string_view to_string(Method m);
std::string_view to_string(CiKind k);
std::string_view to_string(Measure m);
/// Human-readable method description for report headers.
std::string_view describe(Method m);

/// Point estimates indexed by Measure.
using Estimates = std::array<double, 4>;

inline double& at(Estimates& e, Measure m) { return e[static_cast<std::size_t>(m)]; }
inline double at(const Estimates& e, Measure m) { return e[static_cast<std::size_t>(m)]; }

struct Interval {
    double low = 0.0;
    double high = 0.0;

    Interval clipped() const;
    bool operator==(const Interval&) const = default;
};

struct MeasureEstimate {
    double estimate = 0.0;
    std::optional<double> se;
    std::optional<Interval> ci;  // unclipped
    /// True when BCa could not be formed and the interval is a percentile one.
    bool ci_fallback = false;
};

struct RunMetadata {
    double alpha = 0.05;
    std::vector<std::string> covariates;
    bool saturated = false;
    std::optional<bool> mnar;
    std::optional<std::uint64_t> seed;
    std::optional<int> replicates;
    std::optional<int> failed_replicates;
    std::optional<int> imputations;
    std::optional<int> iterations;
    std::optional<bool> converged;
    std::vector<std::string> warnings;
};

struct AccuracyResult {
    Method method = Method::CCA;
    CiKind ci_kind = CiKind::None;
    std::array<MeasureEstimate, 4> measures{};
    RunMetadata meta;

    MeasureEstimate& operator[](Measure m) { return measures[static_cast<std::size_t>(m)]; }
    const MeasureEstimate& operator[](Measure m) const { return measures[static_cast<std::size_t>(m)]; }

    Estimates estimates() const;
};

/// Two-sided Wald interval estimate +/- z_{1-alpha/2} * se.
Interval wald_interval(double estimate, double se, double alpha);

/// P(D=1|T=1) from Se, Sp and prevalence (Bayes' theorem).
double ppv_from(double se, double sp, double prevalence);
/// P(D=0|T=0) from Se, Sp and prevalence.
double npv_from(double se, double sp, double prevalence);

}  // namespace pvb
