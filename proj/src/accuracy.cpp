#include "pvb/accuracy.hpp"

#include "pvb/error.hpp"
#include "pvb/quantile.hpp"

#include <algorithm>

namespace pvb {

std::string_view to_string(Method m)
{
    switch (m) {
    case Method::CCA: return "CCA";
    case Method::BG: return "BG";
    case Method::EBG: return "EBG";
    case Method::MI: return "MI";
    case Method::EM: return "EM";
    }
    return "?";
}

std::string_view to_string(CiKind k)
{
    switch (k) {
    case CiKind::None: return "none";
    case CiKind::Wald: return "wald";
    case CiKind::Rubin: return "rubin";
    case CiKind::Bca: return "bca";
    case CiKind::Percentile: return "percentile";
    }
    return "?";
}

std::string_view to_string(Measure m)
{
    switch (m) {
    case Measure::Se: return "Se";
    case Measure::Sp: return "Sp";
    case Measure::PPV: return "PPV";
    case Measure::NPV: return "NPV";
    }
    return "?";
}

std::string_view describe(Method m)
{
    switch (m) {
    case Method::CCA: return "Uncorrected for PVB: Complete Case Analysis";
    case Method::BG: return "Corrected for PVB: Begg and Greenes' Method";
    case Method::EBG: return "Corrected for PVB: Extended Begg and Greenes' Method";
    case Method::MI: return "Corrected for PVB: Multiple Imputation Method";
    case Method::EM: return "Corrected for PVB: EM-based Method";
    }
    return "";
}

Interval Interval::clipped() const
{
    return {std::clamp(low, 0.0, 1.0), std::clamp(high, 0.0, 1.0)};
}

Estimates AccuracyResult::estimates() const
{
    Estimates e{};
    for (auto m : kMeasures) at(e, m) = (*this)[m].estimate;
    return e;
}

Interval wald_interval(double estimate, double se, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
    const double z = normal_quantile(1.0 - alpha / 2.0);
    return {estimate - z * se, estimate + z * se};
}

double ppv_from(double se, double sp, double prevalence)
{
    const double tp = prevalence * se;
    return tp / (tp + (1.0 - prevalence) * (1.0 - sp));
}

double npv_from(double se, double sp, double prevalence)
{
    const double tn = (1.0 - prevalence) * sp;
    return tn / (tn + prevalence * (1.0 - se));
}

}  // namespace pvb
