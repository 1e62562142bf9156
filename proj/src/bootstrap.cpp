#include "pvb/bootstrap.hpp"

#include "pvb/error.hpp"
#include "pvb/parallel.hpp"
#include "pvb/quantile.hpp"
#include "pvb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>

namespace pvb {

namespace {

bool is_replicate_failure(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::SeparationDetected:
    case ErrorKind::RankDeficientDesign:
    case ErrorKind::DegenerateMargin:
    case ErrorKind::DegenerateImputation:
        return true;
    default:
        return false;
    }
}

// Mean accumulated as offsets from the first value, so constant input
// returns that value exactly.
double shifted_mean(std::span<const double> v)
{
    double acc = 0.0;
    for (double x : v) acc += x - v[0];
    return v[0] + acc / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double mean = shifted_mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

using RecordKey = std::tuple<int, int, std::vector<double>>;

RecordKey key_of(const Record& r)
{
    return {r.t, r.d ? *r.d : -1, r.x};
}

}  // namespace

void BootConfig::validate() const
{
    if (replicates < 2) throw Error(ErrorKind::InvalidConfig, "bootstrap needs at least 2 replicates");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
    if (!(max_failed_fraction >= 0.0 && max_failed_fraction <= 1.0))
        throw Error(ErrorKind::InvalidConfig, "max_failed_fraction must lie in [0, 1]");
}

double boot_quantile(std::span<const double> sorted, double prob)
{
    const auto r = static_cast<long>(sorted.size());
    if (r == 0) throw Error(ErrorKind::DomainError, "boot_quantile: no replicates");
    const double rk = static_cast<double>(r + 1) * prob;
    const long k = static_cast<long>(std::trunc(rk));
    if (k <= 0) return sorted.front();
    if (k >= r) return sorted.back();
    const double tk = sorted[static_cast<std::size_t>(k - 1)];
    if (static_cast<double>(k) == rk) return tk;
    const double tk1 = sorted[static_cast<std::size_t>(k)];
    const double z = normal_quantile(prob);
    const double zk = normal_quantile(static_cast<double>(k) / static_cast<double>(r + 1));
    const double zk1 = normal_quantile(static_cast<double>(k + 1) / static_cast<double>(r + 1));
    return tk + (z - zk) / (zk1 - zk) * (tk1 - tk);
}

Interval percentile_interval(std::span<const double> replicates, double alpha)
{
    std::vector<double> sorted(replicates.begin(), replicates.end());
    std::sort(sorted.begin(), sorted.end());
    return {boot_quantile(sorted, alpha / 2.0), boot_quantile(sorted, 1.0 - alpha / 2.0)};
}

double jackknife_acceleration(std::span<const double> jackknife)
{
    if (jackknife.size() < 2) return 0.0;
    const double mean = shifted_mean(jackknife);
    double s2 = 0.0;
    double s3 = 0.0;
    for (double v : jackknife) {
        const double l = mean - v;
        s2 += l * l;
        s3 += l * l * l;
    }
    if (s2 <= 0.0) return 0.0;
    return s3 / (6.0 * std::pow(s2, 1.5));
}

BcaResult bca_interval(std::span<const double> replicates, double point, std::span<const double> jackknife,
                       double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");
    if (replicates.empty()) throw Error(ErrorKind::DomainError, "bca_interval: no replicates");
    std::vector<double> sorted(replicates.begin(), replicates.end());
    std::sort(sorted.begin(), sorted.end());

    BcaResult out;
    if (sorted.front() == sorted.back()) {
        out.interval = {sorted.front(), sorted.front()};
        out.fallback = true;
        return out;
    }
    const auto below = std::count_if(sorted.begin(), sorted.end(), [&](double v) { return v < point; });
    const double frac = static_cast<double>(below) / static_cast<double>(sorted.size());
    if (frac <= 0.0 || frac >= 1.0) {
        out.interval = {boot_quantile(sorted, alpha / 2.0), boot_quantile(sorted, 1.0 - alpha / 2.0)};
        out.fallback = true;
        return out;
    }
    out.z0 = normal_quantile(frac);
    out.acceleration = jackknife_acceleration(jackknife);
    auto adjust = [&](double p) {
        const double z = normal_quantile(p);
        const double s = out.z0 + z;
        return normal_cdf(out.z0 + s / (1.0 - out.acceleration * s));
    };
    const double lo = adjust(alpha / 2.0);
    const double hi = adjust(1.0 - alpha / 2.0);
    if (!(lo > 0.0 && lo < 1.0 && hi > 0.0 && hi < 1.0)) {
        out.interval = {boot_quantile(sorted, alpha / 2.0), boot_quantile(sorted, 1.0 - alpha / 2.0)};
        out.fallback = true;
        return out;
    }
    out.interval = {boot_quantile(sorted, lo), boot_quantile(sorted, hi)};
    return out;
}

Dataset bootstrap_sample(const Dataset& data, ResampleUnit unit, std::uint64_t seed, std::uint64_t index)
{
    rng::Stream stream(seed, {0xB007ULL, index});
    std::vector<Record> out;
    out.reserve(data.size());
    if (unit == ResampleUnit::All) {
        for (std::size_t i = 0; i < data.size(); ++i) out.push_back(data[stream.below(data.size())]);
        return Dataset(std::move(out), data.covariate_names());
    }
    const auto verified = data.verified_indices();
    if (verified.empty()) throw Error(ErrorKind::InvalidConfig, "bootstrap: no verified records to resample");
    for (std::size_t i = 0; i < verified.size(); ++i) out.push_back(data[verified[stream.below(verified.size())]]);
    for (const auto& r : data.records())
        if (!r.verified()) out.push_back(r);
    return Dataset(std::move(out), data.covariate_names());
}

std::vector<Estimates> jackknife_estimates(const Dataset& data, const Estimator& estimator, ResampleUnit unit,
                                           unsigned threads)
{
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (unit == ResampleUnit::All || data[i].verified()) members.push_back(i);

    // Leaving out either of two identical records gives the same dataset.
    std::map<RecordKey, std::size_t> slot_of;
    std::vector<std::size_t> representative;
    std::vector<std::size_t> slot(members.size());
    for (std::size_t j = 0; j < members.size(); ++j) {
        auto [it, inserted] = slot_of.try_emplace(key_of(data[members[j]]), representative.size());
        if (inserted) representative.push_back(members[j]);
        slot[j] = it->second;
    }

    std::vector<Estimates> unique(representative.size());
    parallel_for(representative.size(), threads, [&](std::size_t k) {
        std::vector<Record> rest;
        rest.reserve(data.size() - 1);
        for (std::size_t i = 0; i < data.size(); ++i)
            if (i != representative[k]) rest.push_back(data[i]);
        unique[k] = estimator(Dataset(std::move(rest), data.covariate_names()));
    });

    std::vector<Estimates> out(members.size());
    for (std::size_t j = 0; j < members.size(); ++j) out[j] = unique[slot[j]];
    return out;
}

BootResult bootstrap_accuracy(const Dataset& data, const Estimator& estimator, const BootConfig& config)
{
    config.validate();
    BootResult out;
    out.point = estimator(data);

    const auto r = static_cast<std::size_t>(config.replicates);
    std::vector<std::optional<Estimates>> draws(r);
    parallel_for(r, config.threads, [&](std::size_t i) {
        try {
            draws[i] = estimator(bootstrap_sample(data, config.unit, config.seed, i));
        } catch (const Error& e) {
            if (!is_replicate_failure(e.kind())) throw;
        }
    });

    for (std::size_t i = 0; i < r; ++i) {
        if (!draws[i]) {
            out.failed_indices.push_back(static_cast<int>(i));
            continue;
        }
        for (auto m : kMeasures) out.replicates[static_cast<std::size_t>(m)].push_back(at(*draws[i], m));
    }
    out.failed = static_cast<int>(out.failed_indices.size());
    if (static_cast<double>(out.failed) > config.max_failed_fraction * static_cast<double>(r) ||
        out.failed == config.replicates) {
        throw Error(ErrorKind::TooManyFailedReplicates,
                    std::to_string(out.failed) + " of " + std::to_string(r) + " bootstrap replicates failed");
    }

    std::optional<std::vector<Estimates>> jack;
    if (config.ci_type == BootCiType::Bca) {
        try {
            jack = jackknife_estimates(data, estimator, config.unit, config.threads);
        } catch (const Error& e) {
            if (!is_replicate_failure(e.kind())) throw;
        }
    }

    for (auto m : kMeasures) {
        const auto k = static_cast<std::size_t>(m);
        const auto& reps = out.replicates[k];
        out.se[k] = sample_sd(reps);
        if (config.ci_type == BootCiType::Percentile) {
            out.ci[k] = percentile_interval(reps, config.alpha);
        } else if (!jack) {
            out.ci[k] = percentile_interval(reps, config.alpha);
            out.ci_fallback[k] = true;
        } else {
            std::vector<double> jk(jack->size());
            for (std::size_t j = 0; j < jk.size(); ++j) jk[j] = at((*jack)[j], m);
            auto bca = bca_interval(reps, at(out.point, m), jk, config.alpha);
            out.ci[k] = bca.interval;
            out.ci_fallback[k] = bca.fallback;
        }
    }
    return out;
}

void apply_bootstrap(AccuracyResult& result, const BootResult& boot, const BootConfig& config)
{
    result.ci_kind = config.ci_type == BootCiType::Bca ? CiKind::Bca : CiKind::Percentile;
    for (auto m : kMeasures) {
        const auto k = static_cast<std::size_t>(m);
        result[m].se = boot.se[k];
        result[m].ci = boot.ci[k];
        result[m].ci_fallback = boot.ci_fallback[k];
    }
    result.meta.seed = config.seed;
    result.meta.replicates = config.replicates;
    result.meta.failed_replicates = boot.failed;
    if (boot.failed > 0)
        result.meta.warnings.push_back(std::to_string(boot.failed) + " bootstrap replicates failed and were excluded");
}

}  // namespace pvb
