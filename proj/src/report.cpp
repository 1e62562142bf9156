#include "pvb/report.hpp"

#include "pvb/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace pvb::report {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string pad_left(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

ordered_json number_or_null(std::optional<double> v)
{
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

std::optional<double> optional_number(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::string percent_label(double p)
{
    return format_double(std::round(p * 1e10) / 1e8) + "%";
}

Method method_from(const std::string& s)
{
    for (auto m : {Method::CCA, Method::BG, Method::EBG, Method::MI, Method::EM})
        if (to_string(m) == s) return m;
    throw Error(ErrorKind::MalformedInput, "unknown method '" + s + "' in report");
}

CiKind ci_kind_from(const std::string& s)
{
    for (auto k : {CiKind::None, CiKind::Wald, CiKind::Rubin, CiKind::Bca, CiKind::Percentile})
        if (to_string(k) == s) return k;
    throw Error(ErrorKind::MalformedInput, "unknown interval type '" + s + "' in report");
}

const char* long_name(Measure m)
{
    switch (m) {
    case Measure::Se: return "Sensitivity";
    case Measure::Sp: return "Specificity";
    case Measure::PPV: return "PPV";
    case Measure::NPV: return "NPV";
    }
    return "";
}

std::string csv_value(std::optional<double> v)
{
    return v && std::isfinite(*v) ? format_double(*v) : "NA";
}

}  // namespace

std::string format_double(double v)
{
    if (!std::isfinite(v)) return "NA";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

int decimals_for(double value, int digits)
{
    if (value == 0.0 || !std::isfinite(value)) return 0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, value);
    const std::string s(buf);
    const auto e = s.find('e');
    const int exponent = std::stoi(s.substr(e + 1));
    std::string mantissa;
    for (char c : s.substr(0, e))
        if (c >= '0' && c <= '9') mantissa += c;
    while (mantissa.size() > 1 && mantissa.back() == '0') mantissa.pop_back();
    const int sig = static_cast<int>(mantissa.size());
    return std::max(0, sig - 1 - exponent);
}

std::vector<std::string> format_column(const std::vector<std::optional<double>>& values, int digits)
{
    int decimals = 0;
    for (const auto& v : values)
        if (v && std::isfinite(*v)) decimals = std::max(decimals, decimals_for(*v, digits));
    decimals = std::min(decimals, 15);
    std::vector<std::string> out;
    for (const auto& v : values) out.push_back(v && std::isfinite(*v) ? fixed(*v, decimals) : "NA");
    return out;
}

std::string format_text(const AccuracyResult& result)
{
    std::ostringstream out;
    out << "Estimates of accuracy measures\n" << describe(result.method) << '\n';

    const std::vector<std::string> headers{"Est", "SE", "LowCI", "UppCI"};
    std::vector<std::vector<std::string>> cols;
    for (int c = 0; c < 4; ++c) {
        std::vector<std::optional<double>> values;
        for (auto m : kMeasures) {
            const auto& e = result[m];
            switch (c) {
            case 0: values.emplace_back(e.estimate); break;
            case 1: values.push_back(e.se); break;
            case 2: values.push_back(e.ci ? std::optional<double>(e.ci->low) : std::nullopt); break;
            default: values.push_back(e.ci ? std::optional<double>(e.ci->high) : std::nullopt); break;
            }
        }
        cols.push_back(format_column(values));
    }
    std::size_t label_width = 0;
    for (auto m : kMeasures) label_width = std::max(label_width, to_string(m).size());
    std::vector<std::size_t> widths;
    for (int c = 0; c < 4; ++c) {
        std::size_t w = headers[static_cast<std::size_t>(c)].size();
        for (const auto& s : cols[static_cast<std::size_t>(c)]) w = std::max(w, s.size());
        widths.push_back(w);
    }
    out << std::string(label_width, ' ');
    for (std::size_t c = 0; c < 4; ++c) out << ' ' << pad_left(headers[c], widths[c]);
    out << '\n';
    for (std::size_t r = 0; r < 4; ++r) {
        out << pad_right(std::string(to_string(kMeasures[r])), label_width);
        for (std::size_t c = 0; c < 4; ++c) out << ' ' << pad_left(cols[c][r], widths[c]);
        out << '\n';
    }

    const auto& meta = result.meta;
    std::ostringstream notes;
    if (!meta.covariates.empty()) {
        notes << "Covariates:";
        for (const auto& c : meta.covariates) notes << ' ' << c;
        notes << (meta.saturated ? " (saturated)" : "") << '\n';
    }
    if (result.ci_kind == CiKind::Bca || result.ci_kind == CiKind::Percentile) {
        notes << "Bootstrap " << to_string(result.ci_kind) << " interval, R = " << meta.replicates.value_or(0);
        if (meta.seed) notes << ", seed = " << *meta.seed;
        if (meta.failed_replicates && *meta.failed_replicates > 0) notes << ", failed = " << *meta.failed_replicates;
        notes << '\n';
    }
    if (meta.imputations) {
        notes << "Imputations: m = " << *meta.imputations;
        if (meta.seed) notes << ", seed = " << *meta.seed;
        notes << '\n';
    }
    if (meta.iterations) {
        notes << "EM " << (meta.mnar.value_or(true) ? "MNAR" : "MAR") << ": " << *meta.iterations << " iterations, "
              << (meta.converged.value_or(false) ? "converged" : "not converged") << '\n';
    }
    for (const auto& w : meta.warnings) notes << "Warning: " << w << '\n';
    if (!notes.str().empty()) out << '\n' << notes.str();
    return out.str();
}

std::string format_table(const VerificationTable& t, bool show_unverified, bool show_total)
{
    std::vector<std::string> headers{"yes", "no"};
    std::vector<std::vector<long>> rows{{t.s1, t.r1}, {t.s0, t.r0}};
    if (show_unverified) {
        headers.emplace_back("unverified");
        rows[0].push_back(t.u1);
        rows[1].push_back(t.u0);
    }
    if (show_total) {
        headers.emplace_back("Total");
        rows[0].push_back(show_unverified ? t.n1() : t.s1 + t.r1);
        rows[1].push_back(show_unverified ? t.n0() : t.s0 + t.r0);
    }
    std::size_t cell = 0;
    for (const auto& r : rows)
        for (long v : r) cell = std::max(cell, std::to_string(v).size());

    const std::vector<std::string> labels{"  yes", "  no"};
    const std::size_t label_width = 5;
    std::ostringstream out;
    out << std::string(label_width, ' ') << "Disease\n" << pad_right("Test", label_width);
    for (const auto& h : headers) out << ' ' << pad_left(h, std::max(cell, h.size()));
    out << '\n';
    for (std::size_t r = 0; r < 2; ++r) {
        out << pad_right(labels[r], label_width);
        for (std::size_t c = 0; c < headers.size(); ++c)
            out << ' ' << pad_left(std::to_string(rows[r][c]), std::max(cell, headers[c].size()));
        out << '\n';
    }
    return out.str();
}

ordered_json to_json(const AccuracyResult& result)
{
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "accuracy";
    j["method"] = std::string(to_string(result.method));
    j["description"] = std::string(describe(result.method));
    j["ci_type"] = std::string(to_string(result.ci_kind));
    j["alpha"] = result.meta.alpha;
    ordered_json measures = ordered_json::object();
    for (auto m : kMeasures) {
        const auto& e = result[m];
        ordered_json o;
        o["estimate"] = number_or_null(e.estimate);
        o["se"] = number_or_null(e.se);
        if (e.ci) {
            const auto c = e.ci->clipped();
            o["ci_low"] = number_or_null(e.ci->low);
            o["ci_high"] = number_or_null(e.ci->high);
            o["ci_low_clipped"] = number_or_null(c.low);
            o["ci_high_clipped"] = number_or_null(c.high);
        } else {
            o["ci_low"] = nullptr;
            o["ci_high"] = nullptr;
            o["ci_low_clipped"] = nullptr;
            o["ci_high_clipped"] = nullptr;
        }
        o["ci_fallback"] = e.ci_fallback;
        measures[std::string(to_string(m))] = std::move(o);
    }
    j["measures"] = std::move(measures);

    const auto& meta = result.meta;
    ordered_json md;
    md["covariates"] = meta.covariates;
    md["saturated"] = meta.saturated;
    md["mnar"] = meta.mnar ? ordered_json(*meta.mnar) : ordered_json(nullptr);
    md["seed"] = meta.seed ? ordered_json(*meta.seed) : ordered_json(nullptr);
    md["replicates"] = meta.replicates ? ordered_json(*meta.replicates) : ordered_json(nullptr);
    md["failed_replicates"] = meta.failed_replicates ? ordered_json(*meta.failed_replicates) : ordered_json(nullptr);
    md["imputations"] = meta.imputations ? ordered_json(*meta.imputations) : ordered_json(nullptr);
    md["iterations"] = meta.iterations ? ordered_json(*meta.iterations) : ordered_json(nullptr);
    md["converged"] = meta.converged ? ordered_json(*meta.converged) : ordered_json(nullptr);
    j["metadata"] = std::move(md);
    j["warnings"] = meta.warnings;
    return j;
}

AccuracyResult result_from_json(const json& j)
{
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion)
            throw Error(ErrorKind::MalformedInput, "unsupported report schema version");
        AccuracyResult r;
        r.method = method_from(j.at("method").get<std::string>());
        r.ci_kind = ci_kind_from(j.at("ci_type").get<std::string>());
        r.meta.alpha = j.at("alpha").get<double>();
        for (auto m : kMeasures) {
            const auto& o = j.at("measures").at(std::string(to_string(m)));
            auto& e = r[m];
            e.estimate = optional_number(o, "estimate").value_or(std::nan(""));
            e.se = optional_number(o, "se");
            const auto lo = optional_number(o, "ci_low");
            const auto hi = optional_number(o, "ci_high");
            if (lo && hi) e.ci = Interval{*lo, *hi};
            e.ci_fallback = o.at("ci_fallback").get<bool>();
        }
        const auto& md = j.at("metadata");
        r.meta.covariates = md.at("covariates").get<std::vector<std::string>>();
        r.meta.saturated = md.at("saturated").get<bool>();
        if (!md.at("mnar").is_null()) r.meta.mnar = md.at("mnar").get<bool>();
        if (!md.at("seed").is_null()) r.meta.seed = md.at("seed").get<std::uint64_t>();
        if (!md.at("replicates").is_null()) r.meta.replicates = md.at("replicates").get<int>();
        if (!md.at("failed_replicates").is_null()) r.meta.failed_replicates = md.at("failed_replicates").get<int>();
        if (!md.at("imputations").is_null()) r.meta.imputations = md.at("imputations").get<int>();
        if (!md.at("iterations").is_null()) r.meta.iterations = md.at("iterations").get<int>();
        if (!md.at("converged").is_null()) r.meta.converged = md.at("converged").get<bool>();
        r.meta.warnings = j.at("warnings").get<std::vector<std::string>>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::MalformedInput, std::string("malformed report: ") + e.what());
    }
}

ordered_json to_json(const VerificationTable& t)
{
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "table";
    j["cells"] = {{"s1", t.s1}, {"r1", t.r1}, {"u1", t.u1}, {"s0", t.s0}, {"r0", t.r0}, {"u0", t.u0}};
    j["n"] = t.n();
    j["verified"] = t.verified();
    j["unverified"] = t.u();
    return j;
}

std::string format_csv(const AccuracyResult& result)
{
    std::ostringstream out;
    out << "method,measure,statistic,value\n";
    const auto method = std::string(to_string(result.method));
    for (auto m : kMeasures) {
        const auto& e = result[m];
        const auto name = std::string(to_string(m));
        out << method << ',' << name << ",estimate," << csv_value(e.estimate) << '\n';
        out << method << ',' << name << ",se," << csv_value(e.se) << '\n';
        out << method << ',' << name << ",ci_low," << csv_value(e.ci ? std::optional(e.ci->low) : std::nullopt) << '\n';
        out << method << ',' << name << ",ci_high," << csv_value(e.ci ? std::optional(e.ci->high) : std::nullopt)
            << '\n';
    }
    return out.str();
}

std::string format_csv(const VerificationTable& t)
{
    std::ostringstream out;
    out << "test,yes,no,unverified,total\n";
    out << "yes," << t.s1 << ',' << t.r1 << ',' << t.u1 << ',' << t.n1() << '\n';
    out << "no," << t.s0 << ',' << t.r0 << ',' << t.u0 << ',' << t.n0() << '\n';
    return out.str();
}

std::string format_compare_text(const std::vector<CompareColumn>& columns, int decimals)
{
    const double alpha = columns.empty() ? 0.05 : columns.front().result.meta.alpha;
    std::vector<std::string> labels{"Estimates"};
    std::vector<std::vector<std::string>> cells(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) cells[c].push_back(columns[c].label);
    for (auto m : kMeasures) {
        labels.insert(labels.end(),
                      {long_name(m), "SE", percent_label(alpha / 2.0), percent_label(1.0 - alpha / 2.0)});
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto& e = columns[c].result[m];
            auto cell = [&](std::optional<double> v) {
                return v && std::isfinite(*v) ? fixed(*v, decimals) : std::string("NA");
            };
            cells[c].push_back(cell(e.estimate));
            cells[c].push_back(cell(e.se));
            cells[c].push_back(cell(e.ci ? std::optional(e.ci->low) : std::nullopt));
            cells[c].push_back(cell(e.ci ? std::optional(e.ci->high) : std::nullopt));
        }
    }
    std::size_t label_width = 0;
    for (const auto& l : labels) label_width = std::max(label_width, l.size());
    std::vector<std::size_t> widths;
    for (const auto& col : cells) {
        std::size_t w = 0;
        for (const auto& s : col) w = std::max(w, s.size());
        widths.push_back(w);
    }
    std::ostringstream out;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        out << pad_right(labels[r], label_width);
        for (std::size_t c = 0; c < cells.size(); ++c) out << "  " << pad_left(cells[c][r], widths[c]);
        out << '\n';
    }
    return out.str();
}

ordered_json compare_to_json(const std::vector<CompareColumn>& columns)
{
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "compare";
    ordered_json cols = ordered_json::array();
    for (const auto& c : columns) {
        ordered_json o;
        o["label"] = c.label;
        o["result"] = to_json(c.result);
        cols.push_back(std::move(o));
    }
    j["columns"] = std::move(cols);
    return j;
}

std::string format_compare_csv(const std::vector<CompareColumn>& columns)
{
    std::ostringstream out;
    out << "measure,statistic";
    for (const auto& c : columns) out << ',' << c.label;
    out << '\n';
    for (auto m : kMeasures) {
        const char* stats[] = {"estimate", "se", "ci_low", "ci_high"};
        for (int s = 0; s < 4; ++s) {
            out << to_string(m) << ',' << stats[s];
            for (const auto& c : columns) {
                const auto& e = c.result[m];
                std::optional<double> v;
                switch (s) {
                case 0: v = e.estimate; break;
                case 1: v = e.se; break;
                case 2: if (e.ci) v = e.ci->low; break;
                default: if (e.ci) v = e.ci->high; break;
                }
                out << ',' << csv_value(v);
            }
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace pvb::report
