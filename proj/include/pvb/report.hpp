#pragma once

#include "pvb/accuracy.hpp"
#include "pvb/data.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace pvb::report {

inline constexpr int kSchemaVersion = 1;

/// Decimal places R would print for `value` at `digits` significant digits
/// (trailing zeros dropped).
int decimals_for(double value, int digits = 7);

/// Formats a column of numbers with one shared number of decimals, chosen so
/// every entry shows `digits` significant digits. Non-finite or absent
/// entries print as "NA".
std::vector<std::string> format_column(const std::vector<std::optional<double>>& values, int digits = 7);

/// Header lines plus an Est / SE / LowCI / UppCI table, one row per measure.
std::string format_text(const AccuracyResult& result);

/// Cross-classification of test against verified disease status.
std::string format_table(const VerificationTable& table, bool show_unverified = true, bool show_total = true);

nlohmann::ordered_json to_json(const AccuracyResult& result);
nlohmann::ordered_json to_json(const VerificationTable& table);
AccuracyResult result_from_json(const nlohmann::json& j);

/// One row per (measure, statistic): method,measure,statistic,value.
std::string format_csv(const AccuracyResult& result);
std::string format_csv(const VerificationTable& table);

struct CompareColumn {
    std::string label;
    AccuracyResult result;
};

/// Wide layout: rows Sensitivity / SE / lower / upper per measure, one column
/// per estimator, values rounded to `decimals`.
std::string format_compare_text(const std::vector<CompareColumn>& columns, int decimals = 3);
nlohmann::ordered_json compare_to_json(const std::vector<CompareColumn>& columns);
std::string format_compare_csv(const std::vector<CompareColumn>& columns);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace pvb::report
