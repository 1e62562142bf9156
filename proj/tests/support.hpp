#pragma once

#include "pvb/data.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace pvb::test {

inline std::string data_path(const std::string& file) { return std::string(PVB_DATA_DIR) + "/" + file; }

inline Dataset spect(const std::vector<std::string>& covariates = {})
{
    ColumnSelection cols;
    cols.covariates = covariates;
    return load_dataset(data_path("spect_cad.csv"), cols);
}

/// d < 0 marks an unverified record.
struct Row {
    int t;
    int d;
    std::vector<double> x = {};
};

inline Dataset make(const std::vector<Row>& rows, const std::vector<std::string>& names = {})
{
    std::vector<Record> records;
    for (const auto& r : rows) {
        Record rec;
        rec.t = r.t;
        if (r.d >= 0) rec.d = r.d;
        rec.x = r.x;
        records.push_back(std::move(rec));
    }
    return Dataset(std::move(records), names);
}

/// Records reproducing a verification table, grouped by cell.
inline Dataset from_table(const VerificationTable& t)
{
    std::vector<Row> rows;
    auto push = [&](long count, int test, int d) {
        for (long i = 0; i < count; ++i) rows.push_back({test, d});
    };
    push(t.s1, 1, 1);
    push(t.r1, 1, 0);
    push(t.u1, 1, -1);
    push(t.s0, 0, 1);
    push(t.r0, 0, 0);
    push(t.u0, 0, -1);
    return make(rows);
}

inline VerificationTable spect_table()
{
    VerificationTable t;
    t.s1 = 195;
    t.r1 = 232;
    t.u1 = 996;
    t.s0 = 5;
    t.r0 = 39;
    t.u0 = 1221;
    return t;
}

}  // namespace pvb::test
