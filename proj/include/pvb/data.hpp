#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pvb {

/// One patient: index test result, disease status when verified, covariates.
struct Record {
    int t = 0;
    std::optional<int> d;
    std::vector<double> x;

    bool verified() const noexcept { return d.has_value(); }
};

/// Ordered, immutable collection of records sharing one covariate layout.
class Dataset {
public:
    /// Throws MalformedInput on non-binary T/D or ragged covariates and
    /// EmptyDataset when `records` is empty.
    Dataset(std::vector<Record> records, std::vector<std::string> covariate_names);

    const std::vector<Record>& records() const noexcept { return records_; }
    const Record& operator[](std::size_t i) const { return records_[i]; }
    std::size_t size() const noexcept { return records_.size(); }

    const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }
    /// Position of a covariate in Record::x; MalformedInput if unknown.
    std::size_t covariate_index(const std::string& name) const;

    std::size_t verified_count() const noexcept { return verified_; }
    std::size_t unverified_count() const noexcept { return records_.size() - verified_; }

    /// Indices of verified / unverified records, in dataset order.
    std::vector<std::size_t> verified_indices() const;
    std::vector<std::size_t> unverified_indices() const;

private:
    std::vector<Record> records_;
    std::vector<std::string> covariate_names_;
    std::size_t verified_ = 0;
};

/// The 2x3 cross-classification of T against verified disease status.
struct VerificationTable {
    long s1 = 0;  // T=1, D=1
    long s0 = 0;  // T=0, D=1
    long r1 = 0;  // T=1, D=0
    long r0 = 0;  // T=0, D=0
    long u1 = 0;  // T=1, unverified
    long u0 = 0;  // T=0, unverified

    long n1() const noexcept { return s1 + r1 + u1; }
    long n0() const noexcept { return s0 + r0 + u0; }
    long u() const noexcept { return u1 + u0; }
    long n() const noexcept { return n1() + n0(); }
    long verified() const noexcept { return s1 + s0 + r1 + r0; }

    bool operator==(const VerificationTable&) const = default;
};

struct ColumnSelection {
    std::string test = "T";
    std::string disease = "D";
    std::vector<std::string> covariates;
};

/// Reads comma-delimited text with a header row. Missing disease markers are
/// an empty field, "NA" or "na" (any case).
Dataset load_dataset(std::istream& in, const ColumnSelection& columns);
Dataset load_dataset(const std::filesystem::path& path, const ColumnSelection& columns);

/// Writes `data` in the format accepted by load_dataset (missing D as "NA").
void write_dataset(std::ostream& out, const Dataset& data,
                   const std::string& test_name = "T", const std::string& disease_name = "D");

VerificationTable cross_table(const Dataset& data);

/// 100 * unverified / n.
double missing_percentage(const Dataset& data);

/// Same records restricted to (and reordered as) the named covariates.
Dataset select_covariates(const Dataset& data, const std::vector<std::string>& names);

}  // namespace pvb
