#include "pvb/data.hpp"

#include "pvb/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace pvb {

namespace {

std::string trim(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    s = s.substr(b, e - b);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(trim(std::string_view(line).substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

bool is_missing_marker(const std::string& field)
{
    if (field.empty()) return true;
    if (field.size() != 2) return false;
    return std::tolower(static_cast<unsigned char>(field[0])) == 'n' &&
           std::tolower(static_cast<unsigned char>(field[1])) == 'a';
}

std::optional<double> parse_number(const std::string& field)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

int parse_binary(const std::string& field, const std::string& column, std::size_t line_no)
{
    auto v = parse_number(field);
    if (!v || (*v != 0.0 && *v != 1.0)) {
        throw Error(ErrorKind::MalformedInput,
                    "line " + std::to_string(line_no) + ": column '" + column +
                        "' must be 0 or 1, got '" + field + "'");
    }
    return static_cast<int>(*v);
}

}  // namespace

Dataset::Dataset(std::vector<Record> records, std::vector<std::string> covariate_names)
    : records_(std::move(records)), covariate_names_(std::move(covariate_names))
{
    if (records_.empty()) throw Error(ErrorKind::EmptyDataset, "dataset has no records");
    const auto width = covariate_names_.size();
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.t != 0 && r.t != 1)
            throw Error(ErrorKind::MalformedInput, "record " + std::to_string(i) + ": T must be 0 or 1");
        if (r.d && *r.d != 0 && *r.d != 1)
            throw Error(ErrorKind::MalformedInput, "record " + std::to_string(i) + ": D must be 0 or 1");
        if (r.x.size() != width)
            throw Error(ErrorKind::MalformedInput,
                        "record " + std::to_string(i) + ": expected " + std::to_string(width) + " covariates");
        for (double v : r.x)
            if (!std::isfinite(v))
                throw Error(ErrorKind::MalformedInput, "record " + std::to_string(i) + ": non-finite covariate");
        if (r.d) ++verified_;
    }
}

std::size_t Dataset::covariate_index(const std::string& name) const
{
    auto it = std::find(covariate_names_.begin(), covariate_names_.end(), name);
    if (it == covariate_names_.end()) throw Error(ErrorKind::MalformedInput, "unknown covariate '" + name + "'");
    return static_cast<std::size_t>(it - covariate_names_.begin());
}

std::vector<std::size_t> Dataset::verified_indices() const
{
    std::vector<std::size_t> out;
    out.reserve(verified_);
    for (std::size_t i = 0; i < records_.size(); ++i)
        if (records_[i].verified()) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::unverified_indices() const
{
    std::vector<std::size_t> out;
    out.reserve(records_.size() - verified_);
    for (std::size_t i = 0; i < records_.size(); ++i)
        if (!records_[i].verified()) out.push_back(i);
    return out;
}

Dataset load_dataset(std::istream& in, const ColumnSelection& columns)
{
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        header = split_fields(line);
        break;
    }
    if (header.empty()) throw Error(ErrorKind::EmptyDataset, "input has no header row");

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position.emplace(header[i], i);
    auto column = [&](const std::string& name) {
        auto it = position.find(name);
        if (it == position.end()) throw Error(ErrorKind::MalformedInput, "unknown column '" + name + "'");
        return it->second;
    };
    const auto test_col = column(columns.test);
    const auto disease_col = column(columns.disease);
    std::vector<std::size_t> cov_cols;
    for (const auto& c : columns.covariates) cov_cols.push_back(column(c));

    std::vector<Record> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::MalformedInput, "line " + std::to_string(line_no) + ": expected " +
                                                       std::to_string(header.size()) + " fields, got " +
                                                       std::to_string(fields.size()));
        }
        Record r;
        r.t = parse_binary(fields[test_col], columns.test, line_no);
        if (!is_missing_marker(fields[disease_col])) r.d = parse_binary(fields[disease_col], columns.disease, line_no);
        r.x.reserve(cov_cols.size());
        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            auto v = parse_number(fields[cov_cols[k]]);
            if (!v) {
                throw Error(ErrorKind::MalformedInput, "line " + std::to_string(line_no) + ": covariate '" +
                                                           columns.covariates[k] + "' is not numeric");
            }
            r.x.push_back(*v);
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw Error(ErrorKind::EmptyDataset, "input has no data rows");
    return Dataset(std::move(records), columns.covariates);
}

Dataset load_dataset(const std::filesystem::path& path, const ColumnSelection& columns)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MalformedInput, "cannot open '" + path.string() + "'");
    return load_dataset(in, columns);
}

void write_dataset(std::ostream& out, const Dataset& data, const std::string& test_name,
                   const std::string& disease_name)
{
    out << test_name << ',' << disease_name;
    for (const auto& c : data.covariate_names()) out << ',' << c;
    out << '\n';
    std::ostringstream num;
    num.precision(17);
    for (const auto& r : data.records()) {
        out << r.t << ',';
        if (r.d) out << *r.d; else out << "NA";
        for (double v : r.x) {
            num.str({});
            num << v;
            out << ',' << num.str();
        }
        out << '\n';
    }
}

VerificationTable cross_table(const Dataset& data)
{
    VerificationTable tab;
    for (const auto& r : data.records()) {
        if (!r.d) {
            (r.t == 1 ? tab.u1 : tab.u0) += 1;
        } else if (*r.d == 1) {
            (r.t == 1 ? tab.s1 : tab.s0) += 1;
        } else {
            (r.t == 1 ? tab.r1 : tab.r0) += 1;
        }
    }
    return tab;
}

double missing_percentage(const Dataset& data)
{
    return 100.0 * static_cast<double>(data.unverified_count()) / static_cast<double>(data.size());
}

Dataset select_covariates(const Dataset& data, const std::vector<std::string>& names)
{
    std::vector<std::size_t> idx;
    for (const auto& n : names) idx.push_back(data.covariate_index(n));
    std::vector<Record> out;
    out.reserve(data.size());
    for (const auto& r : data.records()) {
        Record c{r.t, r.d, {}};
        for (auto k : idx) c.x.push_back(r.x[k]);
        out.push_back(std::move(c));
    }
    return Dataset(std::move(out), names);
}

}  // namespace pvb
