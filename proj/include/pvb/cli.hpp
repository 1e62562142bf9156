#pragma once

#include "pvb/accuracy.hpp"
#include "pvb/bootstrap.hpp"
#include "pvb/data.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pvb::cli {

enum class Subcommand { Table, Cca, Bg, Ebg, Mi, Em, Simulate, Compare };
enum class OutputFormat { Text, Json, Csv };

struct RunRequest {
    Subcommand command = Subcommand::Table;
    std::filesystem::path input;  // bundled SPECT/CAD data when empty
    ColumnSelection columns;

    bool saturated = false;
    std::optional<bool> mnar;  // em / compare; true when unset
    std::optional<int> m;
    std::optional<int> replicates;  // 999 when unset
    std::optional<int> t_max;
    std::optional<double> cutoff;
    std::optional<BootCiType> ci_type;
    double alpha = 0.05;
    std::optional<std::uint64_t> seed;
    bool no_seed = false;  // draw a seed from the system and report it
    bool no_ci = false;    // skip bootstrap intervals (ebg, em)
    unsigned threads = 1;

    OutputFormat format = OutputFormat::Text;
    std::filesystem::path output;  // stdout when empty

    // table
    bool show_unverified = true;
    bool show_total = true;

    // simulate
    std::filesystem::path spec;
    std::optional<std::size_t> n;
    std::filesystem::path truth_output;

    // compare
    std::vector<Method> methods;  // all five when empty

    /// InvalidConfig when an option does not apply to the subcommand.
    void validate() const;
};

std::filesystem::path bundled_dataset();

/// Executes a request. Returns 0 on success, 2 for usage errors, 3 for data
/// errors and 4 for numerical errors; failures print a one-line
/// "error: category=... kind=..." record on `err` (and a JSON error object
/// on `out` in json mode).
int run(const RunRequest& request, std::ostream& out, std::ostream& err);

/// Parses argv (without the program name). Throws Error(InvalidConfig).
RunRequest parse_args(const std::vector<std::string>& args);

/// Parses and runs; help output returns 0.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pvb::cli
