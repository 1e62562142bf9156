#include "pvb/cli.hpp"

#include "pvb/closed_form.hpp"
#include "pvb/em.hpp"
#include "pvb/error.hpp"
#include "pvb/mi.hpp"
#include "pvb/report.hpp"
#include "pvb/simgen.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#ifndef PVB_DATA_DIR
#define PVB_DATA_DIR "data"
#endif

namespace pvb::cli {

namespace {

std::string_view name_of(Subcommand c)
{
    switch (c) {
    case Subcommand::Table: return "table";
    case Subcommand::Cca: return "cca";
    case Subcommand::Bg: return "bg";
    case Subcommand::Ebg: return "ebg";
    case Subcommand::Mi: return "mi";
    case Subcommand::Em: return "em";
    case Subcommand::Simulate: return "simulate";
    case Subcommand::Compare: return "compare";
    }
    return "?";
}

[[noreturn]] void usage(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

std::vector<Method> methods_of(const RunRequest& r)
{
    if (!r.methods.empty()) return r.methods;
    return {Method::CCA, Method::BG, Method::EBG, Method::MI, Method::EM};
}

bool uses(const RunRequest& r, Method m)
{
    const auto ms = methods_of(r);
    return std::find(ms.begin(), ms.end(), m) != ms.end();
}

bool is_stochastic(const RunRequest& r)
{
    switch (r.command) {
    case Subcommand::Ebg:
    case Subcommand::Em: return !r.no_ci;
    case Subcommand::Mi:
    case Subcommand::Simulate: return true;
    case Subcommand::Compare:
        return uses(r, Method::MI) || (!r.no_ci && (uses(r, Method::EBG) || uses(r, Method::EM)));
    default: return false;
    }
}

std::uint64_t system_seed()
{
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string category_name(ErrorCategory c)
{
    switch (c) {
    case ErrorCategory::Usage: return "usage";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Numerical: return "numerical";
    }
    return "?";
}

int exit_code(ErrorCategory c)
{
    switch (c) {
    case ErrorCategory::Usage: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numerical: return 4;
    }
    return 1;
}

int report_error(const Error& e, bool json_mode, std::ostream& out, std::ostream& err)
{
    const auto cat = category_of(e.kind());
    err << "error: category=" << category_name(cat) << " kind=" << to_string(e.kind()) << " message=" << e.what()
        << '\n';
    if (json_mode) {
        nlohmann::ordered_json j;
        j["schema_version"] = report::kSchemaVersion;
        j["kind"] = "error";
        j["error"] = {{"category", category_name(cat)}, {"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
        out << j.dump(2) << '\n';
    }
    return exit_code(cat);
}

struct Context {
    const RunRequest& request;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    BootConfig boot() const
    {
        BootConfig b;
        b.replicates = request.replicates.value_or(999);
        b.seed = seed;
        b.ci_type = request.ci_type.value_or(BootCiType::Bca);
        b.alpha = request.alpha;
        b.threads = threads;
        b.validate();
        return b;
    }

    AccuracyResult run_ebg(const Dataset& data) const
    {
        EbgOptions o;
        o.covariates = request.columns.covariates;
        o.saturated = request.saturated;
        o.alpha = request.alpha;
        if (!request.no_ci) o.bootstrap = boot();
        return ebg(data, o);
    }

    AccuracyResult run_mi(const Dataset& data) const
    {
        MiConfig c;
        c.m = request.m;
        c.seed = seed;
        c.covariates = request.columns.covariates;
        c.alpha = request.alpha;
        c.threads = threads;
        return acc_mi(data, c).result;
    }

    AccuracyResult run_em(const Dataset& data) const
    {
        EmConfig c;
        c.covariates = request.columns.covariates;
        c.mnar = request.mnar.value_or(true);
        c.t_max = request.t_max;
        if (request.cutoff) c.cutoff = *request.cutoff;
        if (!request.no_ci) c.bootstrap = boot();
        auto res = acc_em(data, c).result;
        res.meta.alpha = request.alpha;
        return res;
    }

    AccuracyResult run_method(Method m, const Dataset& data) const
    {
        switch (m) {
        case Method::CCA: return cca(cross_table(data), request.alpha);
        case Method::BG: return bg(cross_table(data), request.alpha);
        case Method::EBG: return run_ebg(data);
        case Method::MI: return run_mi(data);
        case Method::EM: return run_em(data);
        }
        usage("unknown method");
    }
};

std::string render(const AccuracyResult& r, OutputFormat f)
{
    switch (f) {
    case OutputFormat::Json: return report::to_json(r).dump(2) + "\n";
    case OutputFormat::Csv: return report::format_csv(r);
    case OutputFormat::Text: break;
    }
    return report::format_text(r);
}

void emit(const RunRequest& r, const std::string& text, std::ostream& out)
{
    if (r.output.empty()) {
        out << text;
        return;
    }
    std::ofstream file(r.output, std::ios::binary);
    if (!file) usage("cannot write " + r.output.string());
    file << text;
}

std::string run_simulate(const RunRequest& r, std::uint64_t seed, unsigned threads)
{
    auto spec = sim::load_spec(r.spec);
    if (r.seed || r.no_seed) spec.seed = seed;
    if (r.n) spec.n = *r.n;
    const auto result = sim::generate(spec, threads);
    if (!r.truth_output.empty()) {
        nlohmann::ordered_json j;
        j["schema_version"] = report::kSchemaVersion;
        j["kind"] = "truth";
        j["seed"] = spec.seed;
        j["n"] = spec.n;
        j["prevalence"] = result.truth.prevalence;
        j["se"] = result.truth.se;
        j["sp"] = result.truth.sp;
        j["ppv"] = result.truth.ppv;
        j["npv"] = result.truth.npv;
        j["verified_fraction"] = result.truth.verified_fraction;
        std::ofstream file(r.truth_output);
        if (!file) usage("cannot write " + r.truth_output.string());
        file << j.dump(2) << '\n';
    }
    std::ostringstream csv;
    write_dataset(csv, result.data);
    return csv.str();
}

bool spec_sets_seed(const std::filesystem::path& path)
{
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto key = line.substr(0, eq);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key == "seed") return true;
    }
    return false;
}

}  // namespace

std::filesystem::path bundled_dataset() { return std::filesystem::path(PVB_DATA_DIR) / "spect_cad.csv"; }

void RunRequest::validate() const
{
    const auto name = std::string(name_of(command));
    const bool em_like = command == Subcommand::Em || command == Subcommand::Compare;
    const bool boot_like = command == Subcommand::Ebg || em_like;
    if ((mnar || t_max || cutoff) && !em_like) usage("--mnar, --t-max and --cutoff apply only to em and compare");
    if (m && command != Subcommand::Mi && command != Subcommand::Compare)
        usage("--m applies only to mi and compare");
    if ((replicates || ci_type || no_ci) && !boot_like)
        usage("--R, --ci-type and --no-ci apply only to ebg, em and compare");
    if (saturated && command != Subcommand::Ebg && command != Subcommand::Compare)
        usage("--saturated applies only to ebg and compare");
    if (!columns.covariates.empty() &&
        (command == Subcommand::Table || command == Subcommand::Cca || command == Subcommand::Bg ||
         command == Subcommand::Simulate))
        usage("covariates do not apply to " + name);
    if (!methods.empty() && command != Subcommand::Compare) usage("--methods applies only to compare");
    if (command != Subcommand::Simulate && (!spec.empty() || n || !truth_output.empty()))
        usage("--spec, --n and --truth apply only to simulate");
    if (command == Subcommand::Simulate && spec.empty()) usage("simulate needs --spec");
    if (command == Subcommand::Simulate && format != OutputFormat::Csv && format != OutputFormat::Text)
        usage("simulate writes CSV data only");
    if (command != Subcommand::Table && (!show_unverified || !show_total))
        usage("--verified-only and --no-total apply only to table");
    if (seed && no_seed) usage("--seed and --no-seed are mutually exclusive");
    if (!(alpha > 0.0 && alpha < 1.0)) usage("--alpha must lie in (0, 1)");
    if (m && *m < 2) usage("--m must be at least 2");
    if (replicates && *replicates < 2) usage("--R must be at least 2");
    if (t_max && *t_max < 1) usage("--t-max must be at least 1");
    if (cutoff && !(*cutoff > 0.0)) usage("--cutoff must be positive");
    if (mnar == false && command == Subcommand::Compare && !uses(*this, Method::EM))
        usage("--mnar needs em among --methods");
    if (is_stochastic(*this) && !seed && !no_seed &&
        !(command == Subcommand::Simulate && !spec.empty() && spec_sets_seed(spec)))
        usage(name + " is stochastic: pass --seed N, or --no-seed to draw one");
}

int run(const RunRequest& request, std::ostream& out, std::ostream& err)
{
    const bool json_mode = request.format == OutputFormat::Json;
    try {
        request.validate();
        Context ctx{request};
        ctx.seed = request.seed ? *request.seed : (request.no_seed ? system_seed() : 0);
        ctx.threads = request.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : request.threads;

        if (request.command == Subcommand::Simulate) {
            emit(request, run_simulate(request, ctx.seed, ctx.threads), out);
            return 0;
        }

        const auto data = load_dataset(request.input.empty() ? bundled_dataset() : request.input, request.columns);
        std::string text;
        switch (request.command) {
        case Subcommand::Table: {
            const auto t = cross_table(data);
            if (request.format == OutputFormat::Json) text = report::to_json(t).dump(2) + "\n";
            else if (request.format == OutputFormat::Csv) text = report::format_csv(t);
            else text = report::format_table(t, request.show_unverified, request.show_total);
            break;
        }
        case Subcommand::Cca: text = render(ctx.run_method(Method::CCA, data), request.format); break;
        case Subcommand::Bg: text = render(ctx.run_method(Method::BG, data), request.format); break;
        case Subcommand::Ebg: text = render(ctx.run_method(Method::EBG, data), request.format); break;
        case Subcommand::Mi: text = render(ctx.run_method(Method::MI, data), request.format); break;
        case Subcommand::Em: text = render(ctx.run_method(Method::EM, data), request.format); break;
        case Subcommand::Compare: {
            std::vector<report::CompareColumn> cols;
            for (auto m : methods_of(request))
                cols.push_back({std::string(to_string(m)), ctx.run_method(m, data)});
            if (request.format == OutputFormat::Json) text = report::compare_to_json(cols).dump(2) + "\n";
            else if (request.format == OutputFormat::Csv) text = report::format_compare_csv(cols);
            else text = report::format_compare_text(cols);
            break;
        }
        case Subcommand::Simulate: break;
        }
        emit(request, text, out);
        return 0;
    } catch (const Error& e) {
        return report_error(e, json_mode, out, err);
    } catch (const std::exception& e) {
        return report_error(Error(ErrorKind::DomainError, e.what()), json_mode, out, err);
    }
}

namespace {

struct Parsed {
    RunRequest request;
    bool help = false;
    std::string help_text;
};

Parsed parse(const std::vector<std::string>& args)
{
    Parsed result;
    RunRequest& r = result.request;
    CLI::App app{"Diagnostic accuracy under partial verification", "pvb"};
    app.allow_extras();
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string input, output, format = "text", ci_type;
    std::vector<std::string> covariates, methods;
    std::uint64_t seed = 0;
    bool mnar = true;
    int m = 0, replicates = 0, t_max = 0;
    double cutoff = 0.0;
    std::string spec, truth;
    std::size_t n = 0;

    struct Sub {
        Subcommand cmd;
        CLI::App* app;
        CLI::Option* seed = nullptr;
        CLI::Option* mnar = nullptr;
        CLI::Option* m = nullptr;
        CLI::Option* replicates = nullptr;
        CLI::Option* t_max = nullptr;
        CLI::Option* cutoff = nullptr;
        CLI::Option* ci_type = nullptr;
        CLI::Option* n = nullptr;
    };
    std::vector<Sub> subs;

    auto add = [&](Subcommand cmd, const std::string& description) -> Sub& {
        auto* s = app.add_subcommand(std::string(name_of(cmd)), description);
        subs.push_back(Sub{cmd, s});
        auto& sub = subs.back();
        s->add_option("--output,-o", output, "Write the report here instead of stdout");
        s->add_option("--format", format, "text, json or csv")->check(CLI::IsMember({"text", "json", "csv"}));
        if (cmd == Subcommand::Simulate) return sub;
        s->add_option("--input,-i", input, "CSV data file (bundled SPECT/CAD data when omitted)");
        s->add_option("--test", r.columns.test, "Index test column");
        s->add_option("--disease", r.columns.disease, "Disease column (NA or empty when unverified)");
        return sub;
    };
    auto add_covariates = [&](Sub& s) {
        s.app->add_option("--covariate,-x", covariates, "Covariate column (repeatable)");
    };
    auto add_alpha = [&](Sub& s) {
        s.app->add_option("--alpha", r.alpha, "1 - confidence level")->capture_default_str();
    };
    auto add_threads = [&](Sub& s) {
        s.app->add_option("--threads", r.threads, "Worker cap (0 = all cores)")->capture_default_str();
    };
    auto add_seed = [&](Sub& s) {
        s.seed = s.app->add_option("--seed", seed, "Random seed");
        s.app->add_flag("--no-seed", r.no_seed, "Draw a seed from the system and report it");
    };
    auto add_boot = [&](Sub& s) {
        s.replicates = s.app->add_option("--R", replicates, "Bootstrap replicates (default 999)");
        s.ci_type = s.app->add_option("--ci-type", ci_type, "bca or percentile")
                        ->check(CLI::IsMember({"bca", "percentile"}));
        s.app->add_flag("--no-ci", r.no_ci, "Point estimates only, no bootstrap");
    };
    auto add_em = [&](Sub& s) {
        s.mnar = s.app->add_flag("--mnar", mnar, "Verification depends on D (default true; --mnar=false for MAR)");
        s.t_max = s.app->add_option("--t-max", t_max, "EM iteration cap (5000, or 50000 with covariates)");
        s.cutoff = s.app->add_option("--cutoff", cutoff, "EM convergence threshold (default 0.0002)");
    };

    {
        auto& s = add(Subcommand::Table, "Cross-classify test result against disease status");
        s.app->add_flag("--verified-only", [&](std::int64_t) { r.show_unverified = false; }, "Omit the unverified column");
        s.app->add_flag("--no-total", [&](std::int64_t) { r.show_total = false; }, "Omit the Total column");
    }
    {
        auto& s = add(Subcommand::Cca, "Complete case analysis");
        add_alpha(s);
    }
    {
        auto& s = add(Subcommand::Bg, "Begg and Greenes' correction with analytic intervals");
        add_alpha(s);
    }
    {
        auto& s = add(Subcommand::Ebg, "Extended Begg and Greenes' correction");
        add_covariates(s);
        s.app->add_flag("--saturated", r.saturated, "Add all test-by-covariate interactions");
        add_boot(s);
        add_seed(s);
        add_alpha(s);
        add_threads(s);
    }
    {
        auto& s = add(Subcommand::Mi, "Multiple imputation by logistic regression");
        add_covariates(s);
        s.m = s.app->add_option("--m", m, "Imputations (default: percentage of unverified records)");
        add_seed(s);
        add_alpha(s);
        add_threads(s);
    }
    {
        auto& s = add(Subcommand::Em, "EM-based logistic regression (MNAR by default)");
        add_covariates(s);
        add_em(s);
        add_boot(s);
        add_seed(s);
        add_alpha(s);
        add_threads(s);
    }
    {
        auto& s = add(Subcommand::Simulate, "Generate a synthetic dataset from a key = value spec");
        s.app->add_option("--spec", spec, "Spec file")->required();
        s.n = s.app->add_option("--n", n, "Override the cohort size");
        s.app->add_option("--truth", truth, "Write the population truth as JSON here");
        add_seed(s);
        add_threads(s);
    }
    {
        auto& s = add(Subcommand::Compare, "Run several estimators and print a wide comparison");
        add_covariates(s);
        s.app->add_option("--methods", methods, "Comma-separated subset of cca,bg,ebg,mi,em")->delimiter(',');
        s.app->add_flag("--saturated", r.saturated, "Saturated EBG model");
        s.m = s.app->add_option("--m", m, "MI imputations");
        add_em(s);
        add_boot(s);
        add_seed(s);
        add_alpha(s);
        add_threads(s);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        result.help = true;
        const auto chosen = app.get_subcommands();
        result.help_text = chosen.empty() ? app.help() : chosen.front()->help();
        return result;
    } catch (const CLI::CallForAllHelp&) {
        result.help = true;
        result.help_text = app.help("", CLI::AppFormatMode::All);
        return result;
    } catch (const CLI::ParseError& e) {
        usage(e.what());
    }
    if (const auto extra = app.remaining(true); !extra.empty()) {
        std::string joined;
        for (const auto& a : extra) joined += (joined.empty() ? "" : " ") + a;
        usage("unexpected arguments for this subcommand: " + joined);
    }

    const Sub* chosen = nullptr;
    for (const auto& s : subs)
        if (s.app->parsed()) chosen = &s;
    if (!chosen) usage("a subcommand is required");
    r.command = chosen->cmd;
    r.input = input;
    r.output = output;
    r.columns.covariates = covariates;
    r.format = format == "json" ? OutputFormat::Json : format == "csv" ? OutputFormat::Csv : OutputFormat::Text;
    if (chosen->seed && chosen->seed->count()) r.seed = seed;
    if (chosen->mnar && chosen->mnar->count()) r.mnar = mnar;
    if (chosen->m && chosen->m->count()) r.m = m;
    if (chosen->replicates && chosen->replicates->count()) r.replicates = replicates;
    if (chosen->t_max && chosen->t_max->count()) r.t_max = t_max;
    if (chosen->cutoff && chosen->cutoff->count()) r.cutoff = cutoff;
    if (chosen->ci_type && chosen->ci_type->count())
        r.ci_type = ci_type == "percentile" ? BootCiType::Percentile : BootCiType::Bca;
    if (chosen->n && chosen->n->count()) r.n = n;
    r.spec = spec;
    r.truth_output = truth;
    for (const auto& name : methods) {
        std::string lower = name;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        if (lower == "cca") r.methods.push_back(Method::CCA);
        else if (lower == "bg") r.methods.push_back(Method::BG);
        else if (lower == "ebg") r.methods.push_back(Method::EBG);
        else if (lower == "mi") r.methods.push_back(Method::MI);
        else if (lower == "em") r.methods.push_back(Method::EM);
        else usage("unknown method '" + name + "'");
    }
    return result;
}

}  // namespace

RunRequest parse_args(const std::vector<std::string>& args)
{
    auto parsed = parse(args);
    if (parsed.help) usage("help requested");
    return parsed.request;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    const bool json_mode = std::find(args.begin(), args.end(), "--format=json") != args.end() ||
                           std::adjacent_find(args.begin(), args.end(), [](const auto& a, const auto& b) {
                               return a == "--format" && b == "json";
                           }) != args.end();
    Parsed parsed;
    try {
        parsed = parse(args);
    } catch (const Error& e) {
        return report_error(e, json_mode, out, err);
    }
    if (parsed.help) {
        out << parsed.help_text;
        return 0;
    }
    return run(parsed.request, out, err);
}

}  // namespace pvb::cli
