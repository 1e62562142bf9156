#include "support.hpp"

#include "pvb/cli.hpp"
#include "pvb/closed_form.hpp"
#include "pvb/error.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pvb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome call(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = cli::main_entry(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "pvb_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text)
{
    const auto p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("table on the bundled data")
{
    const auto r = call({"table"});
    CHECK(r.code == 0);
    CHECK(r.out.find("  yes  195  232        996  1423") != std::string::npos);
    const auto v = call({"table", "--verified-only", "--no-total"});
    CHECK(v.out == "     Disease\nTest  yes  no\n  yes 195 232\n  no    5  39\n");
    const auto j = nlohmann::json::parse(call({"table", "--format", "json"}).out);
    CHECK(j["cells"]["r1"] == 232);
}

TEST_CASE("cca text and json")
{
    const auto r = call({"cca"});
    CHECK(r.code == 0);
    CHECK(r.out.find("Se  0.9750000 0.01103970 0.9533626 0.9966374") != std::string::npos);
    const auto j = nlohmann::json::parse(call({"cca", "--format", "json"}).out);
    CHECK(j["measures"]["NPV"]["estimate"].get<double>() == doctest::Approx(0.8863636).epsilon(1e-7));
    const auto explicit_input = call({"cca", "--input", test::data_path("spect_cad.csv"), "--test", "T", "--disease", "D"});
    CHECK(explicit_input.out == r.out);
}

TEST_CASE("em --mnar=false tracks ebg")
{
    const auto em = nlohmann::json::parse(call({"em", "--mnar=false", "--no-ci", "--format", "json"}).out);
    const auto eb = nlohmann::json::parse(call({"ebg", "--no-ci", "--format", "json"}).out);
    CHECK(em["metadata"]["mnar"] == false);
    for (const char* m : {"Se", "Sp", "PPV", "NPV"})
        CHECK(std::abs(em["measures"][m]["estimate"].get<double>() - eb["measures"][m]["estimate"].get<double>()) < 0.01);
}

TEST_CASE("covariates pass through")
{
    const auto j = nlohmann::json::parse(call({"ebg", "-x", "X3", "--saturated", "--no-ci", "--format", "json"}).out);
    CHECK(std::abs(j["measures"]["Se"]["estimate"].get<double>() - 0.8400495) < 1e-6);
    CHECK(j["metadata"]["covariates"][0] == "X3");
    CHECK(j["metadata"]["saturated"] == true);
}

TEST_CASE("stochastic runs need a seed decision")
{
    const auto r = call({"mi"});
    CHECK(r.code == 2);
    CHECK(r.err.find("category=usage") != std::string::npos);
    CHECK(call({"ebg", "--R", "20"}).code == 2);
    CHECK(call({"ebg", "--no-ci"}).code == 0);
    const auto drawn = call({"mi", "--no-seed", "--m", "3", "--format", "json"});
    REQUIRE(drawn.code == 0);
    CHECK(nlohmann::json::parse(drawn.out)["metadata"]["seed"].is_number_unsigned());
    CHECK(call({"mi", "--seed", "1", "--no-seed"}).code == 2);
}

TEST_CASE("exit codes by error category")
{
    CHECK(call({"cca", "--input", "/nonexistent/file.csv"}).code == 3);
    CHECK(call({"cca", "--disease", "nope"}).code == 3);
    CHECK(call({"cca", "--t-max", "5"}).code == 2);
    CHECK(call({"cca", "--alpha", "2"}).code == 2);
    CHECK(call({"table", "--format", "yaml"}).code == 2);
    CHECK(call({}).code == 2);
    CHECK(call({"--help"}).code == 0);
    CHECK(call({"em", "--help"}).code == 0);

    const auto degenerate = write_file("degenerate.csv", "T,D\n1,0\n0,0\n1,NA\n0,0\n");
    const auto r = call({"cca", "--input", degenerate.string()});
    CHECK(r.code == 4);
    CHECK(r.err.find("kind=DegenerateMargin") != std::string::npos);

    const auto bad = write_file("bad.csv", "T,D\n1,0\n2,1\n");
    CHECK(call({"cca", "--input", bad.string()}).code == 3);
}

TEST_CASE("json mode also emits an error object")
{
    const auto r = call({"cca", "--input", "/nonexistent/file.csv", "--format", "json"});
    CHECK(r.code == 3);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["kind"] == "error");
    CHECK(j["error"]["category"] == "data");
    CHECK(j["error"]["kind"] == "MalformedInput");
}

TEST_CASE("output file")
{
    const auto path = scratch("cca.json");
    fs::remove(path);
    const auto r = call({"cca", "--format", "json", "-o", path.string()});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in);
    CHECK(j["method"] == "CCA");
}

TEST_CASE("compare")
{
    const auto r = call({"compare", "--methods", "cca,bg,ebg", "--no-ci"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Sensitivity  0.975  0.819  0.819") != std::string::npos);
    const auto j = nlohmann::json::parse(call({"compare", "--methods", "cca,em", "--no-ci", "--format", "json"}).out);
    CHECK(j["columns"].size() == 2);
    CHECK(call({"compare", "--methods", "cca,xyz"}).code == 2);
}

TEST_CASE("simulate from a spec file")
{
    const auto spec = write_file("spec.txt", "n = 300\nseed = 5\nmechanism = mar\nverify.t = 1.5\n"
                                             "covariate.age.type = continuous\ncovariate.age.disease = 0.3\n");
    const auto data = scratch("sim.csv");
    const auto truth = scratch("truth.json");
    const auto r = call({"simulate", "--spec", spec.string(), "-o", data.string(), "--truth", truth.string()});
    REQUIRE(r.code == 0);
    ColumnSelection cols;
    cols.covariates = {"age"};
    const auto d = load_dataset(data, cols);
    CHECK(d.size() == 300);
    std::ifstream tin(truth);
    const auto tj = nlohmann::json::parse(tin);
    CHECK(tj["kind"] == "truth");
    CHECK(tj["seed"] == 5);

    const auto again = scratch("sim2.csv");
    CHECK(call({"simulate", "--spec", spec.string(), "-o", again.string(), "--n", "300"}).code == 0);
    std::ifstream a(data), b(again);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());

    const auto unseeded = write_file("unseeded.txt", "n = 10\n");
    CHECK(call({"simulate", "--spec", unseeded.string()}).code == 2);
    CHECK(call({"simulate", "--spec", unseeded.string(), "--seed", "2"}).code == 0);
}

TEST_CASE("JSON is bit-identical across thread counts")
{
    for (const std::vector<std::string>& base :
         {std::vector<std::string>{"ebg", "-x", "X3", "--R", "60", "--seed", "12345", "--format", "json"},
          std::vector<std::string>{"mi", "--m", "12", "--seed", "3", "--format", "json"},
          std::vector<std::string>{"em", "--R", "8", "--seed", "4", "--format", "json"}}) {
        auto one = base;
        one.insert(one.end(), {"--threads", "1"});
        auto four = base;
        four.insert(four.end(), {"--threads", "4"});
        const auto a = call(one);
        const auto b = call(four);
        CAPTURE(base[0]);
        CHECK(a.code == 0);
        CHECK(a.out == b.out);
    }
}

TEST_CASE("the installed binary runs")
{
    const auto out = scratch("binary.txt");
    const std::string cmd = std::string("\"") + PVB_CLI_PATH + "\" cca > \"" + out.string() + "\"";
    CHECK(std::system(cmd.c_str()) == 0);
    std::ifstream in(out);
    std::stringstream text;
    text << in.rdbuf();
    CHECK(text.str().find("NPV 0.8863636") != std::string::npos);
    const std::string bad = std::string("\"") + PVB_CLI_PATH + "\" cca --t-max 3 2> /dev/null";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == 2);
}
