#include "support.hpp"

#include "pvb/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace pvb;
using pvb::test::make;

namespace {

Dataset parse(const std::string& text, const std::vector<std::string>& covs = {})
{
    std::istringstream in(text);
    ColumnSelection cols;
    cols.covariates = covs;
    return load_dataset(in, cols);
}

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::DomainError;
}

}  // namespace

TEST_CASE("bundled SPECT file has 2688 records and 2217 unverified")
{
    const auto d = test::spect({"X3"});
    CHECK(d.size() == 2688);
    CHECK(d.unverified_count() == 2217);
    CHECK(d.verified_count() == 471);
}

TEST_CASE("cross table of the bundled data")
{
    const auto t = cross_table(test::spect());
    CHECK(t.s1 == 195);
    CHECK(t.r1 == 232);
    CHECK(t.s0 == 5);
    CHECK(t.r0 == 39);
    CHECK(t.u1 == 996);
    CHECK(t.u0 == 1221);
    CHECK(t.n1() == 1423);
    CHECK(t.n0() == 1265);
    CHECK(t.n() == 2688);
    CHECK(t.u() == 2217);
}

TEST_CASE("missing percentage")
{
    CHECK(missing_percentage(test::spect()) == doctest::Approx(82.47768).epsilon(1e-7));
    CHECK(missing_percentage(make({{1, 1}, {0, 0}})) == 0.0);
    CHECK(missing_percentage(make({{1, 1}, {0, -1}})) == 50.0);
}

TEST_CASE("one-row file")
{
    const auto d = parse("T,D\n1,1\n");
    REQUIRE(d.size() == 1);
    CHECK(d[0].t == 1);
    CHECK(d[0].d == 1);
}

TEST_CASE("missing markers")
{
    const auto d = parse("T,D\n1,\n0,NA\n1,na\n0,Na\n1,0\n");
    CHECK(d.unverified_count() == 4);
    CHECK(d[4].d == 0);
}

TEST_CASE("load errors")
{
    CHECK(kind_of([] { parse("T,D\n1,2\n"); }) == ErrorKind::MalformedInput);
    CHECK(kind_of([] { parse("T,D\n3,1\n"); }) == ErrorKind::MalformedInput);
    CHECK(kind_of([] { parse("T,D\n1,1,0\n"); }) == ErrorKind::MalformedInput);
    CHECK(kind_of([] { parse("T,D\n1\n"); }) == ErrorKind::MalformedInput);
    CHECK(kind_of([] { parse("T,D\n1,1\n", {"X9"}); }) == ErrorKind::MalformedInput);
    CHECK(kind_of([] { parse("T,D,X\n1,1,abc\n", {"X"}); }) == ErrorKind::MalformedInput);
    CHECK(kind_of([] { parse("T,D\n"); }) == ErrorKind::EmptyDataset);
    CHECK(kind_of([] { parse(""); }) == ErrorKind::EmptyDataset);
    CHECK(kind_of([] { Dataset({}, {}); }) == ErrorKind::EmptyDataset);
    CHECK(kind_of([] { make({{1, 1, {1.0}}, {0, 0}}, {"X"}); }) == ErrorKind::MalformedInput);
}

TEST_CASE("column selection by name")
{
    std::istringstream in("age,result,truth\n40,1,0\n51,0,\n");
    ColumnSelection cols;
    cols.test = "result";
    cols.disease = "truth";
    cols.covariates = {"age"};
    const auto d = load_dataset(in, cols);
    CHECK(d[0].x[0] == 40.0);
    CHECK(d[1].t == 0);
    CHECK_FALSE(d[1].verified());
}

TEST_CASE("fully verified data has no unverified cells")
{
    const auto t = cross_table(make({{1, 1}, {1, 0}, {0, 0}}));
    CHECK(t.u1 == 0);
    CHECK(t.u0 == 0);
    CHECK(t.u() == 0);
    CHECK(t.verified() == 3);
}

TEST_CASE("cross table is permutation invariant and conserves counts")
{
    auto d = test::spect({"X3"});
    auto records = d.records();
    std::mt19937 gen(7);
    std::shuffle(records.begin(), records.end(), gen);
    const Dataset shuffled(records, d.covariate_names());
    const auto t = cross_table(shuffled);
    CHECK(t == cross_table(d));
    CHECK(t.s1 + t.s0 + t.r1 + t.r0 == static_cast<long>(d.verified_count()));
    CHECK(t.s1 + t.s0 + t.r1 + t.r0 + t.u1 + t.u0 == static_cast<long>(d.size()));
}

TEST_CASE("write then reload keeps the table")
{
    const auto d = test::spect({"X3"});
    std::ostringstream out;
    write_dataset(out, d);
    const auto back = parse(out.str(), {"X3"});
    CHECK(cross_table(back) == cross_table(d));
    CHECK(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(back[i].x == d[i].x);
}

TEST_CASE("select covariates")
{
    const auto d = make({{1, 1, {1.0, 2.0}}, {0, -1, {3.0, 4.0}}}, {"A", "B"});
    const auto s = select_covariates(d, {"B"});
    CHECK(s.covariate_names() == std::vector<std::string>{"B"});
    CHECK(s[1].x == std::vector<double>{4.0});
    CHECK_THROWS_AS(select_covariates(d, {"C"}), Error);
}
