#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "irisgate/csv.hpp"
#include "irisgate/report.hpp"
#include "irisgate/rng.hpp"
#include "irisgate/stats.hpp"
#include "support.hpp"

using namespace irisgate;

TEST_SUITE("stats_report") {

TEST_CASE("quartiles of one to five") {
    const auto b = stats::box_stats({5, 3, 1, 4, 2});
    CHECK(b.q1 == 2.0);
    CHECK(b.median == 3.0);
    CHECK(b.q3 == 4.0);
    CHECK(b.whisker_low == 1.0);
    CHECK(b.whisker_high == 5.0);
    CHECK(b.outliers == 0);
    CHECK(b.n == 5);
}

TEST_CASE("type-7 quantiles interpolate") {
    CHECK(stats::quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(stats::quantile({10}, 0.975) == 10.0);
    CHECK(stats::quantile({0, 10}, 0.025) == doctest::Approx(0.25));
    CHECK_THROWS_AS(stats::quantile({}, 0.5), Error);
}

TEST_CASE("whiskers match the 1.5 IQR rule by brute force") {
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> x(1 + rng.below(80));
        for (auto& v : x) v = rng.uniform() < 0.1 ? rng.uniform(-50.0, 50.0) : rng.uniform(0.0, 1.0);
        const auto b = stats::box_stats(x);
        const double iqr = b.q3 - b.q1;
        double lo = b.q1, hi = b.q3;
        std::size_t out = 0;
        for (double v : x) {
            const bool inside = v >= b.q1 - 1.5 * iqr && v <= b.q3 + 1.5 * iqr;
            if (inside) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            } else {
                ++out;
            }
        }
        CHECK(b.whisker_low == lo);
        CHECK(b.whisker_high == hi);
        CHECK(b.outliers == out);
    }
}

TEST_CASE("mean and sample variance") {
    const std::vector<double> x = {2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(stats::mean(x) == 5.0);
    CHECK(stats::sample_variance(x) == doctest::Approx(32.0 / 7.0));
}

TEST_CASE("empty boxplot groups are omitted with a warning") {
    std::map<std::string, std::vector<double>> groups = {{"a", {1, 2, 3}}, {"b", {}}};
    std::vector<std::string> warnings;
    const auto rows = report::boxplots("via", groups, warnings);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].group == "a");
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("'b'") != std::string::npos);
}

TEST_CASE("report names every missing artifact") {
    testsupport::TempDir dir("report");
    testsupport::spit(dir.path() / "summary.json", "{}");
    try {
        report::write_report(dir.path(), dir.path() / "out");
        FAIL("expected Io");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
        const std::string msg = e.what();
        CHECK(msg.find("metrics.csv") != std::string::npos);
        CHECK(msg.find("gate_sweep.csv") != std::string::npos);
        CHECK(msg.find("summary.json") == std::string::npos);
    }
}

TEST_CASE("csv helpers") {
    std::vector<std::string> f;
    CHECK(csv::split_line(R"(a,"b,c","d""e",)", f));
    REQUIRE(f.size() == 4);
    CHECK(f[1] == "b,c");
    CHECK(f[2] == "d\"e");
    CHECK(f[3].empty());
    CHECK_FALSE(csv::split_line("\"open", f));
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("q\"") == "\"q\"\"\"");
    Rng rng(2);
    for (int k = 0; k < 200; ++k) {
        const double v = rng.uniform(-1e6, 1e6) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
        CHECK(std::stod(csv::format_double(v)) == v);
    }
    CHECK(csv::format_double(0.5) == "0.5");
}

}  // TEST_SUITE
