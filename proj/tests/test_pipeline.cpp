#include <doctest.h>

#include "irisgate/pipeline.hpp"
#include "irisgate/report.hpp"
#include "support.hpp"

using namespace irisgate;
using namespace irisgate::pipeline;
using testsupport::slurp;
using testsupport::TempDir;

namespace {

ExperimentConfig tiny(const std::filesystem::path& out) {
    ExperimentConfig c;
    c.cohort.identity_count = 3;
    c.gate.fmr_target = 0.05;
    c.gate.resamples = 20;
    c.output_dir = out;
    c.apply_master_seed(3);
    return c;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config JSON round trip") {
    ExperimentConfig c;
    c.cohort.identity_count = 9;
    c.gate.discard_rates = {0.0, 0.1};
    c.gate.resamples = 77;
    c.pairing.scope = eval::PairScope::AllPairs;
    c.gate_features = {eval::Feature::Pir, eval::Feature::Mrd1};
    c.apply_master_seed(12);
    const auto text = config_to_json(c);
    const auto back = config_from_json(text);
    CHECK(config_to_json(back) == text);
    CHECK(back.master_seed == 12);
    CHECK(back.gate.resamples == 77);
    CHECK(back.pairing.scope == eval::PairScope::AllPairs);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(config_from_json("[1,2]"), Error);
    CHECK_THROWS_AS(config_from_json("{\"pairing\": {\"scope\": \"some\"}}"), Error);
    CHECK_THROWS_AS(config_from_json("{\"gate\": {\"resamples\": 0}}"), Error);
    CHECK_THROWS_AS(config_from_json("{\"validator\": {\"preset\": \"lax\"}}"), Error);
    CHECK_NOTHROW(config_from_json("{}"));
}

TEST_CASE("summary round trip and version check") {
    Summary s;
    s.master_seed = 4;
    s.enrollment = "wide_undilated";
    s.genuine_pairs = 10;
    s.impostor_pairs = 90;
    s.fmr_threshold = 0.35;
    s.complete = true;
    const auto text = summary_to_json(s);
    CHECK(summary_to_json(summary_from_json(text)) == text);
    auto bumped = text;
    const auto pos = bumped.find("\"schema_version\": 1");
    REQUIRE(pos != std::string::npos);
    bumped.replace(pos, 19, "\"schema_version\": 99");
    try {
        summary_from_json(bumped);
        FAIL("expected Parse");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
    }
}

TEST_CASE("end-to-end run on a tiny cohort") {
    TempDir a("runA"), b("runB");
    const auto res = run_pipeline(tiny(a.path()));
    REQUIRE_MESSAGE(res.ok, res.stage << ": " << res.message);
    for (const char* f : {"config.json", "metrics.csv", "pairs.csv", "matches.csv", "decision_env.json",
                          "correlations.csv", "gate_sweep.csv", "models.json", "summary.json"})
        CHECK_MESSAGE(std::filesystem::exists(a.path() / f), f);
    CHECK_FALSE(std::filesystem::exists(a.path() / "FAILED"));
    CHECK(res.summary.complete);
    CHECK(res.summary.genuine_pairs > 0);
    CHECK(res.summary.impostor_pairs > 0);
    CHECK(res.summary.gate.size() == 5);

    const auto rep = report::write_report(a.path(), a.path() / "report");
    CHECK(rep.files.size() == 3);
    CHECK(rep.text.find("M1_VIA") != std::string::npos);

    REQUIRE(run_pipeline(tiny(b.path())).ok);
    CHECK(slurp(a.path() / "summary.json") == slurp(b.path() / "summary.json"));
    CHECK(slurp(a.path() / "gate_sweep.csv") == slurp(b.path() / "gate_sweep.csv"));
}

TEST_CASE("every capture failing validation stops the run with a marker") {
    TempDir dir("runfail");
    auto cfg = tiny(dir.path());
    cfg.cohort.identity_count = 1;
    cfg.validator.sharpness_min = 1e12;
    const auto res = run_pipeline(cfg);
    CHECK_FALSE(res.ok);
    CHECK(res.stage == "encode");
    CHECK(std::filesystem::exists(dir.path() / "FAILED"));
    const auto s = summary_from_json(slurp(dir.path() / "summary.json"));
    CHECK_FALSE(s.complete);
    CHECK(s.failed_stage == "encode");
    std::size_t generated = 0, failed = 0;
    for (const auto& c : s.captures) {
        generated += c.generated;
        failed += c.failed;
        if (c.failed) CHECK(c.reasons.count("TooBlurry") == 1);
    }
    CHECK(generated == 12);
    CHECK(failed == generated);
}

}  // TEST_SUITE
