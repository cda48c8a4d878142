#include <doctest.h>

#include <cmath>

#include "irisgate/quality_gate.hpp"
#include "irisgate/rng.hpp"

using namespace irisgate;
using namespace irisgate::gate;
using eval::ComparisonPair;
using eval::Feature;

namespace {

struct Problem {
    std::vector<std::vector<double>> x;
    std::vector<std::uint8_t> y;
};

/// Noisy logistic data so the maximum-likelihood estimate is finite.
Problem random_problem(Rng& rng, std::size_t n, std::size_t d) {
    Problem p;
    std::vector<double> beta(d);
    for (auto& b : beta) b = rng.uniform(-1.5, 1.5);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(d);
        double eta = 0.3;
        for (std::size_t k = 0; k < d; ++k) {
            row[k] = rng.uniform(-3.0, 5.0) * (k + 1);
            eta += beta[k] * row[k] / (k + 1);
        }
        p.x.push_back(row);
        p.y.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0);
    }
    return p;
}

std::vector<double> coefficients(const LogisticModel& m) {
    std::vector<double> c = {m.intercept};
    c.insert(c.end(), m.weights.begin(), m.weights.end());
    return c;
}

void set_coefficients(LogisticModel& m, const std::vector<double>& c) {
    m.intercept = c[0];
    for (std::size_t k = 0; k < m.weights.size(); ++k) m.weights[k] = c[k + 1];
}

/// Probes whose genuine HD falls with VIA; PIR and MRD1 are noise.
std::vector<ComparisonPair> synthetic_pairs(std::uint64_t seed, int probes = 200, int impostors_per_probe = 10) {
    Rng rng(seed);
    std::vector<ComparisonPair> out;
    for (int q = 0; q < probes; ++q) {
        MetricSet m;
        m.via = rng.uniform(2000.0, 20000.0);
        m.pir = rng.uniform(0.2, 0.7);
        m.mrd1 = rng.uniform(-10.0, 60.0);
        const double quality = (m.via - 2000.0) / 18000.0;
        const std::string id = "P" + std::to_string(1000 + q);
        ComparisonPair g;
        g.probe_id = id;
        g.enrollment_id = "E" + std::to_string(q);
        g.genuine = true;
        g.hd = 0.42 - 0.25 * quality + 0.03 * rng.normal();
        g.probe_metrics = m;
        out.push_back(g);
        for (int k = 0; k < impostors_per_probe; ++k) {
            ComparisonPair i = g;
            i.genuine = false;
            i.enrollment_id = "X" + std::to_string(k);
            i.hd = 0.46 + 0.015 * rng.normal();
            out.push_back(i);
        }
    }
    return out;
}

GateConfig small_config() {
    GateConfig c;
    c.fmr_target = 0.01;
    c.resamples = 60;
    c.seed = 5;
    return c;
}

}  // namespace

TEST_SUITE("quality_gate") {

TEST_CASE("constant feature gets a zero coefficient") {
    Rng rng(1);
    auto p = random_problem(rng, 100, 1);
    for (auto& row : p.x) row.push_back(7.0);
    const auto m = fit_logistic(p.x, p.y);
    CHECK(m.converged);
    CHECK(std::fabs(m.weights[1]) < 1e-12);
}

TEST_CASE("intercept-only model recovers the log-odds of prevalence") {
    std::vector<std::vector<double>> x(40);
    std::vector<std::uint8_t> y(40, 0);
    for (int i = 0; i < 10; ++i) y[i] = 1;
    const auto m = fit_logistic(x, y);
    CHECK(m.intercept == doctest::Approx(std::log(10.0 / 30.0)).epsilon(1e-9));
    CHECK(m.predict(std::vector<double>{}) == doctest::Approx(0.25));
}

TEST_CASE("fit needs two samples of each class") {
    std::vector<std::vector<double>> x = {{1}, {2}, {3}, {4}};
    try {
        fit_logistic(x, {1, 0, 0, 0});
        FAIL("expected Degenerate");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Degenerate);
    }
    x[2][0] = std::nan("");
    CHECK_THROWS_AS(fit_logistic(x, {1, 1, 0, 0}), Error);
}

TEST_CASE("fitted coefficients are a stationary point and the gradient is exact") {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        const auto p = random_problem(rng, 200, 1 + rng.below(3));
        const auto m = fit_logistic(p.x, p.y);
        CHECK(m.converged);
        double gmax = 0.0;
        for (double g : penalized_gradient(m, p.x, p.y)) gmax = std::max(gmax, std::fabs(g));
        CHECK(gmax < 1e-6);

        // Central differences at a point away from the optimum.
        auto probe = m;
        auto c = coefficients(m);
        for (auto& v : c) v += rng.uniform(-0.5, 0.5);
        set_coefficients(probe, c);
        const auto grad = penalized_gradient(probe, p.x, p.y);
        const double h = 1e-5;
        for (std::size_t k = 0; k < c.size(); ++k) {
            auto up = c, dn = c;
            up[k] += h;
            dn[k] -= h;
            set_coefficients(probe, up);
            const double fu = penalized_log_likelihood(probe, p.x, p.y);
            set_coefficients(probe, dn);
            const double fd = penalized_log_likelihood(probe, p.x, p.y);
            CHECK(std::fabs((fu - fd) / (2 * h) - grad[k]) < 1e-4);
        }
    }
}

TEST_CASE("predictions are invariant to affine rescaling of the inputs") {
    Rng rng(3);
    const auto p = random_problem(rng, 150, 2);
    auto q = p;
    for (auto& row : q.x) {
        row[0] = 1000.0 * row[0] - 4.0;
        row[1] = 0.01 * row[1] + 3.0;
    }
    const auto a = fit_logistic(p.x, p.y), b = fit_logistic(q.x, q.y);
    for (std::size_t i = 0; i < p.x.size(); ++i) CHECK(std::fabs(a.predict(p.x[i]) - b.predict(q.x[i])) < 1e-8);
}

TEST_CASE("probe quality score averages over the probe's pairings") {
    LogisticModel m;
    m.feature_names = {"VIA"};
    m.weights = {1.0};
    m.mean = {0.0};
    m.scale = {1.0};
    const std::vector<Feature> f = {Feature::Via};
    ComparisonPair a, b, c;
    a.probe_id = b.probe_id = "p";
    a.probe_metrics.via = std::log(0.2 / 0.8);
    b.probe_metrics.via = std::log(0.8 / 0.2);
    c.probe_id = "single";
    c.probe_metrics.via = std::log(0.9 / 0.1);
    a.hd = b.hd = c.hd = 0.3;
    const std::vector<ComparisonPair> pairs = {a, b, c};
    const auto s = probe_quality_scores(m, pairs, f);
    CHECK(s.at("p") == doctest::Approx(0.5));
    CHECK(s.at("single") == doctest::Approx(0.9));
}

TEST_CASE("discard-rate parsing") {
    const auto r = parse_rates("0:0.07:0.01");
    REQUIRE(r.size() == 8);
    CHECK(r.back() == doctest::Approx(0.07));
    CHECK(parse_rates("0,0.05") == std::vector<double>{0.0, 0.05});
    CHECK_THROWS_AS(parse_rates("abc"), Error);
    CHECK_THROWS_AS(parse_rates("0:0.1:0"), Error);
}

TEST_CASE("model comparison on synthetic pairs") {
    const auto pairs = synthetic_pairs(11);
    const auto cfg = small_config();
    const auto res = model_comparison(pairs, cfg);
    REQUIRE(res.size() == 5);
    CHECK(res[0].model_name == "M0");
    CHECK(res[1].model_name == "M1_VIA");
    CHECK(res[4].model_name == "M3");

    SUBCASE("baseline rows do not depend on the discard rate") {
        for (const auto& row : res[0].rows) {
            CHECK(row.mean_fnmr == res[0].rows[0].mean_fnmr);
            CHECK(row.mean_fmr == res[0].rows[0].mean_fmr);
        }
        CHECK(res[0].coefficients.empty());
    }
    SUBCASE("rate zero reproduces the baseline for every model") {
        for (const auto& m : res) {
            CHECK(m.rows[0].mean_fnmr == res[0].rows[0].mean_fnmr);
            CHECK(m.rows[0].mean_fmr == res[0].rows[0].mean_fmr);
        }
    }
    SUBCASE("intervals contain the point estimates") {
        for (const auto& m : res)
            for (const auto& row : m.rows) {
                CHECK(row.fnmr_ci_low <= row.mean_fnmr);
                CHECK(row.mean_fnmr <= row.fnmr_ci_high);
                CHECK(row.fmr_ci_low <= row.mean_fmr);
                CHECK(row.mean_fmr <= row.fmr_ci_high);
            }
    }
    SUBCASE("gating on the informative feature lowers FNMR") {
        CHECK(res[1].rows.back().mean_fnmr < res[0].rows.back().mean_fnmr);
        REQUIRE(res[1].coefficients.size() == 2);
        CHECK(res[1].coefficients[1].name == "via");
        CHECK(res[1].coefficients[1].mean > 0.0);
        const double m1 = res[1].rows[5].mean_fnmr, m3 = res[4].rows[5].mean_fnmr;
        CHECK(std::fabs(m3 - m1) <= 0.2 * m1);
    }
}

TEST_CASE("gate sweep is deterministic for a fixed seed") {
    const auto pairs = synthetic_pairs(12, 80);
    auto cfg = small_config();
    cfg.resamples = 30;
    const std::vector<Feature> f = {Feature::Via, Feature::Pir};
    const auto a = gate_sweep(pairs, f, cfg), b = gate_sweep(pairs, f, cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].mean_fnmr == b.rows[k].mean_fnmr);
        CHECK(a.rows[k].fnmr_ci_high == b.rows[k].fnmr_ci_high);
        CHECK(a.rows[k].mean_threshold == b.rows[k].mean_threshold);
    }
    CHECK(a.coefficients[0].mean == b.coefficients[0].mean);
    CHECK(a.model_name == "M2");
    cfg.seed = 6;
    CHECK(gate_sweep(pairs, f, cfg).rows[3].mean_fnmr != a.rows[3].mean_fnmr);
}

TEST_CASE("fit once mode uses shared coefficients") {
    const auto pairs = synthetic_pairs(13, 80);
    auto cfg = small_config();
    cfg.refit_per_resample = false;
    const std::vector<Feature> f = {Feature::Via};
    const auto r = gate_sweep(pairs, f, cfg);
    REQUIRE(r.coefficients.size() == 2);
    CHECK(r.coefficients[1].sd < 1e-12);
    CHECK(r.rows.back().mean_fnmr <= r.rows.front().mean_fnmr);
}

TEST_CASE("uninformative labels fall back to id order") {
    auto pairs = synthetic_pairs(14, 40, 5);
    for (auto& p : pairs)
        if (p.genuine) p.hd = 0.05;  // every genuine pair accepted
    auto cfg = small_config();
    cfg.resamples = 10;
    const std::vector<Feature> f = {Feature::Via};
    const auto r = gate_sweep(pairs, f, cfg);
    CHECK(r.degenerate_fits == 10);
    CHECK(std::isnan(r.coefficients[0].mean));
    for (const auto& row : r.rows) CHECK(row.mean_fnmr == 0.0);
}

TEST_CASE("gate config and input checks") {
    GateConfig c;
    CHECK_NOTHROW(c.check());
    c.fmr_target = 0.0;
    CHECK_THROWS_AS(c.check(), Error);
    c = GateConfig{};
    c.discard_rates = {1.0};
    CHECK_THROWS_AS(c.check(), Error);
    const std::vector<ComparisonPair> none;
    const std::vector<Feature> f = {Feature::Via};
    CHECK_THROWS_AS(gate_sweep(none, f, GateConfig{}), Error);
    auto only_genuine = synthetic_pairs(15, 10, 0);
    CHECK_THROWS_AS(gate_sweep(only_genuine, f, small_config()), Error);
}

}  // TEST_SUITE
