#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "irisgate/quality_metrics.hpp"
#include "irisgate/stats.hpp"
#include "irisgate/synth_eye.hpp"
#include "support.hpp"

using namespace irisgate;
using testsupport::TempDir;

namespace {

synth::IrisIdentity fixed_identity(double radius = 80.0) {
    auto id = synth::generate_identity(11);
    id.iris_radius = radius;
    return id;
}

synth::CaptureParams open_eye(double pupil_radius) {
    synth::CaptureParams p;
    p.width = 400;
    p.height = 301;
    p.pupil_radius = pupil_radius;
    return p;
}

}  // namespace

TEST_SUITE("synth_eye") {

TEST_CASE("identity generation is deterministic") {
    const auto a = synth::generate_identity(0);
    const auto b = synth::generate_identity(0);
    CHECK(a.texture == b.texture);
    CHECK(a.iris_radius == b.iris_radius);
    CHECK(a.identity_id == b.identity_id);
}

TEST_CASE("textures of different seeds are uncorrelated") {
    const auto a = synth::generate_identity(0);
    const auto b = synth::generate_identity(1);
    std::vector<double> x, y;
    REQUIRE(a.texture.octaves().size() == b.texture.octaves().size());
    for (std::size_t o = 0; o < a.texture.octaves().size(); ++o) {
        const auto& la = a.texture.octaves()[o].lattice;
        const auto& lb = b.texture.octaves()[o].lattice;
        REQUIRE(la.size() == lb.size());
        x.insert(x.end(), la.begin(), la.end());
        y.insert(y.end(), lb.begin(), lb.end());
    }
    CHECK(std::fabs(stats::pearson_r(x, y)) < 0.1);
}

TEST_CASE("texture is periodic in angle") {
    const auto a = synth::generate_identity(4);
    for (double rho : {0.0, 0.3, 1.0}) CHECK(a.texture.sample(0.0, rho) == doctest::Approx(a.texture.sample(1.0, rho)));
}

TEST_CASE("50 seeds give 50 distinct identity ids") {
    std::set<std::string> ids;
    for (std::uint64_t s = 0; s < 50; ++s) ids.insert(synth::generate_identity(s).identity_id);
    CHECK(ids.size() == 50);
}

TEST_CASE("open-eye iris mask area matches the annulus area") {
    const auto id = fixed_identity();
    const double R = id.iris_radius, p = 0.3 * R;
    const auto r = synth::render_capture(id, open_eye(p));
    const double expected = std::numbers::pi * (R * R - p * p);
    CHECK(static_cast<double>(r.masks.iris.count()) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("lid chord through the pupil centre gives MRD1 of zero") {
    const auto id = fixed_identity();
    auto p = open_eye(25.0);
    p.upper_lid_height = 0.0;
    const auto r = synth::render_capture(id, p);
    CHECK(metrics::mrd(r.masks, metrics::MrdKind::Mrd1) == doctest::Approx(0.0));
}

TEST_CASE("configured lid height is recovered as MRD1 within one pixel") {
    const auto id = fixed_identity();
    for (double h : {10.0, 33.3, 57.8, -12.5}) {
        auto p = open_eye(20.0);
        p.upper_lid_height = h;
        const auto r = synth::render_capture(id, p);
        CHECK(std::fabs(metrics::mrd(r.masks, metrics::MrdKind::Mrd1) - h) <= 1.0);
    }
}

TEST_CASE("mask and geometry invariants") {
    const auto id = fixed_identity();
    auto p = open_eye(30.0);
    p.upper_lid_height = 40.0;
    p.eyelash_count = 15;
    p.eyelash_length = 30.0;
    p.gaze_dx = 3.3;
    p.gaze_dy = -2.1;
    const auto r = synth::render_capture(id, p);
    const double cx = 0.5 * (p.width - 1) + p.gaze_dx, cy = 0.5 * (p.height - 1) + p.gaze_dy;
    bool pupil_inside = true;
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
            if (r.masks.pupil.at(x, y) && std::hypot(x - cx, y - cy) > p.pupil_radius) pupil_inside = false;
    CHECK(pupil_inside);
    CHECK(mask_and(r.masks.iris, r.masks.pupil).count() == 0);
    CHECK(mask_and_not(r.masks.iris, r.masks.eyeball).count() == 0);
    CHECK(r.masks.same_dims());
}

TEST_CASE("raising lid coverage strictly decreases VIA") {
    const auto id = fixed_identity();
    double prev = 1e18;
    for (double h = 90.0; h >= -30.0; h -= 10.0) {
        auto p = open_eye(25.0);
        p.upper_lid_height = h;
        const double via = metrics::visible_iris_area(synth::render_capture(id, p).masks);
        if (h < 80.0) CHECK(via < prev);
        prev = via;
    }
}

TEST_CASE("nonlinear mode with k = 0 equals linear mode") {
    const auto id = fixed_identity();
    auto lin = open_eye(30.0);
    lin.blur_sigma = 0.8;
    lin.noise_sigma = 3.0;
    lin.noise_seed = 99;
    auto nl = lin;
    nl.deformation = synth::DeformationMode::Nonlinear;
    nl.deformation_k = 0.0;
    const auto a = synth::render_capture(id, lin);
    const auto b = synth::render_capture(id, nl);
    CHECK(a.image.pixels == b.image.pixels);
    CHECK(a.masks.iris == b.masks.iris);
    nl.deformation_k = 0.3;
    CHECK(synth::render_capture(id, nl).image.pixels != a.image.pixels);
}

TEST_CASE("blur lowers sharpness") {
    const auto id = fixed_identity();
    auto p = open_eye(30.0);
    const double sharp = metrics::sharpness(synth::render_capture(id, p).image);
    p.blur_sigma = 1.5;
    CHECK(metrics::sharpness(synth::render_capture(id, p).image) < sharp);
}

TEST_CASE("capture parameter checks") {
    synth::CaptureParams p;
    p.pupil_radius = 50.0;
    CHECK_THROWS_AS(p.check(40.0), Error);
    p.pupil_radius = 10.0;
    p.blur_sigma = -1.0;
    CHECK_THROWS_AS(p.check(40.0), Error);
    p.blur_sigma = 0.0;
    CHECK_NOTHROW(p.check(40.0));
}

TEST_CASE("a fully closed lid still renders with an empty iris mask") {
    const auto id = fixed_identity();
    auto p = open_eye(25.0);
    p.upper_lid_height = -200.0;
    const auto r = synth::render_capture(id, p);
    CHECK(r.masks.iris.count() == 0);
    CHECK(r.image.pixels.size() == static_cast<std::size_t>(p.width) * p.height);
}

TEST_CASE("one identity gives twelve captures") {
    synth::CohortConfig cfg;
    cfg.identity_count = 1;
    const auto caps = synth::render_cohort(cfg);
    CHECK(caps.size() == 12);
    std::set<std::string> ids;
    for (const auto& c : caps) ids.insert(c.record.capture_id);
    CHECK(ids.size() == 12);
}

TEST_CASE("dilated and undilated PIR groups separate") {
    synth::CohortConfig cfg;
    cfg.identity_count = 3;
    cfg.pir_dilated = {0.55, 0.8};
    cfg.pir_undilated = {0.1, 0.45};
    std::vector<double> dil, undil;
    for (const auto& c : synth::render_cohort(cfg)) {
        const double pir = metrics::pupil_iris_ratio(*c.record.masks);
        (c.record.dilation_state == DilationState::Dilated ? dil : undil).push_back(pir);
        CHECK(pir == doctest::Approx(c.pir).epsilon(0.05));
    }
    CHECK(stats::quantile(dil, 0.5) > stats::quantile(undil, 0.5));
    CHECK(*std::min_element(dil.begin(), dil.end()) > *std::max_element(undil.begin(), undil.end()));
}

TEST_CASE("fixed master seed gives a byte-identical dataset") {
    synth::CohortConfig cfg;
    cfg.identity_count = 1;
    cfg.master_seed = 42;
    TempDir a("synA"), b("synB");
    synth::generate_cohort(cfg, a.path());
    synth::generate_cohort(cfg, b.path());
    std::size_t files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
        if (!e.is_regular_file()) continue;
        const auto rel = std::filesystem::relative(e.path(), a.path());
        CHECK(testsupport::slurp(e.path()) == testsupport::slurp(b.path() / rel));
        ++files;
    }
    CHECK(files == 2 + 2 * 12);  // manifest, ground truth, images, masks
    const auto m = load_manifest(a.path() / "manifest.csv");
    CHECK(std::is_sorted(m.records.begin(), m.records.end(),
                         [](const auto& x, const auto& y) { return x.capture_id < y.capture_id; }));
}

TEST_CASE("cohort config JSON round trip") {
    synth::CohortConfig cfg;
    cfg.identity_count = 7;
    cfg.pir_dilated = {0.6, 0.65};
    cfg.deformation = synth::DeformationMode::Linear;
    cfg.lid_clutter_amplitude = 12.5;
    const auto back = synth::cohort_config_from_json(synth::cohort_config_to_json(cfg));
    CHECK(synth::cohort_config_to_json(back) == synth::cohort_config_to_json(cfg));
    CHECK(back.identity_count == 7);
    CHECK(back.pir_dilated.lo == 0.6);
    CHECK(back.deformation == synth::DeformationMode::Linear);
    CHECK_THROWS_AS(synth::cohort_config_from_json("{\"identity_count\": 0}"), Error);
}

}  // TEST_SUITE
