#include <doctest.h>

#include <cmath>
#include <numbers>

#include "irisgate/iris_encoding.hpp"
#include "irisgate/matching_kernel.hpp"
#include "irisgate/stats.hpp"
#include "irisgate/synth_eye.hpp"
#include "support.hpp"

using namespace irisgate;
using namespace irisgate::encoding;

namespace {

synth::Rendered eye(const synth::IrisIdentity& id, double pupil_frac, double lid_height = 1e4) {
    synth::CaptureParams p;
    p.width = 400;
    p.height = 300;
    p.pupil_radius = pupil_frac * id.iris_radius;
    p.upper_lid_height = lid_height;
    return synth::render_capture(id, p);
}

synth::IrisIdentity ident(std::uint64_t seed) {
    auto id = synth::generate_identity(seed);
    id.iris_radius = 90.0;
    return id;
}

/// Identity texture sampled directly on the polar grid, every cell valid.
PolarIris texture_grid(std::uint64_t seed, int radial = 16, int angular = 200) {
    const auto id = synth::generate_identity(seed);
    PolarIris p(radial, angular);
    for (int i = 0; i < radial; ++i)
        for (int j = 0; j < angular; ++j) {
            p.intensities[p.index(i, j)] = 128.0 + 60.0 * id.texture.sample((j + 0.5) / angular, (i + 0.5) / radial);
            p.valid[p.index(i, j)] = 1;
        }
    return p;
}

}  // namespace

TEST_SUITE("iris_encoding") {

TEST_CASE("fully visible annulus gives an all-valid polar grid") {
    const auto r = eye(ident(1), 0.35);
    const auto polar = normalize(r.image, r.masks, 16, 200);
    CHECK(polar.valid_fraction() == 1.0);
}

TEST_CASE("upper half occluded: top columns invalid, bottom valid") {
    const auto r = eye(ident(2), 0.35, 0.0);
    const auto polar = normalize(r.image, r.masks, 16, 200);
    // Columns 0..99 point downward (rows grow downward), 100..199 upward.
    for (int i = 0; i < 16; ++i) {
        for (int j = 3; j <= 97; ++j) CHECK(polar.is_valid(i, j));
        for (int j = 103; j <= 197; ++j) CHECK_FALSE(polar.is_valid(i, j));
    }
}

TEST_CASE("rubber-sheet invariance across dilation") {
    const auto id = ident(3);
    const auto a = eye(id, 0.3), b = eye(id, 0.6);
    const auto pa = normalize(a.image, a.masks, 16, 200);
    const auto pb = normalize(b.image, b.masks, 16, 200);
    std::vector<double> x, y;
    for (std::size_t k = 0; k < pa.intensities.size(); ++k)
        if (pa.valid[k] && pb.valid[k]) {
            x.push_back(pa.intensities[k]);
            y.push_back(pb.intensities[k]);
        }
    REQUIRE(x.size() > 1000);
    CHECK(stats::pearson_r(x, y) > 0.9);
}

TEST_CASE("normalize needs derivable geometry") {
    const EyeImage img(50, 50, 0);
    const SegmentationMasks m{Mask(50, 50), Mask(50, 50), Mask(50, 50), Mask(50, 50)};
    CHECK_THROWS_AS(normalize(img, m, 16, 200), Error);
}

TEST_CASE("encode is deterministic") {
    const auto polar = texture_grid(5);
    const auto a = encode(polar), b = encode(polar);
    CHECK(a.bits == b.bits);
    CHECK(a.mask_bits == b.mask_bits);
    CHECK(a.radial_code == 8);
    CHECK(a.angular_res == 200);
}

TEST_CASE("rotation equivariance including the half-turn") {
    auto polar = texture_grid(6);
    Rng rng(1);
    for (int k = 0; k < 40; ++k) polar.valid[rng.below(polar.valid.size())] = 0;
    const auto base = encode(polar);
    for (int s : {100, 1, -1, 7, -37, 199}) {
        const auto lhs = encode(rotate_angular(polar, s));
        const auto rhs = rotate_angular(base, s);
        CHECK(lhs.bits == rhs.bits);
        CHECK(lhs.mask_bits == rhs.mask_bits);
    }
}

TEST_CASE("constant intensity masks every cell") {
    PolarIris p(16, 200);
    std::fill(p.intensities.begin(), p.intensities.end(), 99.0);
    std::fill(p.valid.begin(), p.valid.end(), 1);
    CHECK(code_length(encode(p)) == 0);
}

TEST_CASE("all-invalid grid is an EmptyCode error") {
    PolarIris p(16, 200);
    try {
        encode(p);
        FAIL("expected EmptyCode");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyCode);
    }
}

TEST_CASE("code_length examples") {
    GaborParams full;
    full.radial_pool = 1;
    CHECK(code_length(encode(texture_grid(7), full)) == 6400);
    CHECK(code_length(encode(texture_grid(7))) == 3200);
    CHECK(code_length(IrisCode(8, 200)) == 0);
}

TEST_CASE("half-occluded capture keeps about half the code") {
    const auto id = ident(8);
    const auto open = eye(id, 0.35), half = eye(id, 0.35, 0.0);
    const double full = static_cast<double>(code_length(encode(normalize(open.image, open.masks, 16, 200))));
    const double part = static_cast<double>(code_length(encode(normalize(half.image, half.masks, 16, 200))));
    REQUIRE(full > 0);
    CHECK(std::fabs(part / full - 0.5) <= 0.10);
}

TEST_CASE("mask soundness: windows touching invalid samples are masked") {
    auto polar = texture_grid(9);
    Rng rng(2);
    for (int k = 0; k < 60; ++k) polar.valid[rng.below(polar.valid.size())] = 0;
    const GaborParams gp;
    const auto code = encode(polar, gp);
    const int W = gp.window();
    CHECK(W == 9);
    for (int row = 0; row < code.radial_code; ++row)
        for (int j = 0; j < code.angular_res; ++j) {
            bool touched = false;
            for (int p = 0; p < gp.radial_pool; ++p)
                for (int t = -W; t <= W; ++t)
                    touched = touched || !polar.is_valid(row * gp.radial_pool + p, ((j + t) % 200 + 200) % 200);
            if (touched) {
                CHECK_FALSE(code.mask_bits[code.index(0, row, j)]);
                CHECK_FALSE(code.mask_bits[code.index(1, row, j)]);
            }
        }
}

TEST_CASE("independent identities give unrotated HD near one half") {
    std::vector<matching::PackedIrisCode> codes;
    for (std::uint64_t s = 0; s < 200; ++s) codes.push_back(matching::pack(encode(texture_grid(1000 + s))));
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < codes.size(); k += 2) sum += matching::fractional_hd(codes[k], codes[k + 1]).hd;
    const double mean = sum / 100.0;
    CHECK(mean >= 0.48);
    CHECK(mean <= 0.52);
}

TEST_CASE("code file round trip and layout") {
    testsupport::TempDir dir("ircd");
    Rng rng(4);
    const auto code = testsupport::random_code(rng, 8, 200, 0.7);
    write_code(dir.path() / "c.ircd", code);
    const auto back = read_code(dir.path() / "c.ircd");
    CHECK(back.bits == code.bits);
    CHECK(back.mask_bits == code.mask_bits);
    const auto bytes = serialize_code(code);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "IRCD");
    CHECK(bytes[4] == kCodeFormatVersion);
    CHECK(bytes.size() == 13 + 2 * 400);
    auto bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(deserialize_code(bad), Error);
    bad = bytes;
    bad.resize(100);
    CHECK_THROWS_AS(deserialize_code(bad), Error);
}

TEST_CASE("Gabor parameter checks") {
    GaborParams gp;
    CHECK_NOTHROW(gp.check());
    gp.radial_pool = 3;
    CHECK_THROWS_AS(gp.check(), Error);
    gp = GaborParams{};
    gp.sigma = 0.0;
    CHECK_THROWS_AS(gp.check(), Error);
}

}  // TEST_SUITE
