#include <doctest.h>

#include <bit>
#include <cmath>

#include "irisgate/hamming_kernels.hpp"
#include "irisgate/matching_kernel.hpp"
#include "irisgate/parallel.hpp"
#include "support.hpp"

using namespace irisgate;
using namespace irisgate::matching;
using testsupport::naive_hd;
using testsupport::random_code;

TEST_SUITE("matching_kernel") {

TEST_CASE("pack/unpack round trip") {
    Rng rng(1);
    for (int k = 0; k < 1000; ++k) {
        const int radial = 1 + static_cast<int>(rng.below(8));
        const int angular = 20 + static_cast<int>(rng.below(300));
        const auto code = random_code(rng, radial, angular, 0.8);
        const auto back = unpack(pack(code));
        REQUIRE(back.bits == code.bits);
        REQUIRE(back.mask_bits == code.mask_bits);
    }
}

TEST_CASE("alternating bits pack to 0xAAAA words") {
    encoding::IrisCode c(1, 128);
    for (std::size_t i = 0; i < c.size(); ++i) {
        c.bits[i] = i % 2;
        c.mask_bits[i] = 1;
    }
    const auto p = pack(c);
    CHECK(p.words_per_row == 2);
    for (auto w : p.words) CHECK(w == 0xAAAAAAAAAAAAAAAAull);
    for (auto w : p.mask_words) CHECK(w == ~0ull);
}

TEST_CASE("padding bits are zero") {
    Rng rng(2);
    auto c = random_code(rng, 8, 200);
    const auto p = pack(c);
    CHECK(p.words_per_row == 4);
    for (int row = 0; row < p.rows(); ++row) {
        const auto last = static_cast<std::size_t>(row) * p.words_per_row + 3;
        CHECK((p.words[last] >> 8) == 0);
        CHECK((p.mask_words[last] >> 8) == 0);
    }
    const auto r = rotate(p, 5);
    for (int row = 0; row < r.rows(); ++row) CHECK((r.mask_words[static_cast<std::size_t>(row) * 4 + 3] >> 8) == 0);
}

TEST_CASE("HD of a code with itself and its complement") {
    Rng rng(3);
    const auto a = random_code(rng, 8, 200);
    auto b = a;
    for (auto& x : b.bits) x ^= 1;
    CHECK(fractional_hd(pack(a), pack(a)).hd == 0.0);
    CHECK(fractional_hd(pack(a), pack(b)).hd == 1.0);
    CHECK(fractional_hd(pack(a), pack(b)).overlap_bits == 3200);
    const auto self = rotation_min_hd(pack(a), pack(a));
    CHECK(self.hd == 0.0);
    CHECK(self.shift == 0);
}

TEST_CASE("packed HD equals the per-bit oracle exactly") {
    Rng rng(4);
    for (int k = 0; k < 1000; ++k) {
        const auto a = random_code(rng, 8, 200, rng.uniform(0.3, 1.0));
        const auto b = random_code(rng, 8, 200, rng.uniform(0.3, 1.0));
        const auto pa = pack(a), pb = pack(b);
        const auto r = fractional_hd(pa, pb);
        const auto o = naive_hd(a, b);
        REQUIRE(r.overlap_bits == o.overlap);
        REQUIRE(r.hd == o.hd());
        const int s = static_cast<int>(rng.below(17)) - 8;
        const auto rs = fractional_hd(pa, rotate(pb, s));
        const auto os = naive_hd(a, b, s);
        REQUIRE(rs.overlap_bits == os.overlap);
        REQUIRE(rs.hd == os.hd());
    }
}

TEST_CASE("random full-mask codes average one half at shift zero") {
    Rng rng(5);
    double sum = 0.0;
    for (int k = 0; k < 1000; ++k)
        sum += fractional_hd(pack(random_code(rng, 8, 200)), pack(random_code(rng, 8, 200))).hd;
    CHECK(std::fabs(sum / 1000.0 - 0.5) <= 0.01);
}

TEST_CASE("rotation sign convention") {
    Rng rng(6);
    const auto a = random_code(rng, 8, 200);
    const auto pa = pack(a);
    const auto b = pack(encoding::rotate_angular(a, 3));
    CHECK(b == rotate(pa, 3));
    const auto r = rotation_min_hd(pa, b);
    CHECK(r.hd == 0.0);
    CHECK(r.shift == -3);
    const auto back = rotation_min_hd(b, pa);
    CHECK(back.shift == 3);
}

TEST_CASE("ties prefer the smaller shift, then the negative one") {
    encoding::IrisCode a(1, 64);
    std::fill(a.mask_bits.begin(), a.mask_bits.end(), 1);
    // Period-2 pattern: shifts of even parity all give HD 0.
    for (std::size_t i = 0; i < a.size(); ++i) a.bits[i] = (i % 64) % 2;
    const auto pa = pack(a);
    auto r = rotation_min_hd(pa, pa, {.max_shift = 4, .min_overlap = 1});
    CHECK(r.shift == 0);
    const auto b = pack(encoding::rotate_angular(a, 1));
    r = rotation_min_hd(pa, b, {.max_shift = 4, .min_overlap = 1});
    CHECK(r.hd == 0.0);
    CHECK(r.shift == -1);
}

TEST_CASE("rotation minimisation never exceeds shift zero and is symmetric") {
    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        const auto a = pack(random_code(rng, 8, 200, 0.8));
        const auto b = pack(random_code(rng, 8, 200, 0.8));
        const auto ab = rotation_min_hd(a, b), ba = rotation_min_hd(b, a);
        CHECK(ab.hd <= fractional_hd(a, b).hd);
        CHECK(ab.hd == ba.hd);
        CHECK(ab.shift == -ba.shift);
    }
}

TEST_CASE("masking extra cells leaves HD over the remaining overlap unchanged") {
    Rng rng(8);
    const auto a = random_code(rng, 8, 200, 0.9);
    const auto b = random_code(rng, 8, 200, 0.9);
    auto a2 = a;
    for (int k = 0; k < 300; ++k) a2.mask_bits[rng.below(a2.size())] = 0;
    // Oracle restricted to the reduced overlap.
    auto b2 = b;
    for (std::size_t i = 0; i < b2.size(); ++i) b2.mask_bits[i] = b.mask_bits[i] && a2.mask_bits[i];
    const auto r1 = fractional_hd(pack(a2), pack(b));
    const auto r2 = fractional_hd(pack(a), pack(b2));
    CHECK(r1.hd == r2.hd);
    CHECK(r1.overlap_bits == r2.overlap_bits);
}

TEST_CASE("min_overlap flags unreliable results") {
    Rng rng(9);
    const auto a = random_code(rng, 8, 200, 0.2);
    const auto b = random_code(rng, 8, 200, 0.2);
    const auto r = fractional_hd(pack(a), pack(b), 1024);
    CHECK(r.overlap_bits < 1024);
    CHECK(r.unreliable);
    CHECK(std::isfinite(r.hd));
    encoding::IrisCode none(8, 200);
    const auto z = fractional_hd(pack(none), pack(none));
    CHECK(z.unreliable);
    CHECK(std::isnan(z.hd));
}

TEST_CASE("batch_match equals sequential rotation_min_hd") {
    Rng rng(10);
    std::vector<PackedIrisCode> codes;
    for (int k = 0; k < 200; ++k) codes.push_back(pack(random_code(rng, 8, 200, 0.9)));
    std::vector<CodePair> pairs;
    for (int k = 0; k < 10000; ++k) pairs.emplace_back(rng.below(200), rng.below(200));
    CHECK(batch_match(codes, std::span<const CodePair>{}).empty());
    const auto one = batch_match(codes, std::span<const CodePair>(pairs.data(), 1));
    REQUIRE(one.size() == 1);
    CHECK(one[0] == rotation_min_hd(codes[pairs[0].first], codes[pairs[0].second]));
    for (unsigned workers : {1u, 3u}) {
        set_worker_count(workers);
        const auto out = batch_match(codes, pairs);
        REQUIRE(out.size() == pairs.size());
        bool same = true;
        for (std::size_t k = 0; k < pairs.size(); ++k)
            same = same && out[k] == rotation_min_hd(codes[pairs[k].first], codes[pairs[k].second]);
        CHECK(same);
    }
    set_worker_count(0);
}

TEST_CASE("SIMD kernel matches the scalar reference") {
    Rng rng(11);
    const bool have_avx2 = kernels::available(kernels::Backend::Avx2);
    MESSAGE("active kernel: " << kernels::to_string(kernels::active()) << ", avx2 available: " << have_avx2);
    for (std::size_t words : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 13u, 32u, 33u, 64u, 257u}) {
        std::vector<std::uint64_t> a(words), ma(words), b(words), mb(words);
        for (int trial = 0; trial < 50; ++trial) {
            for (std::size_t i = 0; i < words; ++i) {
                a[i] = rng.next_u64();
                b[i] = rng.next_u64();
                ma[i] = trial % 5 == 0 ? ~0ull : rng.next_u64();
                mb[i] = trial % 7 == 0 ? ~0ull : rng.next_u64();
            }
            const auto ref = kernels::masked_xor_scalar(a.data(), ma.data(), b.data(), mb.data(), words);
            std::uint64_t dis = 0, ov = 0;
            for (std::size_t i = 0; i < words; ++i) {
                dis += static_cast<std::uint64_t>(std::popcount((a[i] ^ b[i]) & ma[i] & mb[i]));
                ov += static_cast<std::uint64_t>(std::popcount(ma[i] & mb[i]));
            }
            REQUIRE(ref.disagree == dis);
            REQUIRE(ref.overlap == ov);
            REQUIRE(kernels::masked_xor(a.data(), ma.data(), b.data(), mb.data(), words) == ref);
            if (have_avx2)
                REQUIRE(kernels::function(kernels::Backend::Avx2)(a.data(), ma.data(), b.data(), mb.data(), words) ==
                        ref);
        }
    }
}

TEST_CASE("match results are identical under either backend") {
    if (!kernels::available(kernels::Backend::Avx2)) return;
    Rng rng(12);
    std::vector<PackedIrisCode> codes;
    for (int k = 0; k < 60; ++k) codes.push_back(pack(random_code(rng, 8, 200, 0.85)));
    std::vector<CodePair> pairs;
    for (std::size_t i = 0; i < codes.size(); ++i)
        for (std::size_t j = i + 1; j < codes.size(); ++j) pairs.emplace_back(i, j);
    const auto before = kernels::active();
    kernels::select(kernels::Backend::Scalar);
    const auto scalar = batch_match(codes, pairs);
    kernels::select(kernels::Backend::Avx2);
    const auto simd = batch_match(codes, pairs);
    kernels::select(before);
    CHECK(scalar == simd);
}

TEST_CASE("dimension mismatch is rejected") {
    Rng rng(13);
    const auto a = pack(random_code(rng, 8, 200));
    const auto b = pack(random_code(rng, 8, 100));
    CHECK_THROWS_AS(fractional_hd(a, b), Error);
    MatchParams bad;
    bad.max_shift = 100;
    CHECK_THROWS_AS(rotation_min_hd(a, a, bad), Error);
}

}  // TEST_SUITE
