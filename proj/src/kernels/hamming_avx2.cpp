#include <immintrin.h>

#include <bit>

#include "irisgate/hamming_kernels.hpp"

namespace irisgate::kernels {

namespace {

// Per-byte popcount via two 4-bit table lookups.
inline __m256i popcount_bytes(__m256i v) {
    const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                         0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low = _mm256_set1_epi8(0x0f);
    const __m256i lo = _mm256_and_si256(v, low);
    const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low);
    return _mm256_add_epi8(_mm256_shuffle_epi8(lut, lo), _mm256_shuffle_epi8(lut, hi));
}

inline std::uint64_t hsum_epi64(__m256i v) {
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

}  // namespace

BitCounts masked_xor_avx2(const std::uint64_t* a_bits, const std::uint64_t* a_mask, const std::uint64_t* b_bits,
                          const std::uint64_t* b_mask, std::size_t words) {
    const __m256i zero = _mm256_setzero_si256();
    __m256i acc_dis = zero, acc_ovl = zero;
    std::size_t i = 0;
    // Byte counters hold at most 8 per iteration; fold into 64-bit lanes
    // every iteration with vpsadbw so they never overflow.
    for (; i + 4 <= words; i += 4) {
        const __m256i ab = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a_bits + i));
        const __m256i am = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a_mask + i));
        const __m256i bb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b_bits + i));
        const __m256i bm = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b_mask + i));
        const __m256i m = _mm256_and_si256(am, bm);
        const __m256i d = _mm256_and_si256(_mm256_xor_si256(ab, bb), m);
        acc_ovl = _mm256_add_epi64(acc_ovl, _mm256_sad_epu8(popcount_bytes(m), zero));
        acc_dis = _mm256_add_epi64(acc_dis, _mm256_sad_epu8(popcount_bytes(d), zero));
    }
    BitCounts c{hsum_epi64(acc_dis), hsum_epi64(acc_ovl)};
    for (; i < words; ++i) {
        const std::uint64_t m = a_mask[i] & b_mask[i];
        c.overlap += static_cast<std::uint64_t>(std::popcount(m));
        c.disagree += static_cast<std::uint64_t>(std::popcount((a_bits[i] ^ b_bits[i]) & m));
    }
    return c;
}

}  // namespace irisgate::kernels
