#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace irisgate::kernels {

struct BitCounts {
    std::uint64_t disagree = 0;  // popcount((a ^ b) & ma & mb)
    std::uint64_t overlap = 0;   // popcount(ma & mb)

    friend bool operator==(const BitCounts&, const BitCounts&) = default;
};

using MaskedXorFn = BitCounts (*)(const std::uint64_t* a_bits, const std::uint64_t* a_mask,
                                  const std::uint64_t* b_bits, const std::uint64_t* b_mask, std::size_t words);

/// Reference implementation: one 64-bit word at a time with std::popcount.
BitCounts masked_xor_scalar(const std::uint64_t* a_bits, const std::uint64_t* a_mask, const std::uint64_t* b_bits,
                            const std::uint64_t* b_mask, std::size_t words);

#if defined(IRISGATE_HAVE_AVX2)
/// 256-bit lanes, nibble-LUT popcount (vpshufb) accumulated with vpsadbw.
BitCounts masked_xor_avx2(const std::uint64_t* a_bits, const std::uint64_t* a_mask, const std::uint64_t* b_bits,
                          const std::uint64_t* b_mask, std::size_t words);
#endif

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend b);

/// True when the backend is compiled in and the CPU supports it.
bool available(Backend b);

/// Backend chosen at first use: AVX2 when available, unless the
/// IRISGATE_KERNEL environment variable is set to "scalar".
Backend active();

/// Overrides the active backend; throws InvalidInput if unavailable.
void select(Backend b);

MaskedXorFn function(Backend b);

inline BitCounts masked_xor(const std::uint64_t* a_bits, const std::uint64_t* a_mask, const std::uint64_t* b_bits,
                            const std::uint64_t* b_mask, std::size_t words) {
    return function(active())(a_bits, a_mask, b_bits, b_mask, words);
}

}  // namespace irisgate::kernels
