#include <bit>

#include "irisgate/hamming_kernels.hpp"

namespace irisgate::kernels {

BitCounts masked_xor_scalar(const std::uint64_t* a_bits, const std::uint64_t* a_mask, const std::uint64_t* b_bits,
                            const std::uint64_t* b_mask, std::size_t words) {
    BitCounts c;
    for (std::size_t i = 0; i < words; ++i) {
        const std::uint64_t m = a_mask[i] & b_mask[i];
        c.overlap += static_cast<std::uint64_t>(std::popcount(m));
        c.disagree += static_cast<std::uint64_t>(std::popcount((a_bits[i] ^ b_bits[i]) & m));
    }
    return c;
}

}  // namespace irisgate::kernels
