#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "irisgate/iris_encoding.hpp"

namespace irisgate::matching {

/// Iris code packed one bit per cell into 64-bit words. Each of the
/// 2*radial_code rows starts on a word boundary (angular index fastest,
/// LSB first); padding bits past angular_res are zero in both planes.
struct PackedIrisCode {
    int radial_code = 0;
    int angular_res = 0;
    int words_per_row = 0;
    std::vector<std::uint64_t> words;
    std::vector<std::uint64_t> mask_words;

    int rows() const { return 2 * radial_code; }
    std::size_t word_count() const { return words.size(); }
    friend bool operator==(const PackedIrisCode&, const PackedIrisCode&) = default;
};

struct MatchParams {
    int max_shift = 8;
    std::uint64_t min_overlap = 1024;
};

struct MatchResult {
    double hd = 1.0;
    int shift = 0;
    std::uint64_t overlap_bits = 0;
    /// overlap_bits < min_overlap. With zero overlap hd is NaN.
    bool unreliable = false;

    friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

PackedIrisCode pack(const encoding::IrisCode& code);
encoding::IrisCode unpack(const PackedIrisCode& packed);

/// Circular angular rotation on packed words: out[j] = in[(j - shift) mod n].
PackedIrisCode rotate(const PackedIrisCode& code, int shift);

MatchResult fractional_hd(const PackedIrisCode& a, const PackedIrisCode& b, std::uint64_t min_overlap = 1024);

/// Minimum fractional HD over b rotated by every shift in [-max_shift, max_shift]
/// (masks rotate with the codes). `shift` is the rotation applied to b, so
/// b = rotate(a, +3) reports shift -3. Ties go to the smaller |shift|, then
/// to the negative shift. Shifts with zero overlap are skipped.
MatchResult rotation_min_hd(const PackedIrisCode& a, const PackedIrisCode& b, const MatchParams& params = {});

using CodePair = std::pair<std::size_t, std::size_t>;

/// rotation_min_hd over index pairs into `codes`, in input order. Runs on
/// the parallel_for pool; every result lands in its own slot.
std::vector<MatchResult> batch_match(std::span<const PackedIrisCode> codes, std::span<const CodePair> pairs,
                                     const MatchParams& params = {});

}  // namespace irisgate::matching
