#include "irisgate/matching_kernel.hpp"

#include <cmath>
#include <limits>

#include "irisgate/hamming_kernels.hpp"
#include "irisgate/parallel.hpp"

namespace irisgate::matching {

namespace {

void check_same_dims(const PackedIrisCode& a, const PackedIrisCode& b) {
    if (a.radial_code != b.radial_code || a.angular_res != b.angular_res)
        throw Error(ErrorKind::InvalidInput, "match: code dimensions differ");
}

MatchResult make_result(kernels::BitCounts c, int shift, std::uint64_t min_overlap) {
    MatchResult r;
    r.shift = shift;
    r.overlap_bits = c.overlap;
    r.hd = c.overlap == 0 ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(c.disagree) / static_cast<double>(c.overlap);
    r.unreliable = c.overlap < min_overlap;
    return r;
}

std::uint64_t get_bit(const std::uint64_t* row, int j) { return (row[j >> 6] >> (j & 63)) & 1u; }

// Copies a row into `dbl` twice back to back (2n bits) so any rotation is a
// contiguous n-bit window starting at offset (n - shift) mod n.
void double_row(const std::uint64_t* row, int n, std::uint64_t* dbl, int dbl_words) {
    const int wpr = (n + 63) / 64;
    for (int k = 0; k < dbl_words; ++k) dbl[k] = 0;
    for (int k = 0; k < wpr; ++k) dbl[k] = row[k];
    const int off = n;
    const int word = off >> 6, bit = off & 63;
    for (int k = 0; k < wpr; ++k) {
        dbl[word + k] |= row[k] << bit;
        if (bit != 0) dbl[word + k + 1] |= row[k] >> (64 - bit);
    }
}

// Extracts n bits starting at bit offset `off` of `src`.
void extract_window(const std::uint64_t* src, int off, int n, std::uint64_t* out) {
    const int wpr = (n + 63) / 64;
    const int word = off >> 6, bit = off & 63;
    for (int k = 0; k < wpr; ++k) {
        std::uint64_t v = src[word + k] >> bit;
        if (bit != 0) v |= src[word + k + 1] << (64 - bit);
        out[k] = v;
    }
    if (const int tail = n & 63; tail != 0) out[wpr - 1] &= (std::uint64_t{1} << tail) - 1;
}

// Doubled rows for both planes of one code, reused across shifts.
struct DoubledCode {
    int rows = 0;
    int n = 0;
    int dbl_words = 0;
    std::vector<std::uint64_t> bits;
    std::vector<std::uint64_t> mask;

    explicit DoubledCode(const PackedIrisCode& c)
        : rows(c.rows()), n(c.angular_res), dbl_words((2 * c.angular_res + 63) / 64 + 1),
          bits(static_cast<std::size_t>(rows) * dbl_words), mask(static_cast<std::size_t>(rows) * dbl_words) {
        for (int r = 0; r < rows; ++r) {
            double_row(&c.words[static_cast<std::size_t>(r) * c.words_per_row], n, &bits[static_cast<std::size_t>(r) * dbl_words], dbl_words);
            double_row(&c.mask_words[static_cast<std::size_t>(r) * c.words_per_row], n, &mask[static_cast<std::size_t>(r) * dbl_words], dbl_words);
        }
    }

    void rotated(int shift, int wpr, std::uint64_t* out_bits, std::uint64_t* out_mask) const {
        const int off = ((-shift) % n + n) % n;
        for (int r = 0; r < rows; ++r) {
            extract_window(&bits[static_cast<std::size_t>(r) * dbl_words], off, n, out_bits + static_cast<std::size_t>(r) * wpr);
            extract_window(&mask[static_cast<std::size_t>(r) * dbl_words], off, n, out_mask + static_cast<std::size_t>(r) * wpr);
        }
    }
};

}  // namespace

PackedIrisCode pack(const encoding::IrisCode& code) {
    PackedIrisCode p;
    p.radial_code = code.radial_code;
    p.angular_res = code.angular_res;
    p.words_per_row = (code.angular_res + 63) / 64;
    const std::size_t n = static_cast<std::size_t>(p.rows()) * p.words_per_row;
    p.words.assign(n, 0);
    p.mask_words.assign(n, 0);
    for (int r = 0; r < p.rows(); ++r)
        for (int j = 0; j < code.angular_res; ++j) {
            const std::size_t src = static_cast<std::size_t>(r) * code.angular_res + j;
            const std::size_t w = static_cast<std::size_t>(r) * p.words_per_row + (j >> 6);
            const std::uint64_t bit = std::uint64_t{1} << (j & 63);
            if (code.bits[src]) p.words[w] |= bit;
            if (code.mask_bits[src]) p.mask_words[w] |= bit;
        }
    return p;
}

encoding::IrisCode unpack(const PackedIrisCode& p) {
    encoding::IrisCode code(p.radial_code, p.angular_res);
    code.params.angular_res = p.angular_res;
    code.params.radial_res = p.radial_code * code.params.radial_pool;
    for (int r = 0; r < p.rows(); ++r) {
        const std::uint64_t* bits = &p.words[static_cast<std::size_t>(r) * p.words_per_row];
        const std::uint64_t* mask = &p.mask_words[static_cast<std::size_t>(r) * p.words_per_row];
        for (int j = 0; j < p.angular_res; ++j) {
            const std::size_t dst = static_cast<std::size_t>(r) * p.angular_res + j;
            code.bits[dst] = static_cast<std::uint8_t>(get_bit(bits, j));
            code.mask_bits[dst] = static_cast<std::uint8_t>(get_bit(mask, j));
        }
    }
    return code;
}

PackedIrisCode rotate(const PackedIrisCode& code, int shift) {
    PackedIrisCode out = code;
    DoubledCode(code).rotated(shift, code.words_per_row, out.words.data(), out.mask_words.data());
    return out;
}

MatchResult fractional_hd(const PackedIrisCode& a, const PackedIrisCode& b, std::uint64_t min_overlap) {
    check_same_dims(a, b);
    const auto c = kernels::masked_xor(a.words.data(), a.mask_words.data(), b.words.data(), b.mask_words.data(),
                                       a.word_count());
    return make_result(c, 0, min_overlap);
}

MatchResult rotation_min_hd(const PackedIrisCode& a, const PackedIrisCode& b, const MatchParams& params) {
    check_same_dims(a, b);
    if (params.max_shift < 0 || 2 * params.max_shift >= a.angular_res)
        throw Error(ErrorKind::InvalidInput, "match: max_shift must be in [0, angular_res/2)");
    const auto fn = kernels::function(kernels::active());
    const DoubledCode db(b);
    std::vector<std::uint64_t> rb(b.word_count()), rm(b.word_count());

    MatchResult best;
    bool have = false;
    kernels::BitCounts best_counts;
    int best_shift = 0;
    // Visit 0, -1, +1, -2, +2, ...; a later shift must be strictly better.
    for (int step = 0; step <= 2 * params.max_shift; ++step) {
        const int mag = (step + 1) / 2;
        const int shift = (step % 2 == 1) ? -mag : mag;
        db.rotated(shift, b.words_per_row, rb.data(), rm.data());
        const auto c = fn(a.words.data(), a.mask_words.data(), rb.data(), rm.data(), a.word_count());
        if (c.overlap == 0) continue;
        // Exact comparison of disagree/overlap fractions via cross-multiplication.
        if (!have || c.disagree * best_counts.overlap < best_counts.disagree * c.overlap) {
            have = true;
            best_counts = c;
            best_shift = shift;
        }
    }
    if (!have) return make_result({0, 0}, 0, params.min_overlap);
    best = make_result(best_counts, best_shift, params.min_overlap);
    return best;
}

std::vector<MatchResult> batch_match(std::span<const PackedIrisCode> codes, std::span<const CodePair> pairs,
                                     const MatchParams& params) {
    std::vector<MatchResult> out(pairs.size());
    for (const auto& [i, j] : pairs)
        if (i >= codes.size() || j >= codes.size()) throw Error(ErrorKind::InvalidInput, "batch_match: index out of range");
    parallel_for(pairs.size(), [&](std::size_t k) {
        out[k] = rotation_min_hd(codes[pairs[k].first], codes[pairs[k].second], params);
    }, 256);
    return out;
}

}  // namespace irisgate::matching
