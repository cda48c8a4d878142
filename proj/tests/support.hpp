#pragma once
// Shared fixtures and brute-force oracles for the unit tests.

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "irisgate/core_model.hpp"
#include "irisgate/iris_encoding.hpp"
#include "irisgate/rng.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Scratch directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("irisgate_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

/// Filled disk of radius r (pixel centres within r of (cx, cy)).
inline irisgate::Mask disk(int w, int h, double cx, double cy, double r) {
    irisgate::Mask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (std::hypot(x - cx, y - cy) <= r) m.set(x, y);
    return m;
}

/// Random code with independent bits; mask bits set with probability `mask_p`.
inline irisgate::encoding::IrisCode random_code(irisgate::Rng& rng, int radial, int angular, double mask_p = 1.0) {
    irisgate::encoding::IrisCode c(radial, angular);
    for (std::size_t i = 0; i < c.size(); ++i) {
        c.bits[i] = rng.coin() ? 1 : 0;
        c.mask_bits[i] = rng.uniform() < mask_p ? 1 : 0;
    }
    return c;
}

struct NaiveHd {
    std::uint64_t disagree = 0;
    std::uint64_t overlap = 0;
    double hd() const { return static_cast<double>(disagree) / static_cast<double>(overlap); }
};

/// Per-bit loop over unpacked codes, b rotated by `shift` columns.
inline NaiveHd naive_hd(const irisgate::encoding::IrisCode& a, const irisgate::encoding::IrisCode& b, int shift = 0) {
    NaiveHd r;
    const int n = a.angular_res;
    for (int plane = 0; plane < 2; ++plane)
        for (int row = 0; row < a.radial_code; ++row)
            for (int col = 0; col < n; ++col) {
                const int src = ((col - shift) % n + n) % n;
                const std::size_t ia = a.index(plane, row, col);
                const std::size_t ib = b.index(plane, row, src);
                if (a.mask_bits[ia] && b.mask_bits[ib]) {
                    ++r.overlap;
                    if (a.bits[ia] != b.bits[ib]) ++r.disagree;
                }
            }
    return r;
}

/// Two-pass textbook Pearson correlation.
inline double pearson_two_pass(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// All-pairs maximum distance between set pixels.
inline double brute_diameter(const irisgate::Mask& m) {
    std::vector<std::pair<int, int>> pts;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) pts.emplace_back(x, y);
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            best = std::max(best, std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second));
    return best;
}

}  // namespace testsupport
