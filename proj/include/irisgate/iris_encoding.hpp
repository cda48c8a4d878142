#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "irisgate/core_model.hpp"
#include "irisgate/quality_metrics.hpp"

namespace irisgate::encoding {

/// Iris annulus resampled onto a radial x angular grid. Row 0 is nearest
/// the pupil; column j lies at angle 2*pi*j/angular_res from the +x axis
/// (image coordinates, rows growing downward).
struct PolarIris {
    int radial_res = 0;
    int angular_res = 0;
    std::vector<double> intensities;
    std::vector<std::uint8_t> valid;

    PolarIris() = default;
    PolarIris(int radial, int angular)
        : radial_res(radial), angular_res(angular),
          intensities(static_cast<std::size_t>(radial) * angular, 0.0),
          valid(static_cast<std::size_t>(radial) * angular, 0) {}

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * angular_res + j; }
    double intensity(int i, int j) const { return intensities[index(i, j)]; }
    bool is_valid(int i, int j) const { return valid[index(i, j)] != 0; }
    double valid_fraction() const;
};

/// Single-scale angular Gabor filter bank.
struct GaborParams {
    int radial_res = 16;
    int angular_res = 200;
    double wavelength = 18.0;  // angular samples per cycle
    double sigma = 9.0;        // Gaussian envelope, angular samples
    int radial_pool = 2;       // polar rows averaged into one code row
    /// Filter taps span [-half_window, +half_window]; 0 means ceil(sigma).
    int half_window = 0;
    /// Cells with |response| <= floor_rel * stddev(valid intensities) are masked.
    double magnitude_floor_rel = 1e-3;

    int radial_code() const { return radial_res / radial_pool; }
    int window() const;
    void check() const;
};

/// Two phase bits per cell: plane 0 holds sign(Re), plane 1 sign(Im).
/// Layout: plane-major, then code row, then angular column.
struct IrisCode {
    int radial_code = 0;
    int angular_res = 0;
    std::vector<std::uint8_t> bits;
    std::vector<std::uint8_t> mask_bits;
    GaborParams params;

    IrisCode() = default;
    IrisCode(int radial, int angular)
        : radial_code(radial), angular_res(angular),
          bits(static_cast<std::size_t>(2) * radial * angular, 0),
          mask_bits(static_cast<std::size_t>(2) * radial * angular, 0) {}

    std::size_t index(int plane, int row, int col) const {
        return (static_cast<std::size_t>(plane) * radial_code + row) * angular_res + col;
    }
    std::size_t size() const { return bits.size(); }
};

/// Rubber-sheet resampling between the fitted pupil and iris circles at
/// normalized radii (i + 0.5) / radial_res, bilinear intensities. A sample
/// is valid when its nearest pixel is iris, not pupil, inside the eyeball
/// and not eyelash.
PolarIris normalize(const EyeImage& image, const SegmentationMasks& masks, int radial_res, int angular_res);
PolarIris normalize(const EyeImage& image, const SegmentationMasks& masks, const metrics::IrisGeometry& geometry,
                    int radial_res, int angular_res);

/// Throws EmptyCode when the polar grid has no valid sample.
IrisCode encode(const PolarIris& polar, const GaborParams& params = {});

std::size_t code_length(const IrisCode& code);

/// out[j] = in[(j - shift) mod angular_res] for every row.
PolarIris rotate_angular(const PolarIris& polar, int shift);
IrisCode rotate_angular(const IrisCode& code, int shift);

/// Code file layout (integers little-endian):
///   "IRCD", version byte (1), radial_code (uint32), angular_res (uint32),
///   code plane then mask plane, each 2*radial_code*angular_res bits,
///   row-major in IrisCode order, LSB-first within bytes.
inline constexpr std::uint8_t kCodeFormatVersion = 1;
std::vector<std::uint8_t> serialize_code(const IrisCode& code);
IrisCode deserialize_code(const std::vector<std::uint8_t>& bytes);
void write_code(const std::filesystem::path& path, const IrisCode& code);
IrisCode read_code(const std::filesystem::path& path);

}  // namespace irisgate::encoding
