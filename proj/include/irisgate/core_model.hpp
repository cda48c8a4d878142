#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irisgate/error.hpp"

namespace irisgate {

/// Row-major 8-bit grayscale image.
struct EyeImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    EyeImage() = default;
    EyeImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool empty() const { return pixels.empty(); }
};

/// Boolean grid with one byte per cell in memory. Packed to one bit per
/// cell only on disk.
class Mask {
public:
    Mask() = default;
    Mask(int w, int h) : width_(w), height_(h), cells_(static_cast<std::size_t>(w) * h, 0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return cells_.size(); }

    bool at(int x, int y) const { return cells_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v = true) {
        cells_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
    }
    bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_ && at(x, y);
    }

    std::size_t count() const;
    bool any() const { return count() > 0; }

    const std::vector<std::uint8_t>& cells() const { return cells_; }
    std::vector<std::uint8_t>& cells() { return cells_; }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> cells_;
};

Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
Mask mask_and_not(const Mask& a, const Mask& b);

/// Per-pixel segmentation layers for one capture. Layers are independent:
/// no containment between them is assumed.
struct SegmentationMasks {
    Mask pupil;
    Mask iris;
    Mask eyeball;
    Mask eyelash;

    bool same_dims() const;
};

enum class EyeSide : std::uint8_t { Left, Right, Unknown };
enum class LidState : std::uint8_t { Squint, Neutral, Wide, Unknown };
enum class DilationState : std::uint8_t { Dilated, Undilated, Unknown };

std::string_view to_string(EyeSide v);
std::string_view to_string(LidState v);
std::string_view to_string(DilationState v);
EyeSide parse_eye_side(std::string_view token);
LidState parse_lid_state(std::string_view token);
DilationState parse_dilation_state(std::string_view token);

inline constexpr LidState kLidStates[] = {LidState::Squint, LidState::Neutral, LidState::Wide};
inline constexpr DilationState kDilationStates[] = {DilationState::Undilated, DilationState::Dilated};

/// Lid/dilation pair, e.g. "wide-undilated".
struct Condition {
    LidState lid = LidState::Wide;
    DilationState dilation = DilationState::Undilated;

    std::string name() const;
    friend bool operator==(const Condition&, const Condition&) = default;
};

std::optional<Condition> parse_condition(std::string_view token);
/// The six lid x dilation conditions, undilated first.
std::vector<Condition> all_conditions();

struct MetricSet {
    double via = 0.0;
    double pir = 0.0;
    double mrd1 = 0.0;
    double mrd2 = 0.0;
    double iris_diameter = 0.0;
    double pupil_diameter = 0.0;
    double sharpness = 0.0;
    double occlusion_90 = 0.0;
    double occlusion_30 = 0.0;
    double code_length = 0.0;
};

struct CaptureRecord {
    std::string capture_id;
    std::string identity_id;
    EyeSide eye_side = EyeSide::Unknown;
    LidState lid_state = LidState::Unknown;
    DilationState dilation_state = DilationState::Unknown;
    std::filesystem::path image_path;
    std::filesystem::path mask_path;

    // Filled on demand; see load_pixels().
    std::optional<EyeImage> image;
    std::optional<SegmentationMasks> masks;
    std::optional<MetricSet> metrics;

    Condition condition() const { return {lid_state, dilation_state}; }
    /// Key of the physical iris: identity + eye side.
    std::string eye_key() const;
};

struct Manifest {
    std::filesystem::path base_dir;
    std::vector<CaptureRecord> records;

    std::size_t identity_count() const;
    const CaptureRecord* find(std::string_view capture_id) const;
};

inline constexpr std::string_view kManifestHeader =
    "capture_id,identity_id,eye_side,lid_state,dilation_state,image_path,mask_path";

/// Parses a manifest CSV. Image and mask paths are resolved against the
/// manifest's directory; pixels are not read.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes records in the given order with paths relative to `path`'s directory.
void write_manifest(const std::filesystem::path& path, const std::vector<CaptureRecord>& records);

/// Reads image and masks for a record if they are not already resident.
void load_pixels(CaptureRecord& record);

struct RecordCheck {
    bool ok = true;
    std::vector<std::string> defects;
};

RecordCheck validate_record(const CaptureRecord& record);

}  // namespace irisgate
