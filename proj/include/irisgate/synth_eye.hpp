#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "irisgate/core_model.hpp"

namespace irisgate::synth {

/// Band-limited value noise over (angle, normalized radius). Angle is
/// periodic; each octave doubles the lattice resolution.
class IrisTexture {
public:
    struct Octave {
        int angular_cells = 0;
        int radial_cells = 0;
        double amplitude = 0.0;
        std::vector<float> lattice;  // (radial_cells + 1) x angular_cells

        friend bool operator==(const Octave&, const Octave&) = default;
    };

    IrisTexture() = default;
    IrisTexture(std::uint64_t seed, int octaves, int base_angular, int base_radial, double persistence);

    /// theta01 in [0,1) of a full turn, rho in [0,1]. Returns roughly [-1,1].
    double sample(double theta01, double rho) const;

    const std::vector<Octave>& octaves() const { return octaves_; }
    friend bool operator==(const IrisTexture&, const IrisTexture&) = default;

private:
    std::vector<Octave> octaves_;
    double norm_ = 1.0;
};

struct IrisIdentity {
    std::string identity_id;
    std::uint64_t texture_seed = 0;
    double iris_radius = 0.0;
    IrisTexture texture;
};

struct TextureConfig {
    int octaves = 4;
    int base_angular = 12;
    int base_radial = 2;
    double persistence = 0.75;
    /// Per-identity persistence is drawn from persistence +/- persistence_spread.
    double persistence_spread = 0.2;
    double radius_min = 84.0;
    double radius_max = 92.0;
};

/// Deterministic in `seed`. The id defaults to "I" + 16 hex digits of the seed.
IrisIdentity generate_identity(std::uint64_t seed, const TextureConfig& cfg = {}, std::string identity_id = {});

enum class DeformationMode { Linear, Nonlinear };

struct CaptureParams {
    int width = 400;
    int height = 300;
    double pupil_radius = 20.0;
    /// Upper lid chord height above the pupil centre (px). Negative puts
    /// the chord below the centre.
    double upper_lid_height = 1e4;
    /// Lower lid chord depth below the pupil centre (px).
    double lower_lid_depth = 1e4;
    double blur_sigma = 0.0;
    double noise_sigma = 0.0;
    double gaze_dx = 0.0;
    double gaze_dy = 0.0;
    DeformationMode deformation = DeformationMode::Linear;
    /// Radial warp rho' = rho + k rho (1 - rho); only read in Nonlinear mode.
    double deformation_k = 0.0;
    int eyelash_count = 0;
    double eyelash_length = 0.0;
    /// Probability that a drawn lash also appears in the eyelash mask.
    double eyelash_mask_recall = 1.0;
    /// Multiplicative darkening just below the upper lid margin:
    /// I *= 1 - depth * exp(-(y - lid) / width). Not reflected in any mask.
    double lid_shadow_depth = 0.0;
    double lid_shadow_width = 1.0;
    /// Zero-mean capture-specific clutter near both lid margins (tear film,
    /// lid-margin shadowing): amplitude in grey levels, e-folding distance in pixels.
    double lid_clutter_amplitude = 0.0;
    double lid_clutter_width = 1.0;
    std::uint64_t noise_seed = 0;

    /// Throws InvalidInput unless 0 < pupil_radius < iris_radius and the
    /// sigmas are non-negative.
    void check(double iris_radius) const;
};

struct Rendered {
    EyeImage image;
    SegmentationMasks masks;
};

/// Pupil disk, textured iris annulus, sclera inside an elliptical globe,
/// straight-chord eyelids and optional lashes. Masks follow the drawn
/// geometry exactly: the pupil layer is the full pupil disk, the iris layer
/// is the lid-free part of the annulus, the eyeball layer is the lid-free
/// part of the globe, the eyelash layer holds lash pixels.
Rendered render_capture(const IrisIdentity& identity, const CaptureParams& params);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Cohort generation settings. Lid heights are fractions of the iris
/// radius (MRD1 / R), so they are independent of the image scale.
struct CohortConfig {
    int identity_count = 50;
    std::uint64_t master_seed = 1;
    int width = 480;
    int height = 360;
    TextureConfig texture;

    Range pir_undilated{0.20, 0.40};
    Range pir_dilated{0.50, 0.72};

    Range mrd1_wide{1.05, 1.30};
    Range mrd1_neutral{0.55, 0.85};
    Range mrd1_squint{0.20, 0.55};
    Range lower_lid{0.95, 1.20};

    Range blur_sigma{0.5, 1.1};
    Range noise_sigma{4.5, 7.5};
    double gaze_max = 6.0;

    DeformationMode deformation = DeformationMode::Nonlinear;
    /// Warp strength per unit of PIR above rest_pir: k = deformation_k * (pir - rest_pir).
    double deformation_k = 0.8;
    double rest_pir = 0.30;

    int eyelashes_wide = 0;
    int eyelashes_neutral = 10;
    int eyelashes_squint = 20;
    double eyelash_length = 0.45;  // fraction of iris radius
    double eyelash_mask_recall = 0.5;

    double lid_shadow_depth = 0.3;
    double lid_shadow_width = 0.3;  // fraction of iris radius

    double lid_clutter_amplitude = 75.0;
    double lid_clutter_width = 0.5;  // fraction of iris radius

    void check() const;
};

CohortConfig load_cohort_config(const std::filesystem::path& path);
std::string cohort_config_to_json(const CohortConfig& cfg);
CohortConfig cohort_config_from_json(const std::string& text);

struct GeneratedCapture {
    CaptureRecord record;  // image and masks resident
    CaptureParams params;
    double iris_radius = 0.0;
    double pir = 0.0;        // configured pupil_radius / iris_radius
    double mrd1_frac = 0.0;  // configured lid height / iris radius
};

/// Identity k (0-based) uses seed derive_seed(master, k) for its left eye and
/// a further derivation for the right eye; each capture's noise seed is
/// hash(master_seed, identity_id, eye, condition_index).
std::vector<GeneratedCapture> render_cohort(const CohortConfig& cfg);

/// Renders the cohort and writes images/, masks/, manifest.csv and
/// ground_truth.csv under `out_dir`. Rows are sorted by capture_id.
Manifest generate_cohort(const CohortConfig& cfg, const std::filesystem::path& out_dir);

/// Capture id: <identity>-<L|R>-<lid>-<dilation>.
std::string capture_id(const std::string& identity_id, EyeSide side, Condition condition);

}  // namespace irisgate::synth
