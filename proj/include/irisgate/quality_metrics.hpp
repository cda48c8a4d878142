#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "irisgate/core_model.hpp"

namespace irisgate::metrics {

struct ValidatorConfig {
    double pir_min = 0.1;
    double pir_max = 0.7;
    double sharpness_min = 461.0;  // variance of Laplacian
    double occlusion90_max = 0.25;
    double occlusion30_max = 0.30;
    double mask_min_px = 4096.0;   // applied to Cartesian VIA
    bool check_pir = true;
    bool check_occlusion = true;

    /// Stock validator thresholds.
    static ValidatorConfig standard() { return {}; }
    /// PIR and occlusion bounds opened up to 0.0001-0.9999 and 99%, and
    /// both checks bypassed, so only sharpness and mask size can fail.
    static ValidatorConfig relaxed();

    /// Throws InvalidInput when a bound is inverted or a fraction is out of [0,1].
    void check() const;
};

enum class ValidationFailure { PirOutOfRange, TooBlurry, Occlusion90, Occlusion30, MaskTooSmall };

std::string_view to_string(ValidationFailure f);

struct ValidationReport {
    bool passed = true;
    std::vector<ValidationFailure> failures;

    /// Semicolon-joined failure tokens; empty when passed.
    std::string tokens() const;
};

struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;
};

struct IrisGeometry {
    Circle pupil;
    Circle iris;
};

enum class DiameterScope { AllPixels, LargestComponent };

/// Maximum Euclidean distance between any two pixel centres of the mask
/// (the diameter of its convex hull). Throws Undefined on an empty mask.
double polygon_diameter(const Mask& mask, DiameterScope scope = DiameterScope::AllPixels);

/// Pupil diameter over iris diameter. The iris outline is taken from the
/// union of the iris and pupil layers.
double pupil_iris_ratio(const SegmentationMasks& masks);

/// |iris \ pupil| in pixels.
double visible_iris_area(const SegmentationMasks& masks);

enum class MrdKind { Mrd1, Mrd2 };

/// Signed vertical distance from the pupil centroid to the top (MRD1) or
/// bottom (MRD2) of the eyeball mask, measured in the centroid's column
/// when that column intersects the eyeball mask and globally otherwise.
double mrd(const SegmentationMasks& masks, MrdKind kind);

/// Population variance of the 3x3 Laplacian response over interior pixels.
double sharpness(const EyeImage& image);

/// Pupil circle from centroid and hull diameter; iris circle from an
/// algebraic least-squares fit to the limbus points that border the
/// eyeball (points against an eyelid are excluded). Falls back to
/// the pupil centre with half the hull diameter of iris+pupil.
IrisGeometry iris_geometry(const SegmentationMasks& masks);

/// Fraction of the ideal annular sector of width `arc_degrees`, centred at
/// 12 o'clock, that is not covered by the visible iris. The sector is
/// inset by one pixel from both fitted boundaries.
double occlusion_fraction(const SegmentationMasks& masks, double arc_degrees);
double occlusion_fraction(const SegmentationMasks& masks, const IrisGeometry& geometry, double arc_degrees);

/// Every metric except code_length. Throws Undefined when geometry
/// cannot be derived (empty pupil, iris, or eyeball layer).
MetricSet compute_metrics(const EyeImage& image, const SegmentationMasks& masks);

/// Applies all five checks and reports every failing one. Bounds are
/// inclusive: a value equal to a threshold passes.
ValidationReport validate(const MetricSet& metrics, const ValidatorConfig& cfg);
/// Uses record.metrics when present, else computes them from the
/// resident image and masks.
ValidationReport validate(const CaptureRecord& record, const ValidatorConfig& cfg);

}  // namespace irisgate::metrics
