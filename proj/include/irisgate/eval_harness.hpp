#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irisgate/core_model.hpp"
#include "irisgate/matching_kernel.hpp"

namespace irisgate::eval {

enum class PairScope {
    /// Both genuine and impostor pairs must contain an enrollment-condition capture.
    EnrollmentConstrained,
    /// Every unordered pair of distinct captures.
    AllPairs,
};

struct EnrollmentPolicy {
    Condition enrollment{LidState::Wide, DilationState::Undilated};
    PairScope scope = PairScope::EnrollmentConstrained;
    /// Seeds the enrollment/probe coin when both or neither capture qualify.
    std::uint64_t seed = 0;
};

struct ComparisonPair {
    std::size_t enrollment_index = 0;  // into the capture list given to build_pairs
    std::size_t probe_index = 0;
    std::string enrollment_id;
    std::string probe_id;
    bool genuine = false;
    double hd = std::numeric_limits<double>::quiet_NaN();
    int shift = 0;
    std::uint64_t overlap_bits = 0;
    bool unreliable = false;
    MetricSet probe_metrics;
    MetricSet enrollment_metrics;

    bool matched() const { return hd == hd; }
};

/// Enumerates unordered capture pairs in (i < j) order. A pair is genuine
/// when both captures share identity and eye side. The capture in the
/// enrollment condition becomes the enrollment; when both (or, under
/// AllPairs, neither) qualify the roles are assigned by a coin seeded from
/// the policy seed and the two capture ids. Metric snapshots are copied from
/// record.metrics when present. Throws EmptyPairing when no capture is in
/// the enrollment condition (EnrollmentConstrained only) or no pair results.
std::vector<ComparisonPair> build_pairs(std::span<const CaptureRecord> captures, const EnrollmentPolicy& policy);

/// Fills hd/shift/overlap for every pair. `codes[k]` belongs to capture k.
void match_pairs(std::vector<ComparisonPair>& pairs, std::span<const matching::PackedIrisCode> codes,
                 const matching::MatchParams& params);

/// d' = |mu1 - mu2| / sqrt((s1^2 + s2^2) / 2) with sample standard deviations.
double decidability(std::span<const double> genuine, std::span<const double> impostor);

struct ErrorRates {
    double fmr = 0.0;
    double fnmr = 0.0;
};

/// A pair is accepted when hd <= threshold.
ErrorRates fmr_fnmr(std::span<const double> genuine, std::span<const double> impostor, double threshold);

/// With k = floor(target * n) over the sorted impostor scores, returns the
/// midpoint between the last order statistic at or below position k that is
/// strictly smaller than its successor and that successor, so fmr <= target.
/// When no impostor may be accepted, returns a value just below the minimum.
double threshold_for_fmr(std::span<const double> impostor, double target);

struct Histogram {
    double bin_width = 0.0125;
    std::vector<std::uint64_t> genuine;
    std::vector<std::uint64_t> impostor;
};

struct DecisionEnvironment {
    std::vector<double> genuine_hds;
    std::vector<double> impostor_hds;
    double genuine_mean = 0.0;
    double genuine_sd = 0.0;
    double impostor_mean = 0.0;
    double impostor_sd = 0.0;
    double d_prime = 0.0;
    Histogram histogram;
};

/// Moments and d' use every matched pair. The impostor histogram is drawn
/// from a seeded subsample the size of the genuine class. Throws EmptyClass
/// when a class is empty.
DecisionEnvironment decision_environment(std::span<const ComparisonPair> pairs, double bin_width,
                                         std::uint64_t subsample_seed);

enum class Feature { Via, Pir, Mrd1, Mrd2, CodeLength, Sharpness, DeltaVia };

std::string_view to_string(Feature f);
std::optional<Feature> parse_feature(std::string_view token);
/// Probe-side value (DeltaVia = probe VIA - enrollment VIA).
double feature_value(const ComparisonPair& pair, Feature f);

struct CorrelationRow {
    std::string group;
    Feature feature = Feature::Via;
    bool genuine = true;
    std::size_t n = 0;
    std::optional<double> r;  // empty when undefined
};

/// Pearson r of each feature against hd, separately for genuine and
/// impostor pairs. Unmatched pairs are skipped.
std::vector<CorrelationRow> correlation_report(std::span<const ComparisonPair> pairs,
                                               std::span<const Feature> features, const std::string& group = "");

}  // namespace irisgate::eval
