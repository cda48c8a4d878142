#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "irisgate/core_model.hpp"
#include "irisgate/eval_harness.hpp"
#include "irisgate/iris_encoding.hpp"
#include "irisgate/matching_kernel.hpp"
#include "irisgate/quality_gate.hpp"
#include "irisgate/quality_metrics.hpp"
#include "irisgate/synth_eye.hpp"

namespace irisgate::pipeline {

struct ExperimentConfig {
    synth::CohortConfig cohort;
    /// When set, captures come from this manifest and the synth stage is skipped.
    std::optional<std::filesystem::path> manifest;
    metrics::ValidatorConfig validator = metrics::ValidatorConfig::relaxed();
    /// Captures failing validation are not encoded or paired.
    bool exclude_failed = true;
    encoding::GaborParams encoder;
    matching::MatchParams matcher;
    eval::EnrollmentPolicy pairing;
    std::vector<eval::Feature> correlation_features{eval::Feature::Via,        eval::Feature::Pir,
                                                    eval::Feature::Mrd1,       eval::Feature::Mrd2,
                                                    eval::Feature::CodeLength, eval::Feature::Sharpness,
                                                    eval::Feature::DeltaVia};
    double histogram_bin_width = 0.0125;
    /// Feature set for the single-model `gate` subcommand.
    std::vector<eval::Feature> gate_features{eval::Feature::Via};
    gate::GateConfig gate;
    std::uint64_t master_seed = 1;
    std::filesystem::path output_dir = "irisgate_out";
    int threads = 0;

    /// Propagates master_seed into the cohort, pairing and gate seeds.
    void apply_master_seed(std::uint64_t seed);
    void check() const;
};

/// Seed of the impostor subsample drawn for the decision-environment histogram.
std::uint64_t histogram_seed(std::uint64_t master_seed);

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Per-capture result of the metrics, validation and encoding stages.
struct CaptureOutcome {
    std::string capture_id;
    Condition condition;
    bool metrics_ok = false;
    MetricSet metrics;
    metrics::ValidationReport validation;
    std::string error;  // metric or encoding failure token
    bool encoded = false;

    bool passed() const { return metrics_ok && validation.passed && error.empty(); }
    /// Failure tokens joined with ';' (empty when passed).
    std::string failure_tokens() const;
};

/// Computes metrics and validates every record, loading pixels on demand and
/// releasing them afterwards. record.metrics is set where metrics exist.
std::vector<CaptureOutcome> measure_captures(Manifest& manifest, const metrics::ValidatorConfig& validator);

struct EncodedSet {
    std::vector<CaptureRecord> records;  // encoded captures, manifest order, metrics set
    std::vector<encoding::IrisCode> codes;
    std::vector<matching::PackedIrisCode> packed;
};

/// Encodes captures (those that passed validation when exclude_failed is
/// set). Sets outcome.encoded, fills code_length, and records EmptyCode
/// failures in outcome.error.
EncodedSet encode_captures(Manifest& manifest, std::vector<CaptureOutcome>& outcomes,
                           const encoding::GaborParams& params, bool exclude_failed);

struct EnrollmentStats {
    std::string condition;
    std::size_t genuine = 0;
    std::size_t impostor = 0;
    std::optional<double> d_prime;
};

struct ConditionCount {
    std::string condition;
    std::size_t generated = 0;
    std::size_t failed = 0;
    std::map<std::string, std::size_t> reasons;
};

inline constexpr int kSummarySchemaVersion = 1;

struct Summary {
    int schema_version = kSummarySchemaVersion;
    std::uint64_t master_seed = 0;
    std::string enrollment;
    std::vector<ConditionCount> captures;
    std::size_t genuine_pairs = 0;
    std::size_t impostor_pairs = 0;
    std::size_t unreliable_pairs = 0;
    std::optional<double> fmr_threshold;
    std::vector<EnrollmentStats> enrollments;
    std::vector<eval::CorrelationRow> correlations;
    std::vector<gate::SweepResult> gate;
    bool complete = false;
    std::string failed_stage;
    std::string failure;
};

std::string summary_to_json(const Summary& s);
/// Throws Parse on malformed input or an unknown schema_version.
Summary summary_from_json(const std::string& text);

std::vector<ConditionCount> count_failures(const std::vector<CaptureOutcome>& outcomes);

// Artifact writers and readers.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<CaptureOutcome>& outcomes);
/// Reads metrics.csv and attaches metrics to the matching manifest records.
std::vector<CaptureOutcome> read_metrics_csv(const std::filesystem::path& path, Manifest& manifest);
void write_codes(const std::filesystem::path& dir, const EncodedSet& set);
/// Loads codes/<capture_id>.ircd for every record that has one.
EncodedSet read_codes(const std::filesystem::path& dir, const Manifest& manifest);
void write_pairs_csv(const std::filesystem::path& path, const std::vector<eval::ComparisonPair>& pairs);
void write_matches_csv(const std::filesystem::path& path, const std::vector<eval::ComparisonPair>& pairs);
std::vector<eval::ComparisonPair> read_matches_csv(const std::filesystem::path& path);
void write_decision_env_json(const std::filesystem::path& path, const eval::DecisionEnvironment& env,
                             const std::vector<EnrollmentStats>& per_condition, const std::string& enrollment);
void write_correlations_csv(const std::filesystem::path& path, const std::vector<eval::CorrelationRow>& rows);
void write_gate_csv(const std::filesystem::path& path, const std::vector<gate::SweepResult>& results);
void write_models_json(const std::filesystem::path& path, const std::vector<gate::SweepResult>& results);

/// Pairs and matches the encoded set under `policy`.
std::vector<eval::ComparisonPair> pair_and_match(const EncodedSet& set, const eval::EnrollmentPolicy& policy,
                                                 const matching::MatchParams& matcher);

struct ConditionEvaluation {
    std::vector<EnrollmentStats> stats;
    /// Correlations of every condition, grouped by enrollment condition name.
    std::vector<eval::CorrelationRow> correlations;
};

/// Repeats pairing, matching and evaluation with each condition as the
/// enrollment class. `main_pairs` (built under cfg.pairing) is reused for the
/// configured condition. Conditions without enrollments get an empty d'.
ConditionEvaluation evaluate_conditions(const EncodedSet& set, const ExperimentConfig& cfg,
                                        const std::vector<eval::ComparisonPair>& main_pairs);

struct RunResult {
    bool ok = true;
    std::string stage;
    std::string message;
    Summary summary;
};

/// synth -> metrics/validate -> encode -> pair/match -> evaluate -> gate.
/// Errors are caught per stage: the partial summary and a FAILED marker are
/// written and ok is false.
RunResult run_pipeline(const ExperimentConfig& cfg);

}  // namespace irisgate::pipeline
