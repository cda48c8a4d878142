#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "irisgate/eval_harness.hpp"

namespace irisgate::gate {

struct LogisticOptions {
    double l2 = 1e-6;
    bool standardize = true;
    int max_iterations = 100;
    double tolerance = 1e-8;  // max absolute coefficient change
};

/// Coefficients live in standardized feature space:
///   p(x) = sigmoid(intercept + sum_k weights[k] * (x[k] - mean[k]) / scale[k]).
/// The L2 penalty applies to `weights` only.
struct LogisticModel {
    std::vector<std::string> feature_names;
    double intercept = 0.0;
    std::vector<double> weights;
    std::vector<double> mean;
    std::vector<double> scale;
    double l2 = 0.0;
    bool converged = false;
    int iterations = 0;

    double linear(std::span<const double> x) const;
    double predict(std::span<const double> x) const;
};

/// Penalized maximum likelihood by iteratively reweighted least squares.
/// Rows of `features` are samples. Throws Degenerate unless each class has
/// at least two samples, InvalidInput on non-finite features.
LogisticModel fit_logistic(const std::vector<std::vector<double>>& features, const std::vector<std::uint8_t>& labels,
                           const LogisticOptions& options = {}, std::vector<std::string> feature_names = {});

/// sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)] - (l2 / 2) |weights|^2,
/// evaluated at the model's coefficients.
double penalized_log_likelihood(const LogisticModel& model, const std::vector<std::vector<double>>& features,
                                const std::vector<std::uint8_t>& labels);

/// Gradient of penalized_log_likelihood w.r.t. (intercept, weights...).
std::vector<double> penalized_gradient(const LogisticModel& model, const std::vector<std::vector<double>>& features,
                                       const std::vector<std::uint8_t>& labels);

std::vector<double> pair_features(const eval::ComparisonPair& pair, std::span<const eval::Feature> features);

/// Mean predicted probability over each probe's pairings.
std::map<std::string, double> probe_quality_scores(const LogisticModel& model,
                                                   std::span<const eval::ComparisonPair> pairs,
                                                   std::span<const eval::Feature> features);

struct GateSweepRow {
    double discard_rate = 0.0;
    double mean_fmr = 0.0;
    double mean_fnmr = 0.0;
    double fmr_ci_low = 0.0;
    double fmr_ci_high = 0.0;
    double fnmr_ci_low = 0.0;
    double fnmr_ci_high = 0.0;
    double mean_threshold = 0.0;
};

struct GateConfig {
    std::vector<double> discard_rates{0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07};
    double fmr_target = 0.001;
    int resamples = 500;
    std::uint64_t seed = 1;
    double l2 = 1e-6;
    /// Refit the logistic model inside every resample (otherwise fit once
    /// on the full pair set and bootstrap only the evaluation).
    bool refit_per_resample = true;
    int max_redraws = 50;

    void check() const;
};

struct CoefficientSummary {
    std::string name;  // "intercept" or a feature name
    double mean = 0.0;
    double sd = 0.0;
};

struct SweepResult {
    std::string model_name;
    std::vector<eval::Feature> features;  // empty for the ungated baseline
    std::vector<GateSweepRow> rows;
    std::vector<CoefficientSummary> coefficients;
    std::size_t redraws = 0;
    /// Resamples whose genuine labels had fewer than two members of a class;
    /// their probes get equal scores and the gate falls back to id order.
    std::size_t degenerate_fits = 0;
};

/// Bootstrap over probe images (pairs follow their probe). Per resample:
/// the HD threshold is re-derived for the FMR target from the resampled
/// impostor scores, the model is fit on genuine pairs with label
/// hd <= threshold, probes are ranked by quality score (ties by probe id,
/// then draw order) and the lowest floor(rate * n) draws are dropped before
/// FMR and FNMR are recomputed on the surviving pairs. A resample is redrawn
/// when it lacks impostor or genuine pairs. CIs are the 2.5 / 97.5
/// percentiles across resamples.
SweepResult gate_sweep(std::span<const eval::ComparisonPair> pairs, std::span<const eval::Feature> features,
                       const GateConfig& config, const std::string& model_name = "");

/// M0 (no gate), M1_VIA, M1_PIR, M1_MRD1 and M3 (all three) on shared
/// resamples so their rows are paired.
std::vector<SweepResult> model_comparison(std::span<const eval::ComparisonPair> pairs, const GateConfig& config);

/// Parses "lo:hi:step" (inclusive) or a comma list.
std::vector<double> parse_rates(const std::string& spec);

}  // namespace irisgate::gate
