#include "irisgate/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "irisgate/rng.hpp"
#include "irisgate/stats.hpp"

namespace irisgate::eval {

namespace {

bool qualifies(const CaptureRecord& r, const Condition& c) { return r.condition() == c; }

bool same_eye(const CaptureRecord& a, const CaptureRecord& b) {
    return a.identity_id == b.identity_id && a.eye_side == b.eye_side;
}

std::vector<double> matched_hds(std::span<const ComparisonPair> pairs, bool genuine) {
    std::vector<double> out;
    for (const auto& p : pairs)
        if (p.genuine == genuine && p.matched()) out.push_back(p.hd);
    return out;
}

}  // namespace

std::vector<ComparisonPair> build_pairs(std::span<const CaptureRecord> captures, const EnrollmentPolicy& policy) {
    const bool constrained = policy.scope == PairScope::EnrollmentConstrained;
    if (constrained &&
        std::none_of(captures.begin(), captures.end(), [&](const auto& r) { return qualifies(r, policy.enrollment); }))
        throw Error(ErrorKind::EmptyPairing, "no capture in enrollment condition " + policy.enrollment.name());

    std::vector<ComparisonPair> pairs;
    for (std::size_t i = 0; i < captures.size(); ++i) {
        const bool qi = qualifies(captures[i], policy.enrollment);
        for (std::size_t j = i + 1; j < captures.size(); ++j) {
            const bool qj = qualifies(captures[j], policy.enrollment);
            if (constrained && !qi && !qj) continue;
            bool i_enrolls = qi;
            if (qi == qj) {
                Rng coin(derive_seed(policy.seed, hash_string(captures[i].capture_id) ^
                                                      mix64(hash_string(captures[j].capture_id))));
                i_enrolls = coin.coin();
            }
            const std::size_t e = i_enrolls ? i : j;
            const std::size_t p = i_enrolls ? j : i;
            ComparisonPair pair;
            pair.enrollment_index = e;
            pair.probe_index = p;
            pair.enrollment_id = captures[e].capture_id;
            pair.probe_id = captures[p].capture_id;
            pair.genuine = same_eye(captures[e], captures[p]);
            if (captures[p].metrics) pair.probe_metrics = *captures[p].metrics;
            if (captures[e].metrics) pair.enrollment_metrics = *captures[e].metrics;
            pairs.push_back(std::move(pair));
        }
    }
    if (pairs.empty()) throw Error(ErrorKind::EmptyPairing, "pairing produced no pairs");
    return pairs;
}

void match_pairs(std::vector<ComparisonPair>& pairs, std::span<const matching::PackedIrisCode> codes,
                 const matching::MatchParams& params) {
    std::vector<matching::CodePair> idx;
    idx.reserve(pairs.size());
    for (const auto& p : pairs) idx.emplace_back(p.enrollment_index, p.probe_index);
    const auto results = matching::batch_match(codes, idx, params);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        pairs[k].hd = results[k].hd;
        pairs[k].shift = results[k].shift;
        pairs[k].overlap_bits = results[k].overlap_bits;
        pairs[k].unreliable = results[k].unreliable;
    }
}

double decidability(std::span<const double> genuine, std::span<const double> impostor) {
    const double m1 = stats::mean(genuine), m2 = stats::mean(impostor);
    const double v1 = stats::sample_variance(genuine), v2 = stats::sample_variance(impostor);
    if (v1 == 0.0 && v2 == 0.0) throw Error(ErrorKind::Undefined, "decidability: both variances are zero");
    return std::abs(m1 - m2) / std::sqrt(0.5 * (v1 + v2));
}

ErrorRates fmr_fnmr(std::span<const double> genuine, std::span<const double> impostor, double threshold) {
    if (genuine.empty() || impostor.empty()) throw Error(ErrorKind::EmptyClass, "fmr_fnmr: empty class");
    std::size_t fa = 0, fr = 0;
    for (double v : impostor) fa += v <= threshold ? 1 : 0;
    for (double v : genuine) fr += v > threshold ? 1 : 0;
    return {static_cast<double>(fa) / static_cast<double>(impostor.size()),
            static_cast<double>(fr) / static_cast<double>(genuine.size())};
}

double threshold_for_fmr(std::span<const double> impostor, double target) {
    if (impostor.empty()) throw Error(ErrorKind::EmptyClass, "threshold_for_fmr: no impostor scores");
    if (!(target > 0.0 && target < 1.0)) throw Error(ErrorKind::InvalidInput, "threshold_for_fmr: target outside (0,1)");
    std::vector<double> s(impostor.begin(), impostor.end());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    std::size_t k = static_cast<std::size_t>(std::floor(target * static_cast<double>(n)));
    k = std::min(k, n - 1);
    // s[k-1] is the k-th order statistic; walk down past ties.
    while (k > 0 && s[k - 1] == s[k]) --k;
    if (k == 0) return std::nextafter(s[0], -std::numeric_limits<double>::infinity());
    return 0.5 * (s[k - 1] + s[k]);
}

DecisionEnvironment decision_environment(std::span<const ComparisonPair> pairs, double bin_width,
                                         std::uint64_t subsample_seed) {
    if (!(bin_width > 0.0 && bin_width <= 1.0)) throw Error(ErrorKind::InvalidInput, "bin_width must be in (0,1]");
    DecisionEnvironment env;
    env.genuine_hds = matched_hds(pairs, true);
    env.impostor_hds = matched_hds(pairs, false);
    if (env.genuine_hds.empty() || env.impostor_hds.empty())
        throw Error(ErrorKind::EmptyClass, "decision environment needs both genuine and impostor pairs");
    env.genuine_mean = stats::mean(env.genuine_hds);
    env.impostor_mean = stats::mean(env.impostor_hds);
    env.genuine_sd = env.genuine_hds.size() > 1 ? std::sqrt(stats::sample_variance(env.genuine_hds)) : 0.0;
    env.impostor_sd = env.impostor_hds.size() > 1 ? std::sqrt(stats::sample_variance(env.impostor_hds)) : 0.0;
    env.d_prime = (env.genuine_hds.size() > 1 && env.impostor_hds.size() > 1)
                      ? decidability(env.genuine_hds, env.impostor_hds)
                      : std::numeric_limits<double>::quiet_NaN();

    const auto bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
    env.histogram.bin_width = bin_width;
    env.histogram.genuine.assign(bins, 0);
    env.histogram.impostor.assign(bins, 0);
    auto bin_of = [&](double v) {
        const auto b = static_cast<std::size_t>(std::max(0.0, std::floor(v / bin_width)));
        return std::min(b, bins - 1);
    };
    for (double v : env.genuine_hds) ++env.histogram.genuine[bin_of(v)];

    // Partial Fisher-Yates for a subsample without replacement.
    std::vector<double> pool = env.impostor_hds;
    const std::size_t take = std::min(pool.size(), env.genuine_hds.size());
    Rng rng(subsample_seed);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        ++env.histogram.impostor[bin_of(pool[i])];
    }
    return env;
}

std::string_view to_string(Feature f) {
    switch (f) {
        case Feature::Via: return "via";
        case Feature::Pir: return "pir";
        case Feature::Mrd1: return "mrd1";
        case Feature::Mrd2: return "mrd2";
        case Feature::CodeLength: return "code_length";
        case Feature::Sharpness: return "sharpness";
        case Feature::DeltaVia: return "delta_via";
    }
    return "?";
}

std::optional<Feature> parse_feature(std::string_view t) {
    for (Feature f : {Feature::Via, Feature::Pir, Feature::Mrd1, Feature::Mrd2, Feature::CodeLength,
                      Feature::Sharpness, Feature::DeltaVia})
        if (to_string(f) == t) return f;
    return std::nullopt;
}

double feature_value(const ComparisonPair& p, Feature f) {
    const auto& m = p.probe_metrics;
    switch (f) {
        case Feature::Via: return m.via;
        case Feature::Pir: return m.pir;
        case Feature::Mrd1: return m.mrd1;
        case Feature::Mrd2: return m.mrd2;
        case Feature::CodeLength: return m.code_length;
        case Feature::Sharpness: return m.sharpness;
        case Feature::DeltaVia: return m.via - p.enrollment_metrics.via;
    }
    return 0.0;
}

std::vector<CorrelationRow> correlation_report(std::span<const ComparisonPair> pairs, std::span<const Feature> features,
                                               const std::string& group) {
    std::vector<CorrelationRow> rows;
    for (bool genuine : {true, false}) {
        for (Feature f : features) {
            std::vector<double> x, y;
            for (const auto& p : pairs)
                if (p.genuine == genuine && p.matched()) {
                    x.push_back(feature_value(p, f));
                    y.push_back(p.hd);
                }
            CorrelationRow row;
            row.group = group;
            row.feature = f;
            row.genuine = genuine;
            row.n = x.size();
            try {
                row.r = stats::pearson_r(x, y);
            } catch (const Error&) {
                row.r.reset();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace irisgate::eval
