#include "irisgate/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "irisgate/csv.hpp"
#include "irisgate/error.hpp"
#include "irisgate/image_io.hpp"
#include "irisgate/parallel.hpp"
#include "irisgate/rng.hpp"

namespace irisgate::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kPairingSalt = 0x9A1B;
constexpr std::uint64_t kGateSalt = 0x6A7E;
constexpr std::uint64_t kHistogramSalt = 0x4157;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

json opt_number(const std::optional<double>& v) {
    if (v && std::isfinite(*v)) return *v;
    return nullptr;
}

std::optional<double> number_or_empty(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

std::vector<eval::Feature> parse_features(const json& j) {
    std::vector<eval::Feature> out;
    auto add = [&](const std::string& tok) {
        auto f = eval::parse_feature(tok);
        if (!f) throw Error(ErrorKind::Parse, "unknown feature '" + tok + "'");
        out.push_back(*f);
    };
    if (j.is_string()) {
        std::stringstream ss(j.get<std::string>());
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) add(tok);
    } else {
        for (const auto& e : j) add(e.get<std::string>());
    }
    return out;
}

json features_json(const std::vector<eval::Feature>& fs) {
    json a = json::array();
    for (auto f : fs) a.push_back(std::string(eval::to_string(f)));
    return a;
}

Condition condition_from(const std::string& token) {
    auto c = parse_condition(token);
    if (!c) throw Error(ErrorKind::Parse, "unknown condition '" + token + "'");
    return *c;
}

std::string csv_bool(bool b) { return b ? "1" : "0"; }

bool parse_bool_field(const std::string& s) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw Error(ErrorKind::Parse, "bad boolean field '" + s + "'");
}

double parse_double_field(const std::string& s) {
    if (s == "nan" || s.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::Parse, "bad numeric field '" + s + "'");
    }
}

// MetricSet fields in CSV column order.
constexpr const char* kMetricColumns[] = {"via",       "pir",          "mrd1",         "mrd2",        "iris_diameter",
                                          "pupil_diameter", "sharpness", "occlusion_90", "occlusion_30", "code_length"};

std::vector<double*> metric_fields(MetricSet& m) {
    return {&m.via,       &m.pir,          &m.mrd1,         &m.mrd2,         &m.iris_diameter,
            &m.pupil_diameter, &m.sharpness, &m.occlusion_90, &m.occlusion_30, &m.code_length};
}

std::vector<double> metric_values(const MetricSet& m) {
    MetricSet copy = m;
    std::vector<double> out;
    for (double* p : metric_fields(copy)) out.push_back(*p);
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorKind::Parse, "missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
};

CsvTable read_csv(const fs::path& path) {
    std::istringstream in(read_text(path));
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        if (!csv::split_line(line, fields))
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": unterminated quote");
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                              std::to_string(t.header.size()) + " fields");
        t.rows.push_back(std::move(fields));
    }
    if (t.header.empty()) throw Error(ErrorKind::Parse, path.string() + ": empty file");
    return t;
}

json validator_json(const metrics::ValidatorConfig& v) {
    return {{"pir_min", v.pir_min},
            {"pir_max", v.pir_max},
            {"sharpness_min", v.sharpness_min},
            {"occlusion90_max", v.occlusion90_max},
            {"occlusion30_max", v.occlusion30_max},
            {"mask_min_px", v.mask_min_px},
            {"check_pir", v.check_pir},
            {"check_occlusion", v.check_occlusion}};
}

metrics::ValidatorConfig validator_from(const json& j) {
    const std::string preset = j.value("preset", std::string("relaxed"));
    metrics::ValidatorConfig v;
    if (preset == "relaxed")
        v = metrics::ValidatorConfig::relaxed();
    else if (preset != "standard")
        throw Error(ErrorKind::Parse, "validator preset must be 'standard' or 'relaxed'");
    v.pir_min = j.value("pir_min", v.pir_min);
    v.pir_max = j.value("pir_max", v.pir_max);
    v.sharpness_min = j.value("sharpness_min", v.sharpness_min);
    v.occlusion90_max = j.value("occlusion90_max", v.occlusion90_max);
    v.occlusion30_max = j.value("occlusion30_max", v.occlusion30_max);
    v.mask_min_px = j.value("mask_min_px", v.mask_min_px);
    v.check_pir = j.value("check_pir", v.check_pir);
    v.check_occlusion = j.value("check_occlusion", v.check_occlusion);
    return v;
}

json sweep_json(const gate::SweepResult& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"discard_rate", row.discard_rate},
                        {"mean_fmr", row.mean_fmr},
                        {"mean_fnmr", row.mean_fnmr},
                        {"fmr_ci95", {row.fmr_ci_low, row.fmr_ci_high}},
                        {"fnmr_ci95", {row.fnmr_ci_low, row.fnmr_ci_high}},
                        {"mean_threshold", row.mean_threshold}});
    json coefs = json::array();
    for (const auto& c : r.coefficients) coefs.push_back({{"name", c.name}, {"mean", c.mean}, {"sd", c.sd}});
    return {{"model", r.model_name},
            {"features", features_json(r.features)},
            {"redraws", r.redraws},
            {"degenerate_fits", r.degenerate_fits},
            {"rows", rows},
            {"coefficients", coefs}};
}

gate::SweepResult sweep_from(const json& j) {
    gate::SweepResult r;
    r.model_name = j.at("model").get<std::string>();
    r.features = parse_features(j.at("features"));
    r.redraws = j.at("redraws").get<std::size_t>();
    r.degenerate_fits = j.value("degenerate_fits", std::size_t{0});
    for (const auto& row : j.at("rows")) {
        gate::GateSweepRow g;
        g.discard_rate = row.at("discard_rate").get<double>();
        g.mean_fmr = row.at("mean_fmr").get<double>();
        g.mean_fnmr = row.at("mean_fnmr").get<double>();
        g.fmr_ci_low = row.at("fmr_ci95").at(0).get<double>();
        g.fmr_ci_high = row.at("fmr_ci95").at(1).get<double>();
        g.fnmr_ci_low = row.at("fnmr_ci95").at(0).get<double>();
        g.fnmr_ci_high = row.at("fnmr_ci95").at(1).get<double>();
        g.mean_threshold = row.at("mean_threshold").get<double>();
        r.rows.push_back(g);
    }
    for (const auto& c : j.at("coefficients"))
        r.coefficients.push_back({c.at("name").get<std::string>(),
                                  c.at("mean").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                         : c.at("mean").get<double>(),
                                  c.at("sd").get<double>()});
    return r;
}

}  // namespace

// ---------------------------------------------------------------- config

std::uint64_t histogram_seed(std::uint64_t master_seed) { return derive_seed(master_seed, kHistogramSalt); }

void ExperimentConfig::apply_master_seed(std::uint64_t seed) {
    master_seed = seed;
    cohort.master_seed = seed;
    pairing.seed = derive_seed(seed, kPairingSalt);
    gate.seed = derive_seed(seed, kGateSalt);
}

void ExperimentConfig::check() const {
    if (!manifest) cohort.check();
    validator.check();
    encoder.check();
    if (matcher.max_shift < 0) throw Error(ErrorKind::InvalidInput, "matcher: max_shift must be >= 0");
    if (pairing.enrollment.lid == LidState::Unknown || pairing.enrollment.dilation == DilationState::Unknown)
        throw Error(ErrorKind::InvalidInput, "pairing: enrollment condition must be fully specified");
    if (!(histogram_bin_width > 0.0 && histogram_bin_width <= 1.0))
        throw Error(ErrorKind::InvalidInput, "evaluation: bin_width must lie in (0,1]");
    if (gate_features.empty()) throw Error(ErrorKind::InvalidInput, "gate: feature list is empty");
    gate.check();
    if (threads < 0) throw Error(ErrorKind::InvalidInput, "threads must be >= 0");
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::Parse, "config: top level must be an object");
    ExperimentConfig c;
    try {
        const std::uint64_t seed = j.value("master_seed", c.master_seed);
        if (j.contains("cohort")) {
            if (j["cohort"].is_string())
                c.cohort = synth::load_cohort_config(j["cohort"].get<std::string>());
            else
                c.cohort = synth::cohort_config_from_json(j["cohort"].dump());
        }
        if (j.contains("manifest") && !j["manifest"].is_null()) c.manifest = j["manifest"].get<std::string>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        c.threads = j.value("threads", c.threads);
        if (j.contains("validator")) c.validator = validator_from(j["validator"]);
        c.exclude_failed = j.value("exclude_failed", c.exclude_failed);
        if (j.contains("encoder")) {
            const auto& e = j["encoder"];
            c.encoder.radial_res = e.value("radial_res", c.encoder.radial_res);
            c.encoder.angular_res = e.value("angular_res", c.encoder.angular_res);
            c.encoder.wavelength = e.value("wavelength", c.encoder.wavelength);
            c.encoder.sigma = e.value("sigma", c.encoder.sigma);
            c.encoder.radial_pool = e.value("radial_pool", c.encoder.radial_pool);
            c.encoder.half_window = e.value("half_window", c.encoder.half_window);
            c.encoder.magnitude_floor_rel = e.value("magnitude_floor_rel", c.encoder.magnitude_floor_rel);
        }
        if (j.contains("matcher")) {
            c.matcher.max_shift = j["matcher"].value("max_shift", c.matcher.max_shift);
            c.matcher.min_overlap = j["matcher"].value("min_overlap", c.matcher.min_overlap);
        }
        if (j.contains("pairing")) {
            const auto& p = j["pairing"];
            if (p.contains("enrollment")) c.pairing.enrollment = condition_from(p["enrollment"].get<std::string>());
            const std::string scope = p.value("scope", std::string("enrollment"));
            if (scope == "enrollment")
                c.pairing.scope = eval::PairScope::EnrollmentConstrained;
            else if (scope == "all")
                c.pairing.scope = eval::PairScope::AllPairs;
            else
                throw Error(ErrorKind::Parse, "pairing.scope must be 'enrollment' or 'all'");
        }
        if (j.contains("evaluation")) {
            const auto& e = j["evaluation"];
            if (e.contains("features")) c.correlation_features = parse_features(e["features"]);
            c.histogram_bin_width = e.value("bin_width", c.histogram_bin_width);
        }
        if (j.contains("gate")) {
            const auto& g = j["gate"];
            if (g.contains("features")) c.gate_features = parse_features(g["features"]);
            if (g.contains("rates")) {
                if (g["rates"].is_string())
                    c.gate.discard_rates = gate::parse_rates(g["rates"].get<std::string>());
                else
                    c.gate.discard_rates = g["rates"].get<std::vector<double>>();
            }
            c.gate.fmr_target = g.value("fmr_target", c.gate.fmr_target);
            c.gate.resamples = g.value("resamples", c.gate.resamples);
            c.gate.l2 = g.value("l2", c.gate.l2);
            c.gate.refit_per_resample = g.value("refit_per_resample", c.gate.refit_per_resample);
            c.gate.max_redraws = g.value("max_redraws", c.gate.max_redraws);
        }
        c.apply_master_seed(seed);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    c.check();
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir.string();
    j["threads"] = c.threads;
    j["cohort"] = json::parse(synth::cohort_config_to_json(c.cohort));
    j["manifest"] = c.manifest ? json(c.manifest->string()) : json(nullptr);
    j["validator"] = validator_json(c.validator);
    j["exclude_failed"] = c.exclude_failed;
    j["encoder"] = {{"radial_res", c.encoder.radial_res},   {"angular_res", c.encoder.angular_res},
                    {"wavelength", c.encoder.wavelength},   {"sigma", c.encoder.sigma},
                    {"radial_pool", c.encoder.radial_pool}, {"half_window", c.encoder.half_window},
                    {"magnitude_floor_rel", c.encoder.magnitude_floor_rel}};
    j["matcher"] = {{"max_shift", c.matcher.max_shift}, {"min_overlap", c.matcher.min_overlap}};
    j["pairing"] = {{"enrollment", c.pairing.enrollment.name()},
                    {"scope", c.pairing.scope == eval::PairScope::AllPairs ? "all" : "enrollment"}};
    j["evaluation"] = {{"features", features_json(c.correlation_features)}, {"bin_width", c.histogram_bin_width}};
    j["gate"] = {{"features", features_json(c.gate_features)},
                 {"rates", c.gate.discard_rates},
                 {"fmr_target", c.gate.fmr_target},
                 {"resamples", c.gate.resamples},
                 {"l2", c.gate.l2},
                 {"refit_per_resample", c.gate.refit_per_resample},
                 {"max_redraws", c.gate.max_redraws}};
    return j.dump(2) + "\n";
}

ExperimentConfig load_config(const fs::path& path) {
    // Relative cohort/manifest references resolve against the config's directory.
    auto cfg_text = read_text(path);
    json j;
    try {
        j = json::parse(cfg_text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    const fs::path base = path.parent_path();
    for (const char* key : {"cohort", "manifest"})
        if (j.contains(key) && j[key].is_string()) {
            fs::path p = j[key].get<std::string>();
            if (p.is_relative()) j[key] = (base / p).string();
        }
    return config_from_json(j.dump());
}

// ---------------------------------------------------------------- stages

std::string CaptureOutcome::failure_tokens() const {
    std::string out = validation.tokens();
    if (!error.empty()) out += (out.empty() ? "" : ";") + error;
    return out;
}

std::vector<CaptureOutcome> measure_captures(Manifest& manifest, const metrics::ValidatorConfig& validator) {
    std::vector<CaptureOutcome> out(manifest.records.size());
    parallel_for(manifest.records.size(), [&](std::size_t i) {
        CaptureRecord& r = manifest.records[i];
        CaptureOutcome& o = out[i];
        o.capture_id = r.capture_id;
        o.condition = r.condition();
        const bool resident = r.image && r.masks;
        try {
            load_pixels(r);
            o.metrics = metrics::compute_metrics(*r.image, *r.masks);
            o.metrics_ok = true;
            o.validation = metrics::validate(o.metrics, validator);
            r.metrics = o.metrics;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Parse) throw;
            o.metrics_ok = false;
            o.validation.passed = false;
            o.error = "Metric" + std::string(to_string(e.kind()));
        }
        if (!resident) {
            r.image.reset();
            r.masks.reset();
        }
    }, 4);
    return out;
}

EncodedSet encode_captures(Manifest& manifest, std::vector<CaptureOutcome>& outcomes,
                           const encoding::GaborParams& params, bool exclude_failed) {
    params.check();
    if (outcomes.size() != manifest.records.size())
        throw Error(ErrorKind::InvalidInput, "encode: outcomes do not match manifest");
    std::vector<std::optional<encoding::IrisCode>> slots(manifest.records.size());
    parallel_for(manifest.records.size(), [&](std::size_t i) {
        CaptureOutcome& o = outcomes[i];
        if (!o.metrics_ok) return;
        if (exclude_failed && !o.passed()) return;
        CaptureRecord& r = manifest.records[i];
        const bool resident = r.image && r.masks;
        try {
            load_pixels(r);
            auto polar = encoding::normalize(*r.image, *r.masks, params.radial_res, params.angular_res);
            auto code = encoding::encode(polar, params);
            o.metrics.code_length = static_cast<double>(encoding::code_length(code));
            o.encoded = true;
            slots[i] = std::move(code);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Parse) throw;
            o.error = e.kind() == ErrorKind::EmptyCode ? "EmptyCode" : "Encode" + std::string(to_string(e.kind()));
        }
        if (!resident) {
            r.image.reset();
            r.masks.reset();
        }
    }, 2);
    EncodedSet set;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!slots[i]) continue;
        CaptureRecord r = manifest.records[i];
        r.image.reset();
        r.masks.reset();
        r.metrics = outcomes[i].metrics;
        manifest.records[i].metrics = outcomes[i].metrics;
        set.records.push_back(std::move(r));
        set.packed.push_back(matching::pack(*slots[i]));
        set.codes.push_back(std::move(*slots[i]));
    }
    return set;
}

std::vector<eval::ComparisonPair> pair_and_match(const EncodedSet& set, const eval::EnrollmentPolicy& policy,
                                                 const matching::MatchParams& matcher) {
    auto pairs = eval::build_pairs(set.records, policy);
    eval::match_pairs(pairs, set.packed, matcher);
    return pairs;
}

namespace {

EnrollmentStats stats_for(const std::string& name, const std::vector<eval::ComparisonPair>& pairs) {
    EnrollmentStats s;
    s.condition = name;
    std::vector<double> g, im;
    for (const auto& p : pairs) {
        if (!p.matched()) continue;
        (p.genuine ? g : im).push_back(p.hd);
    }
    s.genuine = g.size();
    s.impostor = im.size();
    if (g.size() >= 2 && im.size() >= 2) {
        try {
            s.d_prime = eval::decidability(g, im);
        } catch (const Error&) {
            s.d_prime.reset();
        }
    }
    return s;
}

}  // namespace

ConditionEvaluation evaluate_conditions(const EncodedSet& set, const ExperimentConfig& cfg,
                                        const std::vector<eval::ComparisonPair>& main_pairs) {
    ConditionEvaluation out;
    for (const Condition& cond : all_conditions()) {
        const std::string name = cond.name();
        std::vector<eval::ComparisonPair> own;
        const std::vector<eval::ComparisonPair>* pairs = &own;
        if (cond == cfg.pairing.enrollment) {
            pairs = &main_pairs;
        } else {
            eval::EnrollmentPolicy policy = cfg.pairing;
            policy.enrollment = cond;
            try {
                own = pair_and_match(set, policy, cfg.matcher);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::EmptyPairing) throw;
            }
        }
        out.stats.push_back(stats_for(name, *pairs));
        if (!pairs->empty()) {
            auto rows = eval::correlation_report(*pairs, cfg.correlation_features, name);
            out.correlations.insert(out.correlations.end(), rows.begin(), rows.end());
        }
    }
    return out;
}

std::vector<ConditionCount> count_failures(const std::vector<CaptureOutcome>& outcomes) {
    std::vector<ConditionCount> out;
    for (const Condition& c : all_conditions()) out.push_back({c.name(), 0, 0, {}});
    auto slot = [&](const std::string& name) -> ConditionCount& {
        for (auto& c : out)
            if (c.condition == name) return c;
        out.push_back({name, 0, 0, {}});
        return out.back();
    };
    for (const auto& o : outcomes) {
        ConditionCount& c = slot(o.condition.name());
        ++c.generated;
        if (o.passed()) continue;
        ++c.failed;
        std::stringstream ss(o.failure_tokens());
        std::string tok;
        while (std::getline(ss, tok, ';'))
            if (!tok.empty()) ++c.reasons[tok];
    }
    std::erase_if(out, [](const ConditionCount& c) { return c.generated == 0 && c.failed == 0; });
    return out;
}

// ---------------------------------------------------------------- artifacts

void write_metrics_csv(const fs::path& path, const std::vector<CaptureOutcome>& outcomes) {
    std::ostringstream o;
    o << "capture_id,condition";
    for (const char* c : kMetricColumns) o << ',' << c;
    o << ",metrics_ok,passed,encoded,failures\n";
    for (const auto& c : outcomes) {
        o << csv::escape(c.capture_id) << ',' << c.condition.name();
        for (double v : metric_values(c.metrics))
            o << ',' << (c.metrics_ok ? csv::format_double(v) : std::string("nan"));
        o << ',' << csv_bool(c.metrics_ok) << ',' << csv_bool(c.passed()) << ',' << csv_bool(c.encoded) << ','
          << csv::escape(c.failure_tokens()) << '\n';
    }
    write_text(path, o.str());
}

std::vector<CaptureOutcome> read_metrics_csv(const fs::path& path, Manifest& manifest) {
    const CsvTable t = read_csv(path);
    std::vector<std::size_t> cols;
    for (const char* c : kMetricColumns) cols.push_back(t.column(c));
    const std::size_t id_col = t.column("capture_id"), ok_col = t.column("metrics_ok"),
                      pass_col = t.column("passed"), enc_col = t.column("encoded"), fail_col = t.column("failures");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) index[manifest.records[i].capture_id] = i;
    std::vector<CaptureOutcome> out(manifest.records.size());
    std::vector<bool> seen(manifest.records.size(), false);
    for (const auto& row : t.rows) {
        auto it = index.find(row[id_col]);
        if (it == index.end()) throw Error(ErrorKind::Parse, path.string() + ": unknown capture " + row[id_col]);
        CaptureOutcome& o = out[it->second];
        CaptureRecord& r = manifest.records[it->second];
        o.capture_id = r.capture_id;
        o.condition = r.condition();
        o.metrics_ok = parse_bool_field(row[ok_col]);
        auto fields = metric_fields(o.metrics);
        for (std::size_t k = 0; k < cols.size(); ++k) *fields[k] = parse_double_field(row[cols[k]]);
        o.encoded = parse_bool_field(row[enc_col]);
        std::stringstream ss(row[fail_col]);
        std::string tok;
        while (std::getline(ss, tok, ';')) {
            if (tok.empty()) continue;
            bool matched = false;
            for (auto f : {metrics::ValidationFailure::PirOutOfRange, metrics::ValidationFailure::TooBlurry,
                           metrics::ValidationFailure::Occlusion90, metrics::ValidationFailure::Occlusion30,
                           metrics::ValidationFailure::MaskTooSmall})
                if (tok == metrics::to_string(f)) {
                    o.validation.passed = false;
                    o.validation.failures.push_back(f);
                    matched = true;
                }
            if (!matched) o.error = o.error.empty() ? tok : o.error + ";" + tok;
        }
        if (parse_bool_field(row[pass_col]) != o.passed())
            throw Error(ErrorKind::Parse, path.string() + ": inconsistent passed flag for " + r.capture_id);
        if (o.metrics_ok) r.metrics = o.metrics;
        seen[it->second] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw Error(ErrorKind::Parse, path.string() + ": no metrics for " + manifest.records[i].capture_id);
    return out;
}

void write_codes(const fs::path& dir, const EncodedSet& set) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create " + dir.string());
    for (std::size_t i = 0; i < set.records.size(); ++i)
        encoding::write_code(dir / (set.records[i].capture_id + ".ircd"), set.codes[i]);
}

EncodedSet read_codes(const fs::path& dir, const Manifest& manifest) {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "codes directory not found: " + dir.string());
    EncodedSet set;
    for (const auto& r : manifest.records) {
        const fs::path p = dir / (r.capture_id + ".ircd");
        if (!fs::exists(p)) continue;
        auto code = encoding::read_code(p);
        CaptureRecord rec = r;
        rec.image.reset();
        rec.masks.reset();
        if (rec.metrics) rec.metrics->code_length = static_cast<double>(encoding::code_length(code));
        set.records.push_back(std::move(rec));
        set.packed.push_back(matching::pack(code));
        set.codes.push_back(std::move(code));
    }
    if (set.records.empty()) throw Error(ErrorKind::InvalidInput, "no codes found in " + dir.string());
    return set;
}

void write_pairs_csv(const fs::path& path, const std::vector<eval::ComparisonPair>& pairs) {
    std::ostringstream o;
    o << "enrollment_id,probe_id,genuine\n";
    for (const auto& p : pairs)
        o << csv::escape(p.enrollment_id) << ',' << csv::escape(p.probe_id) << ',' << csv_bool(p.genuine) << '\n';
    write_text(path, o.str());
}

void write_matches_csv(const fs::path& path, const std::vector<eval::ComparisonPair>& pairs) {
    std::ostringstream o;
    o << "enrollment_id,probe_id,genuine,hd,shift,overlap_bits,unreliable";
    for (const char* c : kMetricColumns) o << ",probe_" << c;
    for (const char* c : kMetricColumns) o << ",enrollment_" << c;
    o << '\n';
    for (const auto& p : pairs) {
        o << csv::escape(p.enrollment_id) << ',' << csv::escape(p.probe_id) << ',' << csv_bool(p.genuine) << ','
          << csv::format_double(p.hd) << ',' << p.shift << ',' << p.overlap_bits << ',' << csv_bool(p.unreliable);
        for (double v : metric_values(p.probe_metrics)) o << ',' << csv::format_double(v);
        for (double v : metric_values(p.enrollment_metrics)) o << ',' << csv::format_double(v);
        o << '\n';
    }
    write_text(path, o.str());
}

std::vector<eval::ComparisonPair> read_matches_csv(const fs::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t e = t.column("enrollment_id"), pr = t.column("probe_id"), g = t.column("genuine"),
                      hd = t.column("hd"), sh = t.column("shift"), ov = t.column("overlap_bits"),
                      un = t.column("unreliable");
    std::vector<std::size_t> pcols, ecols;
    for (const char* c : kMetricColumns) {
        pcols.push_back(t.column(std::string("probe_") + c));
        ecols.push_back(t.column(std::string("enrollment_") + c));
    }
    std::vector<eval::ComparisonPair> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        eval::ComparisonPair p;
        p.enrollment_id = row[e];
        p.probe_id = row[pr];
        p.genuine = parse_bool_field(row[g]);
        p.hd = parse_double_field(row[hd]);
        p.shift = static_cast<int>(parse_double_field(row[sh]));
        p.overlap_bits = static_cast<std::uint64_t>(parse_double_field(row[ov]));
        p.unreliable = parse_bool_field(row[un]);
        auto pf = metric_fields(p.probe_metrics);
        auto ef = metric_fields(p.enrollment_metrics);
        for (std::size_t k = 0; k < pcols.size(); ++k) {
            *pf[k] = parse_double_field(row[pcols[k]]);
            *ef[k] = parse_double_field(row[ecols[k]]);
        }
        out.push_back(std::move(p));
    }
    if (out.empty()) throw Error(ErrorKind::EmptyPairing, path.string() + ": no pairs");
    return out;
}

void write_decision_env_json(const fs::path& path, const eval::DecisionEnvironment& env,
                             const std::vector<EnrollmentStats>& per_condition, const std::string& enrollment) {
    json j;
    j["enrollment"] = enrollment;
    j["genuine"] = {{"n", env.genuine_hds.size()}, {"mean", env.genuine_mean}, {"sd", env.genuine_sd}};
    j["impostor"] = {{"n", env.impostor_hds.size()}, {"mean", env.impostor_mean}, {"sd", env.impostor_sd}};
    j["d_prime"] = opt_number(env.d_prime);
    j["histogram"] = {{"bin_width", env.histogram.bin_width},
                      {"genuine", env.histogram.genuine},
                      {"impostor", env.histogram.impostor}};
    json pc = json::array();
    for (const auto& s : per_condition)
        pc.push_back({{"condition", s.condition},
                      {"genuine", s.genuine},
                      {"impostor", s.impostor},
                      {"d_prime", opt_number(s.d_prime)}});
    j["per_condition"] = pc;
    write_text(path, j.dump(2) + "\n");
}

void write_correlations_csv(const fs::path& path, const std::vector<eval::CorrelationRow>& rows) {
    std::ostringstream o;
    o << "group,feature,split,n,r\n";
    for (const auto& r : rows)
        o << csv::escape(r.group) << ',' << eval::to_string(r.feature) << ',' << (r.genuine ? "genuine" : "impostor")
          << ',' << r.n << ',' << (r.r ? csv::format_double(*r.r) : std::string("undefined")) << '\n';
    write_text(path, o.str());
}

void write_gate_csv(const fs::path& path, const std::vector<gate::SweepResult>& results) {
    std::ostringstream o;
    o << "model,discard_rate,mean_fmr,mean_fnmr,fmr_ci_low,fmr_ci_high,fnmr_ci_low,fnmr_ci_high,mean_threshold\n";
    for (const auto& res : results)
        for (const auto& r : res.rows)
            o << res.model_name << ',' << csv::format_double(r.discard_rate) << ',' << csv::format_double(r.mean_fmr)
              << ',' << csv::format_double(r.mean_fnmr) << ',' << csv::format_double(r.fmr_ci_low) << ','
              << csv::format_double(r.fmr_ci_high) << ',' << csv::format_double(r.fnmr_ci_low) << ','
              << csv::format_double(r.fnmr_ci_high) << ',' << csv::format_double(r.mean_threshold) << '\n';
    write_text(path, o.str());
}

void write_models_json(const fs::path& path, const std::vector<gate::SweepResult>& results) {
    json models = json::array();
    for (const auto& r : results) {
        json coefs = json::array();
        for (const auto& c : r.coefficients) coefs.push_back({{"name", c.name}, {"mean", c.mean}, {"sd", c.sd}});
        models.push_back({{"model", r.model_name},
                          {"features", features_json(r.features)},
                          {"redraws", r.redraws},
                          {"degenerate_fits", r.degenerate_fits},
                          {"coefficients", coefs}});
    }
    write_text(path, json{{"models", models}}.dump(2) + "\n");
}

// ---------------------------------------------------------------- summary

std::string summary_to_json(const Summary& s) {
    json j;
    j["schema_version"] = s.schema_version;
    j["master_seed"] = s.master_seed;
    j["complete"] = s.complete;
    j["failed_stage"] = s.failed_stage;
    j["failure"] = s.failure;
    j["enrollment"] = s.enrollment;
    json caps = json::array();
    for (const auto& c : s.captures) {
        json reasons = json::object();
        for (const auto& [k, v] : c.reasons) reasons[k] = v;
        caps.push_back({{"condition", c.condition}, {"generated", c.generated}, {"failed", c.failed}, {"reasons", reasons}});
    }
    j["captures"] = caps;
    j["pairs"] = {{"genuine", s.genuine_pairs}, {"impostor", s.impostor_pairs}, {"unreliable", s.unreliable_pairs}};
    j["fmr_threshold"] = opt_number(s.fmr_threshold);
    json en = json::array();
    for (const auto& e : s.enrollments)
        en.push_back({{"condition", e.condition},
                      {"genuine", e.genuine},
                      {"impostor", e.impostor},
                      {"d_prime", opt_number(e.d_prime)}});
    j["d_prime"] = en;
    json corr = json::array();
    for (const auto& r : s.correlations)
        corr.push_back({{"group", r.group},
                        {"feature", std::string(eval::to_string(r.feature))},
                        {"split", r.genuine ? "genuine" : "impostor"},
                        {"n", r.n},
                        {"r", opt_number(r.r)}});
    j["correlations"] = corr;
    json g = json::array();
    for (const auto& r : s.gate) g.push_back(sweep_json(r));
    j["gate"] = g;
    return j.dump(2) + "\n";
}

Summary summary_from_json(const std::string& text) {
    Summary s;
    try {
        const json j = json::parse(text);
        s.schema_version = j.at("schema_version").get<int>();
        if (s.schema_version != kSummarySchemaVersion)
            throw Error(ErrorKind::Parse, "summary: unsupported schema_version " + std::to_string(s.schema_version));
        s.master_seed = j.at("master_seed").get<std::uint64_t>();
        s.complete = j.at("complete").get<bool>();
        s.failed_stage = j.at("failed_stage").get<std::string>();
        s.failure = j.at("failure").get<std::string>();
        s.enrollment = j.at("enrollment").get<std::string>();
        for (const auto& c : j.at("captures")) {
            ConditionCount cc;
            cc.condition = c.at("condition").get<std::string>();
            cc.generated = c.at("generated").get<std::size_t>();
            cc.failed = c.at("failed").get<std::size_t>();
            for (const auto& [k, v] : c.at("reasons").items()) cc.reasons[k] = v.get<std::size_t>();
            s.captures.push_back(std::move(cc));
        }
        s.genuine_pairs = j.at("pairs").at("genuine").get<std::size_t>();
        s.impostor_pairs = j.at("pairs").at("impostor").get<std::size_t>();
        s.unreliable_pairs = j.at("pairs").at("unreliable").get<std::size_t>();
        s.fmr_threshold = number_or_empty(j.at("fmr_threshold"));
        for (const auto& e : j.at("d_prime"))
            s.enrollments.push_back({e.at("condition").get<std::string>(), e.at("genuine").get<std::size_t>(),
                                     e.at("impostor").get<std::size_t>(), number_or_empty(e.at("d_prime"))});
        for (const auto& r : j.at("correlations")) {
            eval::CorrelationRow row;
            row.group = r.at("group").get<std::string>();
            auto f = eval::parse_feature(r.at("feature").get<std::string>());
            if (!f) throw Error(ErrorKind::Parse, "summary: unknown feature");
            row.feature = *f;
            row.genuine = r.at("split").get<std::string>() == "genuine";
            row.n = r.at("n").get<std::size_t>();
            row.r = number_or_empty(r.at("r"));
            s.correlations.push_back(row);
        }
        for (const auto& g : j.at("gate")) s.gate.push_back(sweep_from(g));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("summary: ") + e.what());
    }
    return s;
}

// ---------------------------------------------------------------- run

RunResult run_pipeline(const ExperimentConfig& cfg) {
    RunResult res;
    Summary& s = res.summary;
    s.master_seed = cfg.master_seed;
    s.enrollment = cfg.pairing.enrollment.name();
    const fs::path out = cfg.output_dir;
    std::string stage = "setup";

    auto finish = [&]() {
        try {
            write_text(out / "summary.json", summary_to_json(s));
        } catch (const Error&) {
        }
    };

    try {
        cfg.check();
        set_worker_count(cfg.threads);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (!fs::is_directory(out)) throw Error(ErrorKind::Io, "cannot create output directory " + out.string());
        fs::remove(out / "FAILED", ec);
        write_text(out / "config.json", config_to_json(cfg));

        stage = "synth";
        Manifest manifest = cfg.manifest ? load_manifest(*cfg.manifest) : synth::generate_cohort(cfg.cohort, out / "cohort");

        stage = "metrics";
        auto outcomes = measure_captures(manifest, cfg.validator);

        stage = "encode";
        EncodedSet set = encode_captures(manifest, outcomes, cfg.encoder, cfg.exclude_failed);
        write_metrics_csv(out / "metrics.csv", outcomes);
        s.captures = count_failures(outcomes);
        write_codes(out / "codes", set);
        if (set.records.empty()) throw Error(ErrorKind::EmptyPairing, "no capture survived validation and encoding");

        stage = "match";
        auto pairs = pair_and_match(set, cfg.pairing, cfg.matcher);
        write_pairs_csv(out / "pairs.csv", pairs);
        write_matches_csv(out / "matches.csv", pairs);
        std::vector<double> impostors;
        for (const auto& p : pairs) {
            if (!p.matched()) continue;
            if (p.genuine)
                ++s.genuine_pairs;
            else {
                ++s.impostor_pairs;
                impostors.push_back(p.hd);
            }
            if (p.unreliable) ++s.unreliable_pairs;
        }

        stage = "evaluate";
        const auto env = eval::decision_environment(pairs, cfg.histogram_bin_width,
                                                    histogram_seed(cfg.master_seed));
        auto conds = evaluate_conditions(set, cfg, pairs);
        s.enrollments = conds.stats;
        for (const auto& r : conds.correlations)
            if (r.group == s.enrollment) s.correlations.push_back(r);
        write_decision_env_json(out / "decision_env.json", env, conds.stats, s.enrollment);
        write_correlations_csv(out / "correlations.csv", conds.correlations);
        s.fmr_threshold = eval::threshold_for_fmr(impostors, cfg.gate.fmr_target);

        stage = "gate";
        s.gate = gate::model_comparison(pairs, cfg.gate);
        write_gate_csv(out / "gate_sweep.csv", s.gate);
        write_models_json(out / "models.json", s.gate);

        s.complete = true;
        finish();
    } catch (const std::exception& e) {
        res.ok = false;
        res.stage = stage;
        res.message = e.what();
        s.complete = false;
        s.failed_stage = stage;
        s.failure = e.what();
        finish();
        try {
            write_text(out / "FAILED", stage + ": " + res.message + "\n");
        } catch (const Error&) {
        }
    }
    return res;
}

}  // namespace irisgate::pipeline
