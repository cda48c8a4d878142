// irisgate command-line front end.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "irisgate/error.hpp"
#include "irisgate/hamming_kernels.hpp"
#include "irisgate/parallel.hpp"
#include "irisgate/pipeline.hpp"
#include "irisgate/report.hpp"

namespace fs = std::filesystem;
using namespace irisgate;

namespace {

constexpr int kUsage = 1;
constexpr int kStageFailure = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = -1;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "Master seed; overrides the config");
    app->add_option("--out", c.out, "Output directory");
    app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

pipeline::ExperimentConfig resolve(const Common& c) {
    pipeline::ExperimentConfig cfg;
    try {
        if (!c.config.empty()) cfg = pipeline::load_config(c.config);
        if (c.seed) cfg.apply_master_seed(*c.seed);
        if (!c.out.empty()) cfg.output_dir = c.out;
        if (c.threads >= 0) cfg.threads = c.threads;
        cfg.check();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    set_worker_count(static_cast<unsigned>(cfg.threads));
    return cfg;
}

fs::path ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (!fs::is_directory(p)) throw Error(ErrorKind::Io, "cannot create " + p.string());
    return p;
}

Manifest open_manifest(const std::string& flag, const pipeline::ExperimentConfig& cfg) {
    if (!flag.empty()) return load_manifest(flag);
    if (cfg.manifest) return load_manifest(*cfg.manifest);
    throw UsageError("a manifest is required (--manifest or config \"manifest\")");
}

std::vector<pipeline::CaptureOutcome> obtain_metrics(const std::string& metrics_flag, Manifest& manifest,
                                                     const pipeline::ExperimentConfig& cfg) {
    if (!metrics_flag.empty()) return pipeline::read_metrics_csv(metrics_flag, manifest);
    return pipeline::measure_captures(manifest, cfg.validator);
}

void note(const std::string& msg) { std::cerr << "irisgate: " << msg << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iris-recognition quality-gate workbench"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "irisgate 1.0");

    Common common;
    std::string manifest_path, metrics_path, codes_dir, matches_path, artifacts_dir, features, rates, enrollment;
    std::optional<double> fmr_target;
    std::optional<int> resamples;
    bool compare = false;

    auto* synth = app.add_subcommand("synth", "Render a synthetic cohort with ground-truth masks");
    auto* metrics = app.add_subcommand("metrics", "Compute and validate quality metrics for a manifest");
    auto* encode = app.add_subcommand("encode", "Encode iris codes for a manifest");
    auto* match = app.add_subcommand("match", "Pair captures and compute rotation-minimised HD");
    auto* evaluate = app.add_subcommand("evaluate", "Decision environments, d' and metric-HD correlations");
    auto* gate = app.add_subcommand("gate", "Bootstrap quality-gate discard sweep");
    auto* run = app.add_subcommand("run", "Full pipeline from synthesis to gate sweep");
    auto* rep = app.add_subcommand("report", "Text report and plot-ready CSVs from a run directory");

    for (auto* s : {synth, metrics, encode, match, evaluate, gate, run, rep}) add_common(s, common);
    for (auto* s : {metrics, encode, match, evaluate})
        s->add_option("--manifest", manifest_path, "Capture manifest CSV")->check(CLI::ExistingFile);
    for (auto* s : {encode, match, evaluate})
        s->add_option("--metrics", metrics_path, "metrics.csv from the metrics stage")->check(CLI::ExistingFile);
    for (auto* s : {match, evaluate})
        s->add_option("--codes", codes_dir, "Directory of .ircd codes")->required()->check(CLI::ExistingDirectory);
    evaluate->add_option("--enrollment", enrollment, "Enrollment condition, e.g. wide-undilated");
    gate->add_option("--matches", matches_path, "matches.csv from the match stage")->required()->check(CLI::ExistingFile);
    gate->add_option("--features", features, "Comma-separated features, e.g. via,pir,mrd1");
    gate->add_option("--rates", rates, "Discard rates lo:hi:step or a comma list");
    gate->add_option("--fmr-target", fmr_target, "Target FMR for the HD threshold");
    gate->add_option("--resamples", resamples, "Bootstrap resamples");
    gate->add_flag("--compare", compare, "Run M0, M1_VIA, M1_PIR, M1_MRD1 and M3");
    rep->add_option("--artifacts", artifacts_dir, "Run directory to report on")->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        auto cfg = resolve(common);
        const fs::path out = cfg.output_dir;

        if (synth->parsed()) {
            auto m = synth::generate_cohort(cfg.cohort, ensure_dir(out));
            note("wrote " + std::to_string(m.records.size()) + " captures to " + out.string());
        } else if (metrics->parsed()) {
            auto m = open_manifest(manifest_path, cfg);
            auto outcomes = pipeline::measure_captures(m, cfg.validator);
            pipeline::write_metrics_csv(ensure_dir(out) / "metrics.csv", outcomes);
            std::size_t failed = 0;
            for (const auto& o : outcomes) failed += o.passed() ? 0 : 1;
            note(std::to_string(outcomes.size()) + " captures, " + std::to_string(failed) + " failed validation");
        } else if (encode->parsed()) {
            auto m = open_manifest(manifest_path, cfg);
            auto outcomes = obtain_metrics(metrics_path, m, cfg);
            auto set = pipeline::encode_captures(m, outcomes, cfg.encoder, cfg.exclude_failed);
            pipeline::write_codes(ensure_dir(out) / "codes", set);
            pipeline::write_metrics_csv(out / "metrics.csv", outcomes);
            note("encoded " + std::to_string(set.records.size()) + " of " + std::to_string(m.records.size()));
        } else if (match->parsed() || evaluate->parsed()) {
            auto m = open_manifest(manifest_path, cfg);
            auto outcomes = obtain_metrics(metrics_path, m, cfg);
            auto set = pipeline::read_codes(codes_dir, m);
            if (!enrollment.empty()) {
                auto c = parse_condition(enrollment);
                if (!c) throw UsageError("unknown enrollment condition '" + enrollment + "'");
                cfg.pairing.enrollment = *c;
            }
            auto pairs = pipeline::pair_and_match(set, cfg.pairing, cfg.matcher);
            ensure_dir(out);
            pipeline::write_pairs_csv(out / "pairs.csv", pairs);
            pipeline::write_matches_csv(out / "matches.csv", pairs);
            if (evaluate->parsed()) {
                const auto env = eval::decision_environment(pairs, cfg.histogram_bin_width,
                                                            pipeline::histogram_seed(cfg.master_seed));
                auto conds = pipeline::evaluate_conditions(set, cfg, pairs);
                pipeline::write_decision_env_json(out / "decision_env.json", env, conds.stats,
                                                  cfg.pairing.enrollment.name());
                pipeline::write_correlations_csv(out / "correlations.csv", conds.correlations);
                note("d' = " + std::to_string(env.d_prime));
            }
            note(std::to_string(pairs.size()) + " pairs");
        } else if (gate->parsed()) {
            auto pairs = pipeline::read_matches_csv(matches_path);
            try {
                if (!rates.empty()) cfg.gate.discard_rates = gate::parse_rates(rates);
                if (fmr_target) cfg.gate.fmr_target = *fmr_target;
                if (resamples) cfg.gate.resamples = *resamples;
                if (!features.empty()) {
                    cfg.gate_features.clear();
                    std::stringstream ss(features);
                    std::string tok;
                    while (std::getline(ss, tok, ',')) {
                        auto f = eval::parse_feature(tok);
                        if (!f) throw UsageError("unknown feature '" + tok + "'");
                        cfg.gate_features.push_back(*f);
                    }
                }
                cfg.check();
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            std::vector<gate::SweepResult> results;
            if (compare)
                results = gate::model_comparison(pairs, cfg.gate);
            else
                results.push_back(gate::gate_sweep(pairs, cfg.gate_features, cfg.gate));
            ensure_dir(out);
            pipeline::write_gate_csv(out / "gate_sweep.csv", results);
            pipeline::write_models_json(out / "models.json", results);
            note("wrote " + (out / "gate_sweep.csv").string());
        } else if (run->parsed()) {
            note("matching kernel: " + std::string(kernels::to_string(kernels::active())));
            auto res = pipeline::run_pipeline(cfg);
            if (!res.ok) {
                note("stage '" + res.stage + "' failed: " + res.message);
                return kStageFailure;
            }
            note("artifacts in " + out.string());
        } else if (rep->parsed()) {
            const fs::path dir = artifacts_dir.empty() ? out : fs::path(artifacts_dir);
            const fs::path dest = artifacts_dir.empty() || common.out.empty() ? dir / "report" : out;
            auto r = report::write_report(dir, dest);
            std::cout << r.text;
            for (const auto& w : r.warnings) note("warning: " + w);
        }
    } catch (const UsageError& e) {
        note(std::string("usage: ") + e.what());
        return kUsage;
    } catch (const Error& e) {
        note(std::string(to_string(e.kind())) + ": " + e.what());
        return kStageFailure;
    } catch (const std::exception& e) {
        note(e.what());
        return kStageFailure;
    }
    return 0;
}
