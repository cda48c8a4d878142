#include "irisgate/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "irisgate/core_model.hpp"
#include "irisgate/csv.hpp"
#include "irisgate/error.hpp"
#include "irisgate/pipeline.hpp"

namespace irisgate::report {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw Error(ErrorKind::Io, "cannot write " + p.string());
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string pct(double v) { return fmt("%.2f", 100.0 * v); }

}  // namespace

std::vector<BoxplotRow> boxplots(const std::string& metric, const std::map<std::string, std::vector<double>>& groups,
                                 std::vector<std::string>& warnings) {
    std::vector<BoxplotRow> out;
    for (const auto& [group, values] : groups) {
        if (values.empty()) {
            warnings.push_back("boxplot " + metric + ": group '" + group + "' is empty, omitted");
            continue;
        }
        out.push_back({metric, group, stats::box_stats(values)});
    }
    return out;
}

ReportOutput write_report(const fs::path& dir, const fs::path& out_dir) {
    const char* required[] = {"summary.json", "metrics.csv", "decision_env.json", "correlations.csv", "gate_sweep.csv"};
    std::string missing;
    for (const char* f : required)
        if (!fs::exists(dir / f)) missing += (missing.empty() ? "" : ", ") + std::string(f);
    if (!missing.empty()) throw Error(ErrorKind::Io, "missing artifacts in " + dir.string() + ": " + missing);

    ReportOutput r;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw Error(ErrorKind::Io, "cannot create " + out_dir.string());

    const auto summary = pipeline::summary_from_json(slurp(dir / "summary.json"));

    // Box statistics per metric and condition.
    const std::vector<std::string> metric_names = {"via", "pir", "mrd1", "mrd2", "sharpness", "occlusion_90",
                                                   "code_length"};
    std::map<std::string, std::map<std::string, std::vector<double>>> by_metric;
    for (const auto& m : metric_names)
        for (const auto& c : all_conditions()) by_metric[m][c.name()];
    {
        std::istringstream in(slurp(dir / "metrics.csv"));
        std::string line;
        std::vector<std::string> header, f;
        std::getline(in, line);
        if (!csv::split_line(line, header)) throw Error(ErrorKind::Parse, "metrics.csv: bad header");
        auto col = [&](const std::string& n) {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == n) return i;
            throw Error(ErrorKind::Parse, "metrics.csv: missing column " + n);
        };
        const std::size_t cond = col("condition"), ok = col("metrics_ok"), enc = col("encoded");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (!csv::split_line(line, f) || f.size() != header.size())
                throw Error(ErrorKind::Parse, "metrics.csv: malformed row");
            if (f[ok] != "1") continue;
            for (const auto& m : metric_names) {
                if (m == "code_length" && f[enc] != "1") continue;
                by_metric[m][f[cond]].push_back(std::stod(f[col(m)]));
            }
        }
    }
    std::ostringstream box;
    box << "metric,group,n,whisker_low,q1,median,q3,whisker_high,outliers\n";
    for (const auto& m : metric_names)
        for (const auto& row : boxplots(m, by_metric[m], r.warnings))
            box << row.metric << ',' << row.group << ',' << row.box.n << ',' << csv::format_double(row.box.whisker_low)
                << ',' << csv::format_double(row.box.q1) << ',' << csv::format_double(row.box.median) << ','
                << csv::format_double(row.box.q3) << ',' << csv::format_double(row.box.whisker_high) << ','
                << row.box.outliers << '\n';
    dump(out_dir / "boxplots.csv", box.str());
    r.files.push_back(out_dir / "boxplots.csv");

    // Decision-environment histogram.
    nlohmann::json env;
    try {
        env = nlohmann::json::parse(slurp(dir / "decision_env.json"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("decision_env.json: ") + e.what());
    }
    const double w = env["histogram"]["bin_width"].get<double>();
    const auto gen = env["histogram"]["genuine"].get<std::vector<std::uint64_t>>();
    const auto imp = env["histogram"]["impostor"].get<std::vector<std::uint64_t>>();
    std::ostringstream hist;
    hist << "bin_low,bin_high,genuine,impostor\n";
    for (std::size_t i = 0; i < gen.size() && i < imp.size(); ++i)
        hist << csv::format_double(w * static_cast<double>(i)) << ',' << csv::format_double(w * static_cast<double>(i + 1))
             << ',' << gen[i] << ',' << imp[i] << '\n';
    dump(out_dir / "histogram.csv", hist.str());
    r.files.push_back(out_dir / "histogram.csv");

    // Text report.
    std::ostringstream t;
    t << "irisgate report: " << dir.string() << "\n";
    t << "master seed " << summary.master_seed << ", enrollment " << summary.enrollment
      << (summary.complete ? "" : ", INCOMPLETE (" + summary.failed_stage + ": " + summary.failure + ")") << "\n\n";

    t << "Captures\n  condition            generated  failed  reasons\n";
    for (const auto& c : summary.captures) {
        std::string reasons;
        for (const auto& [k, v] : c.reasons) reasons += (reasons.empty() ? "" : ", ") + k + "=" + std::to_string(v);
        char buf[128];
        std::snprintf(buf, sizeof buf, "  %-20s %9zu  %6zu  ", c.condition.c_str(), c.generated, c.failed);
        t << buf << reasons << "\n";
    }

    t << "\nDecidability by enrollment condition\n";
    for (const auto& e : summary.enrollments) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "  %-20s genuine %6zu  impostor %8zu  d' ", e.condition.c_str(), e.genuine,
                      e.impostor);
        t << buf << (e.d_prime ? fmt("%.3f", *e.d_prime) : std::string("undefined")) << "\n";
    }
    t << "  genuine HD " << fmt("%.4f", env["genuine"]["mean"].get<double>()) << " +/- "
      << fmt("%.4f", env["genuine"]["sd"].get<double>()) << ", impostor HD "
      << fmt("%.4f", env["impostor"]["mean"].get<double>()) << " +/- "
      << fmt("%.4f", env["impostor"]["sd"].get<double>()) << "\n";

    t << "\nPearson r against HD (" << summary.enrollment << " enrollment)\n  feature        genuine   impostor\n";
    std::map<std::string, std::pair<std::string, std::string>> corr;
    std::vector<std::string> order;
    for (const auto& c : summary.correlations) {
        const std::string name(eval::to_string(c.feature));
        if (!corr.count(name)) order.push_back(name);
        const std::string v = c.r ? fmt("%+.3f", *c.r) : std::string("undef");
        (c.genuine ? corr[name].first : corr[name].second) = v;
    }
    for (const auto& n : order) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "  %-12s %9s %10s\n", n.c_str(), corr[n].first.c_str(), corr[n].second.c_str());
        t << buf;
    }

    if (summary.fmr_threshold) t << "\nHD threshold at target FMR: " << fmt("%.4f", *summary.fmr_threshold) << "\n";
    t << "\nQuality gate sweep (mean over resamples, 95% CI in brackets, percentages)\n";
    for (const auto& m : summary.gate) {
        t << "  " << m.model_name << "\n    discard   FMR                     FNMR\n";
        for (const auto& row : m.rows) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "    %5.1f%%   %5s [%5s, %5s]   %5s [%5s, %5s]\n", 100.0 * row.discard_rate,
                          pct(row.mean_fmr).c_str(), pct(row.fmr_ci_low).c_str(), pct(row.fmr_ci_high).c_str(),
                          pct(row.mean_fnmr).c_str(), pct(row.fnmr_ci_low).c_str(), pct(row.fnmr_ci_high).c_str());
            t << buf;
        }
    }
    for (const auto& w : r.warnings) t << "warning: " << w << "\n";
    r.text = t.str();
    dump(out_dir / "report.txt", r.text);
    r.files.push_back(out_dir / "report.txt");
    return r;
}

}  // namespace irisgate::report
