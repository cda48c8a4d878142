#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "irisgate/stats.hpp"

namespace irisgate::report {

struct BoxplotRow {
    std::string metric;
    std::string group;
    stats::BoxStats box;
};

/// Box statistics per group. Empty groups are skipped and named in `warnings`.
std::vector<BoxplotRow> boxplots(const std::string& metric, const std::map<std::string, std::vector<double>>& groups,
                                 std::vector<std::string>& warnings);

struct ReportOutput {
    std::string text;
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> files;
};

/// Reads a pipeline artifact directory and writes boxplots.csv,
/// histogram.csv and report.txt into `out_dir`. Throws Io naming every
/// missing artifact.
ReportOutput write_report(const std::filesystem::path& artifact_dir, const std::filesystem::path& out_dir);

}  // namespace irisgate::report
